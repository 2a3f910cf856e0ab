#include "kmarket/scenario.hpp"

#include <array>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "kmarket/errors.hpp"

namespace kmarket {

namespace {

std::string format_double(double v) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return buf.data();
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

template <class E, std::size_t K>
using EnumNames = std::array<std::pair<E, std::string_view>, K>;

constexpr EnumNames<ScenarioMode, 6> kModes{{
    {ScenarioMode::micro_det, "micro_det"},
    {ScenarioMode::micro_noisy, "micro_noisy"},
    {ScenarioMode::kinetic, "kinetic"},
    {ScenarioMode::coupled_long_term, "coupled_long_term"},
    {ScenarioMode::coupled_high_frequency, "coupled_high_frequency"},
    {ScenarioMode::hf_steady_state, "hf_steady_state"},
}};
constexpr EnumNames<ValueFunctionMode, 2> kValueFns{{
    {ValueFunctionMode::kahneman_tversky, "kahneman_tversky"},
    {ValueFunctionMode::identity, "identity"},
}};
constexpr EnumNames<InitialLaw, 2> kInitialLaws{{
    {InitialLaw::point_mass, "point_mass"},
    {InitialLaw::lognormal, "lognormal"},
}};
constexpr EnumNames<ControlLaw, 2> kControls{{
    {ControlLaw::mean_field, "mean_field"},
    {ControlLaw::finite_n, "finite_n"},
}};
constexpr EnumNames<BrokerScheme, 2> kSchemes{{
    {BrokerScheme::euler_maruyama, "euler_maruyama"},
    {BrokerScheme::log_exact, "log_exact"},
}};
constexpr EnumNames<ChartistVariant, 2> kVariants{{
    {ChartistVariant::pooled, "pooled"},
    {ChartistVariant::split, "split"},
}};

template <class E, std::size_t K>
E parse_enum(const std::string& key, const std::string& text,
             const EnumNames<E, K>& names) {
  std::string allowed;
  for (const auto& [value, name] : names) {
    if (text == name) return value;
    allowed += allowed.empty() ? "" : "|";
    allowed += name;
  }
  throw ConfigError(key + ": expected one of " + allowed + ", got '" + text + "'");
}

template <class E, std::size_t K>
std::string enum_name(E value, const EnumNames<E, K>& names) {
  for (const auto& [v, name] : names) {
    if (v == value) return std::string(name);
  }
  return "?";
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(ScenarioConfig&, const std::string& full_key,
                     const std::string& text)>
      set;
  std::function<std::string(const ScenarioConfig&)> get;
};

Field real(std::string section, std::string key, double ScenarioConfig::*m) {
  return {std::move(section), std::move(key),
          [m](ScenarioConfig& c, const std::string& k, const std::string& t) {
            c.*m = parse_double(k, t);
          },
          [m](const ScenarioConfig& c) { return format_double(c.*m); }};
}

Field market_real(std::string key, double MarketParams::*m) {
  return {"market", std::move(key),
          [m](ScenarioConfig& c, const std::string& k, const std::string& t) {
            c.market.*m = parse_double(k, t);
          },
          [m](const ScenarioConfig& c) { return format_double(c.market.*m); }};
}

Field count(std::string section, std::string key,
            std::size_t ScenarioConfig::*m) {
  return {std::move(section), std::move(key),
          [m](ScenarioConfig& c, const std::string& k, const std::string& t) {
            c.*m = static_cast<std::size_t>(parse_u64(k, t));
          },
          [m](const ScenarioConfig& c) { return std::to_string(c.*m); }};
}

Field flag(std::string section, std::string key, bool ScenarioConfig::*m) {
  return {std::move(section), std::move(key),
          [m](ScenarioConfig& c, const std::string& k, const std::string& t) {
            c.*m = parse_bool(k, t);
          },
          [m](const ScenarioConfig& c) { return std::string(c.*m ? "true" : "false"); }};
}

template <class E, std::size_t K>
Field choice(std::string section, std::string key, E ScenarioConfig::*m,
             const EnumNames<E, K>& names) {
  return {std::move(section), std::move(key),
          [m, &names](ScenarioConfig& c, const std::string& k,
                      const std::string& t) { c.*m = parse_enum(k, t, names); },
          [m, &names](const ScenarioConfig& c) { return enum_name(c.*m, names); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"run", "name",
                 [](ScenarioConfig& c, const std::string&, const std::string& t) {
                   c.name = t;
                 },
                 [](const ScenarioConfig& c) { return c.name; }});
    f.push_back(choice("run", "mode", &ScenarioConfig::mode, kModes));
    f.push_back({"run", "seed",
                 [](ScenarioConfig& c, const std::string& k, const std::string& t) {
                   c.seed = parse_u64(k, t);
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.seed); }});
    f.push_back({"run", "T_end",
                 [](ScenarioConfig& c, const std::string& k, const std::string& t) {
                   c.market.T_end = parse_double(k, t);
                 },
                 [](const ScenarioConfig& c) { return format_double(c.market.T_end); }});
    f.push_back(count("run", "sample_every", &ScenarioConfig::sample_every));
    f.push_back(count("run", "snapshot_every", &ScenarioConfig::snapshot_every));
    f.push_back({"run", "output_dir",
                 [](ScenarioConfig& c, const std::string&, const std::string& t) {
                   c.output_dir = t;
                 },
                 [](const ScenarioConfig& c) { return c.output_dir; }});

    f.push_back(market_real("kappa", &MarketParams::kappa));
    f.push_back(market_real("nu", &MarketParams::nu));
    f.push_back(market_real("r", &MarketParams::r));
    f.push_back(market_real("D", &MarketParams::D));
    f.push_back(market_real("rho", &MarketParams::rho));
    f.push_back(market_real("omega", &MarketParams::omega));
    f.push_back(market_real("gamma", &MarketParams::gamma));
    f.push_back(market_real("alpha", &MarketParams::alpha));
    f.push_back(market_real("beta", &MarketParams::beta));
    f.push_back(market_real("dt", &MarketParams::dt));
    f.push_back({"market", "chi",
                 [](ScenarioConfig& c, const std::string& k, const std::string& t) {
                   if (t == "auto") {
                     c.market.chi_override.reset();
                   } else {
                     c.market.chi_override = parse_double(k, t);
                   }
                 },
                 [](const ScenarioConfig& c) {
                   return c.market.chi_override ? format_double(*c.market.chi_override)
                                                : std::string("auto");
                 }});
    f.push_back({"market", "value_fn",
                 [](ScenarioConfig& c, const std::string& k, const std::string& t) {
                   c.market.value_fn = parse_enum(k, t, kValueFns);
                 },
                 [](const ScenarioConfig& c) {
                   return enum_name(c.market.value_fn, kValueFns);
                 }});

    f.push_back({"kinetic", "epsilon",
                 [](ScenarioConfig& c, const std::string& k, const std::string& t) {
                   c.kinetic.epsilon = parse_double(k, t);
                 },
                 [](const ScenarioConfig& c) { return format_double(c.kinetic.epsilon); }});
    f.push_back({"kinetic", "eta_truncation",
                 [](ScenarioConfig& c, const std::string& k, const std::string& t) {
                   c.kinetic.eta_truncation =
                       t == "inf" ? INFINITY : parse_double(k, t);
                 },
                 [](const ScenarioConfig& c) {
                   return std::isinf(c.kinetic.eta_truncation)
                              ? std::string("inf")
                              : format_double(c.kinetic.eta_truncation);
                 }});

    f.push_back(count("population", "N", &ScenarioConfig::N));
    f.push_back(count("population", "M", &ScenarioConfig::M));
    f.push_back(real("population", "X0", &ScenarioConfig::X0));
    f.push_back(real("population", "Y0", &ScenarioConfig::Y0));
    f.push_back(real("population", "S0", &ScenarioConfig::S0));
    f.push_back(choice("population", "initial", &ScenarioConfig::initial, kInitialLaws));
    f.push_back(real("population", "x_log_sd", &ScenarioConfig::x_log_sd));
    f.push_back(real("population", "y_log_sd", &ScenarioConfig::y_log_sd));
    f.push_back(real("population", "s_log_sd", &ScenarioConfig::s_log_sd));
    f.push_back(choice("population", "control", &ScenarioConfig::control, kControls));

    f.push_back(real("fundamental", "sf0", &ScenarioConfig::sf0));
    f.push_back({"fundamental", "process",
                 [](ScenarioConfig& c, const std::string& k, const std::string& t) {
                   if (t == "constant") {
                     c.sf_stochastic = false;
                   } else if (t == "stochastic") {
                     c.sf_stochastic = true;
                   } else {
                     throw ConfigError(k + ": expected constant|stochastic, got '" + t + "'");
                   }
                 },
                 [](const ScenarioConfig& c) {
                   return std::string(c.sf_stochastic ? "stochastic" : "constant");
                 }});
    f.push_back(real("fundamental", "volatility", &ScenarioConfig::sf_volatility));

    f.push_back(choice("coupling", "scheme", &ScenarioConfig::scheme, kSchemes));
    f.push_back(choice("coupling", "chartist", &ScenarioConfig::kc_variant, kVariants));
    f.push_back(flag("coupling", "portfolio_noise", &ScenarioConfig::portfolio_noise));

    f.push_back(real("steady_state", "check_fraction", &ScenarioConfig::check_fraction));
    f.push_back(real("steady_state", "ks_threshold", &ScenarioConfig::ks_threshold));
    f.push_back(count("steady_state", "tail_snapshots", &ScenarioConfig::tail_snapshots));
    f.push_back(real("steady_state", "tail_gap", &ScenarioConfig::tail_gap));
    return f;
  }();
  return table;
}

void check(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

std::string_view to_string(ScenarioMode mode) {
  for (const auto& [v, name] : kModes) {
    if (v == mode) return name;
  }
  return "?";
}

void ScenarioConfig::validate() const {
  try {
    market.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("market: ") + e.what());
  }
  try {
    kinetic.validate();
  } catch (const ModelError& e) {
    throw ConfigError(std::string("kinetic: ") + e.what());
  }
  check(market.T_end > 0.0, "run.T_end: must be > 0");
  check(N >= 1, "population.N: must be >= 1");
  check(!uses_brokers() || M >= 1, "population.M: must be >= 1 in mode " +
                                       std::string(to_string(mode)));
  check(sample_every >= 1, "run.sample_every: must be >= 1");
  check(X0 > 0.0, "population.X0: must be > 0");
  check(Y0 > 0.0, "population.Y0: must be > 0");
  check(S0 > 0.0, "population.S0: must be > 0");
  check(x_log_sd >= 0.0, "population.x_log_sd: must be >= 0");
  check(y_log_sd >= 0.0, "population.y_log_sd: must be >= 0");
  check(s_log_sd >= 0.0, "population.s_log_sd: must be >= 0");
  check(sf0 > 0.0, "fundamental.sf0: must be > 0");
  check(sf_volatility >= 0.0, "fundamental.volatility: must be >= 0");
  if (uses_brokers()) {
    check(std::abs(market.dt - kinetic.epsilon) <= 1e-12 * market.dt,
          "kinetic.epsilon: must equal market.dt when brokers are simulated");
  }
  check(check_fraction > 0.0 && check_fraction <= 1.0,
        "steady_state.check_fraction: must lie in (0, 1]");
  check(ks_threshold > 0.0 && ks_threshold < 1.0,
        "steady_state.ks_threshold: must lie in (0, 1)");
  check(tail_gap > 0.0, "steady_state.tail_gap: must be > 0");
}

ScenarioConfig parse_config(std::string_view text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("malformed config: " + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }

  ScenarioConfig config;
  std::set<std::string> seen;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ConfigError(section + ": key outside of a section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const Field* field = nullptr;
      for (const Field& f : fields()) {
        if (f.section == section && f.key == key) field = &f;
      }
      if (field == nullptr) throw ConfigError(full + ": unknown key");
      field->set(config, full, value.data());
      seen.insert(full);
    }
  }

  check(seen.contains("run.mode"), "run.mode: missing required key");
  check(seen.contains("population.N"), "population.N: missing required key");
  if (config.uses_brokers()) {
    check(seen.contains("population.M"), "population.M: missing required key");
  }
  if (!seen.contains("kinetic.epsilon")) config.kinetic.epsilon = config.market.dt;
  config.kinetic.n_samples = config.N;
  config.validate();
  return config;
}

std::string emit_config(const ScenarioConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    out << f.key << " = " << f.get(config) << '\n';
  }
  return out.str();
}

namespace {

ScenarioConfig random_fundamental_price() {
  ScenarioConfig c;
  c.name = "random_fundamental_price";
  c.mode = ScenarioMode::kinetic;
  c.market = MarketParams{};
  c.market.T_end = 0.6;
  c.N = 30000;
  c.sf0 = 5.0;
  c.sf_stochastic = true;
  c.sf_volatility = 0.1;
  c.sample_every = 1;
  return c;
}

ScenarioConfig long_term_investor() {
  ScenarioConfig c = random_fundamental_price();
  c.name = "long_term_investor";
  c.mode = ScenarioMode::coupled_long_term;
  c.M = 30000;
  c.snapshot_every = 2000;
  return c;
}

ScenarioConfig computation_of_marginal() {
  ScenarioConfig c;
  c.name = "computation_of_marginal";
  c.mode = ScenarioMode::kinetic;
  c.market.kappa = 0.1;
  c.market.omega = 20.0;
  c.market.gamma = 0.35;
  c.market.chi_override = 1.0;
  c.market.T_end = 0.3;
  c.sf0 = 10.0;
  c.N = 50000;
  return c;
}

ScenarioConfig high_frequency_trader() {
  ScenarioConfig c;
  c.name = "high_frequency_trader";
  c.mode = ScenarioMode::coupled_high_frequency;
  c.market.dt = 1e-3;
  c.market.alpha = 1.0;
  c.market.beta = 0.2;
  c.market.T_end = 1.0;
  c.N = 5000;
  c.M = 30000;
  c.sf0 = 5.0;
  c.snapshot_every = 250;
  return c;
}

ScenarioConfig hf_steady_state() {
  ScenarioConfig c;
  c.name = "hf_steady_state";
  c.mode = ScenarioMode::hf_steady_state;
  c.market.kappa = 10.0;
  c.market.nu = 50.0;
  c.market.omega = 0.25;
  c.market.r = 0.0025;  // 1 / (2 kappa P0): no net drain of the bond side
  c.market.D = 0.0;
  c.market.dt = 1e-3;
  c.market.T_end = 5.0;
  c.market.chi_override = 1.0;
  c.market.value_fn = ValueFunctionMode::identity;
  c.N = 5000;
  c.M = 100000;
  c.sf0 = 5.0;
  c.portfolio_noise = false;
  c.sample_every = 10;
  return c;
}

struct PresetEntry {
  std::string_view name;
  ScenarioConfig (*make)();
};

constexpr std::array<PresetEntry, 5> kPresets{{
    {"random_fundamental_price", random_fundamental_price},
    {"long_term_investor", long_term_investor},
    {"computation_of_marginal", computation_of_marginal},
    {"high_frequency_trader", high_frequency_trader},
    {"hf_steady_state", hf_steady_state},
}};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& p : kPresets) names.emplace_back(p.name);
  return names;
}

bool is_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) return true;
  }
  return false;
}

ScenarioConfig preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (p.name == name) {
      ScenarioConfig c = p.make();
      c.kinetic.epsilon = c.market.dt;
      c.kinetic.n_samples = c.N;
      c.output_dir = "out/" + std::string(name);
      c.validate();
      return c;
    }
  }
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

ScenarioConfig load_scenario(const std::string& preset_or_path) {
  if (is_preset(preset_or_path)) return preset(preset_or_path);
  std::ifstream in(preset_or_path);
  if (!in) {
    throw ConfigError("'" + preset_or_path + "' is neither a preset nor a readable file");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

}  // namespace kmarket
