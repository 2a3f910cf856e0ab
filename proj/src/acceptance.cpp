#include "kmarket/acceptance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>

#include "kmarket/analytic_oracles.hpp"
#include "kmarket/analytics.hpp"
#include "kmarket/broker_market.hpp"
#include "kmarket/errors.hpp"
#include "kmarket/kinetic_solver.hpp"
#include "kmarket/micro_dynamics.hpp"
#include "kmarket/parallel.hpp"
#include "kmarket/runner.hpp"
#include "kmarket/scenario.hpp"

namespace kmarket {

namespace {

constexpr double kBondMarginalKs = 0.02;
constexpr double kLongTermKs = 0.02;
constexpr double kSteadyStateKs = 0.03;
constexpr double kHillRelative = 0.10;
constexpr double kResidualOrder = 1.0;
constexpr double kStockKurtosisMin = 1.0;
constexpr double kFundamentalKurtosisMax = 0.5;
constexpr std::size_t kFatTailSeeds = 5;
constexpr double kMomentZ = 3.0;
constexpr double kBudgetTolerance = 1e-12;
constexpr double kRateSlopeTolerance = 0.1;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<double> column_y(std::span<const AgentState> a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].y;
  return v;
}

std::vector<double> column_x(std::span<const AgentState> a) {
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].x;
  return v;
}

bool all_positive_k(const TrajectoryRecord& rec) {
  return std::all_of(rec.K_path.begin(), rec.K_path.end(),
                     [](double k) { return k > 0.0 && !is_zero_estimate(k); });
}

// K-S of the final bond cloud of a kinetic run against the diffusive h law.
double bond_marginal_ks(const ScenarioConfig& c, bool* k_positive) {
  Population pop = initial_population(c, StreamDomain::particle_noise);
  const InitialConstants ic = fit_initial_constants(column_y(pop.agents));
  MarketState market{c.S0, 0.0, c.sf0, 0.0};
  const KineticRun run =
      run_kinetic(pop, market, c.market, c.kinetic, c.market.T_end, 1, 0);
  if (k_positive != nullptr) *k_positive = all_positive_k(run.trajectory);
  const LogNormalLaw law = marginal_h_diffusive_law(
      market.t, bond_drift_history(run.trajectory, c.market, ic.drift_offset),
      c.market.nu, ic.variance_offset);
  return ks_distance(column_y(pop.agents), [&](double z) { return law.cdf(z); });
}

CriterionResult bond_marginal(std::uint64_t seed) {
  ScenarioConfig c = preset("computation_of_marginal");
  c.seed = seed;
  bool positive = false;
  const double ks = bond_marginal_ks(c, &positive);
  CriterionResult r{"bond_marginal", positive && ks <= kBondMarginalKs, ks,
                    kBondMarginalKs, ""};
  r.detail = "N=" + std::to_string(c.N) + " t=" + fmt(c.market.T_end) +
             (positive ? " K>0 throughout" : " K left the positive regime");
  return r;
}

CriterionResult longterm_lognormal(std::uint64_t seed) {
  ScenarioConfig c = preset("long_term_investor");
  c.seed = seed;
  c.snapshot_every = 2000;
  CoupledSystem sys(initial_population(c, StreamDomain::particle_noise),
                    initial_brokers(c), MarketState{c.S0, 0.0, c.sf0, 0.0},
                    c.market, c.kinetic, CoupledOptions{}, fundamental_process(c));
  const InitialConstants ic = fit_initial_constants(sys.brokers().prices);
  const CoupledRun run = run_coupled(sys, c.market.T_end, 1, c.snapshot_every);
  const DriftHistory rbar = price_drift_history(run.trajectory, c.market, ic.drift_offset);
  double worst = 0.0;
  std::string detail = "M=" + std::to_string(c.M);
  for (const auto& snap : run.price_snapshots) {
    const LogNormalLaw law = longterm_price_law(snap.t, rbar, ic.variance_offset);
    const double ks = ks_distance(snap.prices, [&](double s) { return law.cdf(s); });
    worst = std::max(worst, ks);
    detail += " ks(t=" + fmt(snap.t) + ")=" + fmt(ks);
  }
  const bool enough = run.price_snapshots.size() >= 3;
  return {"longterm_lognormal", enough && worst <= kLongTermKs, worst, kLongTermKs,
          detail};
}

CriterionResult steady_state(std::uint64_t seed) {
  ScenarioConfig c = preset("hf_steady_state");
  c.seed = seed;
  const SteadyStateResult ss = run_steady_state(c);
  const InverseGammaLaw law = hf_steady_state_law(c.market, c.sf0, ss.P_inf);
  const double ks =
      ks_distance(ss.stationary_prices, [&](double s) { return law.cdf(s); });
  const double hill = hill_tail_exponent(ss.pooled_prices);
  const double target = law.tail_exponent();
  const double rel = std::abs(hill - target) / target;
  CriterionResult r{"hf_steady_state",
                    ss.stationary && ks <= kSteadyStateKs && rel <= kHillRelative, ks,
                    kSteadyStateKs, ""};
  r.detail = std::string(ss.stationary ? "stationary" : "not stationary") +
             " at t=" + fmt(ss.t_stationary) + " P_inf=" + fmt(ss.P_inf) +
             " hill=" + fmt(hill) + " target=" + fmt(target) +
             " rel_err=" + fmt(rel) + " (tol " + fmt(kHillRelative) + ")" +
             " n_pooled=" + std::to_string(ss.pooled_prices.size());
  return r;
}

CriterionResult stationary_residual() {
  const ScenarioConfig c = preset("hf_steady_state");
  const double P = c.X0;
  const InverseGammaLaw law = hf_steady_state_law(c.market, c.sf0, P);
  const double lo = law.quantile(1e-6);
  const double hi = law.quantile(1.0 - 1e-6);
  std::vector<double> res;
  std::string detail = "residuals";
  for (int e = 8; e <= 12; ++e) {
    res.push_back(steady_state_residual(c.market, c.sf0, P, lo, hi,
                                        std::size_t{1} << e));
    detail += " " + fmt(res.back());
  }
  double min_order = INFINITY;
  for (std::size_t i = 1; i < res.size(); ++i) {
    min_order = std::min(min_order, std::log2(res[i - 1] / res[i]));
  }
  detail += " min_order=" + fmt(min_order);
  return {"stationary_residual", min_order >= kResidualOrder, min_order,
          kResidualOrder, detail};
}

CriterionResult fat_tails(std::uint64_t seed) {
  double min_stock = INFINITY;
  double max_fund = 0.0;
  std::string detail;
  for (std::uint64_t s = seed; s < seed + kFatTailSeeds; ++s) {
    ScenarioConfig c = preset("random_fundamental_price");
    c.seed = s;
    c.market.gamma = 0.9;
    c.market.rho = 5.0 / 8.0;
    Population pop = initial_population(c, StreamDomain::particle_noise);
    MarketState market{c.S0, 0.0, c.sf0, 0.0};
    const KineticRun run = run_kinetic(pop, market, c.market, c.kinetic,
                                       c.market.T_end, 1, 0, fundamental_process(c));
    const double ks = excess_kurtosis(log_returns(run.trajectory.S_path, 1));
    const double kf = excess_kurtosis(log_returns(run.trajectory.sf_path, 1));
    min_stock = std::min(min_stock, ks);
    max_fund = std::max(max_fund, std::abs(kf));
    detail += "seed " + std::to_string(s) + ": " + fmt(ks) + "/" + fmt(kf) + "; ";
  }
  detail = "excess kurtosis stock/fundamental " + detail +
           "fundamental bound " + fmt(kFundamentalKurtosisMax);
  return {"fat_tails",
          min_stock > kStockKurtosisMin && max_fund < kFundamentalKurtosisMax,
          min_stock, kStockKurtosisMin, detail};
}

CriterionResult moment_ode_match(std::uint64_t seed) {
  ScenarioConfig c = preset("computation_of_marginal");
  c.seed = seed;
  c.sf0 = 4.0;  // below S0: K < 0 throughout
  Population pop = initial_population(c, StreamDomain::particle_noise);
  MarketState market{c.S0, 0.0, c.sf0, 0.0};
  std::vector<double> times{0.0};
  for (int k = 1; k <= 10; ++k) times.push_back(c.market.T_end * k / 10.0);
  const auto ode = integrate_moment_ode({pop.mean_x(), pop.mean_y(), c.S0}, times,
                                        c.sf0, Regime::negative, c.market, 30);
  double worst = 0.0;
  bool negative = true;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const KineticRun run =
        run_kinetic(pop, market, c.market, c.kinetic, times[k], 1000000, 0);
    negative = negative && std::all_of(run.trajectory.K_path.begin(),
                                       run.trajectory.K_path.end(),
                                       [](double v) { return v < 0.0; });
    const auto x = column_x(pop.agents);
    const double mean = pairwise_sum(x) / static_cast<double>(x.size());
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    const double se = std::sqrt(var / static_cast<double>(x.size()));
    worst = std::max(worst, std::abs(mean - ode[k].X) / se);
  }
  return {"moment_ode", negative && worst <= kMomentZ, worst, kMomentZ,
          "max |X_mc - X_ode| / SE over 10 checkpoints, N=" + std::to_string(c.N) +
              (negative ? "" : "; K left the negative regime")};
}

CriterionResult grazing_convergence(std::uint64_t seed) {
  ScenarioConfig c = preset("computation_of_marginal");
  c.seed = seed;
  c.market.value_fn = ValueFunctionMode::identity;
  c.market.omega = 60.0;
  c.market.kappa = 0.01;
  c.market.T_end = 0.1;
  std::vector<double> ks;
  std::string detail = "ks";
  bool positive_all = true;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    c.market.dt = eps;
    c.kinetic.epsilon = eps;
    bool positive = false;
    ks.push_back(bond_marginal_ks(c, &positive));
    positive_all = positive_all && positive;
    detail += " eps=" + fmt(eps) + ":" + fmt(ks.back());
  }
  bool monotone = true;
  for (std::size_t i = 1; i < ks.size(); ++i) monotone = monotone && ks[i] <= ks[i - 1];
  return {"grazing_convergence", monotone && positive_all, ks.back(), 0.0, detail};
}

// Individual invariant checks; each returns "" on success or a failure note.
std::string check_mass_and_positivity(std::uint64_t seed) {
  // Harsh noise: many rejected jumps, none may remove or corrupt a particle.
  MarketParams p;
  p.nu = 0.3;
  p.dt = 1e-2;
  p.kappa = 1e-3;  // keep the price alive; the stress is on the portfolios
  KineticParams kin;
  kin.epsilon = 1e-2;
  const std::size_t n = 5000;
  Population pop = Population::point_mass(n, 20, 20, seed, StreamDomain::particle_noise);
  MarketState m{5, 0, 5, 0};
  const KineticRun run = run_kinetic(pop, m, p, kin, 0.2, 1, 0);
  if (pop.size() != n || pop.streams.size() != n) return "particle count changed";
  if (run.attempts != n * run.trajectory.steps) return "attempt count mismatch";
  for (const auto& a : pop.agents) {
    if (!(a.x > 0.0) || !(a.y > 0.0)) return "non-positive particle";
  }
  if (run.rejections == 0) return "stress run produced no rejections";

  Population agents = Population::point_mass(2000, 20, 20, seed, StreamDomain::agent_noise);
  MarketState mm{5, 0, 5, 0};
  MarketParams pm = p;
  pm.T_end = 0.2;
  simulate(agents, mm, pm, MicroMode::noisy, 10);
  for (const auto& a : agents.agents) {
    if (a.x < 0.0 || a.y < 0.0) return "negative agent wealth";
  }

  BrokerEnsemble br = BrokerEnsemble::point_mass(2000, 5, seed);
  const std::array<double, 1> ed{0.0};
  std::size_t floored = 0;
  for (int s = 0; s < 20; ++s) floored += broker_step(br, ed, 2.0, 0.4);
  if (br.size() != 2000) return "broker count changed";
  for (double s : br.prices) {
    if (!(s > 0.0)) return "non-positive broker price";
  }
  if (floored == 0) return "stress run never hit the price floor";
  return "";
}

std::string check_budget(std::uint64_t seed, double* worst_out) {
  MarketParams p;
  p.r = 0.0;
  p.D = 0.0;
  p.nu = 1.0;
  MicroOptions opt;
  opt.forced_ed = 0.0;
  double worst = 0.0;
  for (const bool noisy : {false, true}) {
    Population pop = Population::point_mass(2000, 20, 20, seed, StreamDomain::agent_noise);
    MarketState m{5, 0, 5, 0};
    for (int s = 0; s < 200; ++s) {
      std::vector<double> before(pop.size());
      for (std::size_t i = 0; i < pop.size(); ++i) before[i] = pop.agents[i].x + pop.agents[i].y;
      if (noisy) {
        step_noisy(pop, m, p, opt);
      } else {
        step_deterministic(pop, m, p, opt);
      }
      for (std::size_t i = 0; i < pop.size(); ++i) {
        const double after = pop.agents[i].x + pop.agents[i].y;
        worst = std::max(worst, std::abs(after - before[i]) / before[i]);
      }
    }
  }
  *worst_out = worst;
  return worst <= kBudgetTolerance ? "" : "budget drift " + fmt(worst);
}

std::string check_thread_determinism(std::uint64_t seed) {
  const unsigned saved = thread_count();
  auto kinetic_once = [&](unsigned threads) {
    set_thread_count(threads);
    Population pop = Population::point_mass(20000, 20, 20, seed, StreamDomain::particle_noise);
    MarketState m{5, 0, 10, 0};
    MarketParams p;
    KineticRun run = run_kinetic(pop, m, p, KineticParams{}, 0.01, 1, 0,
                                 FundamentalPriceProcess::stochastic(0.1, seed));
    return std::make_pair(pop.agents, run.trajectory.S_path);
  };
  auto coupled_once = [&](unsigned threads) {
    set_thread_count(threads);
    MarketParams p;
    p.dt = 1e-3;
    KineticParams kin;
    kin.epsilon = 1e-3;
    CoupledOptions o;
    o.mode = CouplingMode::high_frequency;
    CoupledSystem sys(Population::point_mass(5000, 20, 20, seed, StreamDomain::particle_noise),
                      BrokerEnsemble::point_mass(6000, 5, seed), MarketState{5, 0, 5, 0},
                      p, kin, o);
    run_coupled(sys, 0.02, 1, 0);
    return sys.brokers().prices;
  };
  const auto a = kinetic_once(1);
  const auto b = kinetic_once(4);
  const auto ca = coupled_once(1);
  const auto cb = coupled_once(4);
  set_thread_count(saved);
  auto same_agents = [](const std::vector<AgentState>& u, const std::vector<AgentState>& v) {
    return std::equal(u.begin(), u.end(), v.begin(), v.end(), [](auto& l, auto& r) {
      return l.x == r.x && l.y == r.y;
    });
  };
  if (!same_agents(a.first, b.first) || a.second != b.second) {
    return "kinetic run differs across thread counts";
  }
  if (ca != cb) return "coupled run differs across thread counts";
  return "";
}

std::string check_finite_n_rate(double* slope_out) {
  MarketParams p;
  const AgentState agent{20.0, 20.0};
  const double S = 5.0;
  const double sf = 10.0;
  const double k = aggregate_estimate(S, 0.0, p.D, sf, p).k;
  const double dk = estimate_dS(S, 0.0, p.D, sf, p);
  const double limit = feedback_control(agent, k, p.nu);
  std::vector<double> lx, ly;
  for (std::size_t n : {10u, 100u, 1000u, 10000u, 100000u}) {
    const double diff = std::abs(feedback_control_finite_n(agent, k, dk, S, n, p) - limit);
    lx.push_back(std::log(static_cast<double>(n)));
    ly.push_back(std::log(diff));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  *slope_out = sxy / sxx;
  return std::abs(*slope_out + 1.0) <= kRateSlopeTolerance ? "" : "slope " + fmt(*slope_out);
}

std::string check_zero_noise_brokers(std::uint64_t seed) {
  MarketParams p;
  KineticParams kin;
  const double T = 0.05;
  Population pop = Population::point_mass(3000, 20, 20, seed, StreamDomain::particle_noise);
  MarketState m{5, 0, 5, 0};
  KineticStepOptions zero;
  zero.zero_noise = true;
  const KineticRun macro = run_kinetic(pop, m, p, kin, T, 1, 0, {}, zero);

  CoupledOptions o;
  o.portfolio_noise = false;
  o.zero_broker_noise = true;
  CoupledSystem sys(Population::point_mass(3000, 20, 20, seed, StreamDomain::particle_noise),
                    BrokerEnsemble::point_mass(4000, 5, seed), MarketState{5, 0, 5, 0}, p,
                    kin, o);
  const CoupledRun coupled = run_coupled(sys, T, 1, 0);
  if (macro.trajectory.S_path != coupled.trajectory.S_path) {
    return "price paths differ";
  }
  for (double s : sys.brokers().prices) {
    if (s != m.S) return "broker prices left the macro path";
  }
  return "";
}

CriterionResult invariants(std::uint64_t seed) {
  std::vector<std::string> failures;
  auto run = [&](const char* name, auto&& check) {
    std::string failure;
    try {
      failure = check();
    } catch (const std::exception& e) {
      failure = std::string("error: ") + e.what();
    }
    if (!failure.empty()) failures.push_back(std::string(name) + ": " + failure);
  };
  double budget = 0.0, slope = 0.0;
  run("mass/positivity", [&] { return check_mass_and_positivity(seed); });
  run("budget", [&] { return check_budget(seed, &budget); });
  run("determinism", [&] { return check_thread_determinism(seed); });
  run("finite_n_rate", [&] { return check_finite_n_rate(&slope); });
  run("zero_noise_brokers", [&] { return check_zero_noise_brokers(seed); });
  std::string detail = "budget_max_rel=" + fmt(budget) + " finite_n_slope=" + fmt(slope);
  for (const auto& f : failures) detail += "; FAIL " + f;
  return {"invariants", failures.empty(), static_cast<double>(failures.size()), 0.0,
          detail};
}

struct Suite {
  std::string_view name;
  std::function<CriterionResult(std::uint64_t)> run;
};

const std::vector<Suite>& suites() {
  static const std::vector<Suite> list{
      {"bond_marginal", bond_marginal},
      {"longterm_lognormal", longterm_lognormal},
      {"hf_steady_state", steady_state},
      {"stationary_residual", [](std::uint64_t) { return stationary_residual(); }},
      {"fat_tails", fat_tails},
      {"moment_ode", moment_ode_match},
      {"grazing_convergence", grazing_convergence},
      {"invariants", invariants},
  };
  return list;
}

}  // namespace

std::vector<std::string> acceptance_suites() {
  std::vector<std::string> names{"all"};
  for (const auto& s : suites()) names.emplace_back(s.name);
  return names;
}

std::vector<CriterionResult> run_acceptance(std::string_view suite, std::uint64_t seed) {
  std::vector<CriterionResult> out;
  for (const auto& s : suites()) {
    if (suite != "all" && suite != s.name) continue;
    try {
      out.push_back(s.run(seed));
    } catch (const std::exception& e) {
      out.push_back({std::string(s.name), false, 0.0, 0.0,
                     std::string("error: ") + e.what()});
    }
  }
  if (out.empty()) throw ConfigError("unknown acceptance suite '" + std::string(suite) + "'");
  return out;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.passed ? "PASS " : "FAIL ") << r.name << " value=" << fmt(r.value)
    << " tol=" << fmt(r.tolerance) << " | " << r.detail;
  return s.str();
}

}  // namespace kmarket
