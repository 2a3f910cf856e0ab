#include "kmarket/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "kmarket/analytic_oracles.hpp"
#include "kmarket/analytics.hpp"
#include "kmarket/broker_market.hpp"
#include "kmarket/errors.hpp"
#include "kmarket/kinetic_solver.hpp"
#include "kmarket/micro_dynamics.hpp"

namespace kmarket {

namespace fs = std::filesystem;

Population initial_population(const ScenarioConfig& c, StreamDomain domain) {
  if (c.initial == InitialLaw::lognormal) {
    return Population::lognormal(c.N, c.X0, c.Y0, c.x_log_sd, c.y_log_sd,
                                 c.seed, domain);
  }
  return Population::point_mass(c.N, c.X0, c.Y0, c.seed, domain);
}

BrokerEnsemble initial_brokers(const ScenarioConfig& c) {
  if (c.initial == InitialLaw::lognormal && c.s_log_sd > 0.0) {
    return BrokerEnsemble::lognormal(c.M, c.S0, c.s_log_sd, c.seed);
  }
  return BrokerEnsemble::point_mass(c.M, c.S0, c.seed);
}

FundamentalPriceProcess fundamental_process(const ScenarioConfig& c) {
  if (c.sf_stochastic && c.sf_volatility > 0.0) {
    return FundamentalPriceProcess::stochastic(c.sf_volatility, c.seed);
  }
  return FundamentalPriceProcess::constant();
}

namespace {

std::string snapshot_name(const char* kind, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%04zu.csv", kind, i);
  return buf;
}

std::vector<double> xs(std::span<const AgentState> agents) {
  std::vector<double> v(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) v[i] = agents[i].x;
  return v;
}

std::vector<double> ys(std::span<const AgentState> agents) {
  std::vector<double> v(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) v[i] = agents[i].y;
  return v;
}

void report_common(Report& rep, const TrajectoryRecord& rec) {
  rep.add("run", "steps", static_cast<double>(rec.steps));
  rep.add("run", "samples", static_cast<double>(rec.size()));
  rep.add("run", "t_final", rec.times.back());
  rep.add("run", "S_final", rec.S_path.back());
  rep.add("run", "X_final", rec.X_path.back());
  rep.add("run", "Y_final", rec.Y_path.back());
}

void report_wealth(Report& rep, const fs::path& dir,
                   std::span<const AgentState> agents) {
  const auto x = xs(agents);
  const auto y = ys(agents);
  const auto fx = fit_lognormal(x);
  const auto fy = fit_lognormal(y);
  rep.add("lognormal_fit_x", "mu", fx.mu);
  rep.add("lognormal_fit_x", "sigma", fx.sigma);
  rep.add("lognormal_fit_y", "mu", fy.mu);
  rep.add("lognormal_fit_y", "sigma", fy.sigma);
  write_histogram_csv(dir / "histogram_x.csv", histogram(x, Binning::log));
  write_histogram_csv(dir / "histogram_y.csv", histogram(y, Binning::log));
}

void report_returns(Report& rep, const fs::path& dir, const TrajectoryRecord& rec,
                    bool stochastic_sf) {
  if (rec.size() < 6) return;
  const auto rs = log_returns(rec.S_path, 1);
  try {
    rep.add("returns_S", "excess_kurtosis", excess_kurtosis(rs));
    write_qq_csv(dir / "qq_returns_S.csv", qq_gaussian(rs));
    write_histogram_csv(dir / "histogram_returns_S.csv", histogram(rs));
  } catch (const ModelError&) {
    rep.add("returns_S", "excess_kurtosis", "degenerate");
  }
  if (stochastic_sf) {
    const auto rf = log_returns(rec.sf_path, 1);
    rep.add("returns_sf", "excess_kurtosis", excess_kurtosis(rf));
    write_qq_csv(dir / "qq_returns_sf.csv", qq_gaussian(rf));
  }
}

void write_oracle_curve(const fs::path& path, const DensityEstimate& est,
                        const auto& pdf) {
  DensityEstimate curve = est;
  for (std::size_t i = 0; i < curve.bins(); ++i) curve.densities[i] = pdf(curve.center(i));
  write_histogram_csv(path, curve);
}

// Diffusive marginal check when K kept one sign over the whole run.
void report_marginal_oracle(Report& rep, const fs::path& dir,
                            const ScenarioConfig& c, const TrajectoryRecord& rec,
                            std::span<const AgentState> initial,
                            std::span<const AgentState> final_agents, double t) {
  const bool positive = std::all_of(rec.K_path.begin(), rec.K_path.end(), [](double k) {
    return k > 0.0 && !is_zero_estimate(k);
  });
  const bool negative = std::all_of(rec.K_path.begin(), rec.K_path.end(), [](double k) {
    return k < 0.0 && !is_zero_estimate(k);
  });
  if (!positive && !negative) {
    rep.add("marginal_oracle", "status", "K changes sign; no closed form");
    return;
  }
  const auto v0 = positive ? ys(initial) : xs(initial);
  const auto v = positive ? ys(final_agents) : xs(final_agents);
  const InitialConstants ic = fit_initial_constants(v0);
  const LogNormalLaw law =
      positive ? marginal_h_diffusive_law(
                     t, bond_drift_history(rec, c.market, ic.drift_offset),
                     c.market.nu, ic.variance_offset)
               : marginal_g_diffusive_law(
                     t, stock_drift_history(rec, c.market, ic.drift_offset),
                     c.market.nu, ic.variance_offset);
  const std::string name = positive ? "marginal_h" : "marginal_g";
  rep.add(name, "mu", law.mu);
  rep.add(name, "sigma2", law.sigma2);
  rep.add(name, "ks", ks_distance(v, [&](double z) { return law.cdf(z); }));
  const auto est = histogram(v, Binning::log);
  write_oracle_curve(dir / (name + "_oracle.csv"), est,
                     [&](double z) { return law.pdf(z); });
}

void write_index(const fs::path& dir,
                 const std::vector<std::array<std::string, 4>>& entries) {
  std::string text = "kind,file,t,count\n";
  for (const auto& e : entries) text += e[0] + "," + e[1] + "," + e[2] + "," + e[3] + "\n";
  write_text(dir / "snapshots" / "index.csv", text);
}

void run_micro(const ScenarioConfig& c, RunResult& res) {
  Population pop = initial_population(c, StreamDomain::agent_noise);
  MarketState market{c.S0, 0.0, c.sf0, 0.0};
  const MicroMode mode =
      c.mode == ScenarioMode::micro_det ? MicroMode::deterministic : MicroMode::noisy;
  MicroOptions opts;
  opts.control = c.control;
  const TrajectoryRecord rec = simulate(pop, market, c.market, mode, c.sample_every,
                                        fundamental_process(c), opts);
  const fs::path& dir = res.output_dir;
  write_trajectory_csv(dir / "trajectory.csv", rec);
  write_estimates_csv(dir / "estimates.csv", rec);
  write_portfolio_csv(dir / "snapshots" / snapshot_name("portfolio", 0), pop.agents);
  write_index(dir, {{"portfolio", snapshot_name("portfolio", 0),
                     format_value(market.t), std::to_string(pop.size())}});
  report_common(res.report, rec);
  res.report.add("run", "projections", static_cast<double>(rec.clips));
  report_wealth(res.report, dir, pop.agents);
  report_returns(res.report, dir, rec, c.sf_stochastic);
}

void run_kinetic_mode(const ScenarioConfig& c, RunResult& res) {
  Population pop = initial_population(c, StreamDomain::particle_noise);
  const std::vector<AgentState> initial = pop.agents;
  MarketState market{c.S0, 0.0, c.sf0, 0.0};
  KineticRun run = run_kinetic(pop, market, c.market, c.kinetic, c.market.T_end,
                               c.sample_every, c.snapshot_every,
                               fundamental_process(c));
  const fs::path& dir = res.output_dir;
  write_trajectory_csv(dir / "trajectory.csv", run.trajectory);
  write_estimates_csv(dir / "estimates.csv", run.trajectory);
  std::vector<std::array<std::string, 4>> index;
  for (std::size_t i = 0; i < run.snapshots.size(); ++i) {
    const auto name = snapshot_name("portfolio", i);
    write_portfolio_csv(dir / "snapshots" / name, run.snapshots[i].particles);
    index.push_back({"portfolio", name, format_value(run.snapshots[i].t),
                     std::to_string(run.snapshots[i].particles.size())});
  }
  write_index(dir, index);
  report_common(res.report, run.trajectory);
  res.report.add("run", "rejection_fraction", run.rejection_fraction());
  report_wealth(res.report, dir, pop.agents);
  report_marginal_oracle(res.report, dir, c, run.trajectory, initial, pop.agents,
                         market.t);
  report_returns(res.report, dir, run.trajectory, c.sf_stochastic);
  res.warnings.insert(res.warnings.end(), run.warnings.begin(), run.warnings.end());
}

CoupledOptions coupled_options(const ScenarioConfig& c) {
  CoupledOptions o;
  o.mode = c.mode == ScenarioMode::coupled_long_term ? CouplingMode::long_term
                                                     : CouplingMode::high_frequency;
  o.scheme = c.scheme;
  o.kc_variant = c.kc_variant;
  o.portfolio_noise = c.portfolio_noise;
  return o;
}

CoupledSystem make_system(const ScenarioConfig& c) {
  return CoupledSystem(initial_population(c, StreamDomain::particle_noise),
                       initial_brokers(c), MarketState{c.S0, 0.0, c.sf0, 0.0},
                       c.market, c.kinetic, coupled_options(c),
                       fundamental_process(c));
}

void run_coupled_mode(const ScenarioConfig& c, RunResult& res) {
  CoupledSystem sys = make_system(c);
  const std::vector<double> initial_prices = sys.brokers().prices;
  CoupledRun run = run_coupled(sys, c.market.T_end, c.sample_every, c.snapshot_every);
  const fs::path& dir = res.output_dir;
  write_trajectory_csv(dir / "trajectory.csv", run.trajectory);
  write_estimates_csv(dir / "estimates.csv", run.trajectory);
  std::vector<std::array<std::string, 4>> index;
  for (std::size_t i = 0; i < run.price_snapshots.size(); ++i) {
    const auto pname = snapshot_name("prices", i);
    const auto wname = snapshot_name("portfolio", i);
    write_price_csv(dir / "snapshots" / pname, run.price_snapshots[i].prices);
    write_portfolio_csv(dir / "snapshots" / wname, run.portfolio_snapshots[i].particles);
    const auto t = format_value(run.price_snapshots[i].t);
    index.push_back({"prices", pname, t, std::to_string(sys.brokers().size())});
    index.push_back({"portfolio", wname, t, std::to_string(sys.particles().size())});
  }
  write_index(dir, index);
  report_common(res.report, run.trajectory);
  res.report.add("run", "rejections", static_cast<double>(run.rejections));
  res.report.add("run", "floored", static_cast<double>(run.floored));
  report_wealth(res.report, dir, sys.particles().agents);

  const auto& prices = sys.brokers().prices;
  const auto fit = fit_lognormal(prices);
  res.report.add("lognormal_fit_prices", "mu", fit.mu);
  res.report.add("lognormal_fit_prices", "sigma", fit.sigma);
  const auto est = histogram(prices, Binning::log);
  write_histogram_csv(dir / "histogram_prices.csv", est);
  if (c.mode == ScenarioMode::coupled_long_term) {
    const InitialConstants ic = fit_initial_constants(initial_prices);
    const DriftHistory rbar = price_drift_history(run.trajectory, c.market, ic.drift_offset);
    for (std::size_t i = 0; i < run.price_snapshots.size(); ++i) {
      const auto& snap = run.price_snapshots[i];
      const LogNormalLaw law = longterm_price_law(snap.t, rbar, ic.variance_offset);
      char label[32];
      std::snprintf(label, sizeof label, "t=%.6g", snap.t);
      res.report.add("longterm_price_ks", label,
                     ks_distance(snap.prices, [&](double z) { return law.cdf(z); }));
    }
    const LogNormalLaw law =
        longterm_price_law(sys.market().t, rbar, ic.variance_offset);
    write_oracle_curve(dir / "longterm_price_oracle.csv", est,
                       [&](double z) { return law.pdf(z); });
  } else {
    try {
      const auto ig = fit_inverse_gamma(prices);
      res.report.add("inverse_gamma_fit_prices", "shape", ig.shape);
      res.report.add("inverse_gamma_fit_prices", "scale", ig.scale);
      res.report.add("inverse_gamma_fit_prices", "moments_unreliable",
                     ig.moments_unreliable ? "true" : "false");
      res.report.add("prices", "hill_tail_exponent", hill_tail_exponent(prices));
    } catch (const ModelError& e) {
      res.warnings.push_back(std::string("price tail fit skipped: ") + e.what());
    }
  }
  report_returns(res.report, dir, run.trajectory, c.sf_stochastic);
  res.warnings.insert(res.warnings.end(), run.warnings.begin(), run.warnings.end());
}

void run_steady_state_mode(const ScenarioConfig& c, RunResult& res) {
  SteadyStateResult ss = run_steady_state(c);
  const fs::path& dir = res.output_dir;
  write_trajectory_csv(dir / "trajectory.csv", ss.trajectory);
  write_estimates_csv(dir / "estimates.csv", ss.trajectory);
  write_price_csv(dir / "snapshots" / snapshot_name("prices", 0), ss.stationary_prices);
  write_index(dir, {{"prices", snapshot_name("prices", 0), format_value(ss.t_stationary),
                     std::to_string(ss.stationary_prices.size())}});
  std::string checks = "t,ks_two_sample\n";
  for (const auto& ck : ss.checks) checks += format_value(ck.t) + "," + format_value(ck.ks) + "\n";
  write_text(dir / "stationarity.csv", checks);

  Report& rep = res.report;
  rep.add("steady_state", "stationary", ss.stationary ? "true" : "false");
  rep.add("steady_state", "t_stationary", ss.t_stationary);
  rep.add("steady_state", "P_inf", ss.P_inf);
  rep.add("steady_state", "P_x", ss.P_x);
  rep.add("steady_state", "P_y", ss.P_y);
  const InverseGammaLaw law = hf_steady_state_law(c.market, c.sf0, ss.P_inf);
  rep.add("steady_state_oracle", "shape", law.shape);
  rep.add("steady_state_oracle", "scale", law.scale);
  rep.add("steady_state_oracle", "tail_exponent", law.tail_exponent());
  rep.add("steady_state_oracle", "ks",
          ks_distance(ss.stationary_prices, [&](double s) { return law.cdf(s); }));
  const auto est = histogram(ss.stationary_prices, Binning::log);
  write_histogram_csv(dir / "histogram_prices.csv", est);
  write_oracle_curve(dir / "steady_state_oracle.csv", est,
                     [&](double s) { return law.pdf(s); });
  try {
    const auto ig = fit_inverse_gamma(ss.pooled_prices);
    rep.add("inverse_gamma_fit_prices", "shape", ig.shape);
    rep.add("inverse_gamma_fit_prices", "scale", ig.scale);
    rep.add("pooled_prices", "count", static_cast<double>(ss.pooled_prices.size()));
    rep.add("pooled_prices", "hill_tail_exponent", hill_tail_exponent(ss.pooled_prices));
    const auto stab = hill_stability(ss.pooled_prices);
    write_hill_csv(dir / "hill_stability.csv", stab);
    rep.add("pooled_prices", "no_power_law", stab.no_power_law ? "true" : "false");
  } catch (const ModelError& e) {
    res.warnings.push_back(std::string("price tail fit skipped: ") + e.what());
  }
  res.warnings.insert(res.warnings.end(), ss.warnings.begin(), ss.warnings.end());
}

std::size_t steps_for(double span, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(span / dt)));
}

}  // namespace

SteadyStateResult run_steady_state(const ScenarioConfig& c) {
  c.validate();
  CoupledSystem sys = make_system(c);
  const double dt = c.market.dt;
  const std::size_t total = steps_for(c.market.T_end, dt);
  const std::size_t check_steps = steps_for(c.check_fraction * c.market.T_end, dt);
  SteadyStateResult out;

  std::vector<double> previous = sys.brokers().prices;
  std::size_t done = 0;
  auto advance = [&](std::size_t steps, TrajectoryRecord* rec) {
    const double target = sys.market().t + static_cast<double>(steps) * dt;
    CoupledRun run = run_coupled(sys, target, c.sample_every, 0);
    if (rec != nullptr) {
      // Drop the duplicated first row of each continuation.
      const std::size_t skip = rec->size() == 0 ? 0 : 1;
      auto extend = [skip](std::vector<double>& dst, const std::vector<double>& src) {
        dst.insert(dst.end(), src.begin() + static_cast<std::ptrdiff_t>(skip), src.end());
      };
      extend(rec->times, run.trajectory.times);
      extend(rec->S_path, run.trajectory.S_path);
      extend(rec->ED_path, run.trajectory.ED_path);
      extend(rec->X_path, run.trajectory.X_path);
      extend(rec->Y_path, run.trajectory.Y_path);
      extend(rec->K_path, run.trajectory.K_path);
      extend(rec->sf_path, run.trajectory.sf_path);
      rec->steps += run.trajectory.steps;
      rec->clips += run.trajectory.clips;
    }
    for (const auto& w : run.warnings) {
      if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) {
        out.warnings.push_back(w);
      }
    }
  };

  while (done < total) {
    const std::size_t steps = std::min(check_steps, total - done);
    advance(steps, &out.trajectory);
    done += steps;
    const double ks = ks_two_sample(previous, sys.brokers().prices);
    out.checks.push_back({sys.market().t, ks});
    previous = sys.brokers().prices;
    if (steps == check_steps && ks < c.ks_threshold) {
      out.stationary = true;
      break;
    }
  }
  out.t_stationary = sys.market().t;
  out.stationary_prices = sys.brokers().prices;
  if (!out.stationary) {
    out.warnings.push_back("stationarity criterion not met before T_end");
  }

  const std::size_t windows = out.stationary ? std::max<std::size_t>(1, c.tail_snapshots) : 0;
  double px = 0.0, py = 0.0;
  if (windows == 0) {
    out.pooled_prices = out.stationary_prices;
    px = sys.particles().mean_x();
    py = sys.particles().mean_y();
  } else {
    const std::size_t gap = steps_for(c.tail_gap, dt);
    out.pooled_prices.reserve(windows * sys.brokers().size());
    for (std::size_t w = 0; w < windows; ++w) {
      advance(gap, &out.trajectory);
      const auto& p = sys.brokers().prices;
      out.pooled_prices.insert(out.pooled_prices.end(), p.begin(), p.end());
      px += sys.particles().mean_x();
      py += sys.particles().mean_y();
    }
    px /= static_cast<double>(windows);
    py /= static_cast<double>(windows);
  }
  out.P_x = px;
  out.P_y = py;
  out.P_inf = 0.5 * (px + py);
  return out;
}

RunResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  RunResult res;
  res.output_dir = config.output_dir;
  fs::create_directories(res.output_dir);
  write_text(res.output_dir / "resolved.ini", emit_config(config));

  switch (config.mode) {
    case ScenarioMode::micro_det:
    case ScenarioMode::micro_noisy:
      run_micro(config, res);
      break;
    case ScenarioMode::kinetic:
      run_kinetic_mode(config, res);
      break;
    case ScenarioMode::coupled_long_term:
    case ScenarioMode::coupled_high_frequency:
      run_coupled_mode(config, res);
      break;
    case ScenarioMode::hf_steady_state:
      run_steady_state_mode(config, res);
      break;
  }
  for (const auto& w : res.warnings) res.report.add("warning", "message", w);
  res.report.write(res.output_dir / "report.csv");
  return res;
}

}  // namespace kmarket
