#include "kmarket/micro_dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "kmarket/errors.hpp"
#include "kmarket/parallel.hpp"

namespace kmarket {

void TrajectoryRecord::append(const MarketState& m, double X, double Y,
                              double K) {
  times.push_back(m.t);
  S_path.push_back(m.S);
  ED_path.push_back(m.ED);
  X_path.push_back(X);
  Y_path.push_back(Y);
  K_path.push_back(K);
  sf_path.push_back(m.sf);
}

double excess_demand_empirical(std::span<const double> controls) {
  if (controls.empty()) throw ModelError("empty population");
  return pairwise_sum(controls) / static_cast<double>(controls.size());
}

ReturnEstimates current_estimates(const MarketState& market,
                                  const MarketParams& params) {
  const double S_dot = params.kappa * market.ED * market.S;
  return aggregate_estimate(market.S, S_dot, params.D, market.sf, params);
}

std::size_t step_count(double T_end, double dt) {
  const auto n = static_cast<long long>(std::llround(T_end / dt));
  return static_cast<std::size_t>(std::max(1LL, n));
}

namespace {

std::size_t micro_step(Population& pop, MarketState& market,
                       const MarketParams& params, const MicroOptions& options,
                       bool noisy) {
  if (!(market.S > 0.0)) throw ModelError("non-positive price");
  const std::size_t n = pop.size();
  if (n == 0) throw ModelError("empty population");

  const double k = current_estimates(market, params).k;
  double dk_dS = 0.0;
  if (options.control == ControlLaw::finite_n) {
    const double S_dot = params.kappa * market.ED * market.S;
    dk_dS = estimate_dS(market.S, S_dot, params.D, market.sf, params);
  }

  std::vector<double> controls(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      controls[i] = options.control == ControlLaw::finite_n
                        ? feedback_control_finite_n(pop.agents[i], k, dk_dS,
                                                    market.S, n, params)
                        : feedback_control(pop.agents[i], k, params.nu);
    }
  });
  const double ed =
      options.forced_ed ? *options.forced_ed : excess_demand_empirical(controls);

  const double dt = params.dt;
  const double growth = dt * params.kappa * ed;
  if (1.0 + growth <= 0.0) {
    throw ModelError("price collapsed; reduce dt");
  }
  const double stock_rate = params.kappa * ed + params.D / market.S;
  const double sqrt_dt = std::sqrt(dt);
  const bool positive_k = !is_zero_estimate(k) && k > 0.0;
  const bool negative_k = !is_zero_estimate(k) && k < 0.0;

  std::vector<unsigned char> clipped(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      AgentState& a = pop.agents[i];
      const double x_base = a.x + dt * (stock_rate * a.x);
      const double y_base = a.y + dt * (params.r * a.y);
      // Wealth moved from bonds to stocks during this step.
      double transfer = dt * controls[i];
      if (noisy && !options.zero_noise) {
        const double eta = pop.streams[i].normal();
        const double scale = (negative_k ? a.x : 0.0) + (positive_k ? a.y : 0.0);
        transfer += scale / params.nu * sqrt_dt * eta;
      }
      if (transfer < -x_base) {
        transfer = -x_base;
        clipped[i] = 1;
      } else if (transfer > y_base) {
        transfer = y_base;
        clipped[i] = 1;
      }
      a.x = x_base + transfer;
      a.y = y_base - transfer;
      if (clipped[i]) {
        a.x = std::max(a.x, 0.0);
        a.y = std::max(a.y, 0.0);
      }
    }
  });

  const double S_next = market.S + market.S * growth;
  if (!(S_next > 0.0)) throw ModelError("price collapsed; reduce dt");
  market.S = S_next;
  market.ED = ed;
  market.t += dt;
  return static_cast<std::size_t>(
      std::count(clipped.begin(), clipped.end(), static_cast<unsigned char>(1)));
}

}  // namespace

std::size_t step_deterministic(Population& pop, MarketState& market,
                               const MarketParams& params,
                               const MicroOptions& options) {
  return micro_step(pop, market, params, options, false);
}

std::size_t step_noisy(Population& pop, MarketState& market,
                       const MarketParams& params,
                       const MicroOptions& options) {
  return micro_step(pop, market, params, options, true);
}

TrajectoryRecord simulate(Population& pop, MarketState& market,
                          const MarketParams& params, MicroMode mode,
                          std::size_t sample_every,
                          FundamentalPriceProcess fundamental,
                          const MicroOptions& options) {
  params.validate();
  if (params.T_end < params.dt) throw ModelError("T_end must be >= dt");
  if (sample_every == 0) sample_every = 1;
  const std::size_t steps = step_count(params.T_end - market.t, params.dt);

  TrajectoryRecord rec;
  rec.append(market, pop.mean_x(), pop.mean_y(),
             current_estimates(market, params).k);
  for (std::size_t s = 1; s <= steps; ++s) {
    try {
      rec.clips += mode == MicroMode::noisy
                       ? step_noisy(pop, market, params, options)
                       : step_deterministic(pop, market, params, options);
    } catch (const ModelError& e) {
      throw ModelError(std::string(e.what()) +
                       " (t = " + std::to_string(market.t) + ")");
    }
    market.sf = fundamental.advance(market.sf, params.dt);
    if (s % sample_every == 0 || s == steps) {
      rec.append(market, pop.mean_x(), pop.mean_y(),
                 current_estimates(market, params).k);
    }
  }
  rec.steps = steps;
  return rec;
}

}  // namespace kmarket
