#include "kmarket/kinetic_solver.hpp"

#include <cmath>
#include <numbers>

#include "kmarket/errors.hpp"
#include "kmarket/parallel.hpp"

namespace kmarket {

void KineticParams::validate() const {
  if (!(epsilon > 0.0)) throw ModelError("epsilon must be > 0");
  if (!(eta_truncation > 0.0)) throw ModelError("eta_truncation must be > 0");
}

double truncated_normal_sd(double c) {
  if (!(c > 0.0)) throw ModelError("eta_truncation must be > 0");
  if (std::isinf(c)) return 1.0;
  const double pdf = std::exp(-0.5 * c * c) / std::sqrt(2.0 * std::numbers::pi);
  const double mass = std::erf(c / std::numbers::sqrt2);
  return std::sqrt(1.0 - 2.0 * c * pdf / mass);
}

double sample_eta(RandomStream& stream, double c_eta) {
  if (std::isinf(c_eta)) return stream.normal();
  thread_local double cached_c = 0.0;
  thread_local double cached_sd = 1.0;
  if (c_eta != cached_c) {
    cached_sd = truncated_normal_sd(c_eta);
    cached_c = c_eta;
  }
  const double sd = cached_sd;
  double eta;
  do {
    eta = stream.normal();
  } while (std::abs(eta) > c_eta);
  return eta / sd;
}

std::optional<AgentState> apply_interaction(const AgentState& state,
                                            double eta,
                                            const InteractionContext& ctx,
                                            const MarketParams& params,
                                            const KineticParams& kin) {
  const double a = kin.epsilon;
  const double k = ctx.k;
  const bool zero = is_zero_estimate(k);
  const double exposure = zero ? 0.0 : (k < 0.0 ? state.x : state.y);
  const double u_eta = feedback_control(state, k, params.nu) +
                       exposure * eta / (std::sqrt(a) * params.nu);
  AgentState next;
  next.x = state.x + a * (params.kappa * ctx.ED + params.D / ctx.S) * state.x +
           a * u_eta;
  next.y = state.y + a * params.r * state.y - a * u_eta;
  if (next.x <= 0.0 || next.y <= 0.0) return std::nullopt;
  return next;
}

double mean_field_excess_demand(const Population& particles, double k,
                                double nu) {
  if (particles.size() == 0) throw ModelError("empty particle set");
  if (is_zero_estimate(k)) return 0.0;
  return k < 0.0 ? (k / nu) * particles.mean_x() : (k / nu) * particles.mean_y();
}

double mean_field_excess_demand(const Population& particles,
                                const MarketState& market,
                                const MarketParams& params) {
  return mean_field_excess_demand(
      particles, current_estimates(market, params).k, params.nu);
}

std::size_t kinetic_step(Population& particles, MarketState& market,
                         const MarketParams& params, const KineticParams& kin,
                         const KineticStepOptions& options) {
  if (!(market.S > 0.0)) throw ModelError("non-positive price");
  const double k = current_estimates(market, params).k;
  const double ed = mean_field_excess_demand(particles, k, params.nu);
  const InteractionContext ctx{market.S, ed, k};

  const std::size_t n = particles.size();
  std::vector<unsigned char> rejected(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double eta = options.zero_noise
                             ? 0.0
                             : sample_eta(particles.streams[i],
                                          kin.eta_truncation);
      if (auto next = apply_interaction(particles.agents[i], eta, ctx, params,
                                        kin)) {
        particles.agents[i] = *next;
      } else {
        rejected[i] = 1;
      }
    }
  });

  const double S_next = market.S + market.S * (kin.epsilon * params.kappa * ed);
  if (!(S_next > 0.0)) throw ModelError("price collapsed; reduce epsilon");
  market.S = S_next;
  market.ED = ed;
  market.t += kin.epsilon;
  std::size_t count = 0;
  for (unsigned char r : rejected) count += r;
  return count;
}

KineticRun run_kinetic(Population& particles, MarketState& market,
                       const MarketParams& params, const KineticParams& kin,
                       double T_end, std::size_t sample_every,
                       std::size_t snapshot_every,
                       FundamentalPriceProcess fundamental,
                       const KineticStepOptions& options) {
  kin.validate();
  if (T_end < kin.epsilon) throw ModelError("T_end must be >= epsilon");
  if (sample_every == 0) sample_every = 1;
  const std::size_t steps = step_count(T_end - market.t, kin.epsilon);

  KineticRun run;
  auto& rec = run.trajectory;
  rec.append(market, particles.mean_x(), particles.mean_y(),
             current_estimates(market, params).k);
  for (std::size_t s = 1; s <= steps; ++s) {
    std::size_t rejected = 0;
    try {
      rejected = kinetic_step(particles, market, params, kin, options);
    } catch (const ModelError& e) {
      throw ModelError(std::string(e.what()) +
                       " (t = " + std::to_string(market.t) + ")");
    }
    run.rejections += rejected;
    run.attempts += particles.size();
    market.sf = fundamental.advance(market.sf, kin.epsilon);
    if (s % sample_every == 0 || s == steps) {
      rec.append(market, particles.mean_x(), particles.mean_y(),
                 current_estimates(market, params).k);
    }
    if ((snapshot_every != 0 && s % snapshot_every == 0) || s == steps) {
      run.snapshots.push_back({market.t, particles.agents});
    }
  }
  rec.steps = steps;
  rec.clips = run.rejections;
  if (run.rejection_fraction() > kRejectionWarningFraction) {
    run.warnings.push_back("rejection fraction " +
                           std::to_string(run.rejection_fraction()) +
                           " exceeds 1%; reduce epsilon");
  }
  return run;
}

}  // namespace kmarket
