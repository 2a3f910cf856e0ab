#include "kmarket/broker_market.hpp"

#include <cmath>
#include <string>

#include "kmarket/errors.hpp"
#include "kmarket/parallel.hpp"

namespace kmarket {

double fundamental_price_step(double sf, double dt, RandomStream& stream,
                              double volatility) {
  if (!(sf > 0.0)) throw ModelError("non-positive fundamental price");
  if (!(dt > 0.0)) throw ModelError("dt must be > 0");
  const double factor = 1.0 + volatility * std::sqrt(dt) * stream.normal();
  return sf * std::max(factor, kPriceFloorRatio);
}

BrokerEnsemble BrokerEnsemble::point_mass(std::size_t m, double s0,
                                          std::uint64_t seed) {
  if (m == 0) throw ModelError("broker count must be >= 1");
  if (!(s0 > 0.0)) throw ModelError("non-positive price");
  BrokerEnsemble e;
  e.prices.assign(m, s0);
  e.streams.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    e.streams.emplace_back(seed, j, StreamDomain::broker_noise);
  }
  return e;
}

BrokerEnsemble BrokerEnsemble::lognormal(std::size_t m, double s0,
                                         double log_sd, std::uint64_t seed) {
  BrokerEnsemble e = point_mass(m, s0, seed);
  for (std::size_t j = 0; j < m; ++j) {
    // Offset keeps these draws apart from the portfolio initial conditions.
    RandomStream init(seed, j + (std::uint64_t{1} << 40),
                      StreamDomain::initial_condition);
    e.prices[j] = s0 * std::exp(log_sd * init.normal());
  }
  return e;
}

double macro_price(const BrokerEnsemble& ensemble) {
  if (ensemble.prices.empty()) throw ModelError("empty broker ensemble");
  return shifted_mean(ensemble.prices);
}

std::size_t broker_step(BrokerEnsemble& ensemble, std::span<const double> ed,
                        double dt, double kappa, BrokerScheme scheme,
                        bool zero_noise) {
  const std::size_t m = ensemble.size();
  if (!(dt > 0.0)) throw ModelError("dt must be > 0");
  if (ed.size() != 1 && ed.size() != m) {
    throw ModelError("excess demand vector must have size 1 or M");
  }
  const double sqrt_dt = std::sqrt(dt);
  std::vector<unsigned char> floored(m, 0);
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const double e = ed.size() == 1 ? ed[0] : ed[j];
      const double xi = zero_noise ? 0.0 : ensemble.streams[j].normal();
      double& s = ensemble.prices[j];
      if (scheme == BrokerScheme::log_exact) {
        s *= std::exp((kappa * e - 0.5) * dt + sqrt_dt * xi);
        continue;
      }
      const double increment = dt * kappa * e + sqrt_dt * xi;
      if (1.0 + increment < kPriceFloorRatio) {
        s *= kPriceFloorRatio;
        floored[j] = 1;
      } else {
        s = s + s * increment;
      }
    }
  });
  std::size_t count = 0;
  for (unsigned char f : floored) count += f;
  return count;
}

ReturnEstimates hf_estimates(double s, double ed_at_s,
                             const MarketState& market,
                             const MarketParams& params,
                             ChartistVariant variant) {
  if (!std::isfinite(s) || s <= 0.0) throw ModelError("non-positive price");
  const double kf = fundamental_estimate(s, market.sf, params);
  const double ratio =
      variant == ChartistVariant::pooled
          ? (params.kappa / params.rho * ed_at_s + params.D) / s
          : params.kappa * ed_at_s / params.rho + params.D / s;
  const double kc = value_function(ratio, params.gamma, params.value_fn) - params.r;
  return combine_estimates(kf, kc, params);
}

std::vector<double> paired_estimates(std::size_t n_particles,
                                     std::span<const double> broker_k) {
  if (broker_k.empty() || n_particles == 0) {
    throw ModelError("high-frequency pairing needs particles and brokers");
  }
  std::vector<double> k(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) {
    k[i] = broker_k[paired_broker(i, broker_k.size())];
  }
  return k;
}

CoupledSystem::CoupledSystem(Population particles, BrokerEnsemble brokers,
                             MarketState market, MarketParams params,
                             KineticParams kin, CoupledOptions options,
                             FundamentalPriceProcess fundamental)
    : particles_(std::move(particles)),
      brokers_(std::move(brokers)),
      market_(market),
      params_(params),
      kin_(kin),
      options_(options),
      fundamental_(std::move(fundamental)) {
  params_.validate();
  kin_.validate();
  if (std::abs(params_.dt - kin_.epsilon) > 1e-12 * params_.dt) {
    throw ModelError("portfolio and price layers need dt == epsilon");
  }
  if (particles_.size() == 0 || brokers_.size() == 0) {
    throw ModelError("coupled run needs particles and brokers");
  }
  market_.S = macro_price(brokers_);
  broker_ed_.assign(brokers_.size(), market_.ED);
}

double CoupledSystem::current_k() const {
  return current_estimates(market_, params_).k;
}

void CoupledSystem::step() {
  const double k_macro = current_k();
  const double ed_macro =
      mean_field_excess_demand(particles_, k_macro, params_.nu);

  const std::size_t n = particles_.size();
  const std::size_t m = brokers_.size();
  std::vector<double> particle_k;
  if (options_.mode == CouplingMode::high_frequency) {
    const double mean_x = particles_.mean_x();
    const double mean_y = particles_.mean_y();
    std::vector<double> broker_k(m);
    parallel_for(m, [&](std::size_t begin, std::size_t end) {
      for (std::size_t j = begin; j < end; ++j) {
        const double k = hf_estimates(brokers_.prices[j], broker_ed_[j],
                                      market_, params_, options_.kc_variant)
                             .k;
        broker_k[j] = k;
        broker_ed_[j] = is_zero_estimate(k)
                            ? 0.0
                            : (k / params_.nu) * (k < 0.0 ? mean_x : mean_y);
      }
    });
    particle_k = paired_estimates(n, broker_k);
  } else {
    broker_ed_.assign(m, ed_macro);
  }

  std::vector<unsigned char> rejected(n, 0);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const InteractionContext ctx{
          market_.S, ed_macro, particle_k.empty() ? k_macro : particle_k[i]};
      const double eta =
          options_.portfolio_noise
              ? sample_eta(particles_.streams[i], kin_.eta_truncation)
              : 0.0;
      if (auto next =
              apply_interaction(particles_.agents[i], eta, ctx, params_, kin_)) {
        particles_.agents[i] = *next;
      } else {
        rejected[i] = 1;
      }
    }
  });
  for (unsigned char r : rejected) rejections_ += r;
  attempts_ += n;

  const std::span<const double> ed =
      options_.mode == CouplingMode::high_frequency
          ? std::span<const double>(broker_ed_)
          : std::span<const double>(&ed_macro, 1);
  floored_ += broker_step(brokers_, ed, params_.dt, params_.kappa,
                          options_.scheme, options_.zero_broker_noise);

  market_.S = macro_price(brokers_);
  market_.ED = ed_macro;
  market_.t += params_.dt;
  market_.sf = fundamental_.advance(market_.sf, params_.dt);
}

CoupledRun run_coupled(CoupledSystem& system, double T_end,
                       std::size_t sample_every, std::size_t snapshot_every) {
  if (sample_every == 0) sample_every = 1;
  const double dt = system.params().dt;
  if (T_end - system.market().t < dt * (1.0 - 1e-9)) {
    throw ModelError("T_end must be >= dt");
  }
  const std::size_t steps = step_count(T_end - system.market().t, dt);

  CoupledRun run;
  auto record = [&] {
    run.trajectory.append(system.market(), system.particles().mean_x(),
                          system.particles().mean_y(), system.current_k());
  };
  const std::size_t attempts0 = system.attempts();
  const std::size_t rejections0 = system.rejections();
  const std::size_t floored0 = system.floored();
  record();
  for (std::size_t s = 1; s <= steps; ++s) {
    try {
      system.step();
    } catch (const ModelError& e) {
      throw ModelError(std::string(e.what()) + " (t = " +
                       std::to_string(system.market().t) + ")");
    }
    if (s % sample_every == 0 || s == steps) record();
    if ((snapshot_every != 0 && s % snapshot_every == 0) || s == steps) {
      run.portfolio_snapshots.push_back(
          {system.market().t, system.particles().agents});
      run.price_snapshots.push_back(
          {system.market().t, system.brokers().prices});
    }
  }
  run.trajectory.steps = steps;
  run.attempts = system.attempts() - attempts0;
  run.rejections = system.rejections() - rejections0;
  run.floored = system.floored() - floored0;
  run.trajectory.clips = run.rejections;
  if (run.attempts > 0 &&
      static_cast<double>(run.rejections) / static_cast<double>(run.attempts) >
          kRejectionWarningFraction) {
    run.warnings.push_back("portfolio rejection fraction exceeds 1%; reduce dt");
  }
  if (run.floored > 0) {
    run.warnings.push_back(std::to_string(run.floored) +
                           " broker updates hit the positivity floor");
  }
  return run;
}

}  // namespace kmarket
