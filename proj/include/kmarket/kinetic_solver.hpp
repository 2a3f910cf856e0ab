#pragma once

// Monte Carlo particle solver for the Boltzmann-type portfolio model under
// the grazing scaling theta = 1/eps, a = eps. One sweep over all particles
// advances physical time by eps.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "kmarket/fundamental_price.hpp"
#include "kmarket/market_core.hpp"
#include "kmarket/micro_dynamics.hpp"
#include "kmarket/population.hpp"

namespace kmarket {

struct KineticParams {
  double epsilon = 1e-4;       // a = eps, theta = 1 / eps
  double eta_truncation = 4.0; // |eta| <= c_eta before variance correction
  std::size_t n_samples = 50000;

  void validate() const;

  friend bool operator==(const KineticParams&, const KineticParams&) = default;
};

/// Standard deviation of a standard normal conditioned on |eta| <= c.
double truncated_normal_sd(double c);

/// Standard normal conditioned on |eta| <= c_eta, divided by the truncated
/// standard deviation so the variance is exactly one.
double sample_eta(RandomStream& stream, double c_eta);

/// Frozen macroscopic quantities seen by one interaction.
struct InteractionContext {
  double S = 0.0;
  double ED = 0.0;
  double k = 0.0;  // estimate driving this particle's control
};

/// Linear interaction (x, y) -> (x', y'). Returns std::nullopt when the
/// post-interaction wealth would not be strictly positive (the kernel
/// indicator rejects the jump).
std::optional<AgentState> apply_interaction(const AgentState& state,
                                            double eta,
                                            const InteractionContext& ctx,
                                            const MarketParams& params,
                                            const KineticParams& kin);

/// Integral of u* against the particle cloud for a given estimate k.
double mean_field_excess_demand(const Population& particles, double k,
                                double nu);

/// Same, with k computed from the market state.
double mean_field_excess_demand(const Population& particles,
                                const MarketState& market,
                                const MarketParams& params);

struct KineticStepOptions {
  bool zero_noise = false;
};

/// One sweep: ED from the pre-step cloud, one interaction attempt per
/// particle, then S += eps * kappa * ED * S. Returns the rejection count.
std::size_t kinetic_step(Population& particles, MarketState& market,
                         const MarketParams& params, const KineticParams& kin,
                         const KineticStepOptions& options = {});

struct ParticleSnapshot {
  double t = 0.0;
  std::vector<AgentState> particles;
};

struct KineticRun {
  TrajectoryRecord trajectory;
  std::vector<ParticleSnapshot> snapshots;
  std::size_t attempts = 0;
  std::size_t rejections = 0;
  std::vector<std::string> warnings;

  [[nodiscard]] double rejection_fraction() const noexcept {
    return attempts == 0 ? 0.0
                         : static_cast<double>(rejections) /
                               static_cast<double>(attempts);
  }
};

/// Rejection fraction above which a run is flagged.
inline constexpr double kRejectionWarningFraction = 0.01;

/// Iterates kinetic_step until T_end. Trajectory rows every `sample_every`
/// sweeps; particle snapshots every `snapshot_every` sweeps (0: final only).
KineticRun run_kinetic(Population& particles, MarketState& market,
                       const MarketParams& params, const KineticParams& kin,
                       double T_end, std::size_t sample_every,
                       std::size_t snapshot_every = 0,
                       FundamentalPriceProcess fundamental = {},
                       const KineticStepOptions& options = {});

}  // namespace kmarket
