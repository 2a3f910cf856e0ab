#pragma once

// Stochastic price layer: M brokers with ds_j = kappa ED_j s_j dt + s_j dW_j,
// the macroscopic price as their average, and the coupling of the broker
// ensemble to the portfolio particle cloud.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kmarket/fundamental_price.hpp"
#include "kmarket/kinetic_solver.hpp"
#include "kmarket/market_core.hpp"
#include "kmarket/micro_dynamics.hpp"
#include "kmarket/population.hpp"
#include "kmarket/rng.hpp"

namespace kmarket {

struct BrokerEnsemble {
  std::vector<double> prices;
  std::vector<RandomStream> streams;

  [[nodiscard]] std::size_t size() const noexcept { return prices.size(); }

  static BrokerEnsemble point_mass(std::size_t m, double s0,
                                   std::uint64_t seed);
  /// Log-normal prices with median s0 and log standard deviation log_sd.
  static BrokerEnsemble lognormal(std::size_t m, double s0, double log_sd,
                                  std::uint64_t seed);
};

enum class CouplingMode { long_term, high_frequency };

/// euler_maruyama is the default Ito scheme; log_exact integrates the
/// geometric SDE exactly for frozen ED and is offered for validation.
enum class BrokerScheme { euler_maruyama, log_exact };

/// pooled: U((kappa/rho * ED + D) / s) - r.
/// split: U(kappa * ED / rho + D / s) - r.
enum class ChartistVariant { pooled, split };

/// Smallest admissible ratio s' / s of one Euler-Maruyama step.
inline constexpr double kPriceFloorRatio = 1e-12;

double macro_price(const BrokerEnsemble& ensemble);

/// Advances every broker by dt. `ed` holds either one shared value or one
/// value per broker. Returns the number of floored updates.
std::size_t broker_step(BrokerEnsemble& ensemble, std::span<const double> ed,
                        double dt, double kappa,
                        BrokerScheme scheme = BrokerScheme::euler_maruyama,
                        bool zero_noise = false);

/// High-frequency estimates evaluated at one broker price s.
ReturnEstimates hf_estimates(double s, double ed_at_s,
                             const MarketState& market,
                             const MarketParams& params,
                             ChartistVariant variant = ChartistVariant::pooled);

/// Broker paired with portfolio particle i (modulo pairing).
[[nodiscard]] inline std::size_t paired_broker(std::size_t particle,
                                               std::size_t brokers) noexcept {
  return particle % brokers;
}

/// Control estimate per particle from the per-broker estimates.
std::vector<double> paired_estimates(std::size_t n_particles,
                                     std::span<const double> broker_k);

struct CoupledOptions {
  CouplingMode mode = CouplingMode::long_term;
  BrokerScheme scheme = BrokerScheme::euler_maruyama;
  ChartistVariant kc_variant = ChartistVariant::pooled;
  /// false: deterministic mean-field portfolio (eta = 0).
  bool portfolio_noise = true;
  bool zero_broker_noise = false;
};

struct PriceSnapshot {
  double t = 0.0;
  std::vector<double> prices;
};

struct CoupledRun {
  TrajectoryRecord trajectory;
  std::vector<ParticleSnapshot> portfolio_snapshots;
  std::vector<PriceSnapshot> price_snapshots;
  std::size_t attempts = 0;
  std::size_t rejections = 0;
  std::size_t floored = 0;
  std::vector<std::string> warnings;
};

/// Portfolio particle cloud coupled to a broker ensemble. The market price is
/// always the broker average.
class CoupledSystem {
 public:
  CoupledSystem(Population particles, BrokerEnsemble brokers,
                MarketState market, MarketParams params, KineticParams kin,
                CoupledOptions options,
                FundamentalPriceProcess fundamental = {});

  /// One step of length dt (== epsilon).
  void step();

  [[nodiscard]] const Population& particles() const noexcept { return particles_; }
  [[nodiscard]] const BrokerEnsemble& brokers() const noexcept { return brokers_; }
  [[nodiscard]] const MarketState& market() const noexcept { return market_; }
  [[nodiscard]] const MarketParams& params() const noexcept { return params_; }
  [[nodiscard]] const KineticParams& kinetic() const noexcept { return kin_; }
  [[nodiscard]] const CoupledOptions& options() const noexcept { return options_; }
  /// Excess demand each broker saw in the last step.
  [[nodiscard]] const std::vector<double>& broker_ed() const noexcept { return broker_ed_; }
  [[nodiscard]] double current_k() const;
  [[nodiscard]] std::size_t attempts() const noexcept { return attempts_; }
  [[nodiscard]] std::size_t rejections() const noexcept { return rejections_; }
  [[nodiscard]] std::size_t floored() const noexcept { return floored_; }

 private:
  Population particles_;
  BrokerEnsemble brokers_;
  MarketState market_;
  MarketParams params_;
  KineticParams kin_;
  CoupledOptions options_;
  FundamentalPriceProcess fundamental_;
  std::vector<double> broker_ed_;
  std::size_t attempts_ = 0;
  std::size_t rejections_ = 0;
  std::size_t floored_ = 0;
};

/// Runs the coupled system to T_end, sampling the trajectory every
/// `sample_every` steps and both clouds every `snapshot_every` steps
/// (0: final only).
CoupledRun run_coupled(CoupledSystem& system, double T_end,
                       std::size_t sample_every,
                       std::size_t snapshot_every = 0);

}  // namespace kmarket
