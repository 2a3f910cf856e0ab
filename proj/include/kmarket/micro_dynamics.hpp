#pragma once

// N-agent feedback-controlled market: explicit Euler for the deterministic
// system and Euler-Maruyama for the system with noisy controls, coupled to
// the macroscopic price ODE dS/dt = kappa * ED * S.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "kmarket/fundamental_price.hpp"
#include "kmarket/market_core.hpp"
#include "kmarket/population.hpp"

namespace kmarket {

/// Sampled macroscopic paths. Row 0 is the initial state.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<double> S_path;
  std::vector<double> ED_path;
  std::vector<double> X_path;  // population mean of x
  std::vector<double> Y_path;  // population mean of y
  std::vector<double> K_path;  // aggregate estimate in force from that time on
  std::vector<double> sf_path;
  std::size_t steps = 0;
  std::size_t clips = 0;       // positivity projections (micro) or rejections

  [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
  void append(const MarketState& m, double X, double Y, double K);
};

enum class MicroMode { deterministic, noisy };
enum class ControlLaw { mean_field, finite_n };

struct MicroOptions {
  ControlLaw control = ControlLaw::mean_field;
  /// Replaces the empirical excess demand in the agent and price updates.
  std::optional<double> forced_ed;
  /// Forces eta = 0 in the noisy stepper.
  bool zero_noise = false;
};

/// Mean of the controls. Throws on an empty vector.
double excess_demand_empirical(std::span<const double> controls);

/// One explicit Euler step of the feedback-controlled model. Returns the
/// number of positivity projections applied. Throws ModelError
/// "price collapsed; reduce dt" if the price would become non-positive.
std::size_t step_deterministic(Population& pop, MarketState& market,
                               const MarketParams& params,
                               const MicroOptions& options = {});

/// Euler-Maruyama step with noisy controls; the noise moves wealth between
/// the two portfolios and never creates it.
std::size_t step_noisy(Population& pop, MarketState& market,
                       const MarketParams& params,
                       const MicroOptions& options = {});

/// Aggregate estimate at the current market state (lagged excess demand in
/// the chartist term).
ReturnEstimates current_estimates(const MarketState& market,
                                  const MarketParams& params);

/// Iterates the chosen stepper from market.t up to params.T_end.
/// The fundamental price follows `fundamental` (constant or stochastic).
TrajectoryRecord simulate(Population& pop, MarketState& market,
                          const MarketParams& params, MicroMode mode,
                          std::size_t sample_every,
                          FundamentalPriceProcess fundamental = {},
                          const MicroOptions& options = {});

/// Number of steps of size dt needed to reach T_end (at least one).
std::size_t step_count(double T_end, double dt);

}  // namespace kmarket
