#pragma once

// Formula layer: return estimates, strategy weighting, the MPC feedback
// control and the running cost. Everything here is pure and thread-safe.

#include <cstddef>
#include <optional>

namespace kmarket {

enum class ValueFunctionMode { kahneman_tversky, identity };

struct MarketParams {
  double kappa = 0.4;   // market depth, 1/(wealth*time)
  double nu = 5.0;      // transaction-cost scale, time
  double r = 0.01;      // interest rate, 1/time
  double D = 0.01;      // dividend, wealth/time
  double rho = 2.0 / 3.0;
  double omega = 80.0;  // mean-reversion speed, 1/time
  double gamma = 0.55;  // risk tolerance in [0.05, 0.95]
  double alpha = 0.5;
  double beta = 0.65;   // trust coefficient in [0, 1]
  double dt = 1e-4;
  double T_end = 0.6;
  std::optional<double> chi_override;
  ValueFunctionMode value_fn = ValueFunctionMode::kahneman_tversky;

  /// Throws ModelError naming the first violated constraint.
  void validate() const;

  friend bool operator==(const MarketParams&, const MarketParams&) = default;
};

struct AgentState {
  double x = 0.0;  // wealth in stocks
  double y = 0.0;  // wealth in bonds
};

struct ReturnEstimates {
  double kf = 0.0;
  double kc = 0.0;
  double chi = 0.0;
  double k = 0.0;
};

struct MarketState {
  double S = 0.0;   // macroscopic price
  double ED = 0.0;  // most recent excess demand
  double sf = 0.0;  // fundamental price
  double t = 0.0;
};

/// |k| below this is treated as K = 0.
inline constexpr double kZeroEstimateTolerance = 1e-12;

[[nodiscard]] inline bool is_zero_estimate(double k) noexcept {
  return k < kZeroEstimateTolerance && k > -kZeroEstimateTolerance;
}

/// U(v) = v^(gamma+0.05) for v > 0 and -|v|^(gamma-0.05) for v <= 0, or the
/// identity. Loss-averse: steeper for losses on (0, 1).
double value_function(double v, double gamma, ValueFunctionMode mode);

/// Convex combination weight chi = W(kf - kc) in [0, 1]; W(0) = 1/2.
double weight_function(double diff, double alpha, double beta);

/// K^f = U(omega (sf - S) / S) - r.
double fundamental_estimate(double S, double sf, const MarketParams& p);

/// K^c = U((S_dot / rho + D) / S) - r, with S_dot = kappa * ED * S supplied by
/// the caller.
double chartist_estimate(double S, double S_dot, double D,
                         const MarketParams& p);

/// Combines already computed estimates, honouring chi_override.
ReturnEstimates combine_estimates(double kf, double kc, const MarketParams& p);

ReturnEstimates aggregate_estimate(double S, double S_dot, double D, double sf,
                                   const MarketParams& p);

/// Mean-field MPC control u* = (k / nu) * (x if k < 0, y if k > 0), 0 at k = 0.
double feedback_control(const AgentState& agent, double k, double nu) noexcept;

/// Finite-N MPC control. The S * dK/dS term enters the K > 0 and K < 0
/// branches with opposite signs.
double feedback_control_finite_n(const AgentState& agent, double k,
                                 double dk_dS, double S, std::size_t N,
                                 const MarketParams& p);

/// dK/dS with S_dot held fixed. Central difference with step h (default
/// 1e-6 * S); exact -omega * sf / S^2 for identity U with chi fixed to 1.
double estimate_dS(double S, double S_dot, double D, double sf,
                   const MarketParams& p, std::optional<double> h = {});

/// Psi = |k| x^2 / 2 (k < 0), |k| y^2 / 2 (k > 0), 0 at k = 0.
double running_cost(const AgentState& agent, double k) noexcept;

}  // namespace kmarket
