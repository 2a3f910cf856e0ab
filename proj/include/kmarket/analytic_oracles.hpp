#pragma once

// Closed-form reference solutions: log-normal wealth marginals (with and
// without noise), the long-term log-normal price law, the inverse-gamma
// stationary price law of high-frequency trading, and the moment ODEs.

#include <cstddef>
#include <span>
#include <vector>

#include "kmarket/market_core.hpp"
#include "kmarket/micro_dynamics.hpp"

namespace kmarket {

/// Cumulative integral of a sampled drift, I(t) = int_0^t f + offset, by the
/// trapezoidal rule on the sample grid and linear in between.
class DriftHistory {
 public:
  DriftHistory(std::vector<double> times, std::vector<double> integrand,
               double offset = 0.0);

  [[nodiscard]] double integral(double t) const;
  [[nodiscard]] double offset() const noexcept { return offset_; }
  [[nodiscard]] std::span<const double> times() const noexcept { return times_; }
  [[nodiscard]] std::span<const double> integrand() const noexcept { return integrand_; }

 private:
  std::vector<double> times_;
  std::vector<double> integrand_;
  std::vector<double> cumulative_;
  double offset_;
};

/// b(t) = K/nu (kappa X + 1) + D/S from a recorded trajectory.
DriftHistory stock_drift_history(const TrajectoryRecord& rec,
                                 const MarketParams& p, double offset);
/// e(t) = r - K/nu.
DriftHistory bond_drift_history(const TrajectoryRecord& rec,
                                const MarketParams& p, double offset);
/// R(t) = kappa * ED(t) with ED = K/nu * (X if K < 0 else Y).
DriftHistory price_drift_history(const TrajectoryRecord& rec,
                                 const MarketParams& p, double offset);

/// log(Z) ~ Normal(mu, sigma2).
struct LogNormalLaw {
  double mu = 0.0;
  double sigma2 = 1.0;

  [[nodiscard]] double pdf(double z) const;
  [[nodiscard]] double cdf(double z) const;
  [[nodiscard]] double median() const;
  [[nodiscard]] double mode() const;
  [[nodiscard]] double mean() const;
};

/// Integration constants fitted to an initial cloud: variance offset
/// c = Var(log z) and drift offset = E[log z] + c / 2, so the diffusive laws
/// reproduce the initial log-mean and log-variance at t = 0.
struct InitialConstants {
  double variance_offset = 0.0;
  double drift_offset = 0.0;
};
InitialConstants fit_initial_constants(std::span<const double> samples);

/// Noise-free marginals: log z ~ Normal(int_0^t drift, 1/2), unit mass.
LogNormalLaw marginal_g_deterministic_law(double t, const DriftHistory& drift);
double marginal_g_deterministic(double t, double x, const DriftHistory& drift);
LogNormalLaw marginal_h_deterministic_law(double t, const DriftHistory& drift);
double marginal_h_deterministic(double t, double y, const DriftHistory& drift);

/// Diffusive marginals: variance t/nu^2 + c, mean B(t) - variance / 2, where
/// B(t) = drift.integral(t) already includes the drift offset.
LogNormalLaw marginal_g_diffusive_law(double t, const DriftHistory& drift,
                                      double nu, double c);
double marginal_g_diffusive(double t, double x, const DriftHistory& drift,
                            double nu, double c);
LogNormalLaw marginal_h_diffusive_law(double t, const DriftHistory& drift,
                                      double nu, double c1);
double marginal_h_diffusive(double t, double y, const DriftHistory& drift,
                            double nu, double c1);

/// Long-term investors: variance t + c1, mean Rbar(t) - (t + c1) / 2.
LogNormalLaw longterm_price_law(double t, const DriftHistory& rbar, double c1);
double longterm_price_density(double t, double s, const DriftHistory& rbar,
                              double c1);

/// Inverse-gamma law, density beta^alpha / Gamma(alpha) s^(-alpha-1)
/// exp(-beta / s).
struct InverseGammaLaw {
  double shape = 1.0;
  double scale = 1.0;

  [[nodiscard]] double pdf(double s) const;
  [[nodiscard]] double cdf(double s) const;
  [[nodiscard]] double quantile(double p) const;
  /// Exponent of the power-law tail of the density, shape + 1.
  [[nodiscard]] double tail_exponent() const noexcept { return shape + 1.0; }
};

/// Stationary high-frequency price law for identity U, chi = 1 and constant
/// sf: shape 1 + 2 (kappa/nu) P (omega + r), scale 2 (kappa/nu) omega P sf.
InverseGammaLaw hf_steady_state_law(const MarketParams& p, double sf,
                                    double P_inf);
double hf_steady_state(double s, const MarketParams& p, double sf,
                       double P_inf);

/// Max-norm of 1/2 (s^2 V)'' - (kappa/nu) P ((omega sf - (omega + r) s) V)'
/// for V = hf_steady_state, discretised on `points` log-spaced nodes over
/// [s_min, s_max] (flux form, second-order differences).
double steady_state_residual(const MarketParams& p, double sf, double P_inf,
                             double s_min, double s_max, std::size_t points);

enum class Regime { negative, positive };

struct MomentState {
  double X = 0.0;
  double Y = 0.0;
  double S = 0.0;
};

/// Time derivative of the moments for a fixed sign of K:
/// K < 0: X' = [K/nu (kappa X + 1) + D/S] X,  Y' = r Y - K/nu X;
/// K > 0: Y' = (r - K/nu) Y,  X' = (kappa K/nu Y + D/S) X + K/nu Y;
/// S' = kappa ED S with ED = K/nu * (X or Y).
/// Throws ModelError "regime switch; split interval" if sign(k) disagrees.
MomentState moment_ode(const MomentState& state, double k, Regime regime,
                       const MarketParams& p);

/// Continuous-time aggregate estimate: solves K = chi K^f + (1 - chi) K^c
/// with S_dot = kappa ED(K) S by fixed-point iteration.
double consistent_estimate(const MomentState& state, double sf,
                           const MarketParams& p);

/// RK4 integration of the moment ODE on the given grid (`substeps` RK4 steps
/// per interval). Returns one state per grid time.
std::vector<MomentState> integrate_moment_ode(const MomentState& initial,
                                              std::span<const double> times,
                                              double sf, Regime regime,
                                              const MarketParams& p,
                                              std::size_t substeps = 4);

}  // namespace kmarket
