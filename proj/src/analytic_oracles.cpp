#include "kmarket/analytic_oracles.hpp"

#include <algorithm>
#include <boost/math/distributions/inverse_gamma.hpp>
#include <cmath>
#include <numbers>

#include "kmarket/errors.hpp"

namespace kmarket {

DriftHistory::DriftHistory(std::vector<double> times,
                           std::vector<double> integrand, double offset)
    : times_(std::move(times)), integrand_(std::move(integrand)), offset_(offset) {
  if (times_.empty() || times_.size() != integrand_.size()) {
    throw ModelError("drift history needs matching non-empty grids");
  }
  cumulative_.assign(times_.size(), 0.0);
  for (std::size_t i = 1; i < times_.size(); ++i) {
    const double h = times_[i] - times_[i - 1];
    if (!(h > 0.0)) throw ModelError("drift history times must increase");
    cumulative_[i] =
        cumulative_[i - 1] + 0.5 * h * (integrand_[i] + integrand_[i - 1]);
  }
}

double DriftHistory::integral(double t) const {
  // Grid starts at t0 (normally 0); values before it extrapolate flat.
  if (t <= times_.front()) {
    return offset_ + integrand_.front() * (t - times_.front());
  }
  if (t >= times_.back()) {
    return offset_ + cumulative_.back() + integrand_.back() * (t - times_.back());
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin()) - 1;
  const double h = t - times_[i];
  const double slope =
      (integrand_[i + 1] - integrand_[i]) / (times_[i + 1] - times_[i]);
  return offset_ + cumulative_[i] + h * (integrand_[i] + 0.5 * slope * h);
}

namespace {

template <class F>
DriftHistory history_from(const TrajectoryRecord& rec, double offset, F f) {
  std::vector<double> values(rec.size());
  for (std::size_t i = 0; i < rec.size(); ++i) values[i] = f(i);
  return DriftHistory(rec.times, std::move(values), offset);
}

double regime_wealth(double k, double X, double Y) {
  if (is_zero_estimate(k)) return 0.0;
  return k < 0.0 ? X : Y;
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0)) throw ModelError(what);
}

}  // namespace

DriftHistory stock_drift_history(const TrajectoryRecord& rec,
                                 const MarketParams& p, double offset) {
  return history_from(rec, offset, [&](std::size_t i) {
    return rec.K_path[i] / p.nu * (p.kappa * rec.X_path[i] + 1.0) +
           p.D / rec.S_path[i];
  });
}

DriftHistory bond_drift_history(const TrajectoryRecord& rec,
                                const MarketParams& p, double offset) {
  return history_from(rec, offset,
                      [&](std::size_t i) { return p.r - rec.K_path[i] / p.nu; });
}

DriftHistory price_drift_history(const TrajectoryRecord& rec,
                                 const MarketParams& p, double offset) {
  return history_from(rec, offset, [&](std::size_t i) {
    const double k = rec.K_path[i];
    return p.kappa * k / p.nu * regime_wealth(k, rec.X_path[i], rec.Y_path[i]);
  });
}

double LogNormalLaw::pdf(double z) const {
  require_positive(z, "density argument must be positive");
  const double d = std::log(z) - mu;
  return std::exp(-d * d / (2.0 * sigma2)) /
         (z * std::sqrt(2.0 * std::numbers::pi * sigma2));
}

double LogNormalLaw::cdf(double z) const {
  if (z <= 0.0) return 0.0;
  return 0.5 * std::erfc(-(std::log(z) - mu) / std::sqrt(2.0 * sigma2));
}

double LogNormalLaw::median() const { return std::exp(mu); }
double LogNormalLaw::mode() const { return std::exp(mu - sigma2); }
double LogNormalLaw::mean() const { return std::exp(mu + 0.5 * sigma2); }

InitialConstants fit_initial_constants(std::span<const double> samples) {
  if (samples.empty()) throw ModelError("empty sample");
  double mean = 0.0;
  for (double v : samples) {
    require_positive(v, "initial cloud must be positive");
    mean += std::log(v);
  }
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double v : samples) {
    const double d = std::log(v) - mean;
    var += d * d;
  }
  var /= static_cast<double>(samples.size());
  // Point masses leave rounding noise in the log-variance.
  if (var < 1e-24) var = 0.0;
  return {var, mean + 0.5 * var};
}

LogNormalLaw marginal_g_deterministic_law(double t, const DriftHistory& drift) {
  return {drift.integral(t), 0.5};
}

double marginal_g_deterministic(double t, double x, const DriftHistory& drift) {
  require_positive(x, "x must be positive");
  return marginal_g_deterministic_law(t, drift).pdf(x);
}

LogNormalLaw marginal_h_deterministic_law(double t, const DriftHistory& drift) {
  return {drift.integral(t), 0.5};
}

double marginal_h_deterministic(double t, double y, const DriftHistory& drift) {
  require_positive(y, "y must be positive");
  return marginal_h_deterministic_law(t, drift).pdf(y);
}

namespace {
LogNormalLaw diffusive_law(double t, const DriftHistory& drift, double nu,
                           double c) {
  const double var = t / (nu * nu) + c;
  require_positive(var, "variance parameter must be positive");
  return {drift.integral(t) - 0.5 * var, var};
}
}  // namespace

LogNormalLaw marginal_g_diffusive_law(double t, const DriftHistory& drift,
                                      double nu, double c) {
  return diffusive_law(t, drift, nu, c);
}

double marginal_g_diffusive(double t, double x, const DriftHistory& drift,
                            double nu, double c) {
  require_positive(x, "x must be positive");
  return diffusive_law(t, drift, nu, c).pdf(x);
}

LogNormalLaw marginal_h_diffusive_law(double t, const DriftHistory& drift,
                                      double nu, double c1) {
  return diffusive_law(t, drift, nu, c1);
}

double marginal_h_diffusive(double t, double y, const DriftHistory& drift,
                            double nu, double c1) {
  require_positive(y, "y must be positive");
  return diffusive_law(t, drift, nu, c1).pdf(y);
}

LogNormalLaw longterm_price_law(double t, const DriftHistory& rbar, double c1) {
  const double var = t + c1;
  require_positive(var, "t + c1 must be positive");
  return {rbar.integral(t) - 0.5 * var, var};
}

double longterm_price_density(double t, double s, const DriftHistory& rbar,
                              double c1) {
  require_positive(s, "s must be positive");
  return longterm_price_law(t, rbar, c1).pdf(s);
}

double InverseGammaLaw::pdf(double s) const {
  require_positive(s, "s must be positive");
  return boost::math::pdf(boost::math::inverse_gamma_distribution<>(shape, scale),
                          s);
}

double InverseGammaLaw::cdf(double s) const {
  if (s <= 0.0) return 0.0;
  return boost::math::cdf(boost::math::inverse_gamma_distribution<>(shape, scale),
                          s);
}

double InverseGammaLaw::quantile(double p) const {
  return boost::math::quantile(
      boost::math::inverse_gamma_distribution<>(shape, scale), p);
}

InverseGammaLaw hf_steady_state_law(const MarketParams& p, double sf,
                                    double P_inf) {
  require_positive(sf, "sf must be positive");
  require_positive(P_inf, "P_inf must be positive");
  const double lambda = p.kappa / p.nu * P_inf;
  const double shape = 1.0 + 2.0 * lambda * (p.omega + p.r);
  const double scale = 2.0 * lambda * p.omega * sf;
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape)) {
    throw ModelError("invalid steady-state parameters");
  }
  return {shape, scale};
}

double hf_steady_state(double s, const MarketParams& p, double sf,
                       double P_inf) {
  require_positive(s, "s must be positive");
  return hf_steady_state_law(p, sf, P_inf).pdf(s);
}

double steady_state_residual(const MarketParams& p, double sf, double P_inf,
                             double s_min, double s_max, std::size_t points) {
  if (points < 3 || !(s_min > 0.0) || !(s_max > s_min)) {
    throw ModelError("invalid residual grid");
  }
  const InverseGammaLaw law = hf_steady_state_law(p, sf, P_inf);
  const double lambda = p.kappa / p.nu * P_inf;
  std::vector<double> s(points), diffusion(points), drift(points);
  const double step = std::log(s_max / s_min) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    s[i] = s_min * std::exp(step * static_cast<double>(i));
    const double v = law.pdf(s[i]);
    diffusion[i] = 0.5 * s[i] * s[i] * v;
    drift[i] = lambda * (p.omega * sf - (p.omega + p.r) * s[i]) * v;
  }
  // Flux J = (s^2 V / 2)' - drift * V at cell midpoints; residual = J'.
  std::vector<double> flux(points - 1), mid(points - 1);
  for (std::size_t i = 0; i + 1 < points; ++i) {
    const double h = s[i + 1] - s[i];
    mid[i] = 0.5 * (s[i] + s[i + 1]);
    flux[i] = (diffusion[i + 1] - diffusion[i]) / h -
              0.5 * (drift[i] + drift[i + 1]);
  }
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < points; ++i) {
    const double r = (flux[i] - flux[i - 1]) / (mid[i] - mid[i - 1]);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

MomentState moment_ode(const MomentState& state, double k, Regime regime,
                       const MarketParams& p) {
  const bool negative = k < 0.0 && !is_zero_estimate(k);
  const bool positive = k > 0.0 && !is_zero_estimate(k);
  if ((regime == Regime::negative && !negative) ||
      (regime == Regime::positive && !positive)) {
    throw ModelError("regime switch; split interval");
  }
  const double q = k / p.nu;
  MomentState d;
  if (regime == Regime::negative) {
    d.X = (q * (p.kappa * state.X + 1.0) + p.D / state.S) * state.X;
    d.Y = p.r * state.Y - q * state.X;
    d.S = p.kappa * q * state.X * state.S;
  } else {
    d.Y = (p.r - q) * state.Y;
    d.X = (p.kappa * q * state.Y + p.D / state.S) * state.X + q * state.Y;
    d.S = p.kappa * q * state.Y * state.S;
  }
  return d;
}

double consistent_estimate(const MomentState& state, double sf,
                           const MarketParams& p) {
  if (p.chi_override && *p.chi_override == 1.0) {
    return fundamental_estimate(state.S, sf, p);
  }
  const double kf = fundamental_estimate(state.S, sf, p);
  double k = combine_estimates(kf, chartist_estimate(state.S, 0.0, p.D, p), p).k;
  for (int it = 0; it < 500; ++it) {
    const double ed = k / p.nu * regime_wealth(k, state.X, state.Y);
    const double S_dot = p.kappa * ed * state.S;
    const double next =
        combine_estimates(kf, chartist_estimate(state.S, S_dot, p.D, p), p).k;
    if (std::abs(next - k) <= 1e-13 * (1.0 + std::abs(k))) return next;
    k = next;
  }
  throw ModelError("aggregate estimate fixed point did not converge");
}

std::vector<MomentState> integrate_moment_ode(const MomentState& initial,
                                              std::span<const double> times,
                                              double sf, Regime regime,
                                              const MarketParams& p,
                                              std::size_t substeps) {
  if (times.empty()) return {};
  if (substeps == 0) substeps = 1;
  auto rhs = [&](const MomentState& s) {
    return moment_ode(s, consistent_estimate(s, sf, p), regime, p);
  };
  auto axpy = [](const MomentState& s, double h, const MomentState& d) {
    return MomentState{s.X + h * d.X, s.Y + h * d.Y, s.S + h * d.S};
  };
  std::vector<MomentState> out;
  out.reserve(times.size());
  MomentState cur = initial;
  out.push_back(cur);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double h = (times[i] - times[i - 1]) / static_cast<double>(substeps);
    for (std::size_t j = 0; j < substeps; ++j) {
      const MomentState k1 = rhs(cur);
      const MomentState k2 = rhs(axpy(cur, 0.5 * h, k1));
      const MomentState k3 = rhs(axpy(cur, 0.5 * h, k2));
      const MomentState k4 = rhs(axpy(cur, h, k3));
      cur.X += h / 6.0 * (k1.X + 2.0 * k2.X + 2.0 * k3.X + k4.X);
      cur.Y += h / 6.0 * (k1.Y + 2.0 * k2.Y + 2.0 * k3.Y + k4.Y);
      cur.S += h / 6.0 * (k1.S + 2.0 * k2.S + 2.0 * k3.S + k4.S);
    }
    out.push_back(cur);
  }
  return out;
}

}  // namespace kmarket
