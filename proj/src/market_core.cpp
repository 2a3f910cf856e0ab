#include "kmarket/market_core.hpp"

#include <cmath>
#include <string>

#include "kmarket/errors.hpp"

namespace kmarket {

namespace {

void require_finite(double v) {
  if (!std::isfinite(v)) throw ModelError("non-finite argument");
}

void require_positive_price(double S) {
  require_finite(S);
  if (S <= 0.0) throw ModelError("non-positive price");
}

void check(bool ok, const char* what) {
  if (!ok) throw ModelError(std::string("invalid market parameter: ") + what);
}

}  // namespace

void MarketParams::validate() const {
  check(std::isfinite(kappa) && kappa > 0.0, "kappa must be > 0");
  check(std::isfinite(nu) && nu > 0.0, "nu must be > 0");
  check(std::isfinite(r) && r >= 0.0, "r must be >= 0");
  check(std::isfinite(D) && D >= 0.0, "D must be >= 0");
  check(std::isfinite(rho) && rho > 0.0, "rho must be > 0");
  check(std::isfinite(omega) && omega > 0.0, "omega must be > 0");
  check(gamma >= 0.05 && gamma <= 0.95, "gamma must lie in [0.05, 0.95]");
  check(std::isfinite(alpha) && alpha > 0.0, "alpha must be > 0");
  check(beta >= 0.0 && beta <= 1.0, "beta must lie in [0, 1]");
  check(std::isfinite(dt) && dt > 0.0, "dt must be > 0");
  check(std::isfinite(T_end) && T_end >= 0.0, "T_end must be >= 0");
  if (chi_override) {
    check(*chi_override >= 0.0 && *chi_override <= 1.0,
          "chi must lie in [0, 1]");
  }
}

double value_function(double v, double gamma, ValueFunctionMode mode) {
  require_finite(v);
  if (mode == ValueFunctionMode::identity) return v;
  if (v > 0.0) return std::pow(v, gamma + 0.05);
  if (v == 0.0) return 0.0;
  return -std::pow(-v, gamma - 0.05);
}

double weight_function(double diff, double alpha, double beta) {
  if (std::isnan(diff)) throw ModelError("non-finite argument");
  require_finite(alpha);
  require_finite(beta);
  const double up = 0.5 * std::tanh(diff / alpha) + 0.5;
  const double down = 0.5 * std::tanh(-diff / alpha) + 0.5;
  return beta * up + (1.0 - beta) * down;
}

double fundamental_estimate(double S, double sf, const MarketParams& p) {
  require_positive_price(S);
  require_finite(sf);
  return value_function(p.omega * (sf - S) / S, p.gamma, p.value_fn) - p.r;
}

double chartist_estimate(double S, double S_dot, double D,
                         const MarketParams& p) {
  require_positive_price(S);
  require_finite(S_dot);
  return value_function((S_dot / p.rho + D) / S, p.gamma, p.value_fn) - p.r;
}

ReturnEstimates combine_estimates(double kf, double kc, const MarketParams& p) {
  ReturnEstimates e;
  e.kf = kf;
  e.kc = kc;
  e.chi = p.chi_override ? *p.chi_override
                         : weight_function(kf - kc, p.alpha, p.beta);
  e.k = e.chi * kf + (1.0 - e.chi) * kc;
  return e;
}

ReturnEstimates aggregate_estimate(double S, double S_dot, double D, double sf,
                                   const MarketParams& p) {
  return combine_estimates(fundamental_estimate(S, sf, p),
                           chartist_estimate(S, S_dot, D, p), p);
}

double feedback_control(const AgentState& agent, double k, double nu) noexcept {
  if (is_zero_estimate(k)) return 0.0;
  return k < 0.0 ? (k / nu) * agent.x : (k / nu) * agent.y;
}

double feedback_control_finite_n(const AgentState& agent, double k,
                                 double dk_dS, double S, std::size_t N,
                                 const MarketParams& p) {
  if (N == 0) throw ModelError("agent count must be >= 1");
  require_finite(dk_dS);
  if (is_zero_estimate(k)) return 0.0;
  const double coupling = p.kappa / static_cast<double>(N);
  if (k > 0.0) {
    const double y = agent.y;
    return (k * y - coupling * S * dk_dS * y * y / 2.0) / p.nu;
  }
  const double x = agent.x;
  return (k * x + k * coupling * x * x + coupling * S * dk_dS * x * x / 2.0) /
         p.nu;
}

double estimate_dS(double S, double S_dot, double D, double sf,
                   const MarketParams& p, std::optional<double> h) {
  require_positive_price(S);
  if (p.value_fn == ValueFunctionMode::identity && p.chi_override &&
      *p.chi_override == 1.0) {
    return -p.omega * sf / (S * S);
  }
  const double step = h ? *h : 1e-6 * S;
  if (!(step > 0.0) || S - step <= 0.0) throw ModelError("non-positive price");
  const double up = aggregate_estimate(S + step, S_dot, D, sf, p).k;
  const double down = aggregate_estimate(S - step, S_dot, D, sf, p).k;
  return (up - down) / (2.0 * step);
}

double running_cost(const AgentState& agent, double k) noexcept {
  if (is_zero_estimate(k)) return 0.0;
  return k < 0.0 ? -k * agent.x * agent.x / 2.0 : k * agent.y * agent.y / 2.0;
}

}  // namespace kmarket
