#include "kmarket/analytics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <string>

#include "kmarket/errors.hpp"

namespace kmarket {

double DensityEstimate::center(std::size_t i) const {
  return 0.5 * (bin_edges.at(i) + bin_edges.at(i + 1));
}

double DensityEstimate::width(std::size_t i) const {
  return bin_edges.at(i + 1) - bin_edges.at(i);
}

double DensityEstimate::total_mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i < bins(); ++i) m += densities[i] * width(i);
  return m;
}

double DensityEstimate::cdf(double z) const {
  if (bin_edges.empty() || z <= bin_edges.front()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < bins(); ++i) {
    if (z < bin_edges[i + 1]) return acc + densities[i] * (z - bin_edges[i]);
    acc += densities[i] * width(i);
  }
  return std::min(acc, 1.0);
}

DensityEstimate histogram(std::span<const double> samples, Binning binning,
                          std::size_t n_bins) {
  if (samples.empty()) throw ModelError("histogram of empty sample");
  if (n_bins == 0) throw ModelError("n_bins must be >= 1");
  const bool log_scale = binning == Binning::log;
  auto transform = [&](double v) { return log_scale ? std::log(v) : v; };
  double lo = INFINITY, hi = -INFINITY;
  for (double v : samples) {
    if (!std::isfinite(v)) throw ModelError("non-finite sample");
    if (log_scale && v <= 0.0) {
      throw ModelError("log binning needs positive samples");
    }
    lo = std::min(lo, transform(v));
    hi = std::max(hi, transform(v));
  }
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double w = (hi - lo) / static_cast<double>(n_bins);
  std::vector<std::size_t> counts(n_bins, 0);
  for (double v : samples) {
    auto idx = static_cast<std::size_t>((transform(v) - lo) / w);
    counts[std::min(idx, n_bins - 1)]++;
  }
  DensityEstimate est;
  est.n = samples.size();
  est.bin_edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    const double e = i == n_bins ? hi : lo + w * static_cast<double>(i);
    est.bin_edges[i] = log_scale ? std::exp(e) : e;
  }
  est.densities.resize(n_bins);
  const double n = static_cast<double>(est.n);
  for (std::size_t i = 0; i < n_bins; ++i) {
    est.densities[i] = static_cast<double>(counts[i]) / (n * est.width(i));
  }
  return est;
}

double ks_distance(std::span<const double> samples, const CdfFunction& cdf) {
  if (samples.empty()) throw ModelError("empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f,
                  f - static_cast<double>(i) / n});
  }
  return std::clamp(d, 0.0, 1.0);
}

double ks_distance(const DensityEstimate& est, const CdfFunction& cdf) {
  double d = 0.0;
  for (double e : est.bin_edges) d = std::max(d, std::abs(est.cdf(e) - cdf(e)));
  return std::clamp(d, 0.0, 1.0);
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ModelError("empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx -
                             static_cast<double>(j) / ny));
  }
  return d;
}

LogNormalFit fit_lognormal(std::span<const double> samples) {
  if (samples.empty()) throw ModelError("empty sample");
  double mean = 0.0;
  for (double v : samples) {
    if (!(v > 0.0)) throw ModelError("non-positive sample");
    mean += std::log(v);
  }
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double v : samples) {
    const double d = std::log(v) - mean;
    var += d * d;
  }
  var /= static_cast<double>(samples.size());
  return {mean, std::sqrt(var)};
}

InverseGammaFit fit_inverse_gamma(std::span<const double> samples) {
  if (samples.size() < 2) throw ModelError("need at least two samples");
  const double n = static_cast<double>(samples.size());
  double m = 0.0, inv_mean = 0.0, log_inv_mean = 0.0;
  for (double v : samples) {
    if (!(v > 0.0)) throw ModelError("non-positive sample");
    m += v;
    inv_mean += 1.0 / v;
    log_inv_mean -= std::log(v);
  }
  m /= n;
  inv_mean /= n;
  log_inv_mean /= n;
  double var = 0.0;
  for (double v : samples) var += (v - m) * (v - m);
  var /= n;
  if (!(var > 1e-300 * m * m) || var <= 0.0) {
    throw ModelError("sample variance must be > 0");
  }

  InverseGammaFit fit;
  fit.moment_shape = m * m / var + 2.0;
  fit.moment_scale = m * (fit.moment_shape - 1.0);

  // 1/x ~ Gamma(shape, rate = scale); profile likelihood in log(shape).
  auto neg_loglik = [&](double log_a) {
    const double a = std::exp(log_a);
    return -(a * std::log(a / inv_mean) - std::lgamma(a) +
             (a - 1.0) * log_inv_mean - a);
  };
  const auto [log_a, value] = boost::math::tools::brent_find_minima(
      neg_loglik, std::log(1e-3), std::log(1e6), 52);
  (void)value;
  fit.shape = std::exp(log_a);
  fit.scale = fit.shape / inv_mean;
  // Below shape 2 the variance is infinite and the moment estimate meaningless.
  fit.moments_unreliable = fit.shape <= 2.0;
  return fit;
}

std::vector<double> log_returns(std::span<const double> path, std::size_t lag) {
  if (lag == 0) throw ModelError("lag must be >= 1");
  if (path.size() <= lag) throw ModelError("path shorter than lag");
  for (double v : path) {
    if (!(v > 0.0)) throw ModelError("non-positive price in path");
  }
  std::vector<double> r(path.size() - lag);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::log(path[i + lag] / path[i]);
  return r;
}

namespace {

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;
  double m4 = 0.0;
};

Moments central_moments(std::span<const double> s) {
  Moments mo;
  const double n = static_cast<double>(s.size());
  for (double v : s) mo.mean += v;
  mo.mean /= n;
  for (double v : s) {
    const double d = v - mo.mean;
    mo.m2 += d * d;
    mo.m4 += d * d * d * d;
  }
  mo.m2 /= n;
  mo.m4 /= n;
  return mo;
}

}  // namespace

std::vector<std::pair<double, double>> qq_gaussian(std::span<const double> series) {
  if (series.size() < 2) throw ModelError("QQ needs at least two values");
  const Moments mo = central_moments(series);
  if (!(mo.m2 > 0.0)) throw ModelError("zero variance series");
  const double sd = std::sqrt(mo.m2);
  std::vector<double> sorted(series.begin(), series.end());
  std::sort(sorted.begin(), sorted.end());
  const boost::math::normal_distribution<> normal;
  const double n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double p = (static_cast<double>(i) + 0.5) / n;
    out[i] = {boost::math::quantile(normal, p), (sorted[i] - mo.mean) / sd};
  }
  return out;
}

double excess_kurtosis(std::span<const double> series) {
  if (series.size() < 4) throw ModelError("kurtosis needs at least four values");
  const Moments mo = central_moments(series);
  if (!(mo.m2 > 0.0)) throw ModelError("degenerate variance");
  return mo.m4 / (mo.m2 * mo.m2) - 3.0;
}

std::size_t default_hill_order(std::size_t n) {
  return static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.6)));
}

namespace {

double hill_sorted_desc(std::span<const double> desc, std::size_t k) {
  const double threshold = std::log(desc[k]);
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(desc[i]) - threshold;
  if (!(sum > 0.0)) throw ModelError("degenerate upper tail");
  return 1.0 + static_cast<double>(k) / sum;
}

std::vector<double> sorted_desc(std::span<const double> samples) {
  std::vector<double> v(samples.begin(), samples.end());
  for (double x : v) {
    if (!(x > 0.0)) throw ModelError("non-positive sample");
  }
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

}  // namespace

double hill_tail_exponent(std::span<const double> samples,
                          std::optional<std::size_t> k) {
  const std::size_t order = k.value_or(default_hill_order(samples.size()));
  if (order < kMinHillOrder) throw ModelError("k too small");
  if (order >= samples.size()) throw ModelError("k must be < n");
  return hill_sorted_desc(sorted_desc(samples), order);
}

HillStability hill_stability(std::span<const double> samples,
                             std::size_t points, double tolerance) {
  const std::size_t k_max = samples.size() / 10;
  if (k_max <= kMinHillOrder || points < 2) {
    throw ModelError("too few samples for a Hill stability scan");
  }
  const std::vector<double> desc = sorted_desc(samples);
  HillStability out;
  const double lo = std::log(static_cast<double>(kMinHillOrder));
  const double hi = std::log(static_cast<double>(k_max));
  for (std::size_t i = 0; i < points; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(points - 1);
    const auto k = static_cast<std::size_t>(std::llround(std::exp(lo + f * (hi - lo))));
    if (!out.points.empty() && out.points.back().k == k) continue;
    out.points.push_back({k, hill_sorted_desc(desc, k)});
  }
  // Judge stability on the upper half of the scan, where variance is small.
  double mn = INFINITY, mx = -INFINITY;
  for (std::size_t i = out.points.size() / 2; i < out.points.size(); ++i) {
    mn = std::min(mn, out.points[i].exponent);
    mx = std::max(mx, out.points[i].exponent);
  }
  out.no_power_law = (mx - mn) > tolerance * 0.5 * (mx + mn);
  return out;
}

}  // namespace kmarket
