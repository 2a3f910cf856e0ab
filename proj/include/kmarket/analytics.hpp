#pragma once

// Empirical statistics: histograms, goodness of fit, parameter fits, QQ data
// and tail estimates.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace kmarket {

enum class Binning { linear, log };

struct DensityEstimate {
  std::vector<double> bin_edges;
  std::vector<double> densities;
  std::size_t n = 0;

  [[nodiscard]] std::size_t bins() const noexcept { return densities.size(); }
  [[nodiscard]] double center(std::size_t i) const;
  [[nodiscard]] double width(std::size_t i) const;
  [[nodiscard]] double total_mass() const;
  /// Piecewise-linear CDF of the histogram.
  [[nodiscard]] double cdf(double z) const;
};

inline constexpr std::size_t kDefaultBins = 100;

DensityEstimate histogram(std::span<const double> samples,
                          Binning binning = Binning::linear,
                          std::size_t n_bins = kDefaultBins);

using CdfFunction = std::function<double(double)>;

/// sup |F_n - F| over the sample points.
double ks_distance(std::span<const double> samples, const CdfFunction& cdf);
/// sup |F_hist - F| over the bin edges.
double ks_distance(const DensityEstimate& est, const CdfFunction& cdf);
/// Two-sample statistic sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

struct LogNormalFit {
  double mu = 0.0;
  double sigma = 0.0;
};
LogNormalFit fit_lognormal(std::span<const double> samples);

struct InverseGammaFit {
  double shape = 0.0;
  double scale = 0.0;
  double moment_shape = 0.0;
  double moment_scale = 0.0;
  /// Set when the method-of-moments shape is <= 2 (infinite variance), where
  /// the moment estimate is meaningless and only the ML estimate is used.
  bool moments_unreliable = false;
};
/// Maximum likelihood, with the method-of-moments estimate as starting point.
InverseGammaFit fit_inverse_gamma(std::span<const double> samples);

std::vector<double> log_returns(std::span<const double> path,
                                std::size_t lag = 1);

/// (standard normal quantile, standardised order statistic) at (i - 0.5)/n.
std::vector<std::pair<double, double>> qq_gaussian(std::span<const double> series);

double excess_kurtosis(std::span<const double> series);

inline constexpr std::size_t kMinHillOrder = 10;

/// Default number of order statistics, ceil(n^0.6).
std::size_t default_hill_order(std::size_t n);

/// Density tail exponent 1 + k / sum log(x_(i) / x_(k+1)) over the k largest
/// samples.
double hill_tail_exponent(std::span<const double> samples,
                          std::optional<std::size_t> k = std::nullopt);

struct HillPoint {
  std::size_t k = 0;
  double exponent = 0.0;
};

struct HillStability {
  std::vector<HillPoint> points;
  /// True when the estimate varies by more than `tolerance` (relative) across
  /// the scanned k, i.e. no clear power-law regime.
  bool no_power_law = false;
};

/// Hill estimates for k on a log grid between kMinHillOrder and n / 10.
HillStability hill_stability(std::span<const double> samples,
                             std::size_t points = 20, double tolerance = 0.1);

}  // namespace kmarket
