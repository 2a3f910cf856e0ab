#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kmarket/analytic_oracles.hpp"
#include "kmarket/analytics.hpp"
#include "kmarket/errors.hpp"
#include "kmarket/rng.hpp"

using namespace kmarket;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed, double mu = 0, double sd = 1) {
  RandomStream s(seed, 0, StreamDomain::test);
  std::vector<double> v(n);
  for (double& x : v) x = mu + sd * s.normal();
  return v;
}

std::vector<double> inverse_gamma_samples(const InverseGammaLaw& law, std::size_t n,
                                          std::uint64_t seed) {
  RandomStream s(seed, 0, StreamDomain::test);
  std::vector<double> v(n);
  for (double& x : v) x = law.quantile(s.uniform());
  return v;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("histogram normalization") {
  const auto c = histogram(std::vector<double>(50, 3.0));
  CHECK(c.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  std::size_t occupied = 0;
  for (std::size_t i = 0; i < c.bins(); ++i) {
    if (c.densities[i] > 0) {
      ++occupied;
      CHECK(c.densities[i] == doctest::Approx(1.0 / c.width(i)));
    }
  }
  CHECK(occupied == 1);

  RandomStream s(1, 0, StreamDomain::test);
  std::vector<double> u(1000000);
  for (double& x : u) x = s.uniform();
  const auto h = histogram(u, Binning::linear, 100);
  CHECK(h.bins() == 100);
  CHECK(h.n == u.size());
  for (double d : h.densities) CHECK(d == doctest::Approx(1.0).epsilon(0.02));

  for (auto b : {Binning::linear, Binning::log}) {
    for (std::size_t bins : {1u, 7u, 100u}) {
      auto v = normals(5000, bins, 3.0, 0.5);
      for (double& x : v) x = std::exp(x);
      const auto e = histogram(v, b, bins);
      CHECK(e.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::is_sorted(e.bin_edges.begin(), e.bin_edges.end()));
      CHECK(std::all_of(e.densities.begin(), e.densities.end(), [](double d) { return d >= 0; }));
    }
  }
  CHECK_THROWS_AS(histogram(std::vector<double>{}), ModelError);
  CHECK_THROWS_AS(histogram(std::vector<double>{1.0, -1.0}, Binning::log), ModelError);
}

TEST_CASE("histogram of inverse-gamma samples matches the oracle") {
  const InverseGammaLaw law{3.0, 2.0};
  const auto v = inverse_gamma_samples(law, 200000, 4);
  const auto e = histogram(v, Binning::log);
  CHECK(ks_distance(e, [&](double z) { return law.cdf(z); }) < 0.01);
  CHECK(ks_distance(v, [&](double z) { return law.cdf(z); }) < 0.006);
}

TEST_CASE("Kolmogorov-Smirnov distance") {
  const auto v = normals(100000, 2);
  CHECK(ks_distance(v, normal_cdf) < 0.006);
  CHECK(ks_distance(v, [](double z) { return normal_cdf(z - 10.0); }) ==
        doctest::Approx(1.0).epsilon(1e-6));
  // Invariance under a strictly monotone map applied to samples and oracle.
  std::vector<double> w(v.size());
  std::transform(v.begin(), v.end(), w.begin(), [](double x) { return std::exp(2 * x + 1); });
  const auto cdf_shift = [](double z) { return normal_cdf(z - 0.01); };
  const double a = ks_distance(v, cdf_shift);
  const double b = ks_distance(w, [&](double y) { return cdf_shift((std::log(y) - 1) / 2); });
  CHECK(a == doctest::Approx(b).epsilon(1e-9));

  const auto big = normals(400000, 3);
  CHECK(ks_distance(big, normal_cdf) < ks_distance(std::vector<double>(big.begin(), big.begin() + 400),
                                                   normal_cdf));
  CHECK(ks_two_sample(std::vector<double>{1, 2, 3}, std::vector<double>{10, 11}) == 1.0);
  CHECK(ks_two_sample(v, v) == 0.0);
}

TEST_CASE("log-normal fit") {
  double prev = 1e300;
  for (std::size_t n : {10000u, 100000u, 1000000u}) {
    auto v = normals(n, n, 1.2, 0.4);
    for (double& x : v) x = std::exp(x);
    const LogNormalFit f = fit_lognormal(v);
    const double err = std::abs(f.mu - 1.2) + std::abs(f.sigma - 0.4);
    CHECK(err < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(err < prev * 1.5);
    prev = err;
    double logsum = 0;
    for (double x : v) logsum += std::log(x);
    CHECK(f.mu == doctest::Approx(logsum / n).epsilon(1e-12));
  }
  CHECK(fit_lognormal(std::vector<double>(9, 2.0)).sigma == 0.0);
  CHECK_THROWS_AS(fit_lognormal(std::vector<double>{1.0, 0.0}), ModelError);
}

TEST_CASE("inverse-gamma fit") {
  const auto v = inverse_gamma_samples({3.0, 2.0}, 1000000, 5);
  const InverseGammaFit f = fit_inverse_gamma(v);
  CHECK(f.shape == doctest::Approx(3.0).epsilon(0.02));
  CHECK(f.scale == doctest::Approx(2.0).epsilon(0.02));
  CHECK_FALSE(f.moments_unreliable);

  const auto heavy = inverse_gamma_samples({1.5, 1.0}, 200000, 6);
  const InverseGammaFit h = fit_inverse_gamma(heavy);
  CHECK(h.moments_unreliable);
  CHECK(h.shape == doctest::Approx(1.5).epsilon(0.03));
  CHECK_THROWS_WITH_AS(fit_inverse_gamma(std::vector<double>(5, 1.0)),
                       "sample variance must be > 0", ModelError);
}

TEST_CASE("log returns") {
  const std::vector<double> flat(10, 4.0);
  for (double r : log_returns(flat)) CHECK(r == 0.0);
  std::vector<double> dbl{1, 2, 4, 8, 16};
  for (double r : log_returns(dbl)) CHECK(r == doctest::Approx(std::log(2.0)));
  auto path = normals(200, 9, 0, 0.01);
  double acc = std::log(5.0);
  for (double& x : path) x = std::exp(acc += x);
  const auto r1 = log_returns(path, 1);
  const auto r2 = log_returns(path, 2);
  REQUIRE(r2.size() == path.size() - 2);
  for (std::size_t i = 0; i < r2.size(); ++i) {
    CHECK(r2[i] == doctest::Approx(r1[i] + r1[i + 1]).epsilon(1e-12));
  }
  CHECK_THROWS_WITH_AS(log_returns(std::vector<double>{1.0, 2.0}, 2), "path shorter than lag",
                       ModelError);
}

TEST_CASE("Gaussian QQ pairs") {
  const auto g = qq_gaussian(normals(100000, 10, 3.0, 2.0));
  double worst = 0;
  for (std::size_t i = g.size() / 100; i < g.size() - g.size() / 100; ++i) {
    worst = std::max(worst, std::abs(g[i].first - g[i].second));
  }
  CHECK(worst < 0.05);

  const std::vector<double> sym{-3, -1, -0.5, 0.5, 1, 3};
  const auto s = qq_gaussian(sym);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i].first == doctest::Approx(-s[s.size() - 1 - i].first));
    CHECK(s[i].second == doctest::Approx(-s[s.size() - 1 - i].second));
  }

  // Student-t with 3 degrees of freedom: heavier than Gaussian at both ends.
  RandomStream st(11, 0, StreamDomain::test);
  std::vector<double> t(100000);
  for (double& x : t) {
    double chi = 0;
    for (int j = 0; j < 3; ++j) chi += std::pow(st.normal(), 2);
    x = st.normal() / std::sqrt(chi / 3);
  }
  const auto q = qq_gaussian(t);
  CHECK(q.front().second < q.front().first);
  CHECK(q.back().second > q.back().first);
  CHECK_THROWS_AS(qq_gaussian(std::vector<double>(5, 1.0)), ModelError);
}

TEST_CASE("excess kurtosis") {
  CHECK(std::abs(excess_kurtosis(normals(1000000, 12))) < 0.02);
  CHECK(excess_kurtosis(std::vector<double>{-1, 1, -1, 1, 1, -1}) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(excess_kurtosis(std::vector<double>(8, 2.0)), ModelError);
  CHECK_THROWS_AS(excess_kurtosis(std::vector<double>{1, 2, 3}), ModelError);
}

TEST_CASE("Hill estimator") {
  RandomStream s(13, 0, StreamDomain::test);
  std::vector<double> pareto(1000000);
  for (double& x : pareto) x = std::pow(s.uniform(), -0.5);  // density ~ s^-3
  CHECK(hill_tail_exponent(pareto, 10000) == doctest::Approx(3.0).epsilon(0.1 / 3));
  CHECK(hill_tail_exponent(pareto) == doctest::Approx(3.0).epsilon(0.1 / 3));
  CHECK(default_hill_order(1000000) == 3982);
  CHECK_FALSE(hill_stability(pareto).no_power_law);

  std::vector<double> expo(1000000);
  for (double& x : expo) x = -std::log(s.uniform());
  const HillStability h = hill_stability(expo);
  CHECK(h.no_power_law);
  // Light tail: the estimate keeps rising as the threshold moves out.
  CHECK(h.points.front().exponent > h.points.back().exponent);

  CHECK_THROWS_WITH_AS(hill_tail_exponent(pareto, 1), "k too small", ModelError);
  CHECK_THROWS_AS(hill_tail_exponent(std::vector<double>(20, 2.0), 20), ModelError);
}

TEST_CASE("Hill on steady-state samples recovers the oracle exponent") {
  MarketParams q;
  q.kappa = 10;
  q.nu = 50;
  q.omega = 0.25;
  q.r = 0.0025;
  const InverseGammaLaw law = hf_steady_state_law(q, 5.0, 20.0);
  const auto v = inverse_gamma_samples(law, 1000000, 14);
  const double target = 2 * (1 + q.kappa / q.nu * 20.0 * (q.omega + q.r));
  CHECK(law.tail_exponent() == doctest::Approx(target));
  CHECK(hill_tail_exponent(v) == doctest::Approx(target).epsilon(0.1));
}
