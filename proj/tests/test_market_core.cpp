#include <doctest.h>

#include <cmath>
#include <limits>

#include "kmarket/errors.hpp"
#include "kmarket/market_core.hpp"

using namespace kmarket;

namespace {

constexpr auto KT = ValueFunctionMode::kahneman_tversky;
constexpr auto ID = ValueFunctionMode::identity;

MarketParams identity_params() {
  MarketParams p;
  p.value_fn = ID;
  return p;
}

}  // namespace

TEST_CASE("value function examples") {
  CHECK(value_function(1.0, 0.55, KT) == 1.0);
  CHECK(value_function(0.0, 0.55, KT) == 0.0);
  CHECK(value_function(4.0, 0.55, KT) == doctest::Approx(std::pow(4.0, 0.6)).epsilon(1e-14));
  CHECK(value_function(4.0, 0.55, KT) == doctest::Approx(2.29739670999407).epsilon(1e-12));
  CHECK(value_function(-4.0, 0.55, KT) == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(value_function(-3.5, 0.2, ID) == -3.5);
  CHECK_THROWS_AS(value_function(std::nan(""), 0.55, KT), ModelError);
  CHECK_THROWS_AS(value_function(std::numeric_limits<double>::infinity(), 0.55, ID),
                  ModelError);
}

TEST_CASE("value function sign, monotonicity and loss aversion") {
  for (double g : {0.05, 0.3, 0.55, 0.95}) {
    double prev = -std::numeric_limits<double>::infinity();
    for (double v = -5.0; v <= 5.0; v += 0.01) {
      const double u = value_function(v, g, KT);
      CHECK(u >= prev);
      prev = u;
      if (v > 1e-12) CHECK(u > 0.0);
      if (v < -1e-12) CHECK(u < 0.0);
      if (v > 0.0 && v < 1.0) CHECK(std::abs(value_function(-v, g, KT)) >= u);
    }
  }
}

TEST_CASE("weight function examples and range") {
  CHECK(weight_function(0.0, 0.5, 0.65) == 0.5);
  CHECK(weight_function(1e6, 0.5, 1.0) == doctest::Approx(1.0));
  const double expect = 0.65 * (0.5 * std::tanh(1.0) + 0.5) + 0.35 * (0.5 * std::tanh(-1.0) + 0.5);
  CHECK(weight_function(0.5, 0.5, 0.65) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(weight_function(0.5, 0.5, 0.65) == doctest::Approx(0.6142391233933647).epsilon(1e-12));
  for (double a : {0.1, 0.5, 3.0}) {
    for (double b : {0.0, 0.2, 0.65, 1.0}) {
      CHECK(weight_function(0.0, a, b) == 0.5);
      for (double d = -50.0; d <= 50.0; d += 0.7) {
        const double w = weight_function(d, a, b);
        CHECK(w >= 0.0);
        CHECK(w <= 1.0);
      }
    }
  }
}

TEST_CASE("fundamental estimate examples") {
  MarketParams p = identity_params();
  p.omega = 20.0;
  p.r = 0.01;
  CHECK(fundamental_estimate(7.0, 7.0, p) == doctest::Approx(-0.01));
  CHECK(fundamental_estimate(5.0, 10.0, p) == doctest::Approx(19.99).epsilon(1e-14));
  p.value_fn = KT;
  p.gamma = 0.35;
  CHECK(fundamental_estimate(5.0, 10.0, p) ==
        doctest::Approx(std::pow(20.0, 0.4) - 0.01).epsilon(1e-14));
  CHECK(fundamental_estimate(5.0, 10.0, p) == doctest::Approx(3.3044540173399866).epsilon(1e-12));
  CHECK_THROWS_WITH_AS(fundamental_estimate(0.0, 10.0, p), "non-positive price", ModelError);
  CHECK_THROWS_AS(fundamental_estimate(-1.0, 10.0, p), ModelError);
}

TEST_CASE("chartist estimate examples") {
  MarketParams p = identity_params();
  p.r = 0.01;
  CHECK(chartist_estimate(5.0, 0.0, 0.0, p) == doctest::Approx(-0.01));
  p.rho = 2.0 / 3.0;
  CHECK(chartist_estimate(5.0, 0.2, 0.01, p) == doctest::Approx(0.052).epsilon(1e-13));
  p.value_fn = KT;
  p.gamma = 0.55;
  p.kappa = 0.4;
  const double s_dot = p.kappa * 0.1 * 5.0;
  CHECK(chartist_estimate(5.0, s_dot, 0.01, p) ==
        doctest::Approx(std::pow(0.062, 0.6) - 0.01).epsilon(1e-13));
  CHECK(chartist_estimate(5.0, s_dot, 0.01, p) == doctest::Approx(0.1785536803274436).epsilon(1e-12));
  CHECK_THROWS_AS(chartist_estimate(0.0, 0.0, 0.0, p), ModelError);
}

TEST_CASE("aggregate estimate honours the override and stays between estimates") {
  MarketParams p = identity_params();
  p.omega = 20.0;
  p.chi_override = 1.0;
  ReturnEstimates e = aggregate_estimate(5.0, 0.2, 0.01, 10.0, p);
  CHECK(e.k == e.kf);
  CHECK(e.chi == 1.0);
  p.chi_override = 0.0;
  e = aggregate_estimate(5.0, 0.2, 0.01, 10.0, p);
  CHECK(e.k == e.kc);

  p.chi_override.reset();
  p.alpha = 0.5;
  p.beta = 0.65;
  const ReturnEstimates c = combine_estimates(19.99, 0.052, p);
  const double chi = weight_function(19.99 - 0.052, 0.5, 0.65);
  CHECK(c.chi == doctest::Approx(chi));
  CHECK(c.chi == doctest::Approx(0.65).epsilon(1e-12));
  CHECK(c.k == doctest::Approx(chi * 19.99 + (1 - chi) * 0.052));
  CHECK(c.k == doctest::Approx(13.0117).epsilon(1e-6));

  for (double S = 1.0; S < 20.0; S += 0.37) {
    for (double sd : {-3.0, 0.0, 0.5, 4.0}) {
      const ReturnEstimates q = aggregate_estimate(S, sd, 0.01, 10.0, MarketParams{});
      CHECK(q.chi >= 0.0);
      CHECK(q.chi <= 1.0);
      CHECK(q.k >= std::min(q.kf, q.kc) - 1e-12);
      CHECK(q.k <= std::max(q.kf, q.kc) + 1e-12);
    }
  }
}

TEST_CASE("feedback control examples and sign") {
  CHECK(feedback_control({20, 20}, 0.0, 5.0) == 0.0);
  CHECK(feedback_control({0, 20}, 19.99, 5.0) == doctest::Approx(79.96));
  CHECK(feedback_control({20, 0}, -0.5, 5.0) == doctest::Approx(-2.0));
  for (double k = -3.0; k <= 3.0; k += 0.25) {
    CHECK(feedback_control({3.0, 7.0}, k, 2.0) * k >= 0.0);
  }
  CHECK(feedback_control({20, 20}, 1e-13, 5.0) == 0.0);
}

TEST_CASE("finite-N control") {
  MarketParams p;
  p.nu = 5.0;
  p.kappa = 0.4;
  CHECK(feedback_control_finite_n({20, 20}, 1.0, -0.8, 5.0, 10, p) == doctest::Approx(10.4));
  CHECK(feedback_control_finite_n({20, 20}, 0.0, -0.8, 5.0, 10, p) == 0.0);
  const AgentState a{12.0, 9.0};
  for (double k : {-0.7, 0.4}) {
    const double limit = feedback_control(a, k, p.nu);
    const double scaled10 = 10.0 * std::abs(feedback_control_finite_n(a, k, -0.3, 5.0, 10, p) - limit);
    CHECK(scaled10 > 0.0);
    for (std::size_t n = 100; n <= 10000000; n *= 10) {
      const double diff = std::abs(feedback_control_finite_n(a, k, -0.3, 5.0, n, p) - limit);
      CHECK(diff * static_cast<double>(n) == doctest::Approx(scaled10).epsilon(1e-6));
    }
  }
}

TEST_CASE("estimate derivative in S") {
  MarketParams p = identity_params();
  p.omega = 20.0;
  p.chi_override = 1.0;
  CHECK(estimate_dS(5.0, 0.0, 0.01, 10.0, p) == doctest::Approx(-8.0).epsilon(1e-14));

  // Constant in S: chartist-only with zero price rate and zero dividend.
  MarketParams c;
  c.chi_override = 0.0;
  CHECK(estimate_dS(5.0, 0.0, 0.0, 10.0, c) == doctest::Approx(0.0));

  // KT branch against the analytic derivative of U(omega (sf - S)/S).
  MarketParams kt;
  kt.omega = 20.0;
  kt.gamma = 0.35;
  kt.chi_override = 1.0;
  const double S = 5.0, sf = 10.0;
  const double v = kt.omega * (sf - S) / S;
  const double exact = (kt.gamma + 0.05) * std::pow(v, kt.gamma - 0.95) * (-kt.omega * sf / (S * S));
  CHECK(estimate_dS(S, 0.0, 0.01, sf, kt) == doctest::Approx(exact).epsilon(1e-8));
  const double coarse = estimate_dS(S, 0.0, 0.01, sf, kt, 1e-2);
  const double fine = estimate_dS(S, 0.0, 0.01, sf, kt, 5e-3);
  CHECK(std::abs(coarse - exact) / std::abs(fine - exact) == doctest::Approx(4.0).epsilon(0.02));
  CHECK_THROWS_AS(estimate_dS(1.0, 0.0, 0.01, sf, kt, 1.0), ModelError);
}

TEST_CASE("running cost") {
  CHECK(running_cost({20, 20}, 0.0) == 0.0);
  CHECK(running_cost({20, 1}, -0.5) == doctest::Approx(100.0));
  CHECK(running_cost({1, 3}, 2.0) == doctest::Approx(9.0));
  for (double k = -2.0; k <= 2.0; k += 0.1) CHECK(running_cost({4, 6}, k) >= 0.0);
}

TEST_CASE("parameter validation names the field") {
  MarketParams p;
  CHECK_NOTHROW(p.validate());
  p.gamma = 0.97;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = MarketParams{};
  p.kappa = 0.0;
  try {
    p.validate();
    FAIL("expected throw");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("kappa") != std::string::npos);
  }
  p = MarketParams{};
  p.D = -0.1;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = MarketParams{};
  p.chi_override = 1.2;
  CHECK_THROWS_AS(p.validate(), ModelError);
}
