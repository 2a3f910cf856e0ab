#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "kmarket/errors.hpp"
#include "kmarket/kinetic_solver.hpp"

using namespace kmarket;

namespace {

double truncated_sd_oracle(double c) {
  const double phi = std::exp(-0.5 * c * c) / std::sqrt(2.0 * M_PI);
  const double mass = std::erf(c / std::sqrt(2.0));
  return std::sqrt(1.0 - 2.0 * c * phi / mass);
}

MarketParams frozen_params() {
  MarketParams p;
  p.kappa = 0.4;
  p.D = 0.01;
  p.r = 0.01;
  p.nu = 5.0;
  return p;
}

}  // namespace

TEST_CASE("truncated normal standard deviation") {
  CHECK(truncated_normal_sd(4.0) == doctest::Approx(truncated_sd_oracle(4.0)).epsilon(1e-12));
  CHECK(truncated_normal_sd(4.0) == doctest::Approx(0.9994645018070796).epsilon(1e-12));
  CHECK(truncated_normal_sd(1.5) == doctest::Approx(truncated_sd_oracle(1.5)).epsilon(1e-12));
  CHECK(truncated_normal_sd(std::numeric_limits<double>::infinity()) == 1.0);
  CHECK_THROWS_AS(truncated_normal_sd(0.0), ModelError);
}

TEST_CASE("sample_eta moments") {
  for (double c : {4.0, 1.5}) {
    RandomStream s(3, 0, StreamDomain::test);
    const int n = 1000000;
    const double bound = c / truncated_normal_sd(c);
    double sum = 0, sum2 = 0, maxabs = 0;
    for (int i = 0; i < n; ++i) {
      const double e = sample_eta(s, c);
      sum += e;
      sum2 += e * e;
      maxabs = std::max(maxabs, std::abs(e));
    }
    CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
    CHECK(maxabs <= bound);
  }
  RandomStream a(5, 0, StreamDomain::test), b(5, 0, StreamDomain::test);
  const double inf = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) CHECK(sample_eta(a, inf) == b.normal());
}

TEST_CASE("interaction rule") {
  const MarketParams p = frozen_params();
  KineticParams kin;
  kin.epsilon = 1e-4;
  SUBCASE("identity interaction") {
    MarketParams q = p;
    q.r = 0.0;
    q.D = 0.0;
    const auto out = apply_interaction({20, 20}, 0.0, {5.0, 0.0, 0.0}, q, kin);
    REQUIRE(out);
    CHECK(out->x == 20.0);
    CHECK(out->y == 20.0);
  }
  SUBCASE("drift arithmetic") {
    const auto out = apply_interaction({20, 20}, 0.0, {5.0, 4.0, 1.0}, p, kin);
    REQUIRE(out);
    CHECK(out->x == doctest::Approx(20.003604).epsilon(1e-12));
    CHECK(out->y == doctest::Approx(19.99962).epsilon(1e-12));
  }
  SUBCASE("kernel indicator rejects non-positive wealth") {
    CHECK_FALSE(apply_interaction({20, 20}, -1e4, {5.0, 4.0, 1.0}, p, kin));
    CHECK_FALSE(apply_interaction({20, 20}, 1e4, {5.0, 4.0, 1.0}, p, kin));
  }
}

TEST_CASE("one-step drift and diffusion consistency") {
  const MarketParams p = frozen_params();
  KineticParams kin;
  kin.epsilon = 1e-3;
  const double x = 20.0, ED = -1.5, k = -0.4, S = 5.0;
  RandomStream s(17, 0, StreamDomain::test);
  const int n = 400000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const auto out = apply_interaction({x, 20}, sample_eta(s, kin.eta_truncation), {S, ED, k}, p, kin);
    REQUIRE(out);
    sum += out->x;
    sum2 += out->x * out->x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  const double expect_mean = x * (1 + kin.epsilon * (p.kappa * ED + p.D / S + k / p.nu));
  const double expect_var = kin.epsilon * x * x / (p.nu * p.nu);
  CHECK(std::abs(mean - expect_mean) < 4 * std::sqrt(expect_var / n));
  CHECK(var == doctest::Approx(expect_var).epsilon(4 * std::sqrt(2.0 / n)));
}

TEST_CASE("mean-field excess demand") {
  Population pop = Population::point_mass(4, 20, 20, 1, StreamDomain::particle_noise);
  CHECK(mean_field_excess_demand(pop, 0.0, 5.0) == 0.0);
  CHECK(mean_field_excess_demand(pop, 2.0, 5.0) == doctest::Approx(8.0));
  Population two = Population::point_mass(2, 1, 10, 1, StreamDomain::particle_noise);
  two.agents[1].y = 30;
  CHECK(mean_field_excess_demand(two, 2.0, 5.0) == doctest::Approx(8.0));
  CHECK(mean_field_excess_demand(two, -1.0, 5.0) == doctest::Approx(-0.2));
  Population empty;
  CHECK_THROWS_AS(mean_field_excess_demand(empty, 1.0, 5.0), ModelError);
}

TEST_CASE("kinetic step fixed point and mass conservation") {
  MarketParams p;
  p.value_fn = ValueFunctionMode::identity;
  p.chi_override = 1.0;
  p.r = 0.0;
  p.D = 0.0;
  KineticParams kin;
  Population pop = Population::lognormal(1000, 20, 20, 0.3, 0.3, 2, StreamDomain::particle_noise);
  const auto before = pop.agents;
  MarketState m{5.0, 0.0, 5.0, 0.0};
  KineticStepOptions z;
  z.zero_noise = true;
  for (int i = 0; i < 10; ++i) CHECK(kinetic_step(pop, m, p, kin, z) == 0);
  CHECK(m.S == 5.0);
  for (std::size_t i = 0; i < before.size(); ++i) {
    CHECK(pop.agents[i].x == before[i].x);
    CHECK(pop.agents[i].y == before[i].y);
  }

  MarketParams q;
  q.nu = 0.5;
  q.kappa = 1e-3;
  Population noisy = Population::point_mass(2000, 20, 20, 2, StreamDomain::particle_noise);
  MarketState mq{5.0, 0.0, 8.0, 0.0};
  KineticParams coarse;
  coarse.epsilon = 1e-2;
  const KineticRun run = run_kinetic(noisy, mq, q, coarse, 0.1, 1);
  CHECK(noisy.size() == 2000);
  CHECK(run.attempts == 2000 * run.trajectory.steps);
  for (const auto& a : noisy.agents) {
    REQUIRE(a.x > 0.0);
    REQUIRE(a.y > 0.0);
  }
  for (const auto& snap : run.snapshots) CHECK(snap.particles.size() == 2000);
}

TEST_CASE("run_kinetic bookkeeping") {
  MarketParams p;
  KineticParams kin;
  Population pop = Population::point_mass(100, 20, 20, 1, StreamDomain::particle_noise);
  MarketState m{5.0, 0.0, 5.0, 0.0};
  KineticRun run = run_kinetic(pop, m, p, kin, kin.epsilon, 1);
  CHECK(run.trajectory.steps == 1);
  CHECK(run.trajectory.size() == 2);
  CHECK(run.snapshots.size() == 1);
  CHECK_THROWS_AS(run_kinetic(pop, m, p, kin, 0.5 * kin.epsilon, 1), ModelError);
  KineticParams bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(bad.validate(), ModelError);
}

TEST_CASE("rejections stay rare with marginal parameters at eps = 1e-4") {
  MarketParams p;
  p.kappa = 0.1;
  p.omega = 20.0;
  p.gamma = 0.35;
  p.chi_override = 1.0;
  KineticParams kin;
  Population pop = Population::point_mass(50000, 20, 20, 1, StreamDomain::particle_noise);
  MarketState m{5.0, 0.0, 10.0, 0.0};
  const KineticRun run = run_kinetic(pop, m, p, kin, 0.02, 10);
  CHECK(run.rejection_fraction() < 1e-3);
  CHECK(run.warnings.empty());
  CHECK(std::all_of(run.trajectory.K_path.begin(), run.trajectory.K_path.end(),
                    [](double k) { return k > 0.0; }));
}
