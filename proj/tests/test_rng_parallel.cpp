#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "kmarket/parallel.hpp"
#include "kmarket/rng.hpp"

using namespace kmarket;

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(7, 3, StreamDomain::agent_noise);
  RandomStream b(7, 3, StreamDomain::agent_noise);
  RandomStream c(7, 4, StreamDomain::agent_noise);
  RandomStream d(7, 3, StreamDomain::broker_noise);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differ_c = differ_c || x != c.next_u64();
    differ_d = differ_d || x != d.next_u64();
  }
  CHECK(differ_c);
  CHECK(differ_d);
}

TEST_CASE("uniform and normal moments") {
  RandomStream s(11, 0, StreamDomain::test);
  const int n = 400000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = s.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn / n) < 4 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1.0) < 4 * std::sqrt(2.0 / n));
}

TEST_CASE("parallel_for covers every index once") {
  for (unsigned t : {1u, 2u, 4u, 7u}) {
    set_thread_count(t);
    std::vector<int> hits(10007, 0);
    parallel_for(hits.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  set_thread_count(0);
}

TEST_CASE("reductions") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(shifted_mean(v) == doctest::Approx(500.5));
  std::vector<double> same(333, 0.1);
  CHECK(shifted_mean(same) == 0.1);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
}
