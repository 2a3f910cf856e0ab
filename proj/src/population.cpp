#include "kmarket/population.hpp"

#include <cmath>
#include <vector>

#include "kmarket/errors.hpp"
#include "kmarket/parallel.hpp"

namespace kmarket {

namespace {

std::vector<RandomStream> make_streams(std::size_t n, std::uint64_t seed,
                                       StreamDomain domain) {
  std::vector<RandomStream> streams;
  streams.reserve(n);
  for (std::size_t i = 0; i < n; ++i) streams.emplace_back(seed, i, domain);
  return streams;
}

}  // namespace

Population Population::point_mass(std::size_t n, double x0, double y0,
                                  std::uint64_t seed, StreamDomain domain) {
  if (n == 0) throw ModelError("population size must be >= 1");
  if (!(x0 >= 0.0) || !(y0 >= 0.0)) {
    throw ModelError("initial wealth must be non-negative");
  }
  Population pop;
  pop.agents.assign(n, AgentState{x0, y0});
  pop.streams = make_streams(n, seed, domain);
  return pop;
}

Population Population::lognormal(std::size_t n, double x0, double y0,
                                 double sx, double sy, std::uint64_t seed,
                                 StreamDomain domain) {
  if (!(x0 > 0.0) || !(y0 > 0.0)) {
    throw ModelError("log-normal initial medians must be positive");
  }
  Population pop = point_mass(n, x0, y0, seed, domain);
  for (std::size_t i = 0; i < n; ++i) {
    RandomStream init(seed, i, StreamDomain::initial_condition);
    pop.agents[i].x = x0 * std::exp(sx * init.normal());
    pop.agents[i].y = y0 * std::exp(sy * init.normal());
  }
  return pop;
}

double Population::mean_x() const {
  std::vector<double> xs(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) xs[i] = agents[i].x;
  return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double Population::mean_y() const {
  std::vector<double> ys(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) ys[i] = agents[i].y;
  return pairwise_sum(ys) / static_cast<double>(ys.size());
}

}  // namespace kmarket
