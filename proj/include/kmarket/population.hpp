#pragma once

#include <cstdint>
#include <vector>

#include "kmarket/market_core.hpp"
#include "kmarket/rng.hpp"

namespace kmarket {

/// Agents (or Monte Carlo particles) with one random stream each.
/// Stream i is derived from (master seed, i) so the outcome of a run does not
/// depend on how the index range is split across threads.
struct Population {
  std::vector<AgentState> agents;
  std::vector<RandomStream> streams;

  [[nodiscard]] std::size_t size() const noexcept { return agents.size(); }

  /// N agents at the point mass (x0, y0).
  static Population point_mass(std::size_t n, double x0, double y0,
                               std::uint64_t seed, StreamDomain domain);

  /// N agents with independent log-normal x and y: medians x0, y0 and log
  /// standard deviations sx, sy.
  static Population lognormal(std::size_t n, double x0, double y0, double sx,
                              double sy, std::uint64_t seed,
                              StreamDomain domain);

  [[nodiscard]] double mean_x() const;
  [[nodiscard]] double mean_y() const;
};

}  // namespace kmarket
