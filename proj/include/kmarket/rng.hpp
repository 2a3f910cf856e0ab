#pragma once

#include <cstdint>

namespace kmarket {

/// Derives a well-mixed 64-bit value from (seed, stream, domain). Used to seed
/// independent per-agent / per-broker generators so that results never depend
/// on iteration order or thread count.
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_index,
                          std::uint64_t domain) noexcept;

/// Stream domains. Each consumer of randomness draws from its own domain so
/// adding a consumer does not perturb the others.
enum class StreamDomain : std::uint64_t {
  agent_noise = 1,
  particle_noise = 2,
  broker_noise = 3,
  fundamental_price = 4,
  initial_condition = 5,
  test = 99,
};

/// xoshiro256** generator with a cached Marsaglia-polar normal.
class RandomStream {
 public:
  RandomStream() noexcept : RandomStream(0, 0, StreamDomain::test) {}
  RandomStream(std::uint64_t master_seed, std::uint64_t index,
               StreamDomain domain) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  /// Standard normal.
  double normal() noexcept;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace kmarket
