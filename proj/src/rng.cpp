#include "kmarket/rng.hpp"

#include <cmath>

namespace kmarket {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t stream_index,
                          std::uint64_t domain) noexcept {
  std::uint64_t state = master_seed;
  std::uint64_t h = splitmix64(state);
  state = h ^ (domain * 0xd1b54a32d192ed03ULL);
  h = splitmix64(state);
  state = h ^ (stream_index * 0x8cb92ba72f3d8dd7ULL);
  return splitmix64(state);
}

RandomStream::RandomStream(std::uint64_t master_seed, std::uint64_t index,
                           StreamDomain domain) noexcept {
  std::uint64_t state =
      derive_seed(master_seed, index, static_cast<std::uint64_t>(domain));
  for (auto& word : s_) word = splitmix64(state);
}

std::uint64_t RandomStream::next_u64() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RandomStream::uniform() noexcept {
  // 53 random bits, shifted by half an ulp so 0 is never returned.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

}  // namespace kmarket
