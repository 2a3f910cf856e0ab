#pragma once

#include <cstdint>

#include "kmarket/rng.hpp"

namespace kmarket {

/// Euler-Maruyama step of d(sf) = vol * sf dW, floored to stay positive.
/// Throws ModelError for sf <= 0 or dt <= 0.
double fundamental_price_step(double sf, double dt, RandomStream& stream,
                              double volatility = 0.1);

/// Constant (volatility == 0) or stochastic fundamental price.
struct FundamentalPriceProcess {
  double volatility = 0.0;
  RandomStream stream;

  static FundamentalPriceProcess constant() { return {}; }
  static FundamentalPriceProcess stochastic(double volatility,
                                            std::uint64_t seed) {
    return {volatility, RandomStream(seed, 0, StreamDomain::fundamental_price)};
  }

  [[nodiscard]] bool is_constant() const noexcept { return volatility == 0.0; }
  double advance(double sf, double dt) {
    return is_constant() ? sf
                         : fundamental_price_step(sf, dt, stream, volatility);
  }
};

}  // namespace kmarket
