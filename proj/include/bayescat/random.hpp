#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>

namespace bayescat {

// One exclusive stream per chain; never share an Rng across threads.
using Rng = std::mt19937_64;

// Uniform on the open interval (0, 1), built from the top 53 bits so that
// log() of the result is always finite.
inline auto uniform_open01(Rng& rng) -> double {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline auto uniform_real(Rng& rng, double lo, double hi) -> double {
  return lo + (hi - lo) * uniform_open01(rng);
}

// Uniform integer in [0, n).
inline auto uniform_index(Rng& rng, std::size_t n) -> std::size_t {
  if (n == 0) {
    throw std::invalid_argument{"uniform_index: empty range"};
  }
  return std::uniform_int_distribution<std::size_t>{0, n - 1}(rng);
}

inline auto exponential(Rng& rng, double rate) -> double {
  return -std::log(uniform_open01(rng)) / rate;
}

inline auto gamma_variate(Rng& rng, double shape) -> double {
  return std::gamma_distribution<double>{shape, 1.0}(rng);
}

inline auto beta_variate(Rng& rng, double a, double b) -> double {
  auto x = gamma_variate(rng, a);
  auto y = gamma_variate(rng, b);
  return x / (x + y);
}

template <std::size_t N>
auto dirichlet_variate(Rng& rng, const std::array<double, N>& alpha) -> std::array<double, N> {
  auto out = std::array<double, N>{};
  auto total = 0.0;
  for (auto i = std::size_t{0}; i < N; ++i) {
    out[i] = gamma_variate(rng, alpha[i]);
    total += out[i];
  }
  for (auto& x : out) {
    x /= total;
  }
  return out;
}

// Draws an index with probability proportional to weights[i].
inline auto categorical(Rng& rng, std::span<const double> weights) -> std::size_t {
  auto total = std::accumulate(weights.begin(), weights.end(), 0.0);
  auto u = uniform_open01(rng) * total;
  for (auto i = std::size_t{0}; i < weights.size(); ++i) {
    if (u < weights[i]) {
      return i;
    }
    u -= weights[i];
  }
  // Rounding can leave u marginally above the last bucket.
  for (auto i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) {
      return i;
    }
  }
  throw std::invalid_argument{"categorical: all weights are zero"};
}

}  // namespace bayescat
