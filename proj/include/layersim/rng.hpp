// SPDX-License-Identifier: Apache-2.0

#ifndef LAYERSIM_RNG_HPP_
#define LAYERSIM_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace layersim {

// Deterministic 64-bit PRNG used everywhere the simulator needs randomness.
//
// State update is xorshift64* (shift triple 12/25/27, output multiplier
// 0x2545F4914F6CDD1D). The seed goes through one round of splitmix64 first
// so adjacent seeds (0, 1, 2, ...) yield unrelated streams. Uniform draws
// use the top 53 bits, so identical seeds reproduce identical traces
// bit-for-bit across platforms and compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) state_ = 0x9E3779B97F4A7C15ull;  // xorshift state must stay nonzero
  }

  uint64_t next_u64() {
    uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545F4914F6CDD1Dull;
  }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool chance(double p) { return uniform() < p; }

  // Standard normal, basic Box-Muller; caches the second draw of each pair.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  // Fisher-Yates helper: uniform integer in [0, n).
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // Derives an independent stream seed, e.g. per worker or per trace pair.
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    return splitmix64(seed ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
  }

 private:
  static uint64_t splitmix64(uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace layersim

#endif  // LAYERSIM_RNG_HPP_
