// Deterministic random generation. Every draw is derived from raw
// mt19937_64 output with fixed arithmetic, so streams are reproducible
// across standard library implementations (std::uniform_* distributions
// are not pinned down by the standard).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace gwm {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1): 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  int range(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double normal() {
    // Box-Muller; second value discarded to keep the stream position simple.
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Fan-based uniform init for a [rows, cols] weight.
  std::vector<double> glorot(int rows, int cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<double> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (double& x : out) x = uniform(-limit, limit);
    return out;
  }

  std::vector<double> uniform_vec(std::size_t n, double lo, double hi) {
    std::vector<double> out(n);
    for (double& x : out) x = uniform(lo, hi);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gwm
