#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace covdiff {

// SplitMix64 stream: output i is mix(seed + i*gamma), so the sequence is a
// pure function of (seed, counter) and identical on every platform.  The
// standard <random> distributions are implementation-defined, which would
// break bitwise reproducibility, so sampling helpers are hand-rolled here.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  // Independent per-trajectory stream derived from (seed, index).
  static RandomStream substream(std::uint64_t seed, std::uint64_t index) {
    return RandomStream(mix(seed + 0xA0761D6478BD642Full * (index + 1)));
  }

  std::uint64_t next_u64() { return mix(state_ += 0x9E3779B97F4A7C15ull); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int lo, int hi) {  // inclusive range
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  std::complex<double> complex_normal() { return {normal(), normal()}; }

  std::complex<double> unit_phase() {
    const double angle = 2.0 * std::numbers::pi * uniform();
    return {std::cos(angle), std::sin(angle)};
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace covdiff
