#ifndef CBOPT_RNG_HPP
#define CBOPT_RNG_HPP

#include <cmath>
#include <cstdint>

namespace cbopt {

namespace detail {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based random stream. A stream is addressed by
/// (base seed, trial index, sub-stream tag); the n-th draw of a stream is a
/// pure function of that address and n, so replays are identical regardless
/// of worker count or execution order.
class RngStream {
 public:
  RngStream(std::uint64_t base_seed, std::uint64_t trial, std::uint64_t tag)
      : key_(detail::mix64(detail::mix64(base_seed) ^
                           detail::mix64(trial * 0x9E3779B97F4A7C15ULL ^
                                         tag * 0xC2B2AE3D27D4EB4FULL))) {}

  std::uint64_t next_raw() { return detail::mix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

  /// Uniform on [0, 1).
  double uniform() { return double(next_raw() >> 11) * 0x1.0p-53; }

  /// Uniform on [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller (two raws per draw, no caching).
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Exponential with rate lambda.
  double exponential(double lambda) {
    double u = 1.0 - uniform();  // (0, 1]
    return -std::log(u) / lambda;
  }

  std::uint64_t count() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace cbopt

#endif  // CBOPT_RNG_HPP
