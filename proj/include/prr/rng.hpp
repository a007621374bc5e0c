#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace prr {

// All randomness derives from one 64-bit root seed. Substreams are keyed by
// mixing the parent seed with an index through the splitmix64 finalizer:
//
//   mix(seed, i) = splitmix64(seed ^ splitmix64(i + 0x9E3779B97F4A7C15))
//
// The engine is std::mt19937_64 (its output sequence is fixed by the
// standard) and every distribution below is written out by hand so that
// streams are bit-identical across standard library implementations.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ splitmix64(index + 0x9E3779B97F4A7C15ull));
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform on {0, ..., n-1} by rejection; n >= 1.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal by Box-Muller (one draw per call, the sine branch is
  // discarded to keep the stream position a pure function of the call count).
  double normal() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform in the closed Euclidean ball B(center, radius).
  template <typename Scalar>
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1>
  in_ball(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> &center, Scalar radius) {
    const Eigen::Index n = center.size();
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dir(n);
    Scalar norm;
    do {
      for (Eigen::Index i = 0; i < n; ++i) dir(i) = static_cast<Scalar>(normal());
      norm = dir.norm();
    } while (norm == Scalar(0));
    const Scalar r = radius * static_cast<Scalar>(std::pow(uniform(), 1.0 / static_cast<double>(n)));
    return center + (r / norm) * dir;
  }

  // Fisher-Yates shuffle of 0..n-1.
  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(index(static_cast<std::uint64_t>(i) + 1));
      std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
  }

private:
  std::mt19937_64 engine_;
};

} // namespace prr
