#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace geotopic {

/// Seeded random source. The engine is std::mt19937_64, whose output
/// sequence is fixed by the standard; the conversions to uniform, normal
/// and gamma variates are implemented here so sampled values do not
/// depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);

  /// Standard normal variate (Box-Muller, no cached pair).
  double normal();

  /// Gamma(shape, 1) variate (Marsaglia-Tsang).
  double gamma(double shape);

  /// Symmetric Dirichlet draw of the given dimension.
  std::vector<double> dirichlet(std::size_t dim, double concentration);

  /// Draws an index with probability proportional to weights[i].
  /// The weights must be non-negative with a positive sum.
  std::size_t discrete(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

}  // namespace geotopic
