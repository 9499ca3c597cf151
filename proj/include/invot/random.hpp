#pragma once

#include <cstdint>
#include <random>

#include "invot/types.hpp"

namespace invot {

/// Seedable generator shared by every sampler. The engine is std::mt19937_64;
/// uniforms and normals are derived here rather than through <random>
/// distributions so that draws are identical across standard libraries.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  Index index(Index n) { return static_cast<Index>(uniform() * static_cast<double>(n)); }

  /// Standard normal via the Marsaglia polar method.
  double normal();

 private:
  std::mt19937_64 engine_;
  bool hasSpare_ = false;
  double spare_ = 0.0;
};

}  // namespace invot
