#pragma once

#include <cstdint>
#include <utility>

#include "invot/types.hpp"

namespace invot {

struct SyntheticSpec {
  int n = 100;
  double p = 2.0;
  double epsilon = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// c_ij = |(i - j) / n|^p with a zero diagonal (set explicitly, so p < 0 works).
CostMatrix synth_cost(const SyntheticSpec& spec);

/// Two strictly positive probability vectors: iid uniform(0.1, 1.1) entries,
/// normalized. Pure function of the seed.
std::pair<ProbabilityVector, ProbabilityVector> synth_marginals(int m, int n, std::uint64_t seed);

/// Paired samples. Column k of `x` (dX rows) is paired with column k of `y`.
/// Optional unpaired marginal samples may be attached; when absent the paired
/// coordinates stand in for them.
struct SampleSet {
  Matrix x;
  Matrix y;
  std::optional<Matrix> xOnly;
  std::optional<Matrix> yOnly;

  Index size() const noexcept { return x.cols(); }
  Index dimX() const noexcept { return x.rows(); }
  Index dimY() const noexcept { return y.rows(); }
  const Matrix& marginalX() const { return xOnly ? *xOnly : x; }
  const Matrix& marginalY() const { return yOnly ? *yOnly : y; }

  /// Throws InvalidArgument when empty, mis-shaped or non-finite.
  void validate() const;
};

/// N iid draws of a cell (i, j) with probability plan_ij, mapped to
/// (supportX.col(i), supportY.col(j)).
SampleSet sample_pairs(const TransportPlan& plan, const Matrix& supportX, const Matrix& supportY,
                       Index N, std::uint64_t seed);
SampleSet sample_pairs(const Matrix& plan, const Matrix& supportX, const Matrix& supportY, Index N,
                       std::uint64_t seed);

/// Cell midpoints of [lo, hi] split into n equal cells, as a 1 x n matrix.
Matrix uniform_grid(int n, double lo = 0.0, double hi = 1.0);

}  // namespace invot
