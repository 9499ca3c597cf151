#include "invot/synth.hpp"

#include <algorithm>
#include <cmath>

#include "invot/random.hpp"

namespace invot {

void SyntheticSpec::validate() const {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "synthetic size n must be >= 2");
  if (p == 0.0 || !std::isfinite(p)) throw Error(ErrorCode::InvalidArgument, "exponent p must be nonzero");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
}

CostMatrix synth_cost(const SyntheticSpec& spec) {
  spec.validate();
  const int n = spec.n;
  Matrix c(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      c(i, j) = i == j ? 0.0 : std::pow(std::abs(static_cast<double>(i - j) / n), spec.p);
  return CostMatrix(std::move(c));
}

std::pair<ProbabilityVector, ProbabilityVector> synth_marginals(int m, int n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw Error(ErrorCode::InvalidArgument, "marginal sizes must be >= 1");
  Rng rng(seed);
  Vector mu(m), nu(n);
  for (int i = 0; i < m; ++i) mu[i] = rng.uniform(0.1, 1.1);
  for (int j = 0; j < n; ++j) nu[j] = rng.uniform(0.1, 1.1);
  return {ProbabilityVector::normalized(std::move(mu)), ProbabilityVector::normalized(std::move(nu))};
}

void SampleSet::validate() const {
  if (x.cols() == 0) throw Error(ErrorCode::InvalidArgument, "sample set is empty");
  if (x.cols() != y.cols()) throw Error(ErrorCode::DimMismatch, "x and y sample counts differ");
  if (!x.allFinite() || !y.allFinite())
    throw Error(ErrorCode::InvalidArgument, "samples must be finite");
  if (xOnly && (xOnly->rows() != x.rows() || xOnly->cols() == 0 || !xOnly->allFinite()))
    throw Error(ErrorCode::InvalidArgument, "x marginal samples are malformed");
  if (yOnly && (yOnly->rows() != y.rows() || yOnly->cols() == 0 || !yOnly->allFinite()))
    throw Error(ErrorCode::InvalidArgument, "y marginal samples are malformed");
}

SampleSet sample_pairs(const Matrix& plan, const Matrix& supportX, const Matrix& supportY, Index N,
                       std::uint64_t seed) {
  if (supportX.cols() != plan.rows() || supportY.cols() != plan.cols())
    throw Error(ErrorCode::DimMismatch, "supports do not match the plan shape");
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  if (plan.minCoeff() < 0.0) throw Error(ErrorCode::NegativeEntry, "plan has a negative entry");

  // Cumulative mass over cells in column-major order.
  const Index cells = plan.size();
  std::vector<double> cdf(static_cast<std::size_t>(cells));
  double acc = 0.0;
  for (Index k = 0; k < cells; ++k) {
    acc += plan.data()[k];
    cdf[static_cast<std::size_t>(k)] = acc;
  }
  if (!(acc > 0.0)) throw Error(ErrorCode::MassMismatch, "plan has no mass");

  Rng rng(seed);
  SampleSet out;
  out.x.resize(supportX.rows(), N);
  out.y.resize(supportY.rows(), N);
  for (Index s = 0; s < N; ++s) {
    const double r = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
    Index k = std::min<Index>(static_cast<Index>(it - cdf.begin()), cells - 1);
    // Skip empty cells that share the same cumulative value.
    while (plan.data()[k] == 0.0 && k + 1 < cells) ++k;
    const Index i = k % plan.rows();
    const Index j = k / plan.rows();
    out.x.col(s) = supportX.col(i);
    out.y.col(s) = supportY.col(j);
  }
  return out;
}

SampleSet sample_pairs(const TransportPlan& plan, const Matrix& supportX, const Matrix& supportY,
                       Index N, std::uint64_t seed) {
  return sample_pairs(plan.matrix(), supportX, supportY, N, seed);
}

Matrix uniform_grid(int n, double lo, double hi) {
  if (n < 1 || !(hi > lo)) throw Error(ErrorCode::InvalidArgument, "bad grid specification");
  Matrix g(1, n);
  const double h = (hi - lo) / n;
  for (int i = 0; i < n; ++i) g(0, i) = lo + (i + 0.5) * h;
  return g;
}

}  // namespace invot
