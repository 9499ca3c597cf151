#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "invot/error.hpp"

namespace invot {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A point of the probability simplex: nonnegative entries summing to one.
class ProbabilityVector {
 public:
  /// Validates `values`; throws NegativeEntry / MassMismatch.
  explicit ProbabilityVector(Vector values, double sumTol = 1e-12);

  /// Divides by the total mass first. The input must be nonnegative with
  /// positive total.
  static ProbabilityVector normalized(Vector values);

  const Vector& values() const noexcept { return values_; }
  Index dim() const noexcept { return values_.size(); }
  double operator[](Index i) const { return values_[i]; }
  bool strictlyPositive() const { return values_.minCoeff() > 0.0; }

  /// Throws ZeroObservation if any entry is zero. Inverse solves need
  /// strictly positive marginals.
  void requireStrictlyPositive(const char* name) const;

 private:
  Vector values_;
};

/// A joint probability matrix together with the marginals it was checked
/// against and the L1 residuals of that check.
class TransportPlan {
 public:
  const Matrix& matrix() const noexcept { return matrix_; }
  const ProbabilityVector& rowMarginal() const noexcept { return mu_; }
  const ProbabilityVector& colMarginal() const noexcept { return nu_; }
  Index rows() const noexcept { return matrix_.rows(); }
  Index cols() const noexcept { return matrix_.cols(); }
  double rowResidual() const noexcept { return rowResidual_; }
  double colResidual() const noexcept { return colResidual_; }
  double residual() const noexcept { return rowResidual_ + colResidual_; }
  double feasTol() const noexcept { return feasTol_; }

  /// Builds a plan without enforcing the marginal tolerance; residuals are
  /// still computed. Used for solver iterates that may not be feasible yet.
  static TransportPlan unchecked(Matrix matrix, ProbabilityVector mu, ProbabilityVector nu);

 private:
  TransportPlan(Matrix matrix, ProbabilityVector mu, ProbabilityVector nu, double feasTol);
  friend TransportPlan validate_plan(Matrix, const ProbabilityVector&, const ProbabilityVector&,
                                     double);

  Matrix matrix_;
  ProbabilityVector mu_;
  ProbabilityVector nu_;
  double rowResidual_ = 0.0;
  double colResidual_ = 0.0;
  double feasTol_ = 0.0;
};

/// Ground cost matrix. Only c / epsilon is identifiable from a regularized
/// plan, so the unit of a recovered cost is that of the epsilon it was solved
/// with.
class CostMatrix {
 public:
  CostMatrix() = default;
  explicit CostMatrix(Matrix values);

  static CostMatrix zeros(Index rows, Index cols) { return CostMatrix(Matrix::Zero(rows, cols)); }

  const Matrix& matrix() const noexcept { return values_; }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  double operator()(Index i, Index j) const { return values_(i, j); }

  bool isSymmetricZeroDiag(double tol = 0.0) const;

 private:
  Matrix values_;
};

struct DualPotentials {
  Vector alpha;
  Vector beta;
  double epsilon = 1.0;

  Vector u() const { return (alpha / epsilon).array().exp().matrix(); }
  Vector v() const { return (beta / epsilon).array().exp().matrix(); }
};

struct NoConstraint {};

/// c = c^T with c_ii = 0.
struct SymmetricZeroDiag {};

/// Entrywise lower <= c_ij <= upper.
struct Box {
  double lower = 0.0;
  double upper = 1.0;
};

/// c = sign * G^T A D for a free affinity matrix A (p x q).
class LinearAffinity {
 public:
  /// Throws RankDeficient unless G (p x m) and D (q x n) have full row rank.
  LinearAffinity(Matrix G, Matrix D, int sign = 1);

  const Matrix& G() const noexcept { return G_; }
  const Matrix& D() const noexcept { return D_; }
  int sign() const noexcept { return sign_; }
  /// Moore-Penrose pseudoinverses, m x p and n x q.
  const Matrix& Gpinv() const noexcept { return Gpinv_; }
  const Matrix& Dpinv() const noexcept { return Dpinv_; }

 private:
  Matrix G_;
  Matrix D_;
  int sign_;
  Matrix Gpinv_;
  Matrix Dpinv_;
};

class ConstraintSpec;

/// Constraints applied in declared order.
struct Composite {
  std::vector<ConstraintSpec> parts;
};

class ConstraintSpec {
 public:
  using Variant = std::variant<NoConstraint, SymmetricZeroDiag, Box, LinearAffinity, Composite>;

  ConstraintSpec() : variant_(NoConstraint{}) {}
  ConstraintSpec(NoConstraint c) : variant_(c) {}
  ConstraintSpec(SymmetricZeroDiag c) : variant_(c) {}
  /// Throws BadBounds unless 0 <= lower <= upper < inf.
  ConstraintSpec(Box c);
  ConstraintSpec(LinearAffinity c) : variant_(std::move(c)) {}
  ConstraintSpec(Composite c) : variant_(std::move(c)) {}

  const Variant& variant() const noexcept { return variant_; }

  /// Human-readable form, e.g. "sym0+box:0:2".
  std::string describe() const;
  /// True when the constraint (or one of its parts) is a linear affinity.
  bool hasAffinity() const;

 private:
  Variant variant_;
};

enum class ScalingMode { Auto, Direct, Log };

struct SolverConfig {
  double epsilon = 1.0;
  int maxIter = 1000;
  double tol = 1e-9;
  std::uint64_t seed = 0;
  int logEvery = 1;
  ScalingMode mode = ScalingMode::Auto;
  /// When false, hitting maxIter returns the last iterate with
  /// report.converged == false instead of throwing NotConverged.
  bool throwOnNotConverged = true;
  /// Inverse solvers only: when positive and a ground truth is attached, stop
  /// as converged once the relative error reaches this value.
  double targetRelErr = 0.0;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct SolveReport {
  int iterations = 0;
  std::vector<int> loggedIterations;
  std::vector<double> objectiveTrace;
  std::optional<std::vector<double>> relErrTrace;
  std::vector<double> feasibilityTrace;
  double feasibilityResidual = 0.0;
  bool converged = false;
  bool logDomain = false;
  bool smoothedZeros = false;
  double wallClockSeconds = 0.0;
};

/// Returns a TransportPlan iff entries are nonnegative, total mass is 1 within
/// 1e-10 and both L1 marginal residuals are <= feasTol.
TransportPlan validate_plan(Matrix matrix, const ProbabilityVector& mu, const ProbabilityVector& nu,
                            double feasTol);

/// H(pi) = -sum pi_ij (log pi_ij - 1), with 0 (log 0 - 1) := 0.
double entropy(const TransportPlan& plan);
double entropy(const Matrix& plan);

/// sum obs_ij log(obs_ij / model_ij), with 0 log(0 / x) := 0.
double kl_divergence(const TransportPlan& obs, const TransportPlan& model);
double kl_divergence(const Matrix& obs, const Matrix& model);

/// ||c - cStar||_F / ||cStar||_F.
double relative_error(const CostMatrix& c, const CostMatrix& cStar);
double relative_error(const Matrix& c, const Matrix& cStar);

}  // namespace invot
