#include "invot/types.hpp"

#include <cmath>
#include <sstream>

namespace invot {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::MassMismatch: return "MassMismatch";
    case ErrorCode::MarginalMismatch: return "MarginalMismatch";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::NumericalOverflow: return "NumericalOverflow";
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::BadBounds: return "BadBounds";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ZeroObservation: return "ZeroObservation";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::HighVariance: return "HighVariance";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeHeaderMismatch: return "ShapeHeaderMismatch";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// ProbabilityVector

ProbabilityVector::ProbabilityVector(Vector values, double sumTol) : values_(std::move(values)) {
  if (values_.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty probability vector");
  for (Index i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      std::ostringstream msg;
      msg << "probability entry " << i << " is " << values_[i];
      throw Error(ErrorCode::NegativeEntry, msg.str(), i);
    }
  }
  const double sum = values_.sum();
  if (std::abs(sum - 1.0) > sumTol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probability vector sums to " << sum;
    throw Error(ErrorCode::MassMismatch, msg.str());
  }
}

ProbabilityVector ProbabilityVector::normalized(Vector values) {
  const double sum = values.sum();
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw Error(ErrorCode::MassMismatch, "cannot normalize a vector with nonpositive mass");
  values /= sum;
  return ProbabilityVector(std::move(values));
}

void ProbabilityVector::requireStrictlyPositive(const char* name) const {
  for (Index i = 0; i < values_.size(); ++i) {
    if (!(values_[i] > 0.0)) {
      throw Error(ErrorCode::ZeroObservation,
                  std::string(name) + " has zero mass at index " + std::to_string(i) +
                      "; prune empty classes before an inverse solve",
                  i);
    }
  }
}

// ---------------------------------------------------------------------------
// TransportPlan

TransportPlan::TransportPlan(Matrix matrix, ProbabilityVector mu, ProbabilityVector nu,
                             double feasTol)
    : matrix_(std::move(matrix)), mu_(std::move(mu)), nu_(std::move(nu)), feasTol_(feasTol) {
  rowResidual_ = (matrix_.rowwise().sum() - mu_.values()).lpNorm<1>();
  colResidual_ = (matrix_.colwise().sum().transpose() - nu_.values()).lpNorm<1>();
}

TransportPlan TransportPlan::unchecked(Matrix matrix, ProbabilityVector mu, ProbabilityVector nu) {
  if (matrix.rows() != mu.dim() || matrix.cols() != nu.dim())
    throw Error(ErrorCode::DimMismatch, "plan shape does not match marginals");
  TransportPlan plan(std::move(matrix), std::move(mu), std::move(nu), 0.0);
  plan.feasTol_ = plan.residual();
  return plan;
}

TransportPlan validate_plan(Matrix matrix, const ProbabilityVector& mu, const ProbabilityVector& nu,
                            double feasTol) {
  if (!(feasTol > 0.0)) throw Error(ErrorCode::InvalidArgument, "feasTol must be positive");
  if (matrix.rows() != mu.dim() || matrix.cols() != nu.dim()) {
    std::ostringstream msg;
    msg << "plan is " << matrix.rows() << "x" << matrix.cols() << " but marginals are " << mu.dim()
        << " and " << nu.dim();
    throw Error(ErrorCode::DimMismatch, msg.str());
  }
  // Worst offending entry is reported.
  Index wi = -1, wj = -1;
  double worst = 0.0;
  for (Index j = 0; j < matrix.cols(); ++j) {
    for (Index i = 0; i < matrix.rows(); ++i) {
      const double x = matrix(i, j);
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::NegativeEntry, "non-finite plan entry", i, j);
      }
      if (x < worst) {
        worst = x;
        wi = i;
        wj = j;
      }
    }
  }
  if (wi >= 0) {
    std::ostringstream msg;
    msg << "plan entry (" << wi << "," << wj << ") = " << worst << " violates pi >= 0";
    throw Error(ErrorCode::NegativeEntry, msg.str(), wi, wj);
  }
  const double mass = matrix.sum();
  if (std::abs(mass - 1.0) > 1e-10) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "total mass " << mass << " violates sum(pi) = 1";
    throw Error(ErrorCode::MassMismatch, msg.str());
  }
  TransportPlan plan(std::move(matrix), mu, nu, feasTol);
  if (plan.rowResidual() > feasTol) {
    const Vector diff = plan.matrix().rowwise().sum() - mu.values();
    Index at = 0;
    diff.cwiseAbs().maxCoeff(&at);
    std::ostringstream msg;
    msg << "row marginal residual " << plan.rowResidual() << " > " << feasTol << ", worst at row "
        << at << " (pi 1 = mu violated)";
    throw Error(ErrorCode::MarginalMismatch, msg.str(), at, -1);
  }
  if (plan.colResidual() > feasTol) {
    const Vector diff = plan.matrix().colwise().sum().transpose() - nu.values();
    Index at = 0;
    diff.cwiseAbs().maxCoeff(&at);
    std::ostringstream msg;
    msg << "column marginal residual " << plan.colResidual() << " > " << feasTol
        << ", worst at column " << at << " (pi^T 1 = nu violated)";
    throw Error(ErrorCode::MarginalMismatch, msg.str(), -1, at);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// CostMatrix

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  if (!values_.allFinite()) throw Error(ErrorCode::InvalidArgument, "cost matrix has non-finite entries");
}

bool CostMatrix::isSymmetricZeroDiag(double tol) const {
  if (values_.rows() != values_.cols()) return false;
  for (Index i = 0; i < values_.rows(); ++i) {
    if (std::abs(values_(i, i)) > tol) return false;
    for (Index j = i + 1; j < values_.cols(); ++j)
      if (std::abs(values_(i, j) - values_(j, i)) > tol) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Constraints

namespace {

Index fullRowRankOrThrow(const Matrix& M, const char* name) {
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  const double largest = s.size() > 0 ? s[0] : 0.0;
  Index rank = 0;
  for (Index k = 0; k < s.size(); ++k)
    if (s[k] > 1e-10 * largest) ++rank;
  if (largest == 0.0 || rank < M.rows()) {
    std::ostringstream msg;
    msg << name << " (" << M.rows() << "x" << M.cols() << ") has rank " << rank
        << "; full row rank is required";
    throw Error(ErrorCode::RankDeficient, msg.str());
  }
  return rank;
}

Matrix pseudoInverse(const Matrix& M) {
  // Full row rank: M^+ = M^T (M M^T)^{-1}.
  return M.transpose() * (M * M.transpose()).ldlt().solve(Matrix::Identity(M.rows(), M.rows()));
}

}  // namespace

LinearAffinity::LinearAffinity(Matrix G, Matrix D, int sign)
    : G_(std::move(G)), D_(std::move(D)), sign_(sign) {
  if (sign_ != 1 && sign_ != -1) throw Error(ErrorCode::InvalidArgument, "affinity sign must be +1 or -1");
  if (!G_.allFinite() || !D_.allFinite())
    throw Error(ErrorCode::InvalidArgument, "affinity feature matrices must be finite");
  fullRowRankOrThrow(G_, "G");
  fullRowRankOrThrow(D_, "D");
  Gpinv_ = pseudoInverse(G_);
  Dpinv_ = pseudoInverse(D_);
}

ConstraintSpec::ConstraintSpec(Box c) : variant_(c) {
  if (!(c.lower >= 0.0) || !(c.upper >= c.lower) || !std::isfinite(c.upper)) {
    std::ostringstream msg;
    msg << "box bounds [" << c.lower << ", " << c.upper << "] must satisfy 0 <= lower <= upper < inf";
    throw Error(ErrorCode::BadBounds, msg.str());
  }
}

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;
}  // namespace

std::string ConstraintSpec::describe() const {
  return std::visit(
      overloaded{
          [](const NoConstraint&) -> std::string { return "none"; },
          [](const SymmetricZeroDiag&) -> std::string { return "sym0"; },
          [](const Box& b) -> std::string {
            std::ostringstream s;
            s.precision(17);
            s << "box:" << b.lower << ":" << b.upper;
            return s.str();
          },
          [](const LinearAffinity& a) -> std::string {
            std::ostringstream s;
            s << "affinity:" << a.G().rows() << "x" << a.G().cols() << ":" << a.D().rows() << "x"
              << a.D().cols() << ":" << (a.sign() > 0 ? "+" : "-");
            return s.str();
          },
          [](const Composite& c) -> std::string {
            std::string out;
            for (const auto& part : c.parts) {
              if (!out.empty()) out += "+";
              out += part.describe();
            }
            return out.empty() ? "none" : out;
          },
      },
      variant_);
}

bool ConstraintSpec::hasAffinity() const {
  if (std::holds_alternative<LinearAffinity>(variant_)) return true;
  if (const auto* c = std::get_if<Composite>(&variant_)) {
    for (const auto& part : c->parts)
      if (part.hasAffinity()) return true;
  }
  return false;
}

void SolverConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (maxIter <= 0) throw Error(ErrorCode::InvalidArgument, "maxIter must be positive");
  if (!(tol > 0.0) || !(tol < 1.0)) throw Error(ErrorCode::InvalidArgument, "tol must lie in (0, 1)");
  if (logEvery <= 0) throw Error(ErrorCode::InvalidArgument, "logEvery must be positive");
  if (!(targetRelErr >= 0.0)) throw Error(ErrorCode::InvalidArgument, "targetRelErr must be >= 0");
}

// ---------------------------------------------------------------------------
// Measures

double entropy(const Matrix& plan) {
  double h = 0.0;
  for (Index j = 0; j < plan.cols(); ++j)
    for (Index i = 0; i < plan.rows(); ++i) {
      const double p = plan(i, j);
      if (p > 0.0) h -= p * (std::log(p) - 1.0);
    }
  return h;
}

double entropy(const TransportPlan& plan) { return entropy(plan.matrix()); }

double kl_divergence(const Matrix& obs, const Matrix& model) {
  if (obs.rows() != model.rows() || obs.cols() != model.cols())
    throw Error(ErrorCode::DimMismatch, "KL arguments differ in shape");
  double kl = 0.0;
  for (Index j = 0; j < obs.cols(); ++j)
    for (Index i = 0; i < obs.rows(); ++i) {
      const double p = obs(i, j);
      if (p <= 0.0) continue;
      const double q = model(i, j);
      if (!(q > 0.0)) {
        throw Error(ErrorCode::SupportViolation,
                    "model vanishes where the observation has mass", i, j);
      }
      kl += p * std::log(p / q);
    }
  return kl;
}

double kl_divergence(const TransportPlan& obs, const TransportPlan& model) {
  return kl_divergence(obs.matrix(), model.matrix());
}

double relative_error(const Matrix& c, const Matrix& cStar) {
  if (c.rows() != cStar.rows() || c.cols() != cStar.cols())
    throw Error(ErrorCode::DimMismatch, "relative_error arguments differ in shape");
  const double ref = cStar.norm();
  if (ref == 0.0) throw Error(ErrorCode::ZeroReference, "reference cost has zero Frobenius norm");
  return (c - cStar).norm() / ref;
}

double relative_error(const CostMatrix& c, const CostMatrix& cStar) {
  return relative_error(c.matrix(), cStar.matrix());
}

}  // namespace invot
