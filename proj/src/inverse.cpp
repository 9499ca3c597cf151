#include "invot/inverse.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "invot/sinkhorn.hpp"

namespace invot {

namespace {

using Clock = std::chrono::steady_clock;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool usable(const Vector& s) {
  for (Index i = 0; i < s.size(); ++i) {
    const double x = s[i];
    if (!std::isfinite(x) || !(x > 0.0) || std::abs(std::log(x)) > kLogDomainThreshold) return false;
  }
  return true;
}

// c-dependent part of E at fixed potentials (f, g in units of eps):
// <c, pihat> + eps sum exp(f_i + g_j - c_ij / eps). Infinite past kMaxExponent.
double costBlockObjective(const Matrix& c, const Vector& f, const Vector& g, const Matrix& pihat, double eps,
                          Matrix* W = nullptr) {
  const Matrix expo = ((-c / eps).colwise() + f).rowwise() + g.transpose();
  if (!expo.allFinite() || expo.maxCoeff() > kMaxExponent) return std::numeric_limits<double>::infinity();
  Matrix w = expo.array().exp();
  const double value = c.cwiseProduct(pihat).sum() + eps * w.sum();
  if (W) *W = std::move(w);
  return value;
}

// Damped Newton on A for the c-block of E restricted to {sign G^T A D}.
Matrix minimizeAffinityBlock(const LinearAffinity& aff, const Vector& f, const Vector& g, const Matrix& pihat,
                             double eps, Matrix A) {
  const Index p = aff.G().rows(), q = aff.D().rows();
  const Index m = pihat.rows(), n = pihat.cols();
  const double s = aff.sign();
  Matrix J(m * n, p * q);
  for (Index k = 0; k < p; ++k)
    for (Index l = 0; l < q; ++l) {
      const Matrix basis = s * aff.G().row(k).transpose() * aff.D().row(l);
      J.col(k * q + l) = Eigen::Map<const Vector>(basis.data(), m * n);
    }
  auto costOf = [&](const Matrix& a) -> Matrix { return s * aff.G().transpose() * a * aff.D(); };
  Matrix W;
  double value = costBlockObjective(costOf(A), f, g, pihat, eps, &W);
  for (int iter = 0; iter < 100 && std::isfinite(value); ++iter) {
    const Matrix residual = pihat - W;
    const Vector grad = J.transpose() * Eigen::Map<const Vector>(residual.data(), m * n);
    const Vector w = Eigen::Map<const Vector>(W.data(), m * n) / eps;
    const Matrix H = J.transpose() * w.asDiagonal() * J;
    const Vector step = -H.ldlt().solve(grad);
    const double decrement = -grad.dot(step);
    if (!(decrement > 1e-24 * std::max(1.0, std::abs(value)))) break;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      Matrix trial = A + t * Eigen::Map<const Matrix>(step.data(), q, p).transpose();
      Matrix Wt;
      const double vt = costBlockObjective(costOf(trial), f, g, pihat, eps, &Wt);
      if (vt <= value - 0.25 * t * decrement) {
        A = std::move(trial);
        W = std::move(Wt);
        value = vt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return A;
}

}  // namespace

// ---------------------------------------------------------------------------
// InverseProblem

InverseProblem::InverseProblem(const TransportPlan& observed, ConstraintSpec constraint,
                               SolverConfig config, double proxStep, ZeroPolicy zeros)
    : constraint_(std::move(constraint)), config_(config), proxStep_(proxStep) {
  init(observed.matrix(), zeros);
}

InverseProblem::InverseProblem(const Matrix& observed, ConstraintSpec constraint,
                               SolverConfig config, double proxStep, ZeroPolicy zeros)
    : constraint_(std::move(constraint)), config_(config), proxStep_(proxStep) {
  init(observed, zeros);
}

static void checkConstraintShape(const ConstraintSpec& spec, Index m, Index n) {
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SymmetricZeroDiag>) {
          if (m != n)
            throw Error(ErrorCode::NonSquare, "symmetric zero-diagonal constraint needs a square plan, got " +
                                                  std::to_string(m) + "x" + std::to_string(n));
        } else if constexpr (std::is_same_v<T, LinearAffinity>) {
          if (c.G().cols() != m || c.D().cols() != n)
            throw Error(ErrorCode::DimMismatch, "affinity features do not match the plan shape");
        } else if constexpr (std::is_same_v<T, Composite>) {
          for (const ConstraintSpec& part : c.parts) checkConstraintShape(part, m, n);
        }
      },
      spec.variant());
}

void InverseProblem::init(Matrix observed, ZeroPolicy zeros) {
  config_.validate();
  if (!(proxStep_ > 0.0)) throw Error(ErrorCode::InvalidArgument, "prox step must be positive");
  if (observed.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty observation");
  checkConstraintShape(constraint_, observed.rows(), observed.cols());
  for (Index j = 0; j < observed.cols(); ++j) {
    for (Index i = 0; i < observed.rows(); ++i) {
      const double x = observed(i, j);
      if (!std::isfinite(x) || x < 0.0)
        throw Error(ErrorCode::NegativeEntry, "observed plan entry is negative or non-finite", i, j);
      if (x == 0.0) {
        if (zeros == ZeroPolicy::Reject) {
          throw Error(ErrorCode::ZeroObservation,
                      "observed plan has a zero at (" + std::to_string(i) + "," +
                          std::to_string(j) +
                          "); zero cells make the cost unidentifiable (enable smoothing to override)",
                      i, j);
        }
        observed(i, j) = kZeroSmoothing;
        smoothed_ = true;
      }
    }
  }
  observed /= observed.sum();
  observed_ = std::move(observed);
  logObserved_ = observed_.array().log();
  mu_ = observed_.rowwise().sum();
  nu_ = observed_.colwise().sum().transpose();
}

void InverseProblem::setTruth(CostMatrix truth) {
  if (truth.rows() != rows() || truth.cols() != cols())
    throw Error(ErrorCode::DimMismatch, "truth shape does not match the observation");
  truth_ = std::move(truth);
}

InverseProblem set_epsilon_one(const InverseProblem& problem) {
  InverseProblem copy = problem;
  copy.config().epsilon = 1.0;
  return copy;
}

// ---------------------------------------------------------------------------
// Objective

double objective_E(const Vector& alpha, const Vector& beta, const CostMatrix& cost,
                   const InverseProblem& problem) {
  const Matrix& c = cost.matrix();
  if (alpha.size() != problem.rows() || beta.size() != problem.cols() ||
      c.rows() != problem.rows() || c.cols() != problem.cols())
    throw Error(ErrorCode::DimMismatch, "objective_E arguments do not match the problem shape");
  const double eps = problem.config().epsilon;
  double s = 0.0;
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index i = 0; i < c.rows(); ++i) {
      const double e = (alpha[i] + beta[j] - c(i, j)) / eps;
      if (e > kMaxExponent) throw Error(ErrorCode::NumericalOverflow, "exponent exceeds 700", i, j);
      s += std::exp(e);
    }
  }
  return -alpha.dot(problem.mu()) - beta.dot(problem.nu()) +
         c.cwiseProduct(problem.observed()).sum() + eps * s;
}

// ---------------------------------------------------------------------------
// Proximal operators

CostMatrix prox_symmetric_zero_diag(const CostMatrix& chat) {
  const Matrix& c = chat.matrix();
  if (c.rows() != c.cols()) {
    std::ostringstream msg;
    msg << "symmetric projection needs a square matrix, got " << c.rows() << "x" << c.cols();
    throw Error(ErrorCode::NonSquare, msg.str());
  }
  Matrix out = 0.5 * (c + c.transpose());
  out.diagonal().setZero();
  return CostMatrix(std::move(out));
}

CostMatrix prox_box(const CostMatrix& chat, double lower, double upper) {
  if (!(lower <= upper)) {
    std::ostringstream msg;
    msg << "lower bound " << lower << " exceeds upper bound " << upper;
    throw Error(ErrorCode::BadBounds, msg.str());
  }
  return CostMatrix(chat.matrix().cwiseMax(lower).cwiseMin(upper));
}

ProjectionResult prox_linear_affinity(const CostMatrix& chat, const LinearAffinity& affinity) {
  const Matrix& c = chat.matrix();
  if (c.rows() != affinity.G().cols() || c.cols() != affinity.D().cols()) {
    std::ostringstream msg;
    msg << "cost is " << c.rows() << "x" << c.cols() << " but G has " << affinity.G().cols()
        << " columns and D has " << affinity.D().cols();
    throw Error(ErrorCode::DimMismatch, msg.str());
  }
  const double s = affinity.sign();
  Matrix A = s * (affinity.Gpinv().transpose() * c * affinity.Dpinv());
  Matrix cost = s * (affinity.G().transpose() * A * affinity.D());
  return {std::move(cost), std::move(A)};
}

ProjectionResult prox_linear_affinity(const CostMatrix& chat, const Matrix& G, const Matrix& D,
                                      int sign) {
  return prox_linear_affinity(chat, LinearAffinity(G, D, sign));
}

ProjectionResult apply_prox(const ConstraintSpec& constraint, const Matrix& chat, double gamma) {
  (void)gamma;
  return std::visit(
      overloaded{
          [&](const NoConstraint&) -> ProjectionResult { return {chat, std::nullopt}; },
          [&](const SymmetricZeroDiag&) -> ProjectionResult {
            return {prox_symmetric_zero_diag(CostMatrix(chat)).matrix(), std::nullopt};
          },
          [&](const Box& b) -> ProjectionResult {
            return {chat.cwiseMax(b.lower).cwiseMin(b.upper), std::nullopt};
          },
          [&](const LinearAffinity& a) -> ProjectionResult {
            return prox_linear_affinity(CostMatrix(chat), a);
          },
          [&](const Composite& comp) -> ProjectionResult {
            ProjectionResult acc{chat, std::nullopt};
            for (const auto& part : comp.parts) {
              ProjectionResult next = apply_prox(part, acc.cost, gamma);
              acc.cost = std::move(next.cost);
              if (next.affinity) acc.affinity = std::move(next.affinity);
            }
            return acc;
          },
      },
      constraint.variant());
}

// ---------------------------------------------------------------------------
// Matrix-scaling recovery

InverseSolution learn_cost(const InverseProblem& problem, const std::optional<CostMatrix>& cInit,
                           const std::optional<DualPotentials>& warmStart) {
  const SolverConfig& config = problem.config();
  config.validate();
  const auto start = Clock::now();
  const Index m = problem.rows();
  const Index n = problem.cols();
  const double eps = config.epsilon;
  const Matrix& pihat = problem.observed();
  const Matrix& logPihat = problem.logObserved();
  const Vector& mu = problem.mu();
  const Vector& nu = problem.nu();
  const Vector logMu = mu.array().log();
  const Vector logNu = nu.array().log();

  Matrix c = cInit ? cInit->matrix() : Matrix::Zero(m, n);
  if (c.rows() != m || c.cols() != n)
    throw Error(ErrorCode::DimMismatch, "initial cost does not match the observation shape");

  // Potentials in units of epsilon.
  Vector f = Vector::Zero(m);
  Vector g = Vector::Zero(n);
  if (warmStart) {
    if (warmStart->alpha.size() != m || warmStart->beta.size() != n)
      throw Error(ErrorCode::DimMismatch, "warm-start duals do not match the observation shape");
    f = warmStart->alpha / eps;
    g = warmStart->beta / eps;
  }

  bool logMode = config.mode == ScalingMode::Log ||
                 (config.mode == ScalingMode::Auto &&
                  (c.cwiseAbs().maxCoeff() / eps > kLogDomainThreshold ||
                   f.cwiseAbs().maxCoeff() > kLogDomainThreshold ||
                   g.cwiseAbs().maxCoeff() > kLogDomainThreshold));

  SolveReport report;
  report.smoothedZeros = problem.smoothedZeros();
  if (problem.truth()) report.relErrTrace.emplace();
  std::optional<Matrix> affinity;
  double change = std::numeric_limits<double>::infinity();
  int it = 0;

  const bool useTarget = config.targetRelErr > 0.0 && problem.truth();
  bool reachedTarget = false;

  auto record = [&](double objective, double feasibility) {
    const bool logged = it % config.logEvery == 0 || it == 1;
    double relErr = 0.0;
    if (problem.truth() && (logged || useTarget)) {
      relErr = relative_error(c, problem.truth()->matrix());
      reachedTarget = useTarget && relErr <= config.targetRelErr;
    }
    if (logged || reachedTarget) {
      report.loggedIterations.push_back(it);
      report.objectiveTrace.push_back(objective);
      report.feasibilityTrace.push_back(feasibility);
      if (problem.truth()) report.relErrTrace->push_back(relErr);
    }
    report.feasibilityResidual = feasibility;
  };

  auto projectStep = [&](const Vector& fNew, const Vector& gNew) {
    // chat_ij = -eps log(pihat_ij / (u_i v_j)) = eps (f_i + g_j - log pihat_ij)
    Matrix chat = eps * (((-logPihat).colwise() + fNew).rowwise() + gNew.transpose());
    ProjectionResult proj = apply_prox(problem.constraint(), chat, problem.proxStep());
    // The projected minimizer need not decrease E when the affinity subspace is
    // oblique to the scaling directions; fall back to exact block minimization.
    if (const auto* aff = std::get_if<LinearAffinity>(&problem.constraint().variant())) {
      const double before = costBlockObjective(c, fNew, gNew, pihat, eps);
      const double after = costBlockObjective(proj.cost, fNew, gNew, pihat, eps);
      if (!(after <= before + 1e-12 * std::max(1.0, std::abs(before)))) {
        Matrix A = minimizeAffinityBlock(*aff, fNew, gNew, pihat, eps, *prox_linear_affinity(CostMatrix(c), *aff).affinity);
        proj.cost = aff->sign() * (aff->G().transpose() * A * aff->D());
        proj.affinity = std::move(A);
      }
    }
    change = (proj.cost - c).norm();
    c = std::move(proj.cost);
    if (proj.affinity) affinity = std::move(proj.affinity);
  };

  if (!logMode) {
    Matrix K = (-c / eps).array().exp();
    Vector v = g.array().exp();
    Vector Kv = K * v;
    while (it < config.maxIter) {
      const Vector u = mu.cwiseQuotient(Kv);
      const Vector vNext = nu.cwiseQuotient(K.transpose() * u);
      if (!usable(u) || !usable(vNext)) {
        if (config.mode == ScalingMode::Direct)
          throw Error(ErrorCode::NumericalOverflow,
                      "direct scalings left the representable range; use log-domain mode");
        logMode = true;
        break;
      }
      v = vNext;
      f = u.array().log();
      g = v.array().log();
      projectStep(f, g);
      ++it;
      K = (-c / eps).array().exp();
      Kv = K * v;
      const Vector rowMass = u.cwiseProduct(Kv);
      const Vector colMass = v.cwiseProduct(K.transpose() * u);
      const double objective = eps * (-f.dot(mu) - g.dot(nu)) + c.cwiseProduct(pihat).sum() +
                               eps * rowMass.sum();
      record(objective, (rowMass - mu).lpNorm<1>() + (colMass - nu).lpNorm<1>());
      if (change <= config.tol || reachedTarget) break;
    }
  }

  if (logMode) {
    report.logDomain = true;
    Matrix scaled = -c / eps;
    Vector rowLse(m), colLse(n);
    detail::row_log_sum_exp(scaled, g, rowLse);
    while (it < config.maxIter) {
      f = logMu - rowLse;
      detail::col_log_sum_exp(scaled, f, colLse);
      g = logNu - colLse;
      projectStep(f, g);
      ++it;
      scaled = -c / eps;
      detail::row_log_sum_exp(scaled, g, rowLse);
      detail::col_log_sum_exp(scaled, f, colLse);
      const Vector rowMass = (f + rowLse).array().exp();
      const Vector colMass = (g + colLse).array().exp();
      const double objective = eps * (-f.dot(mu) - g.dot(nu)) + c.cwiseProduct(pihat).sum() +
                               eps * rowMass.sum();
      record(objective, (rowMass - mu).lpNorm<1>() + (colMass - nu).lpNorm<1>());
      if (change <= config.tol || reachedTarget) break;
    }
  }

  report.iterations = it;
  report.converged = change <= config.tol || reachedTarget;
  report.wallClockSeconds = std::chrono::duration<double>(Clock::now() - start).count();
  InverseSolution solution{CostMatrix(std::move(c)), DualPotentials{eps * f, eps * g, eps},
                           std::move(affinity), std::move(report)};
  if (!solution.report.converged && config.throwOnNotConverged) {
    std::ostringstream msg;
    msg << "cost recovery stopped after " << it << " iterations with step " << change
        << " > tol " << config.tol;
    throw NotConvergedError<InverseSolution>(msg.str(), std::move(solution));
  }
  return solution;
}

}  // namespace invot
