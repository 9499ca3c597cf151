#include "invot/bcd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "invot/random.hpp"
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

/// Box bounds live in cost units; everything else is scale invariant.
ConstraintSpec scaled(const ConstraintSpec& spec, double factor) {
  return std::visit(overloaded{
                        [&](const Box& b) -> ConstraintSpec {
                          return Box{b.lower * factor, b.upper * factor};
                        },
                        [&](const Composite& c) -> ConstraintSpec {
                          Composite out;
                          for (const auto& part : c.parts) out.parts.push_back(scaled(part, factor));
                          return out;
                        },
                        [&](const auto& other) -> ConstraintSpec { return other; },
                    },
                    spec.variant());
}

/// Matrix of exponents alpha_i + beta_j - c_ij.
Matrix exponents(const Vector& alpha, const Vector& beta, const Matrix& c) {
  return ((-c).colwise() + alpha).rowwise() + beta.transpose();
}

double logSumExpAll(const Matrix& Z) {
  const double mx = Z.maxCoeff();
  return mx + std::log((Z.array() - mx).exp().sum());
}

/// F at eps = 1.
double scaledF(const Vector& alpha, const Vector& beta, const Matrix& c, const InverseProblem& p) {
  return -alpha.dot(p.mu()) - beta.dot(p.nu()) + c.cwiseProduct(p.observed()).sum() +
         logSumExpAll(exponents(alpha, beta, c));
}

Matrix softmaxAll(const Matrix& Z) {
  const double mx = Z.maxCoeff();
  Matrix P = (Z.array() - mx).exp();
  P /= P.sum();
  return P;
}

void centre(Vector& x) {
  const double t = 0.5 * (x.maxCoeff() + x.minCoeff());
  x.array() -= t;
}

Matrix projectFeasible(const ConstraintSpec& scaledConstraint, const Matrix& c, double bound,
                       std::optional<Matrix>* affinity = nullptr) {
  ProjectionResult proj = apply_prox(scaledConstraint, c);
  if (affinity && proj.affinity) *affinity = std::move(proj.affinity);
  return proj.cost.cwiseMax(0.0).cwiseMin(bound);
}

}  // namespace

bool BcdState::withinBounds(double slack) const {
  if (alpha.lpNorm<Eigen::Infinity>() > alphaBound + slack) return false;
  if (beta.lpNorm<Eigen::Infinity>() > betaBound + slack) return false;
  if (cost.size() > 0 && (cost.minCoeff() < -slack || cost.maxCoeff() > costBound + slack))
    return false;
  return true;
}

double objective_F(const Vector& alpha, const Vector& beta, const CostMatrix& cost,
                   const InverseProblem& problem) {
  const Matrix& c = cost.matrix();
  if (alpha.size() != problem.rows() || beta.size() != problem.cols() ||
      c.rows() != problem.rows() || c.cols() != problem.cols())
    throw Error(ErrorCode::DimMismatch, "objective_F arguments do not match the problem shape");
  const double eps = problem.config().epsilon;
  return -alpha.dot(problem.mu()) - beta.dot(problem.nu()) +
         c.cwiseProduct(problem.observed()).sum() +
         eps * logSumExpAll(exponents(alpha, beta, c) / eps);
}

BcdState bcd_init(const InverseProblem& problem, double costBound,
                  const std::optional<CostMatrix>& cInit) {
  if (!(costBound > 0.0) || !std::isfinite(costBound))
    throw Error(ErrorCode::BadBounds, "M_c must be positive and finite");
  const double eps = problem.config().epsilon;
  BcdState s;
  s.costBound = costBound / eps;
  s.alphaBound = s.costBound + std::log(problem.mu().maxCoeff() / problem.mu().minCoeff());
  s.betaBound = s.costBound + std::log(problem.nu().maxCoeff() / problem.nu().minCoeff());
  s.alpha = Vector::Zero(problem.rows());
  s.beta = Vector::Zero(problem.cols());
  Matrix c0 = cInit ? Matrix(cInit->matrix() / eps) : Matrix::Zero(problem.rows(), problem.cols());
  if (c0.rows() != problem.rows() || c0.cols() != problem.cols())
    throw Error(ErrorCode::DimMismatch, "initial cost does not match the observation shape");
  s.cost = projectFeasible(scaled(problem.constraint(), 1.0 / eps), c0, s.costBound);
  return s;
}

BcdState bcd_alpha_update(BcdState state, const InverseProblem& problem) {
  Vector lse;
  detail::row_log_sum_exp(-state.cost, state.beta, lse);
  state.alpha = problem.mu().array().log() - lse.array();
  centre(state.alpha);
  return state;
}

BcdState bcd_beta_update(BcdState state, const InverseProblem& problem) {
  Vector lse;
  detail::col_log_sum_exp(-state.cost, state.alpha, lse);
  state.beta = problem.nu().array().log() - lse.array();
  centre(state.beta);
  return state;
}

BcdState bcd_c_update(BcdState state, const InverseProblem& problem, int innerSteps,
                      double innerTol) {
  if (innerSteps < 1) throw Error(ErrorCode::InvalidArgument, "innerSteps must be >= 1");
  const ConstraintSpec constraint = scaled(problem.constraint(), 1.0 / problem.config().epsilon);
  for (int k = 0; k < innerSteps; ++k) {
    const Matrix P = softmaxAll(exponents(state.alpha, state.beta, state.cost));
    const Matrix grad = problem.observed() - P;
    Matrix next = projectFeasible(constraint, state.cost - grad, state.costBound);
    const double step = (next - state.cost).norm();
    state.cost = std::move(next);
    if (step <= innerTol) break;
  }
  return state;
}

namespace {

/// Entrywise description of a constraint set: optional symmetric pairing with
/// zero diagonal, plus box bounds.
struct Separable {
  bool symmetric = false;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

std::optional<Separable> separableForm(const ConstraintSpec& spec) {
  return std::visit(overloaded{
                        [](const NoConstraint&) -> std::optional<Separable> { return Separable{}; },
                        [](const SymmetricZeroDiag&) -> std::optional<Separable> {
                          return Separable{true};
                        },
                        [](const Box& b) -> std::optional<Separable> {
                          return Separable{false, b.lower, b.upper};
                        },
                        [](const LinearAffinity&) -> std::optional<Separable> { return std::nullopt; },
                        [](const Composite& c) -> std::optional<Separable> {
                          Separable acc;
                          for (const auto& part : c.parts) {
                            auto s = separableForm(part);
                            if (!s) return std::nullopt;
                            acc.symmetric = acc.symmetric || s->symmetric;
                            acc.lower = std::max(acc.lower, s->lower);
                            acc.upper = std::min(acc.upper, s->upper);
                          }
                          return acc;
                        },
                    },
                    spec.variant());
}

std::optional<Separable> bcdFeasibleSet(const InverseProblem& problem, double costBound) {
  auto sep = separableForm(scaled(problem.constraint(), 1.0 / problem.config().epsilon));
  if (!sep) return std::nullopt;
  sep->lower = std::max(sep->lower, 0.0);
  sep->upper = std::min(sep->upper, costBound);
  if (sep->lower > sep->upper) return std::nullopt;
  if (sep->symmetric && (problem.rows() != problem.cols() || sep->lower > 0.0)) return std::nullopt;
  return sep;
}

}  // namespace

bool bcd_exact_c_supported(const InverseProblem& problem) {
  return bcdFeasibleSet(problem, std::numeric_limits<double>::max()).has_value();
}

BcdState bcd_c_update_exact(BcdState state, const InverseProblem& problem) {
  const auto sep = bcdFeasibleSet(problem, state.costBound);
  if (!sep) {
    throw Error(ErrorCode::InvalidArgument,
                "exact c-update needs a constraint that decouples entrywise (" +
                    problem.constraint().describe() + ")");
  }
  const Index m = problem.rows();
  const Index n = problem.cols();
  const Matrix S = (Matrix::Zero(m, n).colwise() + state.alpha).rowwise() + state.beta.transpose();
  const Matrix& logPi = problem.logObserved();

  // For a fixed shift t each group minimizes x sum(pi_hat) + sum(w) e^{-x-t}
  // over [lower, upper]: x = clamp(log(sum w / sum pi_hat) - t).
  Matrix k(m, n);
  if (sep->symmetric) {
    for (Index j = 0; j < n; ++j) {
      k(j, j) = 0.0;
      for (Index i = j + 1; i < m; ++i) {
        const double a = S(i, j), b = S(j, i);
        const double mx = std::max(a, b);
        const double logW = mx + std::log(std::exp(a - mx) + std::exp(b - mx));
        const double logP = std::log(problem.observed()(i, j) + problem.observed()(j, i));
        k(i, j) = k(j, i) = logW - logP;
      }
    }
  } else {
    k = S - logPi;
  }
  auto costAt = [&](double t) {
    Matrix c = (k.array() - t).cwiseMax(sep->lower).cwiseMin(sep->upper).matrix();
    if (sep->symmetric) c.diagonal().setZero();
    return c;
  };
  // log Z(c(t)) - t is nonincreasing in t and changes sign on [L - upper, L - lower].
  const double L = logSumExpAll(S);
  double lo = L - sep->upper;
  double hi = L - sep->lower;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double psi = logSumExpAll(S - costAt(mid)) - mid;
    if (psi > 0.0) lo = mid;
    else hi = mid;
  }
  state.cost = costAt(0.5 * (lo + hi));
  return state;
}

BcdGradient bcd_gradient(const BcdState& state, const InverseProblem& problem) {
  const Matrix P = softmaxAll(exponents(state.alpha, state.beta, state.cost));
  return {P.rowwise().sum() - problem.mu(), P.colwise().sum().transpose() - problem.nu(),
          problem.observed() - P};
}

double bcd_psi(const BcdState& state, const InverseProblem& problem) {
  // R is the indicator of the feasible set, which every state lies in.
  return scaledF(state.alpha, state.beta, state.cost, problem);
}

double bcd_diameter_squared(const BcdState& s) {
  const double m = static_cast<double>(s.alpha.size());
  const double n = static_cast<double>(s.beta.size());
  return m * s.alphaBound * s.alphaBound + n * s.betaBound * s.betaBound +
         m * n * s.costBound * s.costBound;
}

double bcd_rate_constant(double diameterSquared, double initialGap) {
  return 18.0 * diameterSquared * std::min(2.0, std::max(0.0, initialGap));
}

InverseSolution bcd_solve(const InverseProblem& problem, const BcdOptions& options,
                          const std::optional<CostMatrix>& cInit) {
  const SolverConfig& config = problem.config();
  config.validate();
  const auto start = Clock::now();
  const double eps = config.epsilon;
  const ConstraintSpec constraint = scaled(problem.constraint(), 1.0 / eps);

  BcdState state = bcd_init(problem, options.costBound, cInit);
  const bool exact = options.costStep == CostStep::Exact ||
                     (options.costStep == CostStep::Auto && bcd_exact_c_supported(problem));
  state.psiTrace.push_back(bcd_psi(state, problem));

  SolveReport report;
  report.logDomain = true;
  report.smoothedZeros = problem.smoothedZeros();
  if (problem.truth()) report.relErrTrace.emplace();
  std::optional<Matrix> affinity;
  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < config.maxIter) {
    const Matrix previous = state.cost;
    state = bcd_alpha_update(std::move(state), problem);
    state = bcd_beta_update(std::move(state), problem);
    state = exact ? bcd_c_update_exact(std::move(state), problem)
                  : bcd_c_update(std::move(state), problem, options.innerSteps, options.innerTol);
    ++it;
    change = eps * (state.cost - previous).norm();
    const double psi = bcd_psi(state, problem);
    state.psiTrace.push_back(psi);
    if (options.observer) options.observer(state);
    if (it % config.logEvery == 0 || it == 1) {
      const BcdGradient grad = bcd_gradient(state, problem);
      report.loggedIterations.push_back(it);
      report.objectiveTrace.push_back(eps * psi);
      report.feasibilityTrace.push_back(grad.alpha.lpNorm<1>() + grad.beta.lpNorm<1>());
      if (problem.truth())
        report.relErrTrace->push_back(relative_error(Matrix(eps * state.cost), problem.truth()->matrix()));
    }
    if (change <= config.tol) break;
  }

  // The affinity of the final iterate, if the constraint carries one.
  if (problem.constraint().hasAffinity()) {
    projectFeasible(constraint, state.cost, state.costBound, &affinity);
    if (affinity) *affinity *= eps;
  }
  const BcdGradient grad = bcd_gradient(state, problem);
  report.feasibilityResidual = grad.alpha.lpNorm<1>() + grad.beta.lpNorm<1>();
  report.iterations = it;
  report.converged = change <= config.tol;
  report.wallClockSeconds = std::chrono::duration<double>(Clock::now() - start).count();

  InverseSolution solution{CostMatrix(Matrix(eps * state.cost)),
                           DualPotentials{eps * state.alpha, eps * state.beta, eps},
                           std::move(affinity), std::move(report)};
  if (!solution.report.converged && config.throwOnNotConverged) {
    std::ostringstream msg;
    msg << "BCD stopped after " << it << " iterations with step " << change << " > tol "
        << config.tol;
    throw NotConvergedError<InverseSolution>(msg.str(), std::move(solution));
  }
  return solution;
}

double lipschitz_ratio(const Vector& a, const Vector& b, const Vector& x, const Vector& y) {
  auto grad = [&](const Vector& z) -> Vector {
    const Vector w = z.array() + b.array().log();
    const double mx = w.maxCoeff();
    Vector e = (w.array() - mx).exp();
    return a + e / e.sum();
  };
  const double dist = (x - y).norm();
  if (dist == 0.0) return 0.0;
  return (grad(x) - grad(y)).norm() / dist;
}

double lipschitz_probe(const Vector& a, const Vector& b, int samples, std::uint64_t seed) {
  if (a.size() != b.size() || a.size() == 0)
    throw Error(ErrorCode::DimMismatch, "lipschitz_probe needs equally sized nonempty a, b");
  if (!(b.minCoeff() > 0.0)) throw Error(ErrorCode::InvalidArgument, "b must be strictly positive");
  Rng rng(seed);
  const Index n = a.size();
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    // Log-uniform spreads probe both the flat and the curved regime.
    const double scale = std::pow(10.0, rng.uniform(-2.0, 2.0));
    const double gap = std::pow(10.0, rng.uniform(-6.0, 1.0));
    Vector x(n), y(n);
    for (Index i = 0; i < n; ++i) x[i] = scale * rng.normal();
    for (Index i = 0; i < n; ++i) y[i] = x[i] + gap * rng.normal();
    worst = std::max(worst, lipschitz_ratio(a, b, x, y));
  }
  return worst;
}

}  // namespace invot
