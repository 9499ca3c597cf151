#include "invot/sinkhorn.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace invot {

namespace detail {

void row_log_sum_exp(const Matrix& A, const Vector& b, Vector& out) {
  const Index m = A.rows();
  const Index n = A.cols();
  Vector rowMax = Vector::Constant(m, -std::numeric_limits<double>::infinity());
  for (Index j = 0; j < n; ++j) rowMax = rowMax.cwiseMax((A.col(j).array() + b[j]).matrix());
  Vector acc = Vector::Zero(m);
  for (Index j = 0; j < n; ++j)
    acc.array() += (A.col(j).array() + b[j] - rowMax.array()).exp();
  out = rowMax.array() + acc.array().log();
}

void col_log_sum_exp(const Matrix& A, const Vector& a, Vector& out) {
  const Index n = A.cols();
  out.resize(n);
  for (Index j = 0; j < n; ++j) {
    const auto col = A.col(j).array() + a.array();
    const double mx = col.maxCoeff();
    out[j] = mx + std::log((col - mx).exp().sum());
  }
}

}  // namespace detail

namespace {

using Clock = std::chrono::steady_clock;

bool usable(const Vector& s) {
  for (Index i = 0; i < s.size(); ++i) {
    const double x = s[i];
    if (!std::isfinite(x) || !(x > 0.0)) return false;
    if (std::abs(std::log(x)) > kLogDomainThreshold) return false;
  }
  return true;
}

void checkShapes(const CostMatrix& cost, const ProbabilityVector& mu, const ProbabilityVector& nu) {
  if (cost.rows() != mu.dim() || cost.cols() != nu.dim()) {
    std::ostringstream msg;
    msg << "cost is " << cost.rows() << "x" << cost.cols() << " but marginals are " << mu.dim()
        << " and " << nu.dim();
    throw Error(ErrorCode::DimMismatch, msg.str());
  }
}

}  // namespace

Matrix plan_from_duals(const DualPotentials& duals, const CostMatrix& cost) {
  const Matrix& c = cost.matrix();
  if (duals.alpha.size() != c.rows() || duals.beta.size() != c.cols())
    throw Error(ErrorCode::DimMismatch, "dual potentials do not match the cost shape");
  const double eps = duals.epsilon;
  Matrix plan(c.rows(), c.cols());
  for (Index j = 0; j < c.cols(); ++j) {
    for (Index i = 0; i < c.rows(); ++i) {
      const double e = (duals.alpha[i] + duals.beta[j] - c(i, j)) / eps;
      if (e > kMaxExponent) throw Error(ErrorCode::NumericalOverflow, "plan exponent exceeds 700", i, j);
      plan(i, j) = std::exp(e);
    }
  }
  return plan;
}

double dual_objective(const DualPotentials& duals, const CostMatrix& cost,
                      const ProbabilityVector& mu, const ProbabilityVector& nu) {
  checkShapes(cost, mu, nu);
  const Matrix plan = plan_from_duals(duals, cost);
  return duals.alpha.dot(mu.values()) + duals.beta.dot(nu.values()) - duals.epsilon * plan.sum();
}

SinkhornResult sinkhorn_solve(const CostMatrix& cost, const ProbabilityVector& mu,
                              const ProbabilityVector& nu, const SolverConfig& config) {
  config.validate();
  checkShapes(cost, mu, nu);
  mu.requireStrictlyPositive("mu");
  nu.requireStrictlyPositive("nu");

  const auto start = Clock::now();
  const double eps = config.epsilon;
  const Index m = cost.rows();
  const Index n = cost.cols();
  const Matrix scaled = -cost.matrix() / eps;  // -c / eps
  const Vector logMu = mu.values().array().log();
  const Vector logNu = nu.values().array().log();

  bool logMode = config.mode == ScalingMode::Log ||
                 (config.mode == ScalingMode::Auto && scaled.cwiseAbs().maxCoeff() > kLogDomainThreshold);

  SolveReport report;
  // Potentials in units of epsilon: f = alpha / eps, g = beta / eps.
  Vector f = Vector::Zero(m);
  Vector g = Vector::Zero(n);
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;

  auto record = [&](int iter, double dual) {
    if (iter % config.logEvery == 0 || iter == 1) {
      report.loggedIterations.push_back(iter);
      report.objectiveTrace.push_back(dual);
      report.feasibilityTrace.push_back(residual);
    }
  };

  if (!logMode) {
    const Matrix K = scaled.array().exp();
    Vector u = Vector::Ones(m);
    Vector v = Vector::Ones(n);
    Vector Kv = K * v;
    while (it < config.maxIter) {
      const Vector uNext = mu.values().cwiseQuotient(Kv);
      const Vector Ktu = K.transpose() * uNext;
      const Vector vNext = nu.values().cwiseQuotient(Ktu);
      if (!usable(uNext) || !usable(vNext)) {
        if (config.mode == ScalingMode::Direct) {
          throw Error(ErrorCode::NumericalOverflow,
                      "direct Sinkhorn scalings left the representable range; use log-domain mode");
        }
        logMode = true;
        break;
      }
      u = uNext;
      v = vNext;
      Kv = K * v;
      ++it;
      residual = (u.cwiseProduct(Kv) - mu.values()).lpNorm<1>();
      f = u.array().log();
      g = v.array().log();
      const double mass = u.dot(Kv);
      record(it, eps * (f.dot(mu.values()) + g.dot(nu.values()) - mass));
      if (residual <= config.tol) break;
    }
    // f and g hold the last usable iterate when falling through to log mode.
  }

  if (logMode) {
    report.logDomain = true;
    Vector lse(m);
    detail::row_log_sum_exp(scaled, g, lse);
    while (it < config.maxIter) {
      f = logMu - lse;
      Vector colLse;
      detail::col_log_sum_exp(scaled, f, colLse);
      g = logNu - colLse;
      detail::row_log_sum_exp(scaled, g, lse);
      ++it;
      const Vector rowMass = (f + lse).array().exp();
      residual = (rowMass - mu.values()).lpNorm<1>();
      record(it, eps * (f.dot(mu.values()) + g.dot(nu.values()) - rowMass.sum()));
      if (residual <= config.tol) break;
    }
  }

  DualPotentials duals{eps * f, eps * g, eps};
  Matrix planMatrix = plan_from_duals(duals, cost);
  TransportPlan plan = TransportPlan::unchecked(std::move(planMatrix), mu, nu);
  report.iterations = it;
  report.feasibilityResidual = plan.residual();
  report.converged = residual <= config.tol;
  report.wallClockSeconds = std::chrono::duration<double>(Clock::now() - start).count();

  const double dual = dual_objective(duals, cost, mu, nu);
  SinkhornResult result{std::move(duals), std::move(plan), dual, std::move(report)};
  if (!result.report.converged && config.throwOnNotConverged) {
    std::ostringstream msg;
    msg << "Sinkhorn stopped after " << it << " sweeps with marginal residual " << residual
        << " > tol " << config.tol;
    throw NotConvergedError<SinkhornResult>(msg.str(), std::move(result));
  }
  return result;
}

}  // namespace invot
