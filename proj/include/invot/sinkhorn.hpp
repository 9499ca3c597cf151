#pragma once

#include "invot/types.hpp"

namespace invot {

/// Exponents (in units of epsilon) above this magnitude make the direct
/// scaling mode switch to log-domain updates.
inline constexpr double kLogDomainThreshold = 500.0;
/// exp() of anything larger overflows a double.
inline constexpr double kMaxExponent = 700.0;

struct SinkhornResult {
  DualPotentials duals;
  TransportPlan plan;
  double dualObjective = 0.0;
  SolveReport report;
};

/// Entropy-regularized OT by Sinkhorn scaling.
///
/// Direct mode iterates u <- mu / (K v), v <- nu / (K^T u) with K = exp(-c/eps);
/// log mode runs the same updates on the potentials through log-sum-exp.
/// ScalingMode::Auto starts in direct mode unless max|c|/eps exceeds
/// kLogDomainThreshold and falls back to log mode if the scalings leave the
/// representable range. Stops once the L1 row-marginal residual (the column
/// marginal is exact after each v-update) drops to config.tol.
///
/// Throws NotConvergedError<SinkhornResult> on budget exhaustion (unless
/// config.throwOnNotConverged is false) and NumericalOverflow when direct mode
/// was forced and overflowed.
SinkhornResult sinkhorn_solve(const CostMatrix& cost, const ProbabilityVector& mu,
                              const ProbabilityVector& nu, const SolverConfig& config);

/// pi_ij = exp((alpha_i + beta_j - c_ij) / eps). Raw evaluation: the result is
/// not checked for marginal feasibility.
Matrix plan_from_duals(const DualPotentials& duals, const CostMatrix& cost);

/// <alpha, mu> + <beta, nu> - eps * sum_ij exp((alpha_i + beta_j - c_ij) / eps).
double dual_objective(const DualPotentials& duals, const CostMatrix& cost,
                      const ProbabilityVector& mu, const ProbabilityVector& nu);

namespace detail {

/// out_i = log sum_j exp(A_ij + b_j), stabilized per row.
void row_log_sum_exp(const Matrix& A, const Vector& b, Vector& out);
/// out_j = log sum_i exp(A_ij + a_i), stabilized per column.
void col_log_sum_exp(const Matrix& A, const Vector& a, Vector& out);

}  // namespace detail

}  // namespace invot
