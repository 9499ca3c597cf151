#pragma once

#include <functional>
#include <optional>

#include "invot/inverse.hpp"

namespace invot {

/// Iterate of the block coordinate descent on
///   Psi(alpha, beta, c) = F(alpha, beta, c) + R(c),
///   F = -<alpha, mu> - <beta, nu> + <c, pi_hat> + eps log sum_ij exp((alpha_i + beta_j - c_ij) / eps).
///
/// All quantities are stored divided by epsilon, so the solver itself always
/// runs at eps = 1. Every bound below is in those units.
struct BcdState {
  Vector alpha;
  Vector beta;
  Matrix cost;
  double costBound = 0.0;   ///< M_c
  double alphaBound = 0.0;  ///< M_alpha = M_c + log(mu_max / mu_min)
  double betaBound = 0.0;   ///< M_beta  = M_c + log(nu_max / nu_min)
  std::vector<double> psiTrace;

  /// ||alpha||_inf <= M_alpha, ||beta||_inf <= M_beta, 0 <= c <= M_c.
  bool withinBounds(double slack = 0.0) const;
};

enum class CostStep {
  Auto,               ///< Exact when the constraint decouples entrywise, else ProjectedGradient
  Exact,              ///< bcd_c_update_exact
  ProjectedGradient,  ///< bcd_c_update
};

struct BcdOptions {
  /// M_c in cost units (before dividing by epsilon).
  double costBound = 2.0;
  CostStep costStep = CostStep::Auto;
  int innerSteps = 50;
  /// Inner projected-gradient loop stops once the gradient map is this small.
  double innerTol = 1e-9;
  /// Called with the state after every full (alpha, beta, c) sweep.
  std::function<void(const BcdState&)> observer;
};

/// F in the caller's units, evaluated with a max-shifted log-sum-exp.
double objective_F(const Vector& alpha, const Vector& beta, const CostMatrix& cost,
                   const InverseProblem& problem);

/// Builds the starting state: alpha = beta = 0, c = projection of cInit / eps
/// onto the constraint intersected with [0, M_c].
BcdState bcd_init(const InverseProblem& problem, double costBound,
                  const std::optional<CostMatrix>& cInit = std::nullopt);

/// Exact minimization over alpha followed by the midpoint shift that centers
/// alpha (max + min = 0).
BcdState bcd_alpha_update(BcdState state, const InverseProblem& problem);
BcdState bcd_beta_update(BcdState state, const InverseProblem& problem);

/// Projected gradient with unit step on c -> F(alpha, beta, c) over
/// constraint intersected with [0, M_c]. Unit step is safe since grad_c F is
/// 1-Lipschitz at eps = 1.
BcdState bcd_c_update(BcdState state, const InverseProblem& problem, int innerSteps,
                      double innerTol = 1e-9);

/// Exact minimizer of c -> F(alpha, beta, c) over the constraint intersected
/// with [0, M_c], available when that set decouples into independent entries
/// or symmetric pairs (no constraint, Box, SymmetricZeroDiag and composites of
/// these). Uses log Z = min_t (Z e^{-t} + t - 1): for fixed t the minimizer is
/// a clamped closed form per entry group, and t is found by bisection on
/// log Z(c(t)) - t, which is nonincreasing. Throws InvalidArgument otherwise.
BcdState bcd_c_update_exact(BcdState state, const InverseProblem& problem);

/// True when bcd_c_update_exact supports the problem's constraint.
bool bcd_exact_c_supported(const InverseProblem& problem);

/// Full block coordinate descent. The returned cost and duals are scaled back
/// to the problem's epsilon; report.objectiveTrace holds Psi_k (also in the
/// caller's units).
InverseSolution bcd_solve(const InverseProblem& problem, const BcdOptions& options,
                          const std::optional<CostMatrix>& cInit = std::nullopt);

/// Gradients of the scaled F at a state (eps = 1 units).
struct BcdGradient {
  Vector alpha;
  Vector beta;
  Matrix cost;
};
BcdGradient bcd_gradient(const BcdState& state, const InverseProblem& problem);

/// Psi in scaled units at a state.
double bcd_psi(const BcdState& state, const InverseProblem& problem);

/// D^2 = m M_alpha^2 + n M_beta^2 + mn M_c^2.
double bcd_diameter_squared(const BcdState& state);

/// Constant C of the sublinear bound Psi_k - Psi* <= C / k. The published
/// min{2 / (9 D^2) - 2, 2, Psi_0 - Psi*} contains a term that is negative for
/// any D^2 > 1/9; it is dropped here, leaving 18 D^2 min{2, Psi_0 - Psi*}.
double bcd_rate_constant(double diameterSquared, double initialGap);

/// Samples pairs (x, y) and returns max ||grad f(x) - grad f(y)|| / ||x - y||
/// for f(x) = <a, x> + log sum_i b_i exp(x_i).
double lipschitz_probe(const Vector& a, const Vector& b, int samples, std::uint64_t seed = 0);

/// Ratio for a single pair.
double lipschitz_ratio(const Vector& a, const Vector& b, const Vector& x, const Vector& y);

}  // namespace invot
