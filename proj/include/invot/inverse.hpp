#pragma once

#include <optional>

#include "invot/types.hpp"

namespace invot {

enum class ZeroPolicy {
  Reject,  ///< zero observations raise ZeroObservation
  Smooth,  ///< zeros become kZeroSmoothing, then the plan is renormalized
};

inline constexpr double kZeroSmoothing = 1e-12;

/// Observed plan plus everything needed to recover a cost from it.
///
/// The marginals used by the solvers are the exact row and column sums of the
/// (normalized) observation, so the true cost is an exact fixed point.
class InverseProblem {
 public:
  InverseProblem(const TransportPlan& observed, ConstraintSpec constraint, SolverConfig config,
                 double proxStep = 1.0, ZeroPolicy zeros = ZeroPolicy::Reject);
  /// Convenience for a bare matrix whose marginals are its own row/col sums.
  InverseProblem(const Matrix& observed, ConstraintSpec constraint, SolverConfig config,
                 double proxStep = 1.0, ZeroPolicy zeros = ZeroPolicy::Reject);

  const Matrix& observed() const noexcept { return observed_; }
  const Matrix& logObserved() const noexcept { return logObserved_; }
  const Vector& mu() const noexcept { return mu_; }
  const Vector& nu() const noexcept { return nu_; }
  Index rows() const noexcept { return observed_.rows(); }
  Index cols() const noexcept { return observed_.cols(); }
  const ConstraintSpec& constraint() const noexcept { return constraint_; }
  const SolverConfig& config() const noexcept { return config_; }
  SolverConfig& config() noexcept { return config_; }
  double proxStep() const noexcept { return proxStep_; }
  bool smoothedZeros() const noexcept { return smoothed_; }

  /// Optional ground truth; when set, solvers trace relative_error against it.
  const std::optional<CostMatrix>& truth() const noexcept { return truth_; }
  void setTruth(CostMatrix truth);

 private:
  void init(Matrix observed, ZeroPolicy zeros);

  Matrix observed_;
  Matrix logObserved_;
  Vector mu_;
  Vector nu_;
  ConstraintSpec constraint_;
  SolverConfig config_;
  double proxStep_;
  bool smoothed_ = false;
  std::optional<CostMatrix> truth_;
};

struct InverseSolution {
  CostMatrix cost;
  DualPotentials duals;
  /// Present iff the constraint involves a linear affinity.
  std::optional<Matrix> affinity;
  SolveReport report;
};

struct ProjectionResult {
  Matrix cost;
  std::optional<Matrix> affinity;
};

/// E = -<alpha, mu> - <beta, nu> + <c, pi_hat> + eps * sum_ij exp((alpha_i + beta_j - c_ij) / eps).
double objective_E(const Vector& alpha, const Vector& beta, const CostMatrix& cost,
                   const InverseProblem& problem);

/// (c + c^T) / 2 with the diagonal zeroed.
CostMatrix prox_symmetric_zero_diag(const CostMatrix& chat);

/// Entrywise clamp to [lower, upper].
CostMatrix prox_box(const CostMatrix& chat, double lower, double upper);

/// Frobenius projection onto {sign * G^T A D}:
/// A = sign * (G^+)^T chat D^+, c = sign * G^T A D.
ProjectionResult prox_linear_affinity(const CostMatrix& chat, const LinearAffinity& affinity);
ProjectionResult prox_linear_affinity(const CostMatrix& chat, const Matrix& G, const Matrix& D,
                                      int sign);

/// Applies every part of the constraint in declared order. gamma only matters
/// for penalty-type regularizers; every supported constraint is a projection.
ProjectionResult apply_prox(const ConstraintSpec& constraint, const Matrix& chat, double gamma = 1.0);

/// Matrix-scaling cost recovery. Each iteration performs one Sinkhorn sweep
/// for the duals, forms chat = -eps log(pi_hat / (u v^T)) and projects it
/// onto the constraint set.
///
/// `warmStart` seeds the dual scalings; by default u = v = 1. cInit defaults
/// to the zero matrix. Iterates until ||c_k - c_{k-1}||_F <= tol or maxIter.
InverseSolution learn_cost(const InverseProblem& problem,
                           const std::optional<CostMatrix>& cInit = std::nullopt,
                           const std::optional<DualPotentials>& warmStart = std::nullopt);

/// Copy of the problem with epsilon = 1. The recovered cost is then c / eps_true.
InverseProblem set_epsilon_one(const InverseProblem& problem);

}  // namespace invot
