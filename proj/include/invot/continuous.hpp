#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "invot/nn.hpp"
#include "invot/random.hpp"
#include "invot/synth.hpp"

namespace invot {

enum class InputMode {
  RawPair,     ///< net sees (x, y)
  AbsDiff,     ///< net sees |x - y| componentwise
  ScaledDiff,  ///< net sees |x - s * y| componentwise
};

std::string to_string(InputMode m);

/// A cost c(x, y) given by a net applied to an input encoding of the pair.
class CostModel {
 public:
  CostModel() = default;
  /// `scale` is only read in ScaledDiff mode (one entry per coordinate).
  CostModel(InputMode mode, int dimX, int dimY, const std::vector<int>& hidden,
            Activation output = Activation::Identity, Vector scale = Vector(),
            bool learnScale = false);

  InputMode mode() const noexcept { return mode_; }
  int dimX() const noexcept { return dimX_; }
  int dimY() const noexcept { return dimY_; }
  const FeedForwardNet& net() const noexcept { return net_; }
  FeedForwardNet& net() noexcept { return net_; }
  const Vector& scale() const noexcept { return scale_; }
  bool learnScale() const noexcept { return learnScale_; }

  /// Net parameters followed by the scale when it is learnable.
  Index numParams() const;
  Vector params() const;
  void setParams(const Vector& p);

  Matrix features(const Matrix& X, const Matrix& Y) const;
  double evaluate(const Vector& x, const Vector& y) const;
  Vector evaluate(const Matrix& X, const Matrix& Y) const;

  /// sum_b w_b grad_params c(X_b, Y_b); outputs c(X, Y) when asked.
  Vector backward(const Matrix& X, const Matrix& Y, const Vector& w, Vector* outputs = nullptr) const;
  /// Tape of the net on features(X, Y).
  NetTape record(const Matrix& X, const Matrix& Y) const;
  Vector backward(const NetTape& tape, const Matrix& X, const Matrix& Y, const Vector& w) const;

 private:
  InputMode mode_ = InputMode::RawPair;
  int dimX_ = 0;
  int dimY_ = 0;
  FeedForwardNet net_;
  Vector scale_;
  bool learnScale_ = false;
};

/// The three unknowns: dual potentials alpha(x), beta(y) and the cost.
struct ContinuousModel {
  FeedForwardNet alpha;
  FeedForwardNet beta;
  CostModel cost;

  /// alpha, beta, then cost parameters.
  Index numParams() const;
  Vector params() const;
  void setParams(const Vector& p);

  /// G(x, y) = exp(alpha(x) + beta(y) - c(x, y)) at eps = 1.
  Vector G(const Matrix& X, const Matrix& Y) const;
};

/// Xavier-initialised model with `hidden` tanh layers on every net. The seed
/// drives all three nets.
ContinuousModel make_model(int dimX, int dimY, const std::vector<int>& hidden, InputMode mode,
                           Activation costOutput, std::uint64_t seed, Vector scale = Vector(),
                           bool learnScale = false);

/// Axis-aligned box over the joint (x, y) coordinates.
struct DomainBox {
  std::vector<std::pair<double, double>> bounds;

  Index dim() const noexcept { return static_cast<Index>(bounds.size()); }
  double volume() const;
  /// Throws BadBounds unless every interval is finite with lo < hi.
  void validate() const;
  static DomainBox unit(Index dim);
};

struct TrainConfig {
  double learningRate = 1e-4;
  double adamBeta1 = 0.9;
  double adamBeta2 = 0.999;
  double adamEps = 1e-8;
  /// Pairs per step; 0 means full batch up to 10,000 pairs, else 10,000.
  Index batchSize = 0;
  Index nCollocation = 1000;
  int epochs = 1000;
  std::uint64_t seed = 0;
  DomainBox domainBox;
  /// R(c) = costL2 * ||cost params||^2.
  double costL2 = 0.0;
  /// Nominal epsilon of the data; training always runs at eps = 1 and the
  /// learned cost is c / epsilon.
  double epsilon = 1.0;

  AdamConfig adam() const { return {learningRate, adamBeta1, adamBeta2, adamEps}; }
  Index resolvedBatch(Index nPairs) const;
  void validate() const;
};

/// Batched integrand over columns of X (dX x B) and Y (dY x B).
using Integrand = std::function<Vector(const Matrix& X, const Matrix& Y)>;

struct McEstimate {
  double value = 0.0;
  double stdError = 0.0;
  /// Sample coefficient of variation of the summands.
  double cv = 0.0;
};

/// volume(box) * mean of f over Ns uniform draws in the box.
McEstimate mc_integral_uniform(const Integrand& f, Index dimX, const DomainBox& box, Index Ns,
                               std::uint64_t seed);
McEstimate mc_integral_uniform(const ContinuousModel& model, const DomainBox& box, Index Ns,
                               std::uint64_t seed);

/// Mean of f / rho over Ns draws from N(mean, cov) on the joint space.
/// SingularCovariance unless cov is positive definite; HighVariance when the
/// summands have a coefficient of variation above kMaxImportanceCv.
inline constexpr double kMaxImportanceCv = 10.0;
McEstimate mc_integral_importance(const Integrand& f, Index dimX, const Vector& mean,
                                  const Matrix& cov, Index Ns, std::uint64_t seed);
McEstimate mc_integral_importance(const ContinuousModel& model, const Vector& mean,
                                  const Matrix& cov, Index Ns, std::uint64_t seed);

/// Uniform points in the box, split into the x and y blocks.
std::pair<Matrix, Matrix> sample_box(const DomainBox& box, Index dimX, Index n, Rng& rng);

struct LossValue {
  double total = 0.0;
  double regularizer = 0.0;
  double alphaMean = 0.0;
  double betaMean = 0.0;
  double costMean = 0.0;
  double integral = 0.0;
};

/// Empirical data for one loss evaluation.
struct LossBatch {
  Matrix xMu;    ///< samples of mu
  Matrix yNu;    ///< samples of nu
  Matrix xPair;  ///< paired samples of pi_hat
  Matrix yPair;
  Matrix xCol;   ///< collocation points
  Matrix yCol;
  double volume = 1.0;
};

/// L = R - mean alpha(xMu) - mean beta(yNu) + mean c(pairs) + volume * mean G(collocation).
LossValue loss_eval(const ContinuousModel& model, const LossBatch& batch, double costL2 = 0.0);
/// Same value plus the gradient with respect to model.params().
LossValue loss_gradient(const ContinuousModel& model, const LossBatch& batch, double costL2,
                        Vector& grad);

struct TrainResult {
  ContinuousModel model;
  SolveReport report;  ///< objectiveTrace holds per-epoch mean loss
  long steps = 0;
};

/// Called after each epoch with the epoch number, its mean loss and the
/// current model. Returning false stops training there.
using EpochCallback = std::function<bool(int, double, const ContinuousModel&)>;

/// Adam on the loss with fresh uniform collocation points every step.
/// Throws Diverged once a step loss is non-finite or exceeds 1e8 in magnitude.
TrainResult train(const SampleSet& data, ContinuousModel model, const TrainConfig& config,
                  const EpochCallback& onEpoch = {});

/// c at each column pair.
Vector eval_cost_on_grid(const CostModel& cost, const Matrix& X, const Matrix& Y);

double pearson_correlation(const Vector& a, const Vector& b);

}  // namespace invot
