#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "invot/types.hpp"

namespace invot {

enum class Activation { Tanh, Relu, Identity, Softplus };

std::string to_string(Activation a);
/// Inverse of to_string; throws InvalidArgument on an unknown tag.
Activation activation_from_string(const std::string& tag);

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Layer activations of one batched forward pass, kept for backpropagation.
struct NetTape {
  std::vector<Matrix> acts;  ///< acts[0] is the input, acts[L] the 1 x B output
  Matrix outputPre;          ///< output pre-activation

  Vector output() const { return acts.back().row(0).transpose(); }
};

/// Fully connected net with tanh hidden layers and a scalar output.
///
/// Parameters live in one flat vector, layer by layer, each layer holding its
/// row-major weight matrix (out x in) followed by its bias.
class FeedForwardNet {
 public:
  FeedForwardNet() = default;
  /// layerDims = {input, hidden..., 1}. Parameters start at zero.
  FeedForwardNet(std::vector<int> layerDims, Activation output = Activation::Identity);

  static FeedForwardNet mlp(int inputDim, const std::vector<int>& hidden,
                            Activation output = Activation::Identity);

  const std::vector<int>& layerDims() const noexcept { return dims_; }
  int inputDim() const { return dims_.front(); }
  int numLayers() const { return static_cast<int>(dims_.size()) - 1; }
  Index numParams() const noexcept { return params_.size(); }
  Activation hiddenActivation() const noexcept { return Activation::Tanh; }
  Activation outputActivation() const noexcept { return output_; }

  const Vector& params() const noexcept { return params_; }
  /// Throws DimMismatch on a wrong length, InvalidArgument if not finite.
  void setParams(Vector p);

  Eigen::Map<const RowMajorMatrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  Eigen::Map<RowMajorMatrix> weight(int layer);
  Eigen::Map<Vector> bias(int layer);

  double forward(const Vector& x) const;
  /// One output per column of X (inputDim x B).
  Vector forward(const Matrix& X) const;

  NetTape record(const Matrix& X) const;

  /// d output / d params at a single input.
  Vector gradient(const Vector& x) const;

  /// Returns sum_b w_b grad_params f(X_b). Writes f(X) to `outputs` and
  /// sum-weighted input gradients (column b = w_b grad_x f(X_b)) to
  /// `inputGrad` when given.
  Vector backward(const Matrix& X, const Vector& w, Vector* outputs = nullptr,
                  Matrix* inputGrad = nullptr) const;
  Vector backward(const NetTape& tape, const Vector& w, Matrix* inputGrad = nullptr) const;

  /// Weights uniform in +-sqrt(6 / (fanIn + fanOut)), biases zero.
  void xavierInit(std::uint64_t seed);

 private:
  Index offset(int layer) const { return offsets_[static_cast<std::size_t>(layer)]; }
  void checkInput(Index rows) const;

  std::vector<int> dims_;
  std::vector<Index> offsets_;
  Activation output_ = Activation::Identity;
  Vector params_;
};

/// Adam with the usual bias correction.
struct AdamConfig {
  double learningRate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;

  explicit AdamState(Index n = 0) : m(Vector::Zero(n)), v(Vector::Zero(n)) {}
};

/// In place: params -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamConfig& config);

}  // namespace invot
