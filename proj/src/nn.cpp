#include "invot/nn.hpp"

#include <cmath>

#include "invot/random.hpp"

namespace invot {

namespace {

void activate(Activation a, Matrix& Z) {
  switch (a) {
    case Activation::Tanh: {
      // std::tanh is not vectorized for double; exp is.
      const Eigen::ArrayXXd e = (-2.0 * Z.array().abs()).exp();
      Z = (Z.array().sign() * (1.0 - e) / (1.0 + e)).matrix();
      break;
    }
    case Activation::Relu: Z = Z.cwiseMax(0.0); break;
    case Activation::Identity: break;
    case Activation::Softplus:
      Z = Z.array().max(0.0) + (-Z.array().abs()).exp().log1p();
      break;
  }
}

Matrix outputDerivative(Activation a, const Matrix& Z) {
  switch (a) {
    case Activation::Tanh: {
      Matrix T = Z;
      activate(Activation::Tanh, T);
      return (1.0 - T.array().square()).matrix();
    }
    case Activation::Relu: return (Z.array() > 0.0).cast<double>().matrix();
    case Activation::Identity: return Matrix::Ones(Z.rows(), Z.cols());
    case Activation::Softplus: return (1.0 / (1.0 + (-Z.array()).exp())).matrix();
  }
  return Matrix();
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
    case Activation::Softplus: return "softplus";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& tag) {
  if (tag == "tanh") return Activation::Tanh;
  if (tag == "relu") return Activation::Relu;
  if (tag == "identity") return Activation::Identity;
  if (tag == "softplus") return Activation::Softplus;
  throw Error(ErrorCode::InvalidArgument, "unknown activation '" + tag + "'");
}

FeedForwardNet::FeedForwardNet(std::vector<int> layerDims, Activation output)
    : dims_(std::move(layerDims)), output_(output) {
  if (dims_.size() < 2) throw Error(ErrorCode::InvalidArgument, "a net needs at least one layer");
  for (int d : dims_)
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "layer widths must be positive");
  if (dims_.back() != 1) throw Error(ErrorCode::InvalidArgument, "output layer must have width 1");
  Index total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<Index>(dims_[l + 1]) * (dims_[l] + 1);
  }
  params_ = Vector::Zero(total);
}

FeedForwardNet FeedForwardNet::mlp(int inputDim, const std::vector<int>& hidden, Activation output) {
  std::vector<int> dims{inputDim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  return FeedForwardNet(std::move(dims), output);
}

void FeedForwardNet::setParams(Vector p) {
  if (p.size() != params_.size())
    throw Error(ErrorCode::DimMismatch, "parameter vector has length " + std::to_string(p.size()) +
                                            ", net expects " + std::to_string(params_.size()));
  if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "parameters must be finite");
  params_ = std::move(p);
}

Eigen::Map<const RowMajorMatrix> FeedForwardNet::weight(int l) const {
  return {params_.data() + offset(l), dims_[l + 1], dims_[l]};
}
Eigen::Map<const Vector> FeedForwardNet::bias(int l) const {
  return {params_.data() + offset(l) + static_cast<Index>(dims_[l + 1]) * dims_[l], dims_[l + 1]};
}
Eigen::Map<RowMajorMatrix> FeedForwardNet::weight(int l) {
  return {params_.data() + offset(l), dims_[l + 1], dims_[l]};
}
Eigen::Map<Vector> FeedForwardNet::bias(int l) {
  return {params_.data() + offset(l) + static_cast<Index>(dims_[l + 1]) * dims_[l], dims_[l + 1]};
}

void FeedForwardNet::checkInput(Index rows) const {
  if (dims_.empty()) throw Error(ErrorCode::InvalidArgument, "net is empty");
  if (rows != dims_.front())
    throw Error(ErrorCode::DimMismatch, "input has dimension " + std::to_string(rows) +
                                            ", net expects " + std::to_string(dims_.front()));
}

double FeedForwardNet::forward(const Vector& x) const {
  return forward(Matrix(x))(0);
}

Vector FeedForwardNet::forward(const Matrix& X) const {
  checkInput(X.rows());
  Matrix A = X;
  for (int l = 0; l < numLayers(); ++l) {
    Matrix Z = weight(l) * A;
    Z.colwise() += bias(l);
    activate(l + 1 == numLayers() ? output_ : Activation::Tanh, Z);
    A = std::move(Z);
  }
  return A.row(0).transpose();
}

NetTape FeedForwardNet::record(const Matrix& X) const {
  checkInput(X.rows());
  const int L = numLayers();
  NetTape tape;
  tape.acts.resize(static_cast<std::size_t>(L) + 1);
  tape.acts[0] = X;
  for (int l = 0; l < L; ++l) {
    Matrix Z = weight(l) * tape.acts[l];
    Z.colwise() += bias(l);
    if (l + 1 == L) tape.outputPre = Z;
    activate(l + 1 == L ? output_ : Activation::Tanh, Z);
    tape.acts[l + 1] = std::move(Z);
  }
  return tape;
}

Vector FeedForwardNet::gradient(const Vector& x) const {
  return backward(Matrix(x), Vector::Ones(1));
}

Vector FeedForwardNet::backward(const Matrix& X, const Vector& w, Vector* outputs,
                                Matrix* inputGrad) const {
  const NetTape tape = record(X);
  if (outputs) *outputs = tape.output();
  return backward(tape, w, inputGrad);
}

Vector FeedForwardNet::backward(const NetTape& tape, const Vector& w, Matrix* inputGrad) const {
  const int L = numLayers();
  if (static_cast<int>(tape.acts.size()) != L + 1 || tape.acts[0].rows() != dims_.front())
    throw Error(ErrorCode::DimMismatch, "tape does not belong to this net");
  if (w.size() != tape.acts[0].cols())
    throw Error(ErrorCode::DimMismatch, "one weight per input column");
  Vector grad(params_.size());
  Matrix delta = outputDerivative(output_, tape.outputPre).array() * w.transpose().array();
  for (int l = L - 1; l >= 0; --l) {
    const Index in = dims_[l];
    const Index out = dims_[l + 1];
    Eigen::Map<RowMajorMatrix> gW(grad.data() + offset(l), out, in);
    gW.noalias() = delta * tape.acts[l].transpose();
    grad.segment(offset(l) + out * in, out) = delta.rowwise().sum();
    if (l > 0) {
      Matrix back = weight(l).transpose() * delta;
      delta = back.array() * (1.0 - tape.acts[l].array().square());
    } else if (inputGrad) {
      *inputGrad = weight(0).transpose() * delta;
    }
  }
  return grad;
}

void FeedForwardNet::xavierInit(std::uint64_t seed) {
  Rng rng(seed);
  for (int l = 0; l < numLayers(); ++l) {
    const double bound = std::sqrt(6.0 / (dims_[l] + dims_[l + 1]));
    auto W = weight(l);
    for (Index i = 0; i < W.rows(); ++i)
      for (Index j = 0; j < W.cols(); ++j) W(i, j) = rng.uniform(-bound, bound);
    bias(l).setZero();
  }
}

void adam_step(Vector& params, const Vector& grads, AdamState& state, const AdamConfig& config) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw Error(ErrorCode::DimMismatch, "Adam state, parameters and gradients differ in length");
  ++state.step;
  state.m = config.beta1 * state.m + (1.0 - config.beta1) * grads;
  state.v = config.beta2 * state.v + (1.0 - config.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  params.array() -=
      config.learningRate * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + config.eps);
}

}  // namespace invot
