#include "invot/continuous.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>

namespace invot {

namespace {

constexpr double kDivergence = 1e8;
constexpr Index kFullBatchLimit = 10000;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

McEstimate summarize(const Vector& terms, double factor) {
  McEstimate e;
  const double n = static_cast<double>(terms.size());
  const double mean = terms.mean();
  e.value = factor * mean;
  if (terms.size() > 1) {
    const double var = (terms.array() - mean).square().sum() / (n - 1.0);
    e.stdError = factor * std::sqrt(var / n);
    e.cv = mean != 0.0 ? std::sqrt(var) / std::abs(mean) : std::numeric_limits<double>::infinity();
  }
  return e;
}

Matrix pick(const Matrix& M, const std::vector<Index>& idx, Index start, Index count) {
  Matrix out(M.rows(), count);
  for (Index k = 0; k < count; ++k) out.col(k) = M.col(idx[static_cast<std::size_t>(start + k)]);
  return out;
}

}  // namespace

std::string to_string(InputMode m) {
  switch (m) {
    case InputMode::RawPair: return "raw";
    case InputMode::AbsDiff: return "absdiff";
    case InputMode::ScaledDiff: return "scaleddiff";
  }
  return "unknown";
}

CostModel::CostModel(InputMode mode, int dimX, int dimY, const std::vector<int>& hidden,
                     Activation output, Vector scale, bool learnScale)
    : mode_(mode), dimX_(dimX), dimY_(dimY), scale_(std::move(scale)), learnScale_(learnScale) {
  if (dimX < 1 || dimY < 1) throw Error(ErrorCode::InvalidArgument, "sample dimensions must be >= 1");
  if (mode != InputMode::RawPair && dimX != dimY)
    throw Error(ErrorCode::DimMismatch, "difference encodings need dim(x) == dim(y)");
  if (mode == InputMode::ScaledDiff) {
    if (scale_.size() == 0) scale_ = Vector::Ones(dimX);
    if (scale_.size() != dimX)
      throw Error(ErrorCode::DimMismatch, "one scale entry per coordinate is required");
  } else {
    scale_.resize(0);
    learnScale_ = false;
  }
  net_ = FeedForwardNet::mlp(mode == InputMode::RawPair ? dimX + dimY : dimX, hidden, output);
}

Index CostModel::numParams() const {
  return net_.numParams() + (learnScale_ ? scale_.size() : 0);
}

Vector CostModel::params() const {
  Vector p(numParams());
  p.head(net_.numParams()) = net_.params();
  if (learnScale_) p.tail(scale_.size()) = scale_;
  return p;
}

void CostModel::setParams(const Vector& p) {
  if (p.size() != numParams()) throw Error(ErrorCode::DimMismatch, "cost parameter length mismatch");
  net_.setParams(p.head(net_.numParams()));
  if (learnScale_) scale_ = p.tail(scale_.size());
}

Matrix CostModel::features(const Matrix& X, const Matrix& Y) const {
  if (X.rows() != dimX_ || Y.rows() != dimY_ || X.cols() != Y.cols())
    throw Error(ErrorCode::DimMismatch, "sample blocks do not match the cost model");
  switch (mode_) {
    case InputMode::RawPair: {
      Matrix F(dimX_ + dimY_, X.cols());
      F.topRows(dimX_) = X;
      F.bottomRows(dimY_) = Y;
      return F;
    }
    case InputMode::AbsDiff: return (X - Y).cwiseAbs();
    case InputMode::ScaledDiff: return (X - scale_.asDiagonal() * Y).cwiseAbs();
  }
  return Matrix();
}

double CostModel::evaluate(const Vector& x, const Vector& y) const {
  return evaluate(Matrix(x), Matrix(y))(0);
}

Vector CostModel::evaluate(const Matrix& X, const Matrix& Y) const {
  return net_.forward(features(X, Y));
}

NetTape CostModel::record(const Matrix& X, const Matrix& Y) const {
  return net_.record(features(X, Y));
}

Vector CostModel::backward(const Matrix& X, const Matrix& Y, const Vector& w, Vector* outputs) const {
  const NetTape tape = record(X, Y);
  if (outputs) *outputs = tape.output();
  return backward(tape, X, Y, w);
}

Vector CostModel::backward(const NetTape& tape, const Matrix& X, const Matrix& Y,
                           const Vector& w) const {
  if (!learnScale_) return net_.backward(tape, w);
  Vector grad(numParams());
  Matrix inputGrad;
  grad.head(net_.numParams()) = net_.backward(tape, w, &inputGrad);
  for (Index k = 0; k < scale_.size(); ++k) {
    double g = 0.0;
    for (Index b = 0; b < X.cols(); ++b)
      g -= inputGrad(k, b) * sign(X(k, b) - scale_[k] * Y(k, b)) * Y(k, b);
    grad[net_.numParams() + k] = g;
  }
  return grad;
}

Index ContinuousModel::numParams() const {
  return alpha.numParams() + beta.numParams() + cost.numParams();
}

Vector ContinuousModel::params() const {
  Vector p(numParams());
  p << alpha.params(), beta.params(), cost.params();
  return p;
}

void ContinuousModel::setParams(const Vector& p) {
  if (p.size() != numParams()) throw Error(ErrorCode::DimMismatch, "model parameter length mismatch");
  const Index a = alpha.numParams();
  const Index b = beta.numParams();
  alpha.setParams(p.head(a));
  beta.setParams(p.segment(a, b));
  cost.setParams(p.tail(cost.numParams()));
}

Vector ContinuousModel::G(const Matrix& X, const Matrix& Y) const {
  return (alpha.forward(X) + beta.forward(Y) - cost.evaluate(X, Y)).array().exp();
}

ContinuousModel make_model(int dimX, int dimY, const std::vector<int>& hidden, InputMode mode,
                           Activation costOutput, std::uint64_t seed, Vector scale, bool learnScale) {
  ContinuousModel m{FeedForwardNet::mlp(dimX, hidden), FeedForwardNet::mlp(dimY, hidden),
                    CostModel(mode, dimX, dimY, hidden, costOutput, std::move(scale), learnScale)};
  Rng rng(seed);
  m.alpha.xavierInit(rng.next());
  m.beta.xavierInit(rng.next());
  m.cost.net().xavierInit(rng.next());
  return m;
}

double DomainBox::volume() const {
  double v = 1.0;
  for (const auto& [lo, hi] : bounds) v *= hi - lo;
  return v;
}

void DomainBox::validate() const {
  if (bounds.empty()) throw Error(ErrorCode::BadBounds, "domain box is empty");
  for (const auto& [lo, hi] : bounds)
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw Error(ErrorCode::BadBounds, "domain box intervals must be finite with lo < hi");
}

DomainBox DomainBox::unit(Index dim) {
  return DomainBox{std::vector<std::pair<double, double>>(static_cast<std::size_t>(dim), {0.0, 1.0})};
}

Index TrainConfig::resolvedBatch(Index nPairs) const {
  if (batchSize > 0) return std::min(batchSize, nPairs);
  return std::min(nPairs, kFullBatchLimit);
}

void TrainConfig::validate() const {
  if (!(learningRate > 0.0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (!(adamBeta1 >= 0.0 && adamBeta1 < 1.0 && adamBeta2 >= 0.0 && adamBeta2 < 1.0))
    throw Error(ErrorCode::InvalidArgument, "Adam betas must lie in [0, 1)");
  if (!(adamEps > 0.0)) throw Error(ErrorCode::InvalidArgument, "Adam eps must be positive");
  if (batchSize < 0) throw Error(ErrorCode::InvalidArgument, "batch size must be >= 0");
  if (nCollocation < 1) throw Error(ErrorCode::InvalidArgument, "need at least one collocation point");
  if (epochs < 1) throw Error(ErrorCode::InvalidArgument, "epochs must be >= 1");
  if (!(costL2 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "regularization weight must be >= 0");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  domainBox.validate();
}

std::pair<Matrix, Matrix> sample_box(const DomainBox& box, Index dimX, Index n, Rng& rng) {
  const Index d = box.dim();
  Matrix Z(d, n);
  for (Index s = 0; s < n; ++s)
    for (Index k = 0; k < d; ++k) {
      const auto& [lo, hi] = box.bounds[static_cast<std::size_t>(k)];
      Z(k, s) = rng.uniform(lo, hi);
    }
  return {Z.topRows(dimX), Z.bottomRows(d - dimX)};
}

McEstimate mc_integral_uniform(const Integrand& f, Index dimX, const DomainBox& box, Index Ns,
                               std::uint64_t seed) {
  box.validate();
  if (Ns < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  if (dimX < 1 || dimX >= box.dim()) throw Error(ErrorCode::DimMismatch, "bad x/y split of the box");
  Rng rng(seed);
  auto [X, Y] = sample_box(box, dimX, Ns, rng);
  return summarize(f(X, Y), box.volume());
}

McEstimate mc_integral_uniform(const ContinuousModel& model, const DomainBox& box, Index Ns,
                               std::uint64_t seed) {
  return mc_integral_uniform([&](const Matrix& X, const Matrix& Y) { return model.G(X, Y); },
                             model.alpha.inputDim(), box, Ns, seed);
}

McEstimate mc_integral_importance(const Integrand& f, Index dimX, const Vector& mean,
                                  const Matrix& cov, Index Ns, std::uint64_t seed) {
  const Index d = mean.size();
  if (cov.rows() != d || cov.cols() != d)
    throw Error(ErrorCode::DimMismatch, "covariance shape does not match the mean");
  if (dimX < 1 || dimX >= d) throw Error(ErrorCode::DimMismatch, "bad x/y split of the proposal");
  if (Ns < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success || !cov.isApprox(cov.transpose()))
    throw Error(ErrorCode::SingularCovariance, "proposal covariance is not positive definite");
  const Matrix L = llt.matrixL();
  const double logNorm =
      0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + L.diagonal().array().log().sum();
  for (Index k = 0; k < d; ++k)
    if (!(L(k, k) > 0.0))
      throw Error(ErrorCode::SingularCovariance, "proposal covariance is not positive definite");

  Rng rng(seed);
  Matrix Xi(d, Ns);
  for (Index s = 0; s < Ns; ++s)
    for (Index k = 0; k < d; ++k) Xi(k, s) = rng.normal();
  const Matrix Z = (L * Xi).colwise() + mean;
  const Vector logRho = (-0.5 * Xi.colwise().squaredNorm().array() - logNorm).transpose();
  const Vector terms = f(Z.topRows(dimX), Z.bottomRows(d - dimX)).array() * (-logRho.array()).exp();
  McEstimate e = summarize(terms, 1.0);
  if (!std::isfinite(e.value) || !(e.cv <= kMaxImportanceCv))
    throw Error(ErrorCode::HighVariance,
                "importance weights have coefficient of variation " + std::to_string(e.cv));
  return e;
}

McEstimate mc_integral_importance(const ContinuousModel& model, const Vector& mean,
                                  const Matrix& cov, Index Ns, std::uint64_t seed) {
  return mc_integral_importance([&](const Matrix& X, const Matrix& Y) { return model.G(X, Y); },
                                model.alpha.inputDim(), mean, cov, Ns, seed);
}

LossValue loss_eval(const ContinuousModel& model, const LossBatch& batch, double costL2) {
  if (batch.xMu.cols() == 0 || batch.yNu.cols() == 0 || batch.xPair.cols() == 0 ||
      batch.xCol.cols() == 0)
    throw Error(ErrorCode::InvalidArgument, "loss batches must be nonempty");
  LossValue v;
  v.regularizer = costL2 * model.cost.net().params().squaredNorm();
  v.alphaMean = model.alpha.forward(batch.xMu).mean();
  v.betaMean = model.beta.forward(batch.yNu).mean();
  v.costMean = model.cost.evaluate(batch.xPair, batch.yPair).mean();
  v.integral = batch.volume * model.G(batch.xCol, batch.yCol).mean();
  v.total = v.regularizer - v.alphaMean - v.betaMean + v.costMean + v.integral;
  return v;
}

LossValue loss_gradient(const ContinuousModel& model, const LossBatch& batch, double costL2,
                        Vector& grad) {
  if (batch.xMu.cols() == 0 || batch.yNu.cols() == 0 || batch.xPair.cols() == 0 ||
      batch.xCol.cols() == 0)
    throw Error(ErrorCode::InvalidArgument, "loss batches must be nonempty");
  const Index nMu = batch.xMu.cols();
  const Index nNu = batch.yNu.cols();
  const Index nPair = batch.xPair.cols();
  const Index nCol = batch.xCol.cols();

  const NetTape aMu = model.alpha.record(batch.xMu);
  const NetTape aCol = model.alpha.record(batch.xCol);
  const NetTape bNu = model.beta.record(batch.yNu);
  const NetTape bCol = model.beta.record(batch.yCol);
  const NetTape cPair = model.cost.record(batch.xPair, batch.yPair);
  const NetTape cCol = model.cost.record(batch.xCol, batch.yCol);

  const Vector G = (aCol.output() + bCol.output() - cCol.output()).array().exp();
  const Vector wCol = G * (batch.volume / static_cast<double>(nCol));

  LossValue v;
  const Index a = model.alpha.numParams();
  const Index b = model.beta.numParams();
  grad.resize(model.numParams());

  grad.head(a) = model.alpha.backward(aMu, Vector::Constant(nMu, -1.0 / nMu));
  grad.head(a) += model.alpha.backward(aCol, wCol);
  v.alphaMean = aMu.output().mean();

  grad.segment(a, b) = model.beta.backward(bNu, Vector::Constant(nNu, -1.0 / nNu));
  grad.segment(a, b) += model.beta.backward(bCol, wCol);
  v.betaMean = bNu.output().mean();

  auto gc = grad.tail(model.cost.numParams());
  gc = model.cost.backward(cPair, batch.xPair, batch.yPair, Vector::Constant(nPair, 1.0 / nPair));
  gc -= model.cost.backward(cCol, batch.xCol, batch.yCol, wCol);
  v.costMean = cPair.output().mean();
  const Index netParams = model.cost.net().numParams();
  gc.head(netParams) += 2.0 * costL2 * model.cost.net().params();

  v.regularizer = costL2 * model.cost.net().params().squaredNorm();
  v.integral = batch.volume * G.mean();
  v.total = v.regularizer - v.alphaMean - v.betaMean + v.costMean + v.integral;
  return v;
}

TrainResult train(const SampleSet& data, ContinuousModel model, const TrainConfig& config,
                  const EpochCallback& onEpoch) {
  config.validate();
  data.validate();
  const Index dX = data.dimX();
  if (model.alpha.inputDim() != dX || model.beta.inputDim() != data.dimY() ||
      model.cost.dimX() != dX || model.cost.dimY() != data.dimY())
    throw Error(ErrorCode::DimMismatch, "model dimensions do not match the samples");
  if (config.domainBox.dim() != dX + data.dimY())
    throw Error(ErrorCode::DimMismatch, "domain box must cover dim(x) + dim(y) coordinates");

  const auto start = std::chrono::steady_clock::now();
  const Index N = data.size();
  const Index B = config.resolvedBatch(N);
  const Matrix& mX = data.marginalX();
  const Matrix& mY = data.marginalY();
  const AdamConfig adam = config.adam();

  Rng rng(config.seed);
  Vector params = model.params();
  AdamState state(params.size());
  Vector grad;
  std::vector<Index> perm(static_cast<std::size_t>(N));
  std::iota(perm.begin(), perm.end(), Index{0});

  TrainResult result;
  LossBatch batch;
  batch.volume = config.domainBox.volume();
  const bool full = B == N && mX.cols() == N && mY.cols() == N;
  if (full) {
    batch.xPair = data.x;
    batch.yPair = data.y;
    batch.xMu = mX;
    batch.yNu = mY;
  }
  int epoch = 0;
  while (epoch < config.epochs) {
    ++epoch;
    if (B < N)
      for (Index k = N - 1; k > 0; --k) std::swap(perm[static_cast<std::size_t>(k)],
                                                  perm[static_cast<std::size_t>(rng.index(k + 1))]);
    double lossSum = 0.0;
    int steps = 0;
    for (Index s = 0; s < N; s += B) {
      const Index count = std::min(B, N - s);
      if (!full) {
        batch.xPair = pick(data.x, perm, s, count);
        batch.yPair = pick(data.y, perm, s, count);
        std::vector<Index> iu(static_cast<std::size_t>(count)), iv(static_cast<std::size_t>(count));
        for (auto& i : iu) i = rng.index(mX.cols());
        for (auto& i : iv) i = rng.index(mY.cols());
        batch.xMu = pick(mX, iu, 0, count);
        batch.yNu = pick(mY, iv, 0, count);
      }
      std::tie(batch.xCol, batch.yCol) = sample_box(config.domainBox, dX, config.nCollocation, rng);
      const LossValue v = loss_gradient(model, batch, config.costL2, grad);
      if (!std::isfinite(v.total) || std::abs(v.total) > kDivergence || !grad.allFinite())
        throw Error(ErrorCode::Diverged, "training diverged at epoch " + std::to_string(epoch) +
                                             " (loss " + std::to_string(v.total) + ")");
      adam_step(params, grad, state, adam);
      model.setParams(params);
      lossSum += v.total;
      ++steps;
      ++result.steps;
    }
    const double mean = lossSum / steps;
    result.report.objectiveTrace.push_back(mean);
    result.report.loggedIterations.push_back(epoch);
    if (onEpoch && !onEpoch(epoch, mean, model)) break;
  }
  result.report.iterations = epoch;
  result.report.converged = true;
  result.report.wallClockSeconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.model = std::move(model);
  return result;
}

Vector eval_cost_on_grid(const CostModel& cost, const Matrix& X, const Matrix& Y) {
  if (X.cols() == 0) throw Error(ErrorCode::InvalidArgument, "grid is empty");
  return cost.evaluate(X, Y);
}

double pearson_correlation(const Vector& a, const Vector& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw Error(ErrorCode::DimMismatch, "correlation needs two equal-length vectors");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double denom = da.norm() * db.norm();
  if (!(denom > 0.0)) return 0.0;
  return da.dot(db) / denom;
}

}  // namespace invot
