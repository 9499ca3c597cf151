#include "invot/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "invot/bcd.hpp"
#include "invot/continuous.hpp"
#include "invot/inverse.hpp"
#include "invot/io.hpp"
#include "invot/sinkhorn.hpp"
#include "invot/synth.hpp"

namespace invot::cli {

namespace {

using nlohmann::json;

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double toDouble(const std::string& s, const std::string& what) {
  try {
    return parse_double(s);
  } catch (const Error&) {
    throw Error(ErrorCode::InvalidArgument, what + ": '" + s + "' is not a number");
  }
}

ScalingMode parseMode(const std::string& s) {
  if (s == "auto") return ScalingMode::Auto;
  if (s == "direct") return ScalingMode::Direct;
  if (s == "log") return ScalingMode::Log;
  throw Error(ErrorCode::InvalidArgument, "unknown --mode '" + s + "'");
}

json header(const std::string& command) {
  return {{"command", command}, {"rng", Rng::kAlgorithm}};
}

std::vector<std::vector<double>> traceRows(const SolveReport& r) {
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < r.loggedIterations.size(); ++k) {
    std::vector<double> row{static_cast<double>(r.loggedIterations[k]), r.objectiveTrace[k],
                            r.feasibilityTrace[k]};
    if (r.relErrTrace) row.push_back((*r.relErrTrace)[k]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> traceHeader(const SolveReport& r) {
  std::vector<std::string> h{"iteration", "objective", "feasibility"};
  if (r.relErrTrace) h.emplace_back("relerr");
  return h;
}

// ---------------------------------------------------------------------------
// forward

struct ForwardOptions {
  std::string cost, mu, nu, out, mode = "auto";
  double epsilon = 1.0;
  double tol = 1e-9;
  int maxIter = 10000;
};

int cmdForward(const ForwardOptions& o) {
  const CostMatrix cost(read_matrix_csv(o.cost));
  const ProbabilityVector mu = read_probability_csv(o.mu);
  const ProbabilityVector nu = read_probability_csv(o.nu);
  SolverConfig cfg;
  cfg.epsilon = o.epsilon;
  cfg.tol = o.tol;
  cfg.maxIter = o.maxIter;
  cfg.mode = parseMode(o.mode);
  cfg.throwOnNotConverged = false;
  const SinkhornResult res = sinkhorn_solve(cost, mu, nu, cfg);

  const fs::path out(o.out);
  write_matrix_csv(out / "plan.csv", res.plan.matrix());
  Vector duals(res.duals.alpha.size() + res.duals.beta.size());
  duals << res.duals.alpha, res.duals.beta;
  write_vector_csv(out / "duals.csv", duals);
  json j = header("forward");
  j["inputs"] = {{"cost", o.cost}, {"mu", o.mu}, {"nu", o.nu}};
  j["config"] = to_json(cfg);
  j["report"] = to_json(res.report);
  j["m"] = cost.rows();
  j["n"] = cost.cols();
  j["dualObjective"] = res.dualObjective;
  j["rowResidual"] = res.plan.rowResidual();
  j["colResidual"] = res.plan.colResidual();
  write_json(out / "report.json", j);
  if (!res.report.converged) {
    std::cerr << "forward: not converged after " << res.report.iterations << " iterations\n";
    return kNotConverged;
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  int n = 100;
  double p = 2.0;
  double epsilon = 0.1;
  std::uint64_t seed = 0;
  bool uniform = false;
  Index pairs = 0;
  std::string out;
};

int cmdSynth(const SynthOptions& o) {
  SyntheticSpec spec{o.n, o.p, o.epsilon, o.seed};
  const CostMatrix cost = synth_cost(spec);
  auto [mu, nu] = o.uniform ? std::pair{ProbabilityVector(Vector::Constant(o.n, 1.0 / o.n)),
                                        ProbabilityVector(Vector::Constant(o.n, 1.0 / o.n))}
                            : synth_marginals(o.n, o.n, o.seed);
  SolverConfig cfg;
  cfg.epsilon = o.epsilon;
  cfg.tol = 1e-12;
  cfg.maxIter = 200000;
  const SinkhornResult res = sinkhorn_solve(cost, mu, nu, cfg);

  const fs::path out(o.out);
  write_matrix_csv(out / "cost.csv", cost.matrix());
  write_vector_csv(out / "mu.csv", mu.values());
  write_vector_csv(out / "nu.csv", nu.values());
  write_matrix_csv(out / "plan.csv", res.plan.matrix());
  json j = header("synth");
  j["spec"] = {{"n", o.n}, {"p", o.p}, {"epsilon", o.epsilon}, {"seed", o.seed},
               {"uniformMarginals", o.uniform}};
  j["forward"] = to_json(res.report);
  j["forwardConfig"] = to_json(cfg);
  if (o.pairs > 0) {
    const Matrix grid = uniform_grid(o.n);
    write_pairs_csv(out / "pairs.csv", sample_pairs(res.plan, grid, grid, o.pairs, o.seed));
    j["pairs"] = {{"count", o.pairs}, {"support", "cell midpoints of [0, 1]"}, {"dimX", 1}};
  }
  write_json(out / "report.json", j);
  return kSuccess;
}

// ---------------------------------------------------------------------------
// inverse and bcd

struct InverseOptions {
  std::string plan, truth, out, algo = "scaling", mode = "auto", costStep = "auto";
  std::vector<std::string> constraints;
  double epsilon = 1.0;
  double tol = 1e-9;
  int maxIter = 500;
  int logEvery = 1;
  bool smoothZeros = false;
  double costBound = 2.0;
  int innerSteps = 50;
};

int cmdInverse(const InverseOptions& o) {
  if (o.algo != "scaling" && o.algo != "bcd")
    throw Error(ErrorCode::InvalidArgument, "--algo must be scaling or bcd");
  const ConstraintSpec constraint = parse_constraints(o.constraints);
  SolverConfig cfg;
  cfg.epsilon = o.epsilon;
  cfg.tol = o.tol;
  cfg.maxIter = o.maxIter;
  cfg.logEvery = o.logEvery;
  cfg.mode = parseMode(o.mode);
  cfg.throwOnNotConverged = false;
  InverseProblem problem(read_matrix_csv(o.plan), constraint, cfg, 1.0,
                         o.smoothZeros ? ZeroPolicy::Smooth : ZeroPolicy::Reject);
  if (!o.truth.empty()) problem.setTruth(CostMatrix(read_matrix_csv(o.truth)));

  json j = header(o.algo == "bcd" ? "bcd" : "inverse");
  InverseSolution sol = [&] {
    if (o.algo == "scaling") return learn_cost(problem);
    BcdOptions bo;
    bo.costBound = o.costBound;
    bo.innerSteps = o.innerSteps;
    if (o.costStep == "exact") bo.costStep = CostStep::Exact;
    else if (o.costStep == "pg") bo.costStep = CostStep::ProjectedGradient;
    else if (o.costStep != "auto")
      throw Error(ErrorCode::InvalidArgument, "--cost-step must be auto, exact or pg");
    j["bcd"] = {{"costBound", bo.costBound},
                {"costStep", o.costStep},
                {"exactCostStep", bo.costStep == CostStep::Exact ||
                                      (bo.costStep == CostStep::Auto && bcd_exact_c_supported(problem))},
                {"innerSteps", bo.innerSteps}};
    return bcd_solve(problem, bo);
  }();

  const fs::path out(o.out);
  write_matrix_csv(out / "cost.csv", sol.cost.matrix());
  if (sol.affinity) write_matrix_csv(out / "affinity.csv", *sol.affinity);
  write_table_csv(out / "trace.csv", traceHeader(sol.report), traceRows(sol.report));
  j["inputs"] = {{"plan", o.plan}, {"truth", o.truth}};
  j["algo"] = o.algo;
  j["constraint"] = constraint.describe();
  j["smoothZeros"] = o.smoothZeros;
  j["config"] = to_json(cfg);
  j["report"] = to_json(sol.report);
  write_json(out / "report.json", j);
  if (!sol.report.converged) {
    std::cerr << j["command"].get<std::string>() << ": not converged after "
              << sol.report.iterations << " iterations\n";
    return kNotConverged;
  }
  return kSuccess;
}

// ---------------------------------------------------------------------------
// train-continuous

struct TrainOptions {
  std::string pairs, out, inputMode = "absdiff", hidden = "20,20,20", box = "0:1",
                          costOutput = "identity";
  int dimX = 0;
  int epochs = 1000;
  double lr = 1e-4;
  Index ns = 1000;
  Index batch = 0;
  std::uint64_t seed = 0;
  double epsilon = 1.0;
  double costL2 = 0.0;
};

InputMode parseInputMode(const std::string& s, Vector& scale, bool& learn, Index dim) {
  const auto parts = split(s, ':');
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "empty --input-mode");
  if (parts[0] == "raw" && parts.size() == 1) return InputMode::RawPair;
  if (parts[0] == "absdiff" && parts.size() == 1) return InputMode::AbsDiff;
  if (parts[0] == "scaleddiff" && (parts.size() == 2 || parts.size() == 3)) {
    scale = Vector::Constant(dim, toDouble(parts[1], "--input-mode scale"));
    learn = parts.size() == 3;
    if (learn && parts[2] != "learn")
      throw Error(ErrorCode::InvalidArgument, "scaleddiff takes S or S:learn");
    return InputMode::ScaledDiff;
  }
  throw Error(ErrorCode::InvalidArgument, "--input-mode must be raw, absdiff or scaleddiff:S[:learn]");
}

DomainBox parseBox(const std::string& s, Index dim) {
  DomainBox box;
  for (const auto& item : split(s, ',')) {
    const auto lohi = split(item, ':');
    if (lohi.size() != 2) throw Error(ErrorCode::InvalidArgument, "--box entries are LO:HI");
    box.bounds.emplace_back(toDouble(lohi[0], "--box"), toDouble(lohi[1], "--box"));
  }
  if (box.dim() == 1 && dim > 1) box.bounds.assign(static_cast<std::size_t>(dim), box.bounds[0]);
  if (box.dim() != dim)
    throw Error(ErrorCode::DimMismatch, "--box needs 1 or " + std::to_string(dim) + " entries");
  box.validate();
  return box;
}

struct GridPoints {
  Matrix X;
  Matrix Y;
  Vector xi;
};

/// Points with x - y = xi * 1 centred in the box, xi from 0 to the narrowest x width.
GridPoints gridPoints(const CostModel& cost, const DomainBox& box, int points) {
  const Index dX = cost.dimX();
  const Index dY = cost.dimY();
  double width = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < dX; ++k) {
    const auto [lo, hi] = box.bounds[static_cast<std::size_t>(k)];
    width = std::min(width, hi - lo);
  }
  GridPoints g{Matrix(dX, points), Matrix(dY, points), Vector::LinSpaced(points, 0.0, width)};
  for (int s = 0; s < points; ++s) {
    for (Index k = 0; k < dX; ++k) {
      const auto [lo, hi] = box.bounds[static_cast<std::size_t>(k)];
      g.X(k, s) = 0.5 * (lo + hi) + 0.5 * g.xi[s];
    }
    for (Index k = 0; k < dY; ++k) {
      const auto [lo, hi] = box.bounds[static_cast<std::size_t>(dX + k)];
      g.Y(k, s) = 0.5 * (lo + hi) - (k < dX ? 0.5 * g.xi[s] : 0.0);
    }
  }
  return g;
}

std::vector<std::vector<double>> gridEval(const CostModel& cost, const DomainBox& box, int points) {
  const GridPoints g = gridPoints(cost, box, points);
  const Vector c = eval_cost_on_grid(cost, g.X, g.Y);
  std::vector<std::vector<double>> rows;
  for (int s = 0; s < points; ++s) rows.push_back({g.xi[s], c[s]});
  return rows;
}

int cmdTrain(const TrainOptions& o) {
  const Matrix raw = read_matrix_csv(o.pairs);
  const Index dX = o.dimX > 0 ? o.dimX : raw.cols() / 2;
  if (o.dimX == 0 && raw.cols() % 2 != 0)
    throw Error(ErrorCode::DimMismatch, "odd pair width; pass --dim-x");
  const SampleSet data = read_pairs_csv(o.pairs, dX);

  std::vector<int> hidden;
  for (const auto& h : split(o.hidden, ',')) hidden.push_back(static_cast<int>(toDouble(h, "--hidden")));
  Vector scale;
  bool learn = false;
  const InputMode mode = parseInputMode(o.inputMode, scale, learn, dX);

  TrainConfig tc;
  tc.learningRate = o.lr;
  tc.nCollocation = o.ns;
  tc.batchSize = o.batch;
  tc.epochs = o.epochs;
  tc.seed = o.seed;
  tc.epsilon = o.epsilon;
  tc.costL2 = o.costL2;
  tc.domainBox = parseBox(o.box, data.dimX() + data.dimY());

  ContinuousModel model =
      make_model(static_cast<int>(data.dimX()), static_cast<int>(data.dimY()), hidden, mode,
                 activation_from_string(o.costOutput), o.seed, scale, learn);
  const TrainResult res = train(data, std::move(model), tc);

  const fs::path out(o.out);
  write_checkpoint(out / "checkpoint.json", res.model, tc);
  std::vector<std::vector<double>> loss;
  for (std::size_t k = 0; k < res.report.objectiveTrace.size(); ++k)
    loss.push_back({static_cast<double>(res.report.loggedIterations[k]), res.report.objectiveTrace[k]});
  write_table_csv(out / "loss-trace.csv", {"epoch", "loss"}, loss);
  write_table_csv(out / "grid-eval.csv", {"xi", "cost"}, gridEval(res.model.cost, tc.domainBox, 100));
  json j = header("train-continuous");
  j["inputs"] = {{"pairs", o.pairs}, {"dimX", data.dimX()}, {"dimY", data.dimY()}};
  j["inputMode"] = o.inputMode;
  j["hidden"] = hidden;
  j["costOutput"] = o.costOutput;
  j["trainConfig"] = to_json(tc);
  j["steps"] = res.steps;
  j["report"] = to_json(res.report);
  write_json(out / "report.json", j);
  return kSuccess;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string cost, truth, checkpoint, points, out;
  int dimX = 0;
  double truthP = 0.0;
};

int cmdEval(const EvalOptions& o) {
  json j = header("eval");
  const fs::path out(o.out);
  if (!o.cost.empty()) {
    if (o.truth.empty()) throw Error(ErrorCode::InvalidArgument, "--cost needs --truth");
    const Matrix c = read_matrix_csv(o.cost);
    const Matrix t = read_matrix_csv(o.truth);
    j["inputs"] = {{"cost", o.cost}, {"truth", o.truth}};
    j["relativeError"] = relative_error(c, t);
  } else if (!o.checkpoint.empty()) {
    const Checkpoint ck = read_checkpoint(o.checkpoint);
    const CostModel& cost = ck.model.cost;
    Matrix X, Y;
    if (!o.points.empty()) {
      const SampleSet pts = read_pairs_csv(o.points, o.dimX > 0 ? o.dimX : cost.dimX());
      X = pts.x;
      Y = pts.y;
    } else {
      GridPoints g = gridPoints(cost, ck.config.domainBox, 100);
      X = std::move(g.X);
      Y = std::move(g.Y);
    }
    const Vector c = eval_cost_on_grid(cost, X, Y);
    std::vector<std::vector<double>> rows;
    std::vector<std::string> head;
    for (Index k = 0; k < X.rows(); ++k) head.push_back("x" + std::to_string(k + 1));
    for (Index k = 0; k < Y.rows(); ++k) head.push_back("y" + std::to_string(k + 1));
    head.emplace_back("cost");
    for (Index s = 0; s < X.cols(); ++s) {
      std::vector<double> row(X.col(s).data(), X.col(s).data() + X.rows());
      row.insert(row.end(), Y.col(s).data(), Y.col(s).data() + Y.rows());
      row.push_back(c[s]);
      rows.push_back(std::move(row));
    }
    write_table_csv(out / "eval.csv", head, rows);
    j["inputs"] = {{"checkpoint", o.checkpoint}, {"points", o.points}};
    j["count"] = X.cols();
    if (o.truthP != 0.0) {
      if (X.rows() != Y.rows())
        throw Error(ErrorCode::DimMismatch, "--truth-p needs dim(x) == dim(y)");
      const Vector truth = (X - Y).colwise().norm().array().pow(o.truthP).transpose();
      j["truthP"] = o.truthP;
      j["correlation"] = pearson_correlation(c, truth);
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "eval needs --cost/--truth or --checkpoint");
  }
  write_json(out / "metrics.json", j);
  std::cout << j.dump(2) << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------------------
// bench

struct BenchOptions {
  std::string suite = "fig1", out;
  std::vector<int> sizes{128, 256, 512};
  std::vector<double> ps{2.0};
  std::vector<double> epsilons{0.1};
  int reps = 20;
  double targetErr = 5e-2;
  int maxIter = 5000;
  std::uint64_t seed = 0;
};

int cmdBench(const BenchOptions& o) {
  if (o.suite != "fig1") throw Error(ErrorCode::InvalidArgument, "only --suite fig1 is available");
  if (o.reps < 1) throw Error(ErrorCode::InvalidArgument, "--reps must be >= 1");
  std::vector<std::vector<double>> summary, traces;
  bool failed = false;
  for (double p : o.ps)
    for (double eps : o.epsilons)
      for (int n : o.sizes) {
        double seconds = 0.0, iters = 0.0, finalErr = 0.0;
        std::vector<std::vector<double>> objSum, errSum;
        std::size_t common = std::numeric_limits<std::size_t>::max();
        std::vector<SolveReport> reports;
        for (int r = 0; r < o.reps; ++r) {
          const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(r);
          const SyntheticSpec spec{n, p, eps, seed};
          const CostMatrix truth = synth_cost(spec);
          const auto [mu, nu] = synth_marginals(n, n, seed);
          SolverConfig fwd;
          fwd.epsilon = eps;
          fwd.tol = 1e-12;
          fwd.maxIter = 200000;
          const SinkhornResult plan = sinkhorn_solve(truth, mu, nu, fwd);
          SolverConfig cfg;
          cfg.epsilon = eps;
          cfg.maxIter = o.maxIter;
          cfg.targetRelErr = o.targetErr;
          cfg.throwOnNotConverged = false;
          InverseProblem problem(plan.plan, SymmetricZeroDiag{}, cfg);
          problem.setTruth(truth);
          const InverseSolution sol = learn_cost(problem);
          const double err = sol.report.relErrTrace->back();
          if (err > o.targetErr) {
            failed = true;
            std::cerr << "bench: p=" << p << " eps=" << eps << " n=" << n << " rep " << r
                      << " stopped at rel-err " << err << '\n';
          }
          seconds += sol.report.wallClockSeconds;
          iters += sol.report.iterations;
          finalErr += err;
          common = std::min(common, sol.report.loggedIterations.size());
          reports.push_back(sol.report);
        }
        summary.push_back({p, eps, static_cast<double>(n), static_cast<double>(o.reps),
                           seconds / o.reps, iters / o.reps, finalErr / o.reps});
        for (std::size_t k = 0; k < common; ++k) {
          double obj = 0.0, err = 0.0;
          for (const auto& rep : reports) {
            obj += rep.objectiveTrace[k];
            err += (*rep.relErrTrace)[k];
          }
          traces.push_back({p, eps, static_cast<double>(n),
                            static_cast<double>(reports.front().loggedIterations[k]),
                            obj / o.reps, err / o.reps});
        }
      }
  const fs::path out(o.out);
  write_table_csv(out / "bench.csv",
                  {"p", "epsilon", "n", "reps", "mean_seconds", "mean_iterations", "mean_final_relerr"},
                  summary);
  write_table_csv(out / "traces.csv", {"p", "epsilon", "n", "iteration", "mean_objective", "mean_relerr"},
                  traces);
  json j = header("bench");
  j["suite"] = o.suite;
  j["sizes"] = o.sizes;
  j["ps"] = o.ps;
  j["epsilons"] = o.epsilons;
  j["reps"] = o.reps;
  j["targetErr"] = o.targetErr;
  j["maxIter"] = o.maxIter;
  j["seed"] = o.seed;
  j["failed"] = failed;
  write_json(out / "report.json", j);
  return failed ? kNotConverged : kSuccess;
}

int exitCodeFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::ZeroObservation: return kZeroObservation;
    case ErrorCode::NotConverged:
    case ErrorCode::Diverged: return kNotConverged;
    default: return kInputError;
  }
}

}  // namespace

ConstraintSpec parse_constraint(const std::string& token) {
  const auto parts = split(token, ':');
  if (parts.size() == 1 && parts[0] == "sym0") return SymmetricZeroDiag{};
  if (parts.size() == 3 && parts[0] == "box")
    return Box{toDouble(parts[1], "box lower bound"), toDouble(parts[2], "box upper bound")};
  if ((parts.size() == 3 || parts.size() == 4) && parts[0] == "affinity") {
    int sign = 1;
    if (parts.size() == 4) {
      if (parts[3] == "+") sign = 1;
      else if (parts[3] == "-") sign = -1;
      else throw Error(ErrorCode::InvalidArgument, "affinity sign must be + or -");
    }
    return LinearAffinity(read_matrix_csv(parts[1]), read_matrix_csv(parts[2]), sign);
  }
  throw Error(ErrorCode::InvalidArgument,
              "malformed constraint '" + token + "' (sym0 | box:LO:HI | affinity:G:D[:+|-])");
}

ConstraintSpec parse_constraints(const std::vector<std::string>& tokens) {
  if (tokens.empty()) return NoConstraint{};
  if (tokens.size() == 1) return parse_constraint(tokens[0]);
  Composite c;
  for (const auto& t : tokens) c.parts.push_back(parse_constraint(t));
  return c;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Inverse optimal transport: forward solves, cost recovery and continuous cost learning",
               "invot"};
  app.require_subcommand(1);

  ForwardOptions fo;
  auto* forward = app.add_subcommand("forward", "Entropic OT plan for a cost and two marginals");
  forward->add_option("--cost", fo.cost, "cost matrix CSV")->required();
  forward->add_option("--mu", fo.mu, "row marginal CSV")->required();
  forward->add_option("--nu", fo.nu, "column marginal CSV")->required();
  forward->add_option("--epsilon", fo.epsilon, "regularization")->capture_default_str();
  forward->add_option("--tol", fo.tol, "L1 row residual tolerance")->capture_default_str();
  forward->add_option("--max-iter", fo.maxIter)->capture_default_str();
  forward->add_option("--mode", fo.mode, "auto | direct | log")->capture_default_str();
  forward->add_option("--out", fo.out, "output directory")->required();

  SynthOptions so;
  auto* synth = app.add_subcommand("synth", "Synthetic instance c_ij = |(i-j)/n|^p and its plan");
  synth->add_option("--n", so.n)->capture_default_str();
  synth->add_option("--p", so.p)->capture_default_str();
  synth->add_option("--epsilon", so.epsilon)->capture_default_str();
  synth->add_option("--seed", so.seed)->capture_default_str();
  synth->add_flag("--uniform-marginals", so.uniform, "uniform instead of random marginals");
  synth->add_option("--pairs", so.pairs, "also sample this many (x, y) pairs on the cell grid");
  synth->add_option("--out", so.out)->required();

  InverseOptions io;
  auto addInverse = [&](CLI::App* sub, bool withAlgo) {
    sub->add_option("--plan", io.plan, "observed plan CSV")->required();
    sub->add_option("--constraint", io.constraints, "sym0 | box:LO:HI | affinity:G:D[:+|-] (repeatable)");
    if (withAlgo) sub->add_option("--algo", io.algo, "scaling | bcd")->capture_default_str();
    sub->add_option("--epsilon", io.epsilon)->capture_default_str();
    sub->add_option("--tol", io.tol)->capture_default_str();
    sub->add_option("--max-iter", io.maxIter)->capture_default_str();
    sub->add_option("--log-every", io.logEvery)->capture_default_str();
    sub->add_option("--mode", io.mode, "auto | direct | log")->capture_default_str();
    sub->add_option("--truth", io.truth, "ground-truth cost CSV for rel-err tracing");
    sub->add_flag("--smooth-zeros", io.smoothZeros, "replace zero observations by 1e-12");
    sub->add_option("--cost-bound", io.costBound, "M_c for bcd")->capture_default_str();
    sub->add_option("--cost-step", io.costStep, "bcd c-step: auto | exact | pg")->capture_default_str();
    sub->add_option("--inner-steps", io.innerSteps, "bcd projected-gradient steps")->capture_default_str();
    sub->add_option("--out", io.out)->required();
  };
  auto* inverse = app.add_subcommand("inverse", "Recover a cost from an observed plan");
  addInverse(inverse, true);
  auto* bcd = app.add_subcommand("bcd", "Block coordinate descent cost recovery");
  addInverse(bcd, false);

  TrainOptions to;
  auto* trainCmd = app.add_subcommand("train-continuous", "Learn a cost function from paired samples");
  trainCmd->add_option("--pairs", to.pairs, "pair CSV (x coords then y coords)")->required();
  trainCmd->add_option("--dim-x", to.dimX, "x dimension (default: half the columns)");
  trainCmd->add_option("--input-mode", to.inputMode, "raw | absdiff | scaleddiff:S[:learn]")
      ->capture_default_str();
  trainCmd->add_option("--hidden", to.hidden)->capture_default_str();
  trainCmd->add_option("--cost-output", to.costOutput, "identity | relu | softplus")->capture_default_str();
  trainCmd->add_option("--epochs", to.epochs)->capture_default_str();
  trainCmd->add_option("--lr", to.lr)->capture_default_str();
  trainCmd->add_option("--ns", to.ns, "collocation points per step")->capture_default_str();
  trainCmd->add_option("--batch", to.batch, "pairs per step, 0 = auto")->capture_default_str();
  trainCmd->add_option("--box", to.box, "LO:HI per coordinate, or one for all")->capture_default_str();
  trainCmd->add_option("--seed", to.seed)->capture_default_str();
  trainCmd->add_option("--epsilon", to.epsilon, "nominal epsilon recorded for rescaling")
      ->capture_default_str();
  trainCmd->add_option("--cost-l2", to.costL2)->capture_default_str();
  trainCmd->add_option("--out", to.out)->required();

  EvalOptions eo;
  auto* eval = app.add_subcommand("eval", "Score a recovered cost");
  eval->add_option("--cost", eo.cost, "recovered cost CSV");
  eval->add_option("--truth", eo.truth, "ground-truth cost CSV");
  eval->add_option("--checkpoint", eo.checkpoint, "continuous checkpoint JSON");
  eval->add_option("--points", eo.points, "pair CSV of evaluation points");
  eval->add_option("--dim-x", eo.dimX);
  eval->add_option("--truth-p", eo.truthP, "correlate with |x - y|^p");
  eval->add_option("--out", eo.out)->required();

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench", "Time-to-target sweeps over synthetic instances");
  bench->add_option("--suite", bo.suite)->capture_default_str();
  bench->add_option("--sizes", bo.sizes)->delimiter(',')->capture_default_str();
  bench->add_option("--p", bo.ps)->delimiter(',')->capture_default_str();
  bench->add_option("--epsilons", bo.epsilons)->delimiter(',')->capture_default_str();
  bench->add_option("--reps", bo.reps)->capture_default_str();
  bench->add_option("--target-err", bo.targetErr)->capture_default_str();
  bench->add_option("--max-iter", bo.maxIter)->capture_default_str();
  bench->add_option("--seed", bo.seed)->capture_default_str();
  bench->add_option("--out", bo.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    if (forward->parsed()) return cmdForward(fo);
    if (synth->parsed()) return cmdSynth(so);
    if (inverse->parsed()) return cmdInverse(io);
    if (bcd->parsed()) {
      io.algo = "bcd";
      return cmdInverse(io);
    }
    if (trainCmd->parsed()) return cmdTrain(to);
    if (eval->parsed()) return cmdEval(eo);
    if (bench->parsed()) return cmdBench(bo);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exitCodeFor(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"invot"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace invot::cli
