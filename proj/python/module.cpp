#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "invot/bcd.hpp"
#include "invot/continuous.hpp"
#include "invot/inverse.hpp"
#include "invot/sinkhorn.hpp"
#include "invot/synth.hpp"

namespace py = pybind11;
using namespace invot;

namespace {

ScalingMode parseMode(const std::string& s) {
  if (s == "auto") return ScalingMode::Auto;
  if (s == "direct") return ScalingMode::Direct;
  if (s == "log") return ScalingMode::Log;
  throw Error(ErrorCode::InvalidArgument, "mode must be auto, direct or log");
}

ConstraintSpec parseConstraint(const std::string& s) {
  if (s.empty() || s == "none") return NoConstraint{};
  if (s == "sym0") return SymmetricZeroDiag{};
  throw Error(ErrorCode::InvalidArgument, "constraint must be 'none' or 'sym0' (use box= for bounds)");
}

ConstraintSpec buildConstraint(const std::string& name, const std::optional<std::pair<double, double>>& box) {
  ConstraintSpec base = parseConstraint(name);
  if (!box) return base;
  Box b{box->first, box->second};
  if (std::holds_alternative<NoConstraint>(base.variant())) return b;
  return Composite{{base, ConstraintSpec(b)}};
}

SolverConfig config(double epsilon, int maxIter, double tol, const std::string& mode) {
  SolverConfig c;
  c.epsilon = epsilon;
  c.maxIter = maxIter;
  c.tol = tol;
  c.mode = parseMode(mode);
  c.throwOnNotConverged = false;
  return c;
}

py::dict reportDict(const SolveReport& r) {
  py::dict d;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["log_domain"] = r.logDomain;
  d["objective_trace"] = r.objectiveTrace;
  d["feasibility_trace"] = r.feasibilityTrace;
  if (r.relErrTrace) d["relerr_trace"] = *r.relErrTrace;
  d["seconds"] = r.wallClockSeconds;
  return d;
}

py::dict inverseDict(const InverseSolution& s) {
  py::dict d = reportDict(s.report);
  d["cost"] = s.cost.matrix();
  d["alpha"] = s.duals.alpha;
  d["beta"] = s.duals.beta;
  if (s.affinity) d["affinity"] = *s.affinity;
  return d;
}

}  // namespace

PYBIND11_MODULE(_invot, m) {
  m.doc() = "Entropic optimal transport and inverse cost recovery";

  py::register_exception<Error>(m, "InvotError", PyExc_RuntimeError);

  m.def(
      "sinkhorn",
      [](const Matrix& cost, const Vector& mu, const Vector& nu, double epsilon, double tol,
         int maxIter, const std::string& mode) {
        const SinkhornResult r = sinkhorn_solve(CostMatrix(cost), ProbabilityVector(mu, 1e-10),
                                                ProbabilityVector(nu, 1e-10),
                                                config(epsilon, maxIter, tol, mode));
        py::dict d = reportDict(r.report);
        d["plan"] = r.plan.matrix();
        d["alpha"] = r.duals.alpha;
        d["beta"] = r.duals.beta;
        d["dual_objective"] = r.dualObjective;
        return d;
      },
      py::arg("cost"), py::arg("mu"), py::arg("nu"), py::arg("epsilon") = 1.0,
      py::arg("tol") = 1e-9, py::arg("max_iter") = 10000, py::arg("mode") = "auto",
      "Entropic OT plan; returns plan, duals and the solve report.");

  m.def(
      "learn_cost",
      [](const Matrix& plan, const std::string& constraint,
         std::optional<std::pair<double, double>> box, double epsilon, int maxIter, double tol,
         std::optional<Matrix> truth, const std::string& mode, bool smoothZeros) {
        InverseProblem p(plan, buildConstraint(constraint, box), config(epsilon, maxIter, tol, mode),
                         1.0, smoothZeros ? ZeroPolicy::Smooth : ZeroPolicy::Reject);
        if (truth) p.setTruth(CostMatrix(*truth));
        return inverseDict(learn_cost(p));
      },
      py::arg("plan"), py::arg("constraint") = "sym0", py::arg("box") = py::none(),
      py::arg("epsilon") = 1.0, py::arg("max_iter") = 500, py::arg("tol") = 1e-9,
      py::arg("truth") = py::none(), py::arg("mode") = "auto", py::arg("smooth_zeros") = false,
      "Matrix-scaling cost recovery from an observed plan.");

  m.def(
      "bcd",
      [](const Matrix& plan, const std::string& constraint,
         std::optional<std::pair<double, double>> box, double epsilon, int maxIter, double tol,
         double costBound, std::optional<Matrix> truth) {
        InverseProblem p(plan, buildConstraint(constraint, box), config(epsilon, maxIter, tol, "auto"));
        if (truth) p.setTruth(CostMatrix(*truth));
        BcdOptions o;
        o.costBound = costBound;
        return inverseDict(bcd_solve(p, o));
      },
      py::arg("plan"), py::arg("constraint") = "sym0", py::arg("box") = py::none(),
      py::arg("epsilon") = 1.0, py::arg("max_iter") = 1000, py::arg("tol") = 1e-9,
      py::arg("cost_bound") = 2.0, py::arg("truth") = py::none(),
      "Block coordinate descent cost recovery.");

  m.def(
      "objective_E",
      [](const Vector& alpha, const Vector& beta, const Matrix& cost, const Matrix& plan, double epsilon) {
        return objective_E(alpha, beta, CostMatrix(cost), InverseProblem(plan, NoConstraint{}, config(epsilon, 1, 0.5, "auto")));
      },
      py::arg("alpha"), py::arg("beta"), py::arg("cost"), py::arg("plan"), py::arg("epsilon") = 1.0);

  m.def(
      "objective_F",
      [](const Vector& alpha, const Vector& beta, const Matrix& cost, const Matrix& plan, double epsilon) {
        return objective_F(alpha, beta, CostMatrix(cost), InverseProblem(plan, NoConstraint{}, config(epsilon, 1, 0.5, "auto")));
      },
      py::arg("alpha"), py::arg("beta"), py::arg("cost"), py::arg("plan"), py::arg("epsilon") = 1.0);

  m.def(
      "synth_cost", [](int n, double p) { return synth_cost(SyntheticSpec{n, p, 1.0, 0}).matrix(); },
      py::arg("n"), py::arg("p") = 2.0, "c_ij = |(i - j) / n|^p with a zero diagonal.");

  m.def(
      "synth_marginals",
      [](int mRows, int nCols, std::uint64_t seed) {
        auto [mu, nu] = synth_marginals(mRows, nCols, seed);
        return std::pair<Vector, Vector>(mu.values(), nu.values());
      },
      py::arg("m"), py::arg("n"), py::arg("seed") = 0);

  m.def("relative_error", [](const Matrix& c, const Matrix& truth) { return relative_error(c, truth); },
        py::arg("cost"), py::arg("truth"));

  m.def("prox_symmetric_zero_diag",
        [](const Matrix& c) { return prox_symmetric_zero_diag(CostMatrix(c)).matrix(); }, py::arg("cost"));

  m.def("pearson_correlation", &pearson_correlation, py::arg("a"), py::arg("b"));

  m.attr("rng_algorithm") = Rng::kAlgorithm;
}
