#include <doctest.h>

#include <cmath>

#include "invot/bcd.hpp"
#include "invot/sinkhorn.hpp"
#include "invot/synth.hpp"
#include "oracles.hpp"

using namespace invot;

namespace {

SolverConfig cfg(double eps, int maxIter, double tol = 1e-12) {
  SolverConfig c;
  c.epsilon = eps;
  c.maxIter = maxIter;
  c.tol = tol;
  c.throwOnNotConverged = false;
  return c;
}

SinkhornResult forward(const Matrix& c, const Vector& mu, const Vector& nu, double eps) {
  SolverConfig s;
  s.epsilon = eps;
  s.tol = 1e-14;
  s.maxIter = 500000;
  return sinkhorn_solve(CostMatrix(c), ProbabilityVector::normalized(mu), ProbabilityVector::normalized(nu), s);
}

Matrix normalizedPlan(oracle::Draw& d, int m, int n) {
  Matrix p = d.matrix(m, n, 0.05, 1.0);
  return p / p.sum();
}

// c-block objective at eps = 1 for fixed duals.
double cBlock(const Matrix& c, const Vector& a, const Vector& b, const Matrix& obs) {
  return oracle::objectiveF(a, b, c, obs);
}

// Grid search over [lo, hi]^4 followed by a shrinking pattern search.
Matrix gridMinimizer(const Vector& a, const Vector& b, const Matrix& obs, double lo, double hi) {
  const int steps = 20;
  const double pitch = (hi - lo) / steps;
  Matrix best(2, 2), c(2, 2);
  double bestVal = INFINITY;
  for (int i0 = 0; i0 <= steps; ++i0)
    for (int i1 = 0; i1 <= steps; ++i1)
      for (int i2 = 0; i2 <= steps; ++i2)
        for (int i3 = 0; i3 <= steps; ++i3) {
          c << lo + i0 * pitch, lo + i1 * pitch, lo + i2 * pitch, lo + i3 * pitch;
          const double v = cBlock(c, a, b, obs);
          if (v < bestVal) bestVal = v, best = c;
        }
  for (double h = pitch; h > 1e-9; h *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int k = 0; k < 4; ++k)
        for (double s : {-h, h}) {
          Matrix trial = best;
          trial(k % 2, k / 2) = std::clamp(trial(k % 2, k / 2) + s, lo, hi);
          const double v = cBlock(trial, a, b, obs);
          if (v < bestVal - 1e-16) bestVal = v, best = trial, moved = true;
        }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("objective_F") {
  oracle::Draw d(61);
  const Matrix obs = normalizedPlan(d, 3, 4);
  const InverseProblem p(obs, NoConstraint{}, cfg(1.0, 10));
  CHECK(objective_F(Vector::Zero(3), Vector::Zero(4), CostMatrix::zeros(3, 4), p) ==
        doctest::Approx(std::log(12.0)).epsilon(1e-15));
  for (int t = 0; t < 50; ++t) {
    const Vector a = d.vector(3), b = d.vector(4);
    const Matrix c = d.matrix(3, 4);
    CHECK(std::abs(objective_F(a, b, CostMatrix(c), p) - oracle::objectiveF(a, b, c, p.observed())) <= 1e-12);
  }
}

TEST_CASE("objective_F is invariant along the equivalence class") {
  oracle::Draw d(62);
  for (int t = 0; t < 200; ++t) {
    const int m = d.integer(1, 6), n = d.integer(1, 6);
    const InverseProblem p(normalizedPlan(d, m, n), NoConstraint{}, cfg(d.uniform(0.2, 3.0), 10));
    const Vector al = d.vector(m), be = d.vector(n), a = d.vector(m), b = d.vector(n);
    const Matrix c = d.matrix(m, n);
    const Matrix shifted = c + a.replicate(1, n) + b.transpose().replicate(m, 1);
    const double f0 = objective_F(al, be, CostMatrix(c), p);
    CHECK(std::abs(objective_F(al + a, be + b, CostMatrix(shifted), p) - f0) <= 1e-10 * std::max(1.0, std::abs(f0)));
    const double s = d.uniform(-3, 3);
    CHECK(std::abs(objective_F(al.array() + s, be, CostMatrix(c), p) - f0) <= 1e-10 * std::max(1.0, std::abs(f0)));
  }
}

TEST_CASE("alpha and beta updates") {
  oracle::Draw d(63);
  const Matrix obs = normalizedPlan(d, 4, 5);
  const InverseProblem p(obs, NoConstraint{}, cfg(1.0, 10));
  BcdState s = bcd_init(p, 2.0);
  const BcdState a = bcd_alpha_update(s, p);
  const Vector expectA = p.mu().array().log();
  const Vector diffA = a.alpha - expectA;
  CHECK(diffA.maxCoeff() - diffA.minCoeff() <= 1e-14);
  CHECK(std::abs(a.alpha.maxCoeff() + a.alpha.minCoeff()) <= 1e-14);
  CHECK(bcd_gradient(a, p).alpha.lpNorm<Eigen::Infinity>() <= 1e-10);

  const BcdState b = bcd_beta_update(s, p);
  const Vector diffB = b.beta - Vector(p.nu().array().log());
  CHECK(diffB.maxCoeff() - diffB.minCoeff() <= 1e-14);
  CHECK(std::abs(b.beta.maxCoeff() + b.beta.minCoeff()) <= 1e-14);

  s.cost = d.matrix(4, 5, 0, 2);
  s.beta = d.vector(5);
  for (int k = 0; k < 5; ++k) {
    s = bcd_alpha_update(s, p);
    CHECK(bcd_gradient(s, p).alpha.lpNorm<Eigen::Infinity>() <= 1e-8);
    s = bcd_beta_update(s, p);
    CHECK(bcd_gradient(s, p).beta.lpNorm<Eigen::Infinity>() <= 1e-8);
    CHECK(s.withinBounds(1e-12));
  }
}

TEST_CASE("c update keeps a stationary point") {
  oracle::Draw d(64);
  const Matrix c = d.symZeroDiag(4, 0.1, 1.0);
  const SinkhornResult fwd = forward(c, d.simplex(4), d.simplex(4), 1.0);
  const InverseProblem p(fwd.plan.matrix(), SymmetricZeroDiag{}, cfg(1.0, 10));
  BcdState s = bcd_init(p, 2.0, CostMatrix(c));
  s.alpha = fwd.duals.alpha;
  s.beta = fwd.duals.beta;
  CHECK((bcd_c_update(s, p, 50).cost - c).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((bcd_c_update_exact(s, p).cost - c).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projected gradient c step matches a grid search on 2x2") {
  oracle::Draw d(65);
  for (int t = 0; t < 3; ++t) {
    Matrix obs(2, 2);
    obs << 0.55, 0.05, 0.1, 0.3;
    obs = obs + 0.05 * d.matrix(2, 2, 0, 1);
    obs /= obs.sum();
    const InverseProblem p(obs, Box{0.0, 0.5}, cfg(1.0, 10));
    BcdState s = bcd_init(p, 2.0);
    s.alpha = d.vector(2, -0.3, 0.3);
    s.beta = d.vector(2, -0.3, 0.3);
    const Matrix ref = gridMinimizer(s.alpha, s.beta, obs, 0.0, 0.5);
    const BcdState pg = bcd_c_update(s, p, 200, 0.0);
    CHECK((pg.cost - ref).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK(cBlock(pg.cost, s.alpha, s.beta, obs) <= cBlock(ref, s.alpha, s.beta, obs) + 1e-9);
    const BcdState ex = bcd_c_update_exact(s, p);
    CHECK((ex.cost - ref).cwiseAbs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("exact c step is the block minimum") {
  oracle::Draw d(66);
  for (int t = 0; t < 20; ++t) {
    const int n = d.integer(2, 6);
    const bool sym = t % 2 == 0;
    const Matrix obs = normalizedPlan(d, n, n);
    const ConstraintSpec spec = sym ? ConstraintSpec(SymmetricZeroDiag{}) : ConstraintSpec(Box{0.0, 1.5});
    const InverseProblem p(obs, spec, cfg(1.0, 10));
    REQUIRE(bcd_exact_c_supported(p));
    BcdState s = bcd_init(p, 2.0);
    s.alpha = d.vector(n);
    s.beta = d.vector(n);
    const BcdState ex = bcd_c_update_exact(s, p);
    const BcdState pg = bcd_c_update(s, p, 20000, 1e-14);
    CHECK(bcd_psi(ex, p) <= bcd_psi(pg, p) + 1e-12);
    CHECK(ex.withinBounds(0.0));
    if (sym) CHECK(CostMatrix(ex.cost).isSymmetricZeroDiag());
  }
  const Matrix G = d.matrix(2, 3), D = d.matrix(2, 3);
  CHECK_FALSE(bcd_exact_c_supported(InverseProblem(normalizedPlan(d, 3, 3), LinearAffinity(G, D), cfg(1.0, 10))));
}

TEST_CASE("psi is monotone and iterates stay bounded") {
  oracle::Draw d(67);
  for (CostStep step : {CostStep::Exact, CostStep::ProjectedGradient}) {
    for (int t = 0; t < 5; ++t) {
      const int n = d.integer(3, 8);
      const Matrix c = d.symZeroDiag(n, 0.1, 1.5);
      const SinkhornResult fwd = forward(c, d.simplex(n), d.simplex(n), 0.8);
      const InverseProblem p(fwd.plan.matrix(), SymmetricZeroDiag{}, cfg(0.8, 300));
      BcdOptions o;
      o.costStep = step;
      bool bounded = true;
      const BcdState init = bcd_init(p, o.costBound);
      std::vector<double> psi;
      o.observer = [&](const BcdState& s) {
        bounded = bounded && s.withinBounds(0.0);
        psi = s.psiTrace;
      };
      bcd_solve(p, o);
      CHECK(bounded);
      CHECK(init.withinBounds(0.0));
      for (std::size_t k = 1; k < psi.size(); ++k) CHECK(psi[k] <= psi[k - 1] + 1e-9);
    }
  }
}

TEST_CASE("rate probe") {
  oracle::Draw d(68);
  const Matrix c = d.symZeroDiag(5, 0.1, 1.0);
  const SinkhornResult fwd = forward(c, d.simplex(5), d.simplex(5), 1.0);
  const InverseProblem p(fwd.plan.matrix(), SymmetricZeroDiag{}, cfg(1.0, 2000, 1e-300));
  BcdOptions o;
  o.costStep = CostStep::ProjectedGradient;
  o.innerSteps = 1;
  std::vector<double> psi;
  BcdState last;
  o.observer = [&](const BcdState& s) {
    psi = s.psiTrace;
    last = s;
  };
  bcd_solve(p, o);
  REQUIRE(psi.size() == 2001);
  const double D2 = bcd_diameter_squared(last);
  const double C = bcd_rate_constant(D2, psi.front() - psi.back());
  CHECK(C > 0.0);
  for (int k = 100; k <= 2000; ++k) CHECK(psi[k] - psi[2000] <= C / k);
}

TEST_CASE("n = 32 synthetic recovery") {
  const SyntheticSpec spec{32, 2.0, 0.1, 3};
  const CostMatrix truth = synth_cost(spec);
  auto [mu, nu] = synth_marginals(32, 32, 3);
  SolverConfig s;
  s.epsilon = 0.1;
  s.tol = 1e-13;
  s.maxIter = 100000;
  const SinkhornResult fwd = sinkhorn_solve(truth, mu, nu, s);
  InverseProblem p(fwd.plan.matrix(), SymmetricZeroDiag{}, cfg(0.1, 5000, 1e-12));
  p.setTruth(truth);
  BcdOptions o;
  o.costBound = 2.0;
  const InverseSolution r = bcd_solve(p, o);
  CHECK(r.report.iterations <= 5000);
  CHECK(relative_error(r.cost, truth) <= 1e-2);
}

TEST_CASE("independent coupling gives the zero cost") {
  oracle::Draw d(69);
  const Vector mu = d.simplex(6), nu = d.simplex(6);
  const InverseProblem p(Matrix(mu * nu.transpose()), Composite{{SymmetricZeroDiag{}, Box{0.0, 2.0}}},
                         cfg(0.5, 2000));
  const InverseSolution r = bcd_solve(p, BcdOptions{});
  CHECK(r.cost.matrix().norm() <= 1e-6);
}

TEST_CASE("BCD agrees with matrix scaling on 4x4") {
  oracle::Draw d(70);
  for (int t = 0; t < 10; ++t) {
    const Matrix c = d.symZeroDiag(4, 0.1, 1.0);
    const SinkhornResult fwd = forward(c, d.simplex(4), d.simplex(4), 0.5);
    const InverseProblem p(fwd.plan.matrix(), SymmetricZeroDiag{}, cfg(0.5, 5000, 1e-13));
    const InverseSolution a = learn_cost(p);
    const InverseSolution b = bcd_solve(p, BcdOptions{});
    CHECK(relative_error(b.cost, a.cost) <= 1e-3);
    CHECK(relative_error(b.cost, CostMatrix(c)) <= 1e-3);
  }
}

TEST_CASE("lipschitz probe") {
  CHECK(lipschitz_probe(Vector::Zero(1), Vector::Ones(1), 100) == 0.0);
  Vector x(2), y(2);
  x << 10, -10;
  y << -10, 10;
  const double r = lipschitz_ratio(Vector::Zero(2), Vector::Ones(2), x, y);
  const double expect = std::tanh(10.0) / 20.0;
  CHECK(r < 1.0);
  CHECK(r == doctest::Approx(expect).epsilon(1e-12));
  oracle::Draw d(71);
  CHECK(lipschitz_probe(d.vector(8), d.vector(8, 0.1, 2.0), 10000, 5) <= 1.0 + 1e-6);
  CHECK_THROWS_AS(lipschitz_probe(Vector::Zero(2), Vector::Zero(2), 1), Error);
}

TEST_CASE("bounds and arguments") {
  oracle::Draw d(72);
  const InverseProblem p(normalizedPlan(d, 3, 3), SymmetricZeroDiag{}, cfg(1.0, 10));
  CHECK_THROWS_AS(bcd_init(p, 0.0), Error);
  CHECK_THROWS_AS(bcd_c_update(bcd_init(p, 1.0), p, 0), Error);
  const BcdState s = bcd_init(p, 1.0);
  const double logRatio = std::log(p.mu().maxCoeff() / p.mu().minCoeff());
  CHECK(s.alphaBound == doctest::Approx(1.0 + logRatio));
}
