#include <doctest.h>

#include <cmath>
#include <numeric>

#include "invot/types.hpp"
#include "oracles.hpp"

using namespace invot;

namespace {

ProbabilityVector pv(std::initializer_list<double> v) {
  Vector x(static_cast<Index>(v.size()));
  Index k = 0;
  for (double e : v) x(k++) = e;
  return ProbabilityVector(x);
}

Matrix randomPlan(oracle::Draw& d, int m, int n) {
  Matrix p = d.matrix(m, n, 0.01, 1.0);
  return p / p.sum();
}

TransportPlan asPlan(const Matrix& p) {
  return validate_plan(p, ProbabilityVector::normalized(p.rowwise().sum()),
                       ProbabilityVector::normalized(p.colwise().sum().transpose()), 1e-9);
}

ErrorCode codeOf(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("validate_plan accepts the uniform independent coupling") {
  Matrix m(2, 2);
  m << 0.25, 0.25, 0.25, 0.25;
  const TransportPlan p = validate_plan(m, pv({0.5, 0.5}), pv({0.5, 0.5}), 1e-9);
  CHECK(p.residual() == 0.0);
  CHECK(p.rows() == 2);
}

TEST_CASE("validate_plan rejects a marginal mismatch") {
  Matrix m(2, 2);
  m << 0.6, 0.0, 0.0, 0.4;
  try {
    validate_plan(m, pv({0.5, 0.5}), pv({0.5, 0.5}), 1e-9);
    FAIL("expected MarginalMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MarginalMismatch);
    CHECK((e.row() == 0 || e.row() == 1));
  }
}

TEST_CASE("validate_plan rejects negative entries and wrong mass") {
  Matrix neg(2, 2);
  neg << 0.25 + 1e-6, 0.25, 0.25, 0.25 - 1e-6;
  neg(1, 1) = -1e-6;
  CHECK(codeOf([&] { validate_plan(neg, pv({0.5, 0.5}), pv({0.5, 0.5}), 1e-9); }) == ErrorCode::NegativeEntry);
  Matrix heavy = Matrix::Constant(2, 2, 0.3);
  CHECK(codeOf([&] { validate_plan(heavy, pv({0.5, 0.5}), pv({0.5, 0.5}), 1e-9); }) == ErrorCode::MassMismatch);
}

TEST_CASE("ProbabilityVector checks") {
  Vector bad(2);
  bad << 0.7, 0.7;
  CHECK(codeOf([&] { ProbabilityVector p(bad); }) == ErrorCode::MassMismatch);
  bad << 1.5, -0.5;
  CHECK(codeOf([&] { ProbabilityVector p(bad); }) == ErrorCode::NegativeEntry);
  Vector raw(3);
  raw << 1.0, 2.0, 1.0;
  const ProbabilityVector n = ProbabilityVector::normalized(raw);
  CHECK(n[1] == doctest::Approx(0.5).epsilon(1e-15));
  Vector z(2);
  z << 1.0, 0.0;
  CHECK(codeOf([&] { ProbabilityVector(z).requireStrictlyPositive("mu"); }) == ErrorCode::ZeroObservation);
}

TEST_CASE("Box bounds") {
  CHECK(codeOf([] { ConstraintSpec s(Box{1.0, 0.5}); }) == ErrorCode::BadBounds);
  CHECK(codeOf([] { ConstraintSpec s(Box{-1.0, 0.5}); }) == ErrorCode::BadBounds);
  CHECK(codeOf([] { ConstraintSpec s(Box{0.0, INFINITY}); }) == ErrorCode::BadBounds);
}

TEST_CASE("SolverConfig validation") {
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.tol = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.maxIter = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("entropy closed forms") {
  CHECK(entropy(Matrix::Ones(1, 1)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(entropy(Matrix::Constant(2, 2, 0.25)) == doctest::Approx(1.0 + std::log(4.0)).epsilon(1e-14));
  CHECK(entropy(Matrix::Constant(2, 2, 0.25)) == doctest::Approx(2.386294).epsilon(1e-6));
}

TEST_CASE("entropy matches a direct summation on random plans") {
  oracle::Draw d(11);
  for (int t = 0; t < 50; ++t) {
    const Matrix p = randomPlan(d, 3, 3);
    CHECK(std::abs(entropy(asPlan(p)) - oracle::entropy(p)) <= 1e-12);
  }
}

TEST_CASE("kl_divergence examples") {
  Matrix obs(1, 2), model(1, 2);
  obs << 0.5, 0.5;
  model << 0.25, 0.75;
  const double expect = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  CHECK(kl_divergence(obs, model) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(kl_divergence(obs, model) == doctest::Approx(0.143841).epsilon(1e-5));
  CHECK(kl_divergence(obs, obs) == 0.0);

  Matrix z(1, 2);
  z << 1.0, 0.0;
  CHECK(kl_divergence(z, model) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
}

TEST_CASE("kl_divergence is nonnegative on random pairs") {
  oracle::Draw d(12);
  double minimum = INFINITY;
  for (int t = 0; t < 10000; ++t) {
    const int m = d.integer(1, 4), n = d.integer(1, 4);
    const Matrix a = randomPlan(d, m, n), b = randomPlan(d, m, n);
    const double k = kl_divergence(a, b);
    minimum = std::min(minimum, k);
    if (t % 1000 == 0) CHECK(std::abs(k - oracle::kl(a, b)) <= 1e-12);
  }
  CHECK(minimum >= 0.0);
}

TEST_CASE("entropy and kl are permutation invariant") {
  oracle::Draw d(13);
  for (int t = 0; t < 20; ++t) {
    const Matrix a = randomPlan(d, 4, 5), b = randomPlan(d, 4, 5);
    std::vector<int> rp(4), cp(5);
    std::iota(rp.begin(), rp.end(), 0);
    std::iota(cp.begin(), cp.end(), 0);
    std::shuffle(rp.begin(), rp.end(), d.engine());
    std::shuffle(cp.begin(), cp.end(), d.engine());
    Matrix pa(4, 5), pb(4, 5);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 5; ++j) {
        pa(i, j) = a(rp[i], cp[j]);
        pb(i, j) = b(rp[i], cp[j]);
      }
    CHECK(entropy(pa) == doctest::Approx(entropy(a)).epsilon(1e-13));
    CHECK(kl_divergence(pa, pb) == doctest::Approx(kl_divergence(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("relative_error") {
  oracle::Draw d(14);
  const Matrix c = d.matrix(4, 4);
  CHECK(relative_error(c, c) == 0.0);
  CHECK(relative_error(Matrix(2.0 * c), c) == doctest::Approx(1.0).epsilon(1e-15));
  for (int t = 0; t < 20; ++t) {
    const Matrix a = d.matrix(4, 4), b = d.matrix(4, 4);
    CHECK(std::abs(relative_error(CostMatrix(a), CostMatrix(b)) - oracle::frobeniusRelErr(a, b)) <= 1e-14);
  }
  CHECK(codeOf([] { relative_error(Matrix::Ones(2, 2), Matrix::Zero(2, 2)); }) == ErrorCode::ZeroReference);
}

TEST_CASE("ConstraintSpec description") {
  const ConstraintSpec s = Composite{{SymmetricZeroDiag{}, Box{0.0, 2.0}}};
  CHECK(s.describe().find("sym0") != std::string::npos);
  CHECK_FALSE(s.hasAffinity());
  CHECK(CostMatrix(Matrix::Zero(3, 3)).isSymmetricZeroDiag());
}

TEST_CASE("LinearAffinity requires full row rank") {
  Matrix G(2, 3);
  G << 1, 2, 3, 2, 4, 6;
  CHECK(codeOf([&] { LinearAffinity a(G, Matrix::Identity(2, 2)); }) == ErrorCode::RankDeficient);
  oracle::Draw d(15);
  const Matrix g = d.matrix(2, 5), dd = d.matrix(3, 4);
  const LinearAffinity a(g, dd, -1);
  CHECK((g * a.Gpinv() - Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK((dd * a.Dpinv() - Matrix::Identity(3, 3)).norm() < 1e-12);
}
