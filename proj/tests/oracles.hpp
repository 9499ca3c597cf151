#pragma once

// Reference computations written independently of the library: plain loops,
// long double accumulation, no shared helpers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Draw {
 public:
  explicit Draw(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  Matrix matrix(int r, int c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }
  Vector vector(int n, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }
  Vector simplex(int n) {
    Vector v = vector(n, 0.2, 1.0);
    return v / v.sum();
  }
  Matrix symZeroDiag(int n, double lo = 0.05, double hi = 1.0) {
    Matrix c = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) c(i, j) = c(j, i) = uniform(lo, hi);
    return c;
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

inline double entropy(const Matrix& p) {
  long double s = 0.0L;
  for (int i = 0; i < p.rows(); ++i)
    for (int j = 0; j < p.cols(); ++j)
      if (p(i, j) > 0.0) s -= static_cast<long double>(p(i, j)) * (std::log(static_cast<long double>(p(i, j))) - 1.0L);
  return static_cast<double>(s);
}

inline double kl(const Matrix& a, const Matrix& b) {
  long double s = 0.0L;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if (a(i, j) > 0.0) s += static_cast<long double>(a(i, j)) * std::log(static_cast<long double>(a(i, j)) / b(i, j));
  return static_cast<double>(s);
}

inline double frobeniusRelErr(const Matrix& c, const Matrix& t) {
  long double num = 0.0L, den = 0.0L;
  for (int i = 0; i < c.rows(); ++i)
    for (int j = 0; j < c.cols(); ++j) {
      const long double d = static_cast<long double>(c(i, j)) - t(i, j);
      num += d * d;
      den += static_cast<long double>(t(i, j)) * t(i, j);
    }
  return static_cast<double>(std::sqrt(num / den));
}

// Plain Sinkhorn in long double with a fixed sweep count.
inline Matrix sinkhornPlan(const Matrix& c, const Vector& mu, const Vector& nu, double eps, int sweeps = 20000) {
  const int m = static_cast<int>(c.rows()), n = static_cast<int>(c.cols());
  std::vector<long double> K(static_cast<std::size_t>(m) * n), u(m, 1.0L), v(n, 1.0L);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) K[i * n + j] = std::exp(-static_cast<long double>(c(i, j)) / eps);
  for (int s = 0; s < sweeps; ++s) {
    for (int i = 0; i < m; ++i) {
      long double t = 0.0L;
      for (int j = 0; j < n; ++j) t += K[i * n + j] * v[j];
      u[i] = mu(i) / t;
    }
    for (int j = 0; j < n; ++j) {
      long double t = 0.0L;
      for (int i = 0; i < m; ++i) t += K[i * n + j] * u[i];
      v[j] = nu(j) / t;
    }
  }
  Matrix p(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) p(i, j) = static_cast<double>(u[i] * K[i * n + j] * v[j]);
  return p;
}

inline double objectiveE(const Vector& a, const Vector& b, const Matrix& c, const Matrix& obs, double eps) {
  const Vector mu = obs.rowwise().sum(), nu = obs.colwise().sum().transpose();
  long double s = 0.0L;
  for (int i = 0; i < c.rows(); ++i) s -= static_cast<long double>(a(i)) * mu(i);
  for (int j = 0; j < c.cols(); ++j) s -= static_cast<long double>(b(j)) * nu(j);
  for (int i = 0; i < c.rows(); ++i)
    for (int j = 0; j < c.cols(); ++j)
      s += static_cast<long double>(c(i, j)) * obs(i, j) +
           eps * std::exp((static_cast<long double>(a(i)) + b(j) - c(i, j)) / eps);
  return static_cast<double>(s);
}

// F = log sum exp(a_i + b_j - c_ij) - <a, mu> - <b, nu> + <c, obs>, unstabilized.
inline double objectiveF(const Vector& a, const Vector& b, const Matrix& c, const Matrix& obs) {
  const Vector mu = obs.rowwise().sum(), nu = obs.colwise().sum().transpose();
  long double z = 0.0L, lin = 0.0L;
  for (int i = 0; i < c.rows(); ++i)
    for (int j = 0; j < c.cols(); ++j) {
      z += std::exp(static_cast<long double>(a(i)) + b(j) - c(i, j));
      lin += static_cast<long double>(c(i, j)) * obs(i, j);
    }
  for (int i = 0; i < c.rows(); ++i) lin -= static_cast<long double>(a(i)) * mu(i);
  for (int j = 0; j < c.cols(); ++j) lin -= static_cast<long double>(b(j)) * nu(j);
  return static_cast<double>(std::log(z) + lin);
}

// argmin_A ||chat - s G^T A D||_F through the normal equations of the
// Kronecker system vec(G^T A D) = (D^T kron G^T) vec(A).
inline Matrix affinityLeastSquares(const Matrix& chat, const Matrix& G, const Matrix& D, int sign) {
  const int p = static_cast<int>(G.rows()), m = static_cast<int>(G.cols());
  const int q = static_cast<int>(D.rows()), n = static_cast<int>(D.cols());
  Matrix M(m * n, p * q);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i)
      for (int l = 0; l < q; ++l)
        for (int k = 0; k < p; ++k) M(j * m + i, l * p + k) = sign * G(k, i) * D(l, j);
  Vector rhs(m * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) rhs(j * m + i) = chat(i, j);
  const Vector x = (M.transpose() * M).ldlt().solve(M.transpose() * rhs);
  Matrix A(p, q);
  for (int l = 0; l < q; ++l)
    for (int k = 0; k < p; ++k) A(k, l) = x(l * p + k);
  return A;
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  long double ma = 0, mb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) ma += a[k], mb += b[k];
  ma /= a.size();
  mb /= b.size();
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

}  // namespace oracle
