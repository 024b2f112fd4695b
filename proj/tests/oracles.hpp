#pragma once
// Independent reference computations for the unit tests. Nothing here calls
// into the library under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // sum to one (probability measure)
};

// Orthonormal Hermite values from the monic recurrence He_{k+1} = x He_k - k He_{k-1},
// divided by sqrt(k!).
inline std::vector<double> hermite_orthonormal(int max_degree, double x) {
  std::vector<double> he(static_cast<size_t>(max_degree + 1));
  he[0] = 1.0;
  if (max_degree >= 1) he[1] = x;
  for (int k = 1; k < max_degree; ++k) he[k + 1] = x * he[k] - k * he[k - 1];
  double factorial = 1.0;
  for (int k = 0; k <= max_degree; ++k) {
    if (k > 0) factorial *= k;
    he[k] /= std::sqrt(factorial);
  }
  return he;
}

// Bonnet recurrence for the classical Legendre polynomials, scaled by sqrt(2k+1).
inline std::vector<double> legendre_orthonormal(int max_degree, double x) {
  std::vector<double> p(static_cast<size_t>(max_degree + 1));
  p[0] = 1.0;
  if (max_degree >= 1) p[1] = x;
  for (int k = 1; k < max_degree; ++k) p[k + 1] = ((2 * k + 1) * x * p[k] - k * p[k - 1]) / (k + 1);
  for (int k = 0; k <= max_degree; ++k) p[k] *= std::sqrt(2.0 * k + 1.0);
  return p;
}

// Golub-Welsch nodes; weights from the Christoffel function 1 / sum_k p_k(x)^2,
// which keeps tail weights accurate in relative terms.
inline Quadrature golub_welsch(int n, bool hermite) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double off = hermite ? std::sqrt(static_cast<double>(k))
                               : k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = jacobi(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  Quadrature rule{solver.eigenvalues(), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    const auto p = hermite ? hermite_orthonormal(n - 1, rule.nodes[i])
                           : legendre_orthonormal(n - 1, rule.nodes[i]);
    double s = 0.0;
    for (double v : p) s += v * v;
    rule.weights[i] = 1.0 / s;
  }
  return rule;
}

inline Quadrature gauss_hermite(int n) { return golub_welsch(n, true); }
inline Quadrature gauss_legendre(int n) { return golub_welsch(n, false); }

inline std::uint64_t binomial(int n, int k) {
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return r;
}

// Every alpha in {0..p}^M with ||alpha||_q <= p, by odometer.
inline std::vector<std::vector<int>> brute_force_indices(int dim, int p, double q) {
  std::vector<std::vector<int>> out;
  std::vector<int> alpha(static_cast<size_t>(dim), 0);
  while (true) {
    double s = 0.0;
    for (int a : alpha) s += std::pow(static_cast<double>(a), q);
    if (std::pow(s, 1.0 / q) <= p + 1e-9) out.push_back(alpha);
    int i = 0;
    while (i < dim && alpha[static_cast<size_t>(i)] == p) alpha[static_cast<size_t>(i++)] = 0;
    if (i == dim) break;
    ++alpha[static_cast<size_t>(i)];
  }
  return out;
}

inline Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-12);
  return svd.solve(y);
}

inline double sample_variance(const Eigen::VectorXd& y) {
  const double mean = y.mean();
  return (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
}

// Leave-one-out error by N explicit refits, relative to the 1/(N-1) variance.
inline double explicit_loo(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  const Eigen::Index n = a.rows();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::MatrixXd a_i(n - 1, a.cols());
    Eigen::VectorXd y_i(n - 1);
    for (Eigen::Index r = 0, k = 0; r < n; ++r) {
      if (r == i) continue;
      a_i.row(k) = a.row(r);
      y_i[k++] = y[r];
    }
    const Eigen::VectorXd c = pinv_solve(a_i, y_i);
    const double e = y[i] - a.row(i).dot(c);
    sum += e * e;
  }
  return sum / static_cast<double>(n) / sample_variance(y);
}

// Warnock's closed form of the L2-star discrepancy.
inline double l2_star_discrepancy(const Eigen::MatrixXd& x) {
  const auto n = static_cast<double>(x.rows());
  const auto d = static_cast<int>(x.cols());
  double t1 = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double p = 1.0;
    for (int k = 0; k < d; ++k) p *= 1.0 - x(i, k) * x(i, k);
    t1 += p;
  }
  double t2 = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      double p = 1.0;
      for (int k = 0; k < d; ++k) p *= 1.0 - std::max(x(i, k), x(j, k));
      t2 += p;
    }
  }
  return std::sqrt(std::pow(3.0, -d) - std::pow(2.0, 1 - d) / n * t1 + t2 / (n * n));
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline Eigen::MatrixXd random_correlation(int dim, std::mt19937_64& rng) {
  const Eigen::MatrixXd a = random_matrix(dim, dim + 2, rng);
  Eigen::MatrixXd s = a * a.transpose();
  const Eigen::VectorXd d = s.diagonal().cwiseSqrt().cwiseInverse();
  s = d.asDiagonal() * s * d.asDiagonal();
  s.diagonal().setOnes();
  return s;
}

}  // namespace oracle
