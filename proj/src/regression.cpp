#include "metamodel/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "metamodel/error.hpp"

namespace metamodel {

namespace {

constexpr double kLeverageLimit = 1.0 - 1e-10;

void require_finite(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& targets) {
  if (!matrix.allFinite()) throw std::invalid_argument("regression matrix has non-finite entries");
  if (!targets.allFinite()) throw std::invalid_argument("regression targets are non-finite");
  if (matrix.rows() != targets.size()) throw std::invalid_argument("row count mismatch");
}

Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> decompose(const Eigen::MatrixXd& matrix) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
  cod.setThreshold(kRankTolerance);
  cod.compute(matrix);
  return cod;
}

}  // namespace

LeastSquaresFit ols(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& targets) {
  require_finite(matrix, targets);
  const auto n = matrix.rows();
  const auto p = matrix.cols();
  LeastSquaresFit fit;
  if (p == 0) {
    fit.coefficients.resize(0);
    fit.hat_diagonal = Eigen::VectorXd::Zero(n);
    fit.residuals = targets;
    return fit;
  }
  const auto cod = decompose(matrix);
  fit.rank = cod.rank();
  fit.rank_deficient = fit.rank < p;
  fit.coefficients = cod.solve(targets);
  fit.residuals = targets - matrix * fit.coefficients;

  const auto r = fit.rank;
  if (r == 0) {
    fit.hat_diagonal = Eigen::VectorXd::Zero(n);
    return fit;
  }
  const Eigen::MatrixXd q = cod.householderQ() * Eigen::MatrixXd::Identity(n, r);
  fit.hat_diagonal = q.rowwise().squaredNorm();
  const Eigen::MatrixXd t = cod.matrixT().topLeftCorner(r, r).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd t_inv =
      t.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(r, r));
  fit.trace_inv_gram = t_inv.squaredNorm();
  return fit;
}

Eigen::VectorXd least_squares_solve(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& targets) {
  require_finite(matrix, targets);
  return decompose(matrix).solve(targets);
}

double empirical_variance(const Eigen::VectorXd& values) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  const double mean = values.mean();
  return (values.array() - mean).square().sum() / static_cast<double>(n - 1);
}

double loo_error(const LeastSquaresFit& fit) {
  const auto n = fit.residuals.size();
  if (n == 0) throw FitError("LOO error of an empty fit");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = fit.hat_diagonal[i];
    if (h >= kLeverageLimit) {
      throw FitError("LOO error undefined: point " + std::to_string(i + 1) +
                     " is interpolated (leverage 1), the model overfits");
    }
    const double e = fit.residuals[i] / (1.0 - h);
    sum += e * e;
  }
  return sum / static_cast<double>(n);
}

double corrected_loo(const LeastSquaresFit& fit, const Eigen::VectorXd& targets, Eigen::Index model_size,
                     Eigen::Index sample_count) {
  if (model_size >= sample_count) {
    throw FitError("corrected LOO requires model size < sample count");
  }
  const double variance = empirical_variance(targets);
  if (!(variance > 0.0)) throw FitError("corrected LOO undefined for zero target variance");
  const double ratio = static_cast<double>(model_size) / static_cast<double>(sample_count);
  return loo_error(fit) / variance / (1.0 - ratio) * (1.0 + fit.trace_inv_gram);
}

double corrected_loo(const LeastSquaresFit& fit, const Eigen::VectorXd& targets) {
  return corrected_loo(fit, targets, fit.coefficients.size(), targets.size());
}

std::vector<double> prefix_corrected_loo(const Eigen::MatrixXd& ordered_matrix,
                                         const Eigen::VectorXd& targets) {
  require_finite(ordered_matrix, targets);
  const auto n = ordered_matrix.rows();
  const auto k_max = std::min(ordered_matrix.cols(), n);
  std::vector<double> scores(static_cast<size_t>(ordered_matrix.cols()),
                             std::numeric_limits<double>::quiet_NaN());
  const double variance = empirical_variance(targets);
  if (!(variance > 0.0) || k_max == 0) return scores;

  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(ordered_matrix.leftCols(k_max));
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k_max);
  const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(k_max, k_max).triangularView<Eigen::Upper>();
  const double scale = r.diagonal().cwiseAbs().maxCoeff();

  Eigen::VectorXd residual = targets;
  Eigen::VectorXd leverage = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd r_inv = Eigen::MatrixXd::Zero(k_max, k_max);
  double trace = 0.0;
  for (Eigen::Index k = 0; k < k_max; ++k) {
    if (!(std::abs(r(k, k)) > kRankTolerance * scale)) break;
    // Column k of R^-1 from back substitution on the leading (k+1) block.
    r_inv(k, k) = 1.0 / r(k, k);
    for (Eigen::Index i = k - 1; i >= 0; --i) {
      double s = 0.0;
      for (Eigen::Index j = i + 1; j <= k; ++j) s += r(i, j) * r_inv(j, k);
      r_inv(i, k) = -s / r(i, i);
    }
    trace += r_inv.col(k).head(k + 1).squaredNorm();
    const auto qk = q.col(k);
    residual -= qk * qk.dot(targets);
    leverage += qk.cwiseAbs2();
    const auto size = k + 1;
    if (size >= n || leverage.maxCoeff() >= kLeverageLimit) continue;
    const double loo =
        (residual.array() / (1.0 - leverage.array())).square().sum() / static_cast<double>(n);
    const double ratio = static_cast<double>(size) / static_cast<double>(n);
    scores[static_cast<size_t>(k)] = loo / variance / (1.0 - ratio) * (1.0 + trace);
  }
  return scores;
}

std::vector<Eigen::Index> FoldPartition::members(int fold) const {
  std::vector<Eigen::Index> out;
  for (size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

std::vector<Eigen::Index> FoldPartition::complement(int fold) const {
  std::vector<Eigen::Index> out;
  for (size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

FoldPartition kfold_partition(Eigen::Index count, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("k-fold partition needs k >= 2");
  if (folds > count) throw std::invalid_argument("k-fold partition needs k <= N");
  std::vector<Eigen::Index> perm(static_cast<size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) perm[static_cast<size_t>(i)] = i;
  std::mt19937_64 engine(seed);
  for (Eigen::Index i = count - 1; i > 0; --i) {
    const auto bound = static_cast<std::uint64_t>(i) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
      x = engine();
    } while (x >= limit);
    std::swap(perm[static_cast<size_t>(i)], perm[x % bound]);
  }
  FoldPartition partition{std::vector<int>(static_cast<size_t>(count)), folds, seed};
  for (Eigen::Index pos = 0; pos < count; ++pos) {
    partition.assignments[static_cast<size_t>(perm[static_cast<size_t>(pos)])] =
        static_cast<int>(pos % folds) + 1;
  }
  return partition;
}

std::vector<std::vector<Eigen::Index>> LarPath::active_sets() const {
  std::vector<std::vector<Eigen::Index>> sets;
  for (size_t k = 0; k < order.size(); ++k) {
    sets.emplace_back(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k + 1));
  }
  return sets;
}

LarPath lar_path(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& targets) {
  require_finite(matrix, targets);
  const auto n = matrix.rows();
  const auto p = matrix.cols();
  LarPath path;

  // Center and normalize usable columns.
  std::vector<Eigen::Index> usable;
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd col = matrix.col(j);
    const double raw = col.norm();
    col.array() -= col.mean();
    const double norm = col.norm();
    if (!(norm > 1e-12 * std::max(1.0, raw))) {
      path.excluded.push_back(j);
      continue;
    }
    x.col(static_cast<Eigen::Index>(usable.size())) = col / norm;
    usable.push_back(j);
  }
  const auto pu = static_cast<Eigen::Index>(usable.size());
  x.conservativeResize(n, pu);
  const auto max_steps = std::min(pu, n - 1);
  if (max_steps <= 0) return path;

  const Eigen::VectorXd y = targets.array() - targets.mean();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd c = x.transpose() * y;

  Eigen::Index first = 0;
  double big_c = c.cwiseAbs().maxCoeff(&first);
  const double c0 = big_c;
  if (!(c0 > 0.0)) return path;

  std::vector<Eigen::Index> active{first};
  std::vector<char> in_active(static_cast<size_t>(pu), 0);
  in_active[static_cast<size_t>(first)] = 1;
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(max_steps, max_steps);  // lower factor of X_A^T X_A
  chol(0, 0) = 1.0;
  std::vector<Eigen::VectorXd> fitted{mu};

  while (true) {
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd s(k);
    for (Eigen::Index i = 0; i < k; ++i) s[i] = c[active[static_cast<size_t>(i)]] >= 0.0 ? 1.0 : -1.0;
    const auto lower = chol.topLeftCorner(k, k).triangularView<Eigen::Lower>();
    Eigen::VectorXd v = lower.solve(s);
    v = lower.transpose().solve(v);
    const double aa = 1.0 / std::sqrt(s.dot(v));
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < k; ++i) u += (aa * v[i]) * x.col(active[static_cast<size_t>(i)]);
    const Eigen::VectorXd a = x.transpose() * u;

    double gamma = big_c / aa;
    Eigen::Index next = -1;
    if (k < max_steps) {
      for (Eigen::Index j = 0; j < pu; ++j) {
        if (in_active[static_cast<size_t>(j)]) continue;
        for (double cand : {(big_c - c[j]) / (aa - a[j]), (big_c + c[j]) / (aa + a[j])}) {
          if (cand > 1e-14 * (big_c / aa) && cand < gamma) {
            gamma = cand;
            next = j;
          }
        }
      }
    }
    mu += gamma * u;
    c -= gamma * a;
    big_c -= gamma * aa;
    if (next < 0 || big_c <= 1e-12 * c0) break;

    // Cholesky update with the entering column; stop on numerical collinearity.
    Eigen::VectorXd g(k);
    for (Eigen::Index i = 0; i < k; ++i) g[i] = x.col(active[static_cast<size_t>(i)]).dot(x.col(next));
    const Eigen::VectorXd l = lower.solve(g);
    const double d2 = 1.0 - l.squaredNorm();
    if (!(d2 > 1e-10)) break;
    chol.row(k).head(k) = l.transpose();
    chol(k, k) = std::sqrt(d2);
    active.push_back(next);
    in_active[static_cast<size_t>(next)] = 1;
    fitted.push_back(mu);
  }

  path.order.reserve(active.size());
  for (auto j : active) path.order.push_back(usable[static_cast<size_t>(j)]);
  path.fitted.resize(n, static_cast<Eigen::Index>(fitted.size()));
  for (size_t k = 0; k < fitted.size(); ++k) path.fitted.col(static_cast<Eigen::Index>(k)) = fitted[k];
  return path;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& matrix, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), matrix.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = matrix.row(rows[i]);
  return out;
}

Eigen::VectorXd take_rows(const Eigen::VectorXd& vector, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = vector[rows[i]];
  return out;
}

}  // namespace metamodel
