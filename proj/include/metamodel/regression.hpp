#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace metamodel {

/// Relative rank tolerance of the orthogonal least-squares solver.
inline constexpr double kRankTolerance = 1e-12;

struct LeastSquaresFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd hat_diagonal;  ///< diag(A (A^T A)^+ A^T)
  Eigen::VectorXd residuals;     ///< targets - A * coefficients
  double trace_inv_gram = 0.0;   ///< tr((A^T A)^+)
  Eigen::Index rank = 0;
  bool rank_deficient = false;   ///< minimum-norm solution was returned
};

/// Ordinary least squares through a complete orthogonal decomposition.
/// Rank-deficient systems get the minimum-norm solution and rank_deficient = true.
LeastSquaresFit ols(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& targets);

/// Coefficients only (same solver as ols()).
Eigen::VectorXd least_squares_solve(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& targets);

/// Empirical variance with the 1/(N-1) normalization.
double empirical_variance(const Eigen::VectorXd& values);

/// Mean of (residual_i / (1 - h_i))^2. Throws FitError when some h_i reaches 1.
double loo_error(const LeastSquaresFit& fit);

/// Relative LOO error times (1 - P/N)^-1 (1 + tr((A^T A)^-1)).
/// Throws FitError for P >= N, zero target variance or h_i = 1.
double corrected_loo(const LeastSquaresFit& fit, const Eigen::VectorXd& targets, Eigen::Index model_size,
                     Eigen::Index sample_count);
double corrected_loo(const LeastSquaresFit& fit, const Eigen::VectorXd& targets);

/// Corrected LOO score of every leading column block A[:, 0:k], k = 1..K, from a
/// single unpivoted QR. Entry k-1 is NaN where the prefix is rank deficient,
/// interpolates some point, or has k >= N.
std::vector<double> prefix_corrected_loo(const Eigen::MatrixXd& ordered_matrix,
                                         const Eigen::VectorXd& targets);

struct FoldPartition {
  std::vector<int> assignments;  ///< fold label in 1..k for each point
  int folds = 0;
  std::uint64_t seed = 0;

  std::vector<Eigen::Index> members(int fold) const;
  std::vector<Eigen::Index> complement(int fold) const;
};

/// Balanced random partition (sizes differ by at most one).
FoldPartition kfold_partition(Eigen::Index count, int folds, std::uint64_t seed);

struct LarPath {
  std::vector<Eigen::Index> order;     ///< columns in order of entry
  std::vector<Eigen::Index> excluded;  ///< zero-variance columns left out
  /// Column k: fitted values of the centered problem at the moment order[k] enters.
  Eigen::MatrixXd fitted;

  std::vector<std::vector<Eigen::Index>> active_sets() const;
};

/// Least angle regression on centered, unit-norm columns; the intercept is handled
/// by centering and is not part of `matrix`. At most min(P, N-1) steps.
LarPath lar_path(const Eigen::MatrixXd& matrix, const Eigen::VectorXd& targets);

/// Rows of a matrix / entries of a vector selected by index.
Eigen::MatrixXd take_rows(const Eigen::MatrixXd& matrix, const std::vector<Eigen::Index>& rows);
Eigen::VectorXd take_rows(const Eigen::VectorXd& vector, const std::vector<Eigen::Index>& rows);

}  // namespace metamodel
