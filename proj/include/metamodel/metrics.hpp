#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace metamodel {

enum class ErrorKind { empirical, generalization, conditional };

std::string_view to_string(ErrorKind kind);

struct ErrorReport {
  double absolute = 0.0;            ///< mean-square residual, response units squared
  std::optional<double> relative;   ///< absolute / empirical variance; empty if variance is zero
  std::size_t sample_count = 0;
  ErrorKind kind = ErrorKind::generalization;
  std::optional<double> threshold;  ///< conditional reports only
};

inline constexpr std::size_t kDefaultMinConditionalSubset = 30;

/// Mean-square residual over the design; relative to the 1/(N-1) variance of `exact`.
ErrorReport empirical_error(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted);

/// Same formula over a validation set.
ErrorReport generalization_error(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted);

/// Error over { exact >= threshold }, normalized by the variance of that subset.
/// Throws std::domain_error if the subset is smaller than min_subset or has zero variance.
ErrorReport conditional_generalization_error(const Eigen::VectorXd& exact,
                                             const Eigen::VectorXd& predicted, double threshold,
                                             std::size_t min_subset = kDefaultMinConditionalSubset);

/// Empirical quantile: the ceil(level * n)-th smallest value.
double response_quantile(const Eigen::VectorXd& values, double level);

/// Conditional errors at thresholds given as response quantile levels.
std::vector<ErrorReport> conditional_error_curve(const Eigen::VectorXd& exact,
                                                 const Eigen::VectorXd& predicted,
                                                 const std::vector<double>& levels,
                                                 std::size_t min_subset = kDefaultMinConditionalSubset);

}  // namespace metamodel
