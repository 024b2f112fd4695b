#include "metamodel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "metamodel/regression.hpp"

namespace metamodel {

namespace {

ErrorReport make_report(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted,
                        ErrorKind kind) {
  if (exact.size() != predicted.size()) throw std::invalid_argument("size mismatch");
  if (exact.size() == 0) throw std::invalid_argument("error estimate needs at least one sample");
  ErrorReport report;
  report.kind = kind;
  report.sample_count = static_cast<std::size_t>(exact.size());
  report.absolute = (exact - predicted).squaredNorm() / static_cast<double>(exact.size());
  const double variance = empirical_variance(exact);
  if (variance > 0.0) report.relative = report.absolute / variance;
  return report;
}

}  // namespace

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::empirical: return "empirical";
    case ErrorKind::generalization: return "generalization";
    case ErrorKind::conditional: return "conditional";
  }
  return "unknown";
}

ErrorReport empirical_error(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted) {
  return make_report(exact, predicted, ErrorKind::empirical);
}

ErrorReport generalization_error(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted) {
  return make_report(exact, predicted, ErrorKind::generalization);
}

ErrorReport conditional_generalization_error(const Eigen::VectorXd& exact,
                                             const Eigen::VectorXd& predicted, double threshold,
                                             std::size_t min_subset) {
  if (exact.size() != predicted.size()) throw std::invalid_argument("size mismatch");
  std::vector<Eigen::Index> subset;
  for (Eigen::Index i = 0; i < exact.size(); ++i) {
    if (exact[i] >= threshold) subset.push_back(i);
  }
  if (subset.size() < std::max<std::size_t>(min_subset, 1)) {
    throw std::domain_error("conditional subset has " + std::to_string(subset.size()) +
                            " points, fewer than the required " + std::to_string(min_subset));
  }
  auto report = make_report(take_rows(exact, subset), take_rows(predicted, subset),
                            ErrorKind::conditional);
  if (!report.relative) throw std::domain_error("conditional subset has zero variance");
  report.threshold = threshold;
  return report;
}

double response_quantile(const Eigen::VectorXd& values, double level) {
  if (values.size() == 0) throw std::invalid_argument("quantile of an empty set");
  if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("quantile level outside [0,1]");
  std::vector<double> sorted(values.data(), values.data() + values.size());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(level * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

std::vector<ErrorReport> conditional_error_curve(const Eigen::VectorXd& exact,
                                                 const Eigen::VectorXd& predicted,
                                                 const std::vector<double>& levels,
                                                 std::size_t min_subset) {
  std::vector<ErrorReport> curve;
  curve.reserve(levels.size());
  for (double level : levels) {
    curve.push_back(conditional_generalization_error(exact, predicted,
                                                     response_quantile(exact, level), min_subset));
  }
  return curve;
}

}  // namespace metamodel
