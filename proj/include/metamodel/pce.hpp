#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "metamodel/polybasis.hpp"

namespace metamodel {

struct PceOptions {
  std::vector<int> degrees = default_degrees();
  std::vector<double> q_values{0.25, 0.50, 0.75, 1.0};
  /// Candidate bases larger than this are skipped (and larger degrees with them).
  std::size_t max_basis_size = 50000;
  /// Stop raising the degree for a given q after this many degrees without
  /// improvement of the best score; 0 scans every degree.
  int degree_patience = 2;
  int jobs = 1;

  static std::vector<int> default_degrees() {
    std::vector<int> d;
    for (int p = 1; p <= 20; ++p) d.push_back(p);
    return d;
  }
};

/// Outcome of one (total degree, q) cell of the truncation grid.
struct PceGridCell {
  int degree = 0;
  double q = 1.0;
  std::size_t candidate_size = 0;
  std::size_t selected_size = 0;
  double score = 0.0;  ///< corrected LOO of the best LAR prefix; NaN if none usable
  bool skipped = false;
};

struct PceModel {
  BasisSet basis;                ///< retained indices only, graded order
  Eigen::VectorXd coefficients;  ///< aligned with basis
  int total_degree = 0;
  double q = 1.0;
  double loo_error = 0.0;        ///< corrected relative LOO error of the selected model
  std::size_t candidate_size = 0;
  std::vector<PceGridCell> grid;
};

/// Sparse PCE by hybrid LAR over the (degree, q) grid, selected by minimum
/// corrected LOO error. `points` are standardized (basis-compatible) coordinates.
PceModel fit_sparse_pce(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                        const std::vector<PolyFamily>& families, const PceOptions& options = {});

double predict_pce(const PceModel& model, const Eigen::VectorXd& point);
Eigen::VectorXd predict_pce(const PceModel& model, const Eigen::MatrixXd& points);

}  // namespace metamodel
