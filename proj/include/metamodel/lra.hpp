#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "metamodel/polybasis.hpp"
#include "metamodel/regression.hpp"

namespace metamodel {

/// Exit rule of the alternating least-squares loop in a correction step.
struct StoppingRule {
  int max_iterations = 50;
  double min_error_decrease = 1e-6;
};

/// Per-dimension coefficient vectors z^{(i)} (length p_i + 1) of one rank-one term.
struct RankOneComponent {
  std::vector<Eigen::VectorXd> coefficients;
};

/// Canonical low-rank approximation  sum_l b_l prod_i v_l^{(i)}(z_i).
struct LraModel {
  std::vector<RankOneComponent> components;
  Eigen::VectorXd b;
  std::vector<int> degrees;
  std::vector<PolyFamily> families;
  StoppingRule rule;
  std::vector<int> iterations;                  ///< ALS sweeps per correction step
  std::vector<std::vector<double>> error_trace; ///< relative empirical error after each sweep
  bool collinear = false;                       ///< updating step fell back to minimum norm

  int rank() const { return static_cast<int>(components.size()); }
};

/// Univariate design tables: entry i is the N x (p_i + 1) matrix P_k^{(i)}(z_qi).
std::vector<Eigen::MatrixXd> univariate_tables(const Eigen::MatrixXd& points,
                                               const std::vector<int>& degrees,
                                               const std::vector<PolyFamily>& families);

struct CorrectionResult {
  RankOneComponent component;
  Eigen::VectorXd values;           ///< w(chi^(q)) at the design points
  int iterations = 0;
  std::vector<double> error_trace;  ///< relative empirical error after each sweep
};

/// Builds one rank-one term fitting `residual` by alternating least squares,
/// starting from v^{(i)} = 1. Errors are normalized by `response_variance`.
CorrectionResult correction_step(const std::vector<Eigen::MatrixXd>& tables,
                                 const Eigen::VectorXd& residual, double response_variance,
                                 const StoppingRule& rule);
CorrectionResult correction_step(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                                 const std::vector<int>& degrees,
                                 const std::vector<PolyFamily>& families, const StoppingRule& rule,
                                 double response_variance);

struct UpdateResult {
  Eigen::VectorXd b;
  LeastSquaresFit fit;
  bool collinear = false;
};

/// Re-solves all normalizing coefficients b given the component values W (N x r).
UpdateResult updating_step(const Eigen::MatrixXd& component_values, const Eigen::VectorXd& targets);

struct LraSequence {
  std::vector<LraModel> models;         ///< models[r] has rank r; models[0] predicts 0
  std::vector<LeastSquaresFit> updates; ///< updates[r-1]: updating-step fit of rank r
  Eigen::MatrixXd component_values;     ///< N x r_built
  std::string diagnostic;               ///< why construction stopped before r_max, if it did

  int max_rank() const { return static_cast<int>(models.size()) - 1; }
};

/// Greedy construction of ranks 1..r_max (correction then updating step per rank).
LraSequence fit_lra_sequence(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                             int max_rank, const std::vector<int>& degrees,
                             const std::vector<PolyFamily>& families, const StoppingRule& rule);

struct RankSelection {
  int rank = 0;
  double error = 0.0;               ///< averaged CV error (or corrected LOO) of the selected rank
  std::vector<double> rank_errors;  ///< entry r-1 for rank r; +inf when unavailable
  LraModel model;
  FoldPartition partition;
};

/// Rank chosen by 3-fold cross-validation, then refit on the full design.
RankSelection select_rank_cv3(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                              int max_rank, const std::vector<int>& degrees,
                              const std::vector<PolyFamily>& families, const StoppingRule& rule,
                              std::uint64_t seed);

/// Rank chosen by the corrected LOO error of the updating step (P = r).
RankSelection select_rank_loo(const LraSequence& sequence, const Eigen::VectorXd& responses);

struct DegreeSelection {
  int degree = 0;
  int rank = 0;
  double error = 0.0;
  std::vector<int> degrees_tried;
  std::vector<double> degree_errors;
  std::vector<double> rank_errors;  ///< CV errors per rank at the selected degree
  LraModel model;
};

/// Common degree chosen by 3-fold CV (inner rank selection by 3-fold CV). With
/// patience > 0 the degree scan stops after that many non-improving degrees.
DegreeSelection select_degree_cv3(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                                  const std::vector<int>& degree_candidates, int max_rank,
                                  const std::vector<PolyFamily>& families, const StoppingRule& rule,
                                  std::uint64_t seed, int patience = 0);

double predict_lra(const LraModel& model, const Eigen::VectorXd& point);
Eigen::VectorXd predict_lra(const LraModel& model, const Eigen::MatrixXd& points);

}  // namespace metamodel
