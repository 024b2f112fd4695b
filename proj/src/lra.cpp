#include "metamodel/lra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "metamodel/error.hpp"

namespace metamodel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_layout(const Eigen::MatrixXd& points, const std::vector<int>& degrees,
                  const std::vector<PolyFamily>& families) {
  const auto m = static_cast<size_t>(points.cols());
  if (degrees.size() != m || families.size() != m) {
    throw std::invalid_argument("one degree and one family per input dimension required");
  }
  for (int p : degrees) {
    if (p < 0) throw std::invalid_argument("polynomial degrees must be nonnegative");
  }
}

void check_rule(const StoppingRule& rule) {
  if (rule.max_iterations < 1) throw std::invalid_argument("I_max must be >= 1");
  if (!(rule.min_error_decrease >= 0.0)) throw std::invalid_argument("delta_err_min must be >= 0");
}

// Component values at the rows of the given tables.
Eigen::VectorXd component_values(const RankOneComponent& component,
                                 const std::vector<Eigen::MatrixXd>& tables, Eigen::Index rows) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(rows);
  for (size_t i = 0; i < tables.size(); ++i) {
    w.array() *= (tables[i] * component.coefficients[i]).array();
  }
  return w;
}

LraModel zero_model(const std::vector<int>& degrees, const std::vector<PolyFamily>& families,
                    const StoppingRule& rule) {
  LraModel model;
  model.b = Eigen::VectorXd(0);
  model.degrees = degrees;
  model.families = families;
  model.rule = rule;
  return model;
}

}  // namespace

std::vector<Eigen::MatrixXd> univariate_tables(const Eigen::MatrixXd& points,
                                               const std::vector<int>& degrees,
                                               const std::vector<PolyFamily>& families) {
  check_layout(points, degrees, families);
  std::vector<Eigen::MatrixXd> tables;
  tables.reserve(degrees.size());
  std::vector<double> buffer;
  for (size_t i = 0; i < degrees.size(); ++i) {
    const int p = degrees[i];
    Eigen::MatrixXd table(points.rows(), p + 1);
    buffer.resize(static_cast<size_t>(p) + 1);
    for (Eigen::Index q = 0; q < points.rows(); ++q) {
      eval_univariate_all(families[i], p, points(q, static_cast<Eigen::Index>(i)), buffer);
      for (int k = 0; k <= p; ++k) table(q, k) = buffer[static_cast<size_t>(k)];
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

CorrectionResult correction_step(const std::vector<Eigen::MatrixXd>& tables,
                                 const Eigen::VectorXd& residual, double response_variance,
                                 const StoppingRule& rule) {
  check_rule(rule);
  if (tables.empty()) throw std::invalid_argument("correction step needs at least one dimension");
  if (!(response_variance > 0.0)) {
    throw FitError("correction step: response variance must be positive");
  }
  const auto n = residual.size();
  const auto m = tables.size();
  const double normalizer = static_cast<double>(n) * response_variance;
  const bool zero_target = residual.isZero(0.0);

  CorrectionResult result;
  result.component.coefficients.resize(m);
  std::vector<Eigen::VectorXd> v(m, Eigen::VectorXd::Ones(n));
  for (size_t i = 0; i < m; ++i) {
    result.component.coefficients[i] = Eigen::VectorXd::Zero(tables[i].cols());
    result.component.coefficients[i][0] = 1.0;  // v = 1 is P_0 with unit coefficient
  }

  double previous = residual.squaredNorm() / normalizer;
  Eigen::VectorXd frozen(n);
  for (int sweep = 1; sweep <= rule.max_iterations; ++sweep) {
    for (size_t j = 0; j < m; ++j) {
      frozen.setOnes();
      for (size_t i = 0; i < m; ++i) {
        if (i != j) frozen.array() *= v[i].array();
      }
      if (frozen.isZero(0.0)) {
        if (!zero_target) {
          throw FitError("correction step: frozen product vanishes at every design point (dimension " +
                         std::to_string(j + 1) + ")");
        }
        result.component.coefficients[j].setZero();
        v[j].setZero();
        continue;
      }
      const Eigen::MatrixXd regressors = frozen.asDiagonal() * tables[j];
      result.component.coefficients[j] = least_squares_solve(regressors, residual);
      v[j] = tables[j] * result.component.coefficients[j];
    }
    Eigen::VectorXd w = v[0];
    for (size_t i = 1; i < m; ++i) w.array() *= v[i].array();
    const double error = (residual - w).squaredNorm() / normalizer;
    result.error_trace.push_back(error);
    result.iterations = sweep;
    result.values = std::move(w);
    const double decrease = previous - error;
    previous = error;
    if (!(decrease > rule.min_error_decrease)) break;
  }
  return result;
}

CorrectionResult correction_step(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                                 const std::vector<int>& degrees,
                                 const std::vector<PolyFamily>& families, const StoppingRule& rule,
                                 double response_variance) {
  if (points.rows() != residual.size()) throw std::invalid_argument("residual length mismatch");
  return correction_step(univariate_tables(points, degrees, families), residual, response_variance,
                         rule);
}

UpdateResult updating_step(const Eigen::MatrixXd& component_values, const Eigen::VectorXd& targets) {
  if (component_values.cols() > component_values.rows()) {
    throw std::invalid_argument("updating step needs r <= N");
  }
  UpdateResult result;
  result.fit = ols(component_values, targets);
  result.b = result.fit.coefficients;
  result.collinear = result.fit.rank_deficient;
  return result;
}

LraSequence fit_lra_sequence(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                             int max_rank, const std::vector<int>& degrees,
                             const std::vector<PolyFamily>& families, const StoppingRule& rule) {
  if (max_rank < 1) throw std::invalid_argument("r_max must be >= 1");
  if (points.rows() != responses.size()) throw std::invalid_argument("response count mismatch");
  check_rule(rule);
  const auto tables = univariate_tables(points, degrees, families);
  const double variance = empirical_variance(responses);
  if (!(variance > 0.0)) throw FitError("LRA: responses have zero empirical variance");
  const auto n = points.rows();

  LraSequence sequence;
  sequence.models.push_back(zero_model(degrees, families, rule));
  sequence.component_values.resize(n, 0);
  Eigen::VectorXd current = Eigen::VectorXd::Zero(n);

  for (int r = 1; r <= max_rank; ++r) {
    if (r > n) {
      sequence.diagnostic = "rank limited by design size";
      break;
    }
    CorrectionResult correction;
    try {
      correction = correction_step(tables, responses - current, variance, rule);
    } catch (const FitError& e) {
      if (r == 1) throw;
      sequence.diagnostic = "stopped at rank " + std::to_string(r) + ": " + e.what();
      break;
    }
    sequence.component_values.conservativeResize(n, r);
    sequence.component_values.col(r - 1) = correction.values;
    auto update = updating_step(sequence.component_values, responses);
    current = sequence.component_values * update.b;

    LraModel model = sequence.models.back();
    model.components.push_back(std::move(correction.component));
    model.iterations.push_back(correction.iterations);
    model.error_trace.push_back(std::move(correction.error_trace));
    model.b = update.b;
    model.collinear = model.collinear || update.collinear;
    sequence.models.push_back(std::move(model));
    sequence.updates.push_back(std::move(update.fit));
  }
  return sequence;
}

RankSelection select_rank_cv3(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                              int max_rank, const std::vector<int>& degrees,
                              const std::vector<PolyFamily>& families, const StoppingRule& rule,
                              std::uint64_t seed) {
  constexpr int kFolds = 3;
  const auto n = points.rows();
  if (n < 6) throw std::invalid_argument("3-fold CV rank selection needs N >= 6");
  if (max_rank < 1) throw std::invalid_argument("r_max must be >= 1");

  RankSelection selection;
  selection.partition = kfold_partition(n, kFolds, seed);
  std::vector<double> sums(static_cast<size_t>(max_rank), 0.0);
  std::vector<int> usable(static_cast<size_t>(max_rank), 0);

  for (int fold = 1; fold <= kFolds; ++fold) {
    const auto train = selection.partition.complement(fold);
    const auto test = selection.partition.members(fold);
    const Eigen::VectorXd test_y = take_rows(responses, test);
    const double test_variance = empirical_variance(test_y);
    if (!(test_variance > 0.0)) continue;
    LraSequence sequence;
    try {
      sequence = fit_lra_sequence(take_rows(points, train), take_rows(responses, train), max_rank,
                                  degrees, families, rule);
    } catch (const FitError&) {
      continue;
    }
    const auto test_tables = univariate_tables(take_rows(points, test), degrees, families);
    const auto& full = sequence.models.back();
    Eigen::MatrixXd w_test(static_cast<Eigen::Index>(test.size()), full.rank());
    for (int l = 0; l < full.rank(); ++l) {
      w_test.col(l) = component_values(full.components[static_cast<size_t>(l)], test_tables,
                                       w_test.rows());
    }
    for (int r = 1; r <= sequence.max_rank(); ++r) {
      const Eigen::VectorXd predicted = w_test.leftCols(r) * sequence.models[static_cast<size_t>(r)].b;
      const double mse = (test_y - predicted).squaredNorm() / static_cast<double>(test.size());
      sums[static_cast<size_t>(r - 1)] += mse / test_variance;
      ++usable[static_cast<size_t>(r - 1)];
    }
  }

  selection.rank_errors.assign(static_cast<size_t>(max_rank), kInf);
  for (int r = 1; r <= max_rank; ++r) {
    const auto idx = static_cast<size_t>(r - 1);
    if (usable[idx] == kFolds) selection.rank_errors[idx] = sums[idx] / kFolds;
  }
  const auto best = std::min_element(selection.rank_errors.begin(), selection.rank_errors.end());
  if (*best == kInf) {
    throw FitError("3-fold CV: no rank could be fitted and scored on every fold (N=" +
                   std::to_string(n) + ")");
  }
  selection.rank = static_cast<int>(best - selection.rank_errors.begin()) + 1;
  selection.error = *best;
  auto sequence = fit_lra_sequence(points, responses, selection.rank, degrees, families, rule);
  selection.model = std::move(sequence.models.back());
  return selection;
}

RankSelection select_rank_loo(const LraSequence& sequence, const Eigen::VectorXd& responses) {
  RankSelection selection;
  const auto n = responses.size();
  selection.rank_errors.assign(sequence.updates.size(), kInf);
  for (size_t i = 0; i < sequence.updates.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i) + 1;
    try {
      selection.rank_errors[i] = corrected_loo(sequence.updates[i], responses, r, n);
    } catch (const FitError&) {
      // rank excluded
    }
  }
  const auto best = std::min_element(selection.rank_errors.begin(), selection.rank_errors.end());
  if (best == selection.rank_errors.end() || *best == kInf) {
    throw FitError("LOO rank selection: no admissible rank");
  }
  selection.rank = static_cast<int>(best - selection.rank_errors.begin()) + 1;
  selection.error = *best;
  selection.model = sequence.models[static_cast<size_t>(selection.rank)];
  return selection;
}

DegreeSelection select_degree_cv3(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                                  const std::vector<int>& degree_candidates, int max_rank,
                                  const std::vector<PolyFamily>& families, const StoppingRule& rule,
                                  std::uint64_t seed, int patience) {
  if (degree_candidates.empty()) throw std::invalid_argument("no degree candidates");
  std::vector<int> candidates = degree_candidates;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  const auto m = static_cast<size_t>(points.cols());

  DegreeSelection selection;
  double best = kInf;
  int stale = 0;
  std::string last_failure;
  for (int p : candidates) {
    double error = kInf;
    try {
      auto ranked = select_rank_cv3(points, responses, max_rank, std::vector<int>(m, p), families,
                                    rule, seed);
      error = ranked.error;
      if (error < best) {
        best = error;
        selection.degree = p;
        selection.rank = ranked.rank;
        selection.error = error;
        selection.rank_errors = ranked.rank_errors;
        selection.model = std::move(ranked.model);
      }
    } catch (const FitError& e) {
      last_failure = e.what();
    }
    selection.degrees_tried.push_back(p);
    selection.degree_errors.push_back(error);
    if (error < kInf && error == best) {
      stale = 0;
    } else if (patience > 0 && ++stale >= patience) {
      break;
    }
  }
  if (best == kInf) throw FitError("degree selection: every candidate failed (" + last_failure + ")");
  return selection;
}

double predict_lra(const LraModel& model, const Eigen::VectorXd& point) {
  Eigen::MatrixXd row = point.transpose();
  return predict_lra(model, row)[0];
}

Eigen::VectorXd predict_lra(const LraModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != static_cast<Eigen::Index>(model.degrees.size())) {
    throw std::invalid_argument("point dimension mismatch");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.rows());
  if (model.components.empty()) return out;
  const auto tables = univariate_tables(points, model.degrees, model.families);
  for (int l = 0; l < model.rank(); ++l) {
    out += model.b[l] * component_values(model.components[static_cast<size_t>(l)], tables, points.rows());
  }
  return out;
}

}  // namespace metamodel
