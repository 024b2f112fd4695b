#include "metamodel/pce.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "metamodel/error.hpp"
#include "metamodel/regression.hpp"

namespace metamodel {

namespace {

struct CellFit {
  PceGridCell cell;
  std::vector<size_t> positions;  // selected candidate positions, ascending
  std::optional<BasisSet> basis;
};

CellFit fit_cell(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                 const std::vector<PolyFamily>& families, int degree, double q, size_t cap) {
  CellFit out;
  out.cell.degree = degree;
  out.cell.q = q;
  out.cell.score = std::numeric_limits<double>::quiet_NaN();
  auto basis = enumerate_hyperbolic(families, degree, q, cap);
  if (!basis) {
    out.cell.skipped = true;
    out.cell.candidate_size = cap + 1;
    return out;
  }
  out.cell.candidate_size = basis->size();
  const Eigen::MatrixXd psi = design_matrix(*basis, points);

  // Index 0 is the constant term; LAR runs on the remaining columns.
  const auto path = lar_path(psi.rightCols(psi.cols() - 1), responses);
  Eigen::MatrixXd ordered(psi.rows(), static_cast<Eigen::Index>(path.order.size()) + 1);
  ordered.col(0) = psi.col(0);
  for (size_t k = 0; k < path.order.size(); ++k) {
    ordered.col(static_cast<Eigen::Index>(k) + 1) = psi.col(path.order[k] + 1);
  }
  const auto scores = prefix_corrected_loo(ordered, responses);

  size_t best = scores.size();
  for (size_t k = 0; k < scores.size(); ++k) {
    if (std::isnan(scores[k])) continue;
    if (best == scores.size() || scores[k] < scores[best]) best = k;
  }
  if (best == scores.size()) return out;

  out.cell.score = scores[best];
  out.cell.selected_size = best + 1;
  out.positions.push_back(0);
  for (size_t k = 0; k < best; ++k) out.positions.push_back(static_cast<size_t>(path.order[k]) + 1);
  std::sort(out.positions.begin(), out.positions.end());
  out.basis = std::move(basis);
  return out;
}

// Lexicographic preference: score, then basis size, degree, q.
bool better(const PceGridCell& a, const PceGridCell& b) {
  return std::tie(a.score, a.selected_size, a.degree, a.q) <
         std::tie(b.score, b.selected_size, b.degree, b.q);
}

// Scans degrees for one q value, with early stop on stagnation.
std::vector<CellFit> scan_degrees(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                                  const std::vector<PolyFamily>& families,
                                  const std::vector<int>& degrees, double q, const PceOptions& options) {
  std::vector<CellFit> fits;
  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int degree : degrees) {
    auto fit = fit_cell(points, responses, families, degree, q, options.max_basis_size);
    const bool skipped = fit.cell.skipped;
    const double score = fit.cell.score;
    fits.push_back(std::move(fit));
    if (skipped) break;
    if (!std::isnan(score) && score < best) {
      best = score;
      stale = 0;
    } else if (options.degree_patience > 0 && ++stale >= options.degree_patience) {
      break;
    }
  }
  return fits;
}

}  // namespace

PceModel fit_sparse_pce(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses,
                        const std::vector<PolyFamily>& families, const PceOptions& options) {
  const auto n = points.rows();
  if (n < 3) throw std::invalid_argument("sparse PCE needs at least 3 design points");
  if (points.cols() != static_cast<Eigen::Index>(families.size())) {
    throw std::invalid_argument("one polynomial family per input dimension required");
  }
  if (responses.size() != n) throw std::invalid_argument("response count mismatch");
  if (!responses.allFinite()) throw std::invalid_argument("responses must be finite");
  if (options.degrees.empty() || options.q_values.empty()) {
    throw std::invalid_argument("empty truncation grid");
  }
  std::vector<int> degrees = options.degrees;
  std::sort(degrees.begin(), degrees.end());
  degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());

  std::vector<std::vector<CellFit>> per_q(options.q_values.size());
  if (options.jobs > 1) {
    std::vector<std::future<std::vector<CellFit>>> tasks;
    for (double q : options.q_values) {
      tasks.push_back(std::async(std::launch::async, [&, q] {
        return scan_degrees(points, responses, families, degrees, q, options);
      }));
    }
    for (size_t i = 0; i < tasks.size(); ++i) per_q[i] = tasks[i].get();
  } else {
    for (size_t i = 0; i < options.q_values.size(); ++i) {
      per_q[i] = scan_degrees(points, responses, families, degrees, options.q_values[i], options);
    }
  }

  PceModel model;
  const CellFit* winner = nullptr;
  for (const auto& fits : per_q) {
    for (const auto& fit : fits) {
      model.grid.push_back(fit.cell);
      if (fit.cell.skipped || std::isnan(fit.cell.score)) continue;
      if (!winner || better(fit.cell, winner->cell)) winner = &fit;
    }
  }
  std::sort(model.grid.begin(), model.grid.end(), [](const auto& a, const auto& b) {
    return std::tie(a.degree, a.q) < std::tie(b.degree, b.q);
  });
  if (!winner) {
    std::ostringstream msg;
    msg << "sparse PCE: no usable model on the truncation grid (N=" << n << "); cells:";
    for (const auto& cell : model.grid) {
      msg << " (p=" << cell.degree << ",q=" << cell.q << (cell.skipped ? ",skipped" : ",degenerate")
          << ")";
    }
    throw FitError(msg.str());
  }

  model.basis = winner->basis->subset(winner->positions);
  model.total_degree = winner->cell.degree;
  model.q = winner->cell.q;
  model.loo_error = winner->cell.score;
  model.candidate_size = winner->cell.candidate_size;
  model.coefficients = ols(design_matrix(model.basis, points), responses).coefficients;
  return model;
}

double predict_pce(const PceModel& model, const Eigen::VectorXd& point) {
  Eigen::MatrixXd row = point.transpose();
  return predict_pce(model, row)[0];
}

Eigen::VectorXd predict_pce(const PceModel& model, const Eigen::MatrixXd& points) {
  if (points.cols() != static_cast<Eigen::Index>(model.basis.dim())) {
    throw std::invalid_argument("point dimension mismatch");
  }
  if (model.basis.size() == 0) return Eigen::VectorXd::Zero(points.rows());
  return design_matrix(model.basis, points) * model.coefficients;
}

}  // namespace metamodel
