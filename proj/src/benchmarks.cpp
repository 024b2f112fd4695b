#include "metamodel/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "metamodel/error.hpp"

namespace metamodel {

double beam_deflection(const Eigen::VectorXd& x) {
  if (x.size() != 5) throw std::invalid_argument("beam model takes {b, h, L, E, P}");
  for (Eigen::Index i = 0; i < 5; ++i) {
    if (!(x[i] > 0.0)) throw std::domain_error("beam inputs must be positive");
  }
  const double b = x[0], h = x[1], length = x[2], modulus = x[3], load = x[4];
  return load * length * length * length / (4.0 * modulus * b * h * h * h);
}

InputModel beam_input_model() {
  return InputModel({
      marginal_from_moments(Family::lognormal, 0.15, 0.05, "b"),
      marginal_from_moments(Family::lognormal, 0.3, 0.05, "h"),
      marginal_from_moments(Family::lognormal, 5.0, 0.01, "L"),
      marginal_from_moments(Family::lognormal, 30000.0, 0.15, "E"),
      marginal_from_moments(Family::lognormal, 0.01, 0.20, "P"),
  });
}

TrussGeometry default_truss_geometry() {
  TrussGeometry g;
  for (int k = 0; k <= 6; ++k) g.nodes.emplace_back(4.0 * k, 0.0);        // bottom chord 0..6
  for (int k = 0; k < 6; ++k) g.nodes.emplace_back(2.0 + 4.0 * k, 2.0);   // top chord 7..12
  for (int k = 0; k < 6; ++k) g.bars.push_back({k, k + 1, BarGroup::horizontal});
  for (int k = 0; k < 5; ++k) g.bars.push_back({7 + k, 8 + k, BarGroup::horizontal});
  for (int k = 0; k < 6; ++k) {
    g.bars.push_back({k, 7 + k, BarGroup::diagonal});
    g.bars.push_back({7 + k, k + 1, BarGroup::diagonal});
  }
  g.supports = {{0, true, true}, {6, false, true}};
  g.load_nodes = {7, 8, 9, 10, 11, 12};
  g.output_node = 3;
  return g;
}

TrussGeometry truss_geometry_from_json(const nlohmann::json& doc) {
  TrussGeometry g;
  for (const auto& node : doc.at("nodes")) {
    g.nodes.emplace_back(node.at(0).get<double>(), node.at(1).get<double>());
  }
  for (const auto& bar : doc.at("bars")) {
    const auto group = bar.at(2).get<std::string>();
    if (group != "horizontal" && group != "diagonal") {
      throw std::invalid_argument("bar group must be 'horizontal' or 'diagonal'");
    }
    g.bars.push_back({bar.at(0).get<int>(), bar.at(1).get<int>(),
                      group == "horizontal" ? BarGroup::horizontal : BarGroup::diagonal});
  }
  for (const auto& s : doc.at("supports")) {
    g.supports.push_back({s.at(0).get<int>(), s.at(1).get<bool>(), s.at(2).get<bool>()});
  }
  g.load_nodes = doc.at("loads").get<std::vector<int>>();
  g.output_node = doc.at("output_node").get<int>();
  g.modulus_factor = doc.value("modulus_factor", 1e3);
  const auto n = static_cast<int>(g.nodes.size());
  auto check = [n](int node) {
    if (node < 0 || node >= n) throw std::invalid_argument("truss node index out of range");
  };
  for (const auto& bar : g.bars) {
    check(bar.start);
    check(bar.end);
  }
  for (const auto& s : g.supports) check(s.node);
  for (int node : g.load_nodes) check(node);
  check(g.output_node);
  return g;
}

nlohmann::json to_json(const TrussGeometry& g) {
  nlohmann::json doc;
  doc["nodes"] = nlohmann::json::array();
  for (const auto& p : g.nodes) doc["nodes"].push_back({p.x(), p.y()});
  doc["bars"] = nlohmann::json::array();
  for (const auto& bar : g.bars) {
    doc["bars"].push_back(
        {bar.start, bar.end, bar.group == BarGroup::horizontal ? "horizontal" : "diagonal"});
  }
  doc["supports"] = nlohmann::json::array();
  for (const auto& s : g.supports) doc["supports"].push_back({s.node, s.fix_x, s.fix_y});
  doc["loads"] = g.load_nodes;
  doc["output_node"] = g.output_node;
  doc["modulus_factor"] = g.modulus_factor;
  return doc;
}

double truss_deflection(const TrussGeometry& geometry, const Eigen::VectorXd& x) {
  const auto loads = static_cast<Eigen::Index>(geometry.load_nodes.size());
  if (x.size() != 4 + loads) {
    throw std::invalid_argument("truss model takes {A1, A2, E1, E2, P1..P" + std::to_string(loads) + "}");
  }
  for (Eigen::Index i = 0; i < 4; ++i) {
    if (!(x[i] > 0.0)) throw std::domain_error("truss areas and moduli must be positive");
  }
  const auto dofs = static_cast<Eigen::Index>(2 * geometry.nodes.size());
  Eigen::MatrixXd stiffness = Eigen::MatrixXd::Zero(dofs, dofs);
  for (const auto& bar : geometry.bars) {
    const bool horizontal = bar.group == BarGroup::horizontal;
    const double area = horizontal ? x[0] : x[1];
    const double modulus = (horizontal ? x[2] : x[3]) * geometry.modulus_factor;
    const Eigen::Vector2d d = geometry.nodes[static_cast<size_t>(bar.end)] -
                              geometry.nodes[static_cast<size_t>(bar.start)];
    const double length = d.norm();
    if (!(length > 0.0)) throw ModelEvaluationError("truss bar of zero length");
    const Eigen::Vector2d c = d / length;
    Eigen::Vector4d t(-c.x(), -c.y(), c.x(), c.y());
    const Eigen::Matrix4d k = (modulus * area / length) * (t * t.transpose());
    const Eigen::Index idx[4] = {2 * bar.start, 2 * bar.start + 1, 2 * bar.end, 2 * bar.end + 1};
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) stiffness(idx[a], idx[b]) += k(a, b);
    }
  }
  Eigen::VectorXd force = Eigen::VectorXd::Zero(dofs);
  for (Eigen::Index k = 0; k < loads; ++k) {
    force[2 * geometry.load_nodes[static_cast<size_t>(k)] + 1] -= x[4 + k];
  }

  std::vector<char> fixed(static_cast<size_t>(dofs), 0);
  for (const auto& s : geometry.supports) {
    if (s.fix_x) fixed[static_cast<size_t>(2 * s.node)] = 1;
    if (s.fix_y) fixed[static_cast<size_t>(2 * s.node + 1)] = 1;
  }
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < dofs; ++i) {
    if (!fixed[static_cast<size_t>(i)]) free.push_back(i);
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd reduced(nf, nf);
  Eigen::VectorXd rhs(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    rhs[a] = force[free[static_cast<size_t>(a)]];
    for (Eigen::Index b = 0; b < nf; ++b) {
      reduced(a, b) = stiffness(free[static_cast<size_t>(a)], free[static_cast<size_t>(b)]);
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(reduced);
  if (llt.info() != Eigen::Success) throw ModelEvaluationError("truss stiffness is singular (mechanism)");
  const Eigen::VectorXd u = llt.solve(rhs);
  // Guard against near-mechanisms that pass the factorization.
  if (!u.allFinite() || (reduced * u - rhs).norm() > 1e-8 * std::max(1.0, rhs.norm())) {
    throw ModelEvaluationError("truss stiffness is singular (mechanism)");
  }
  const Eigen::Index out = 2 * geometry.output_node + 1;
  if (fixed[static_cast<size_t>(out)]) return 0.0;
  const auto pos = std::find(free.begin(), free.end(), out) - free.begin();
  return -u[pos];
}

InputModel truss_input_model(int load_count) {
  std::vector<Marginal> marginals{
      marginal_from_moments(Family::lognormal, 0.002, 0.10, "A1"),
      marginal_from_moments(Family::lognormal, 0.001, 0.10, "A2"),
      marginal_from_moments(Family::lognormal, 2.1e5, 0.10, "E1"),
      marginal_from_moments(Family::lognormal, 2.1e5, 0.10, "E2"),
  };
  for (int k = 1; k <= load_count; ++k) {
    marginals.push_back(marginal_from_moments(Family::gumbel, 50.0, 0.15, "P" + std::to_string(k)));
  }
  return InputModel(std::move(marginals));
}

double EoleField::correlation(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const {
  return std::exp(-(a - b).squaredNorm() / (correlation_length * correlation_length));
}

namespace {

Eigen::VectorXd cross_correlation(const EoleField& field, const Eigen::Vector2d& z) {
  Eigen::VectorXd c(field.grid.rows());
  for (Eigen::Index k = 0; k < field.grid.rows(); ++k) {
    c[k] = field.correlation(z, field.grid.row(k).transpose());
  }
  return c;
}

Eigen::RowVectorXd mode_row(const EoleField& field, const Eigen::Vector2d& z) {
  const Eigen::VectorXd c = cross_correlation(field, z);
  Eigen::RowVectorXd row(field.terms);
  for (int i = 0; i < field.terms; ++i) {
    // Modes whose eigenvalue was clamped to zero carry no variance.
    const double l = field.eigenvalues[i];
    row[i] = l > 0.0 ? field.eigenvectors.col(i).dot(c) / std::sqrt(l) : 0.0;
  }
  return row;
}

}  // namespace

EoleField eole_build(const GridSpec& spec, double correlation_length, double trace_fraction,
                     double kappa_mean, double kappa_stddev) {
  if (!(trace_fraction > 0.0 && trace_fraction <= 1.0)) {
    throw std::invalid_argument("trace fraction must lie in (0, 1]");
  }
  if (!(correlation_length > 0.0)) throw std::invalid_argument("correlation length must be positive");
  if (spec.nx < 1 || spec.ny < 1) throw std::invalid_argument("grid needs at least one point per axis");
  if (!(kappa_mean > 0.0 && kappa_stddev > 0.0)) {
    throw std::invalid_argument("conductivity mean and std must be positive");
  }
  EoleField field;
  field.correlation_length = correlation_length;
  const int n = spec.nx * spec.ny;
  field.grid.resize(n, 2);
  auto axis = [](double lo, double hi, int count, int k) {
    return count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / (count - 1);
  };
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      field.grid(j * spec.nx + i, 0) = axis(spec.x_min, spec.x_max, spec.nx, i);
      field.grid(j * spec.nx + i, 1) = axis(spec.y_min, spec.y_max, spec.ny, j);
    }
  }
  Eigen::MatrixXd corr(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      corr(a, b) = field.correlation(field.grid.row(a).transpose(), field.grid.row(b).transpose());
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(corr);
  if (solver.info() != Eigen::Success) throw std::runtime_error("EOLE eigendecomposition failed");
  // Eigen returns ascending order.
  field.eigenvalues = solver.eigenvalues().reverse();
  field.eigenvectors = solver.eigenvectors().rowwise().reverse();
  if (field.eigenvalues.minCoeff() < -1e-8 * n) {
    throw std::runtime_error("EOLE correlation matrix is not positive semi-definite");
  }
  field.eigenvalues = field.eigenvalues.cwiseMax(0.0);

  std::vector<double> cumulative(static_cast<size_t>(n));
  std::partial_sum(field.eigenvalues.data(), field.eigenvalues.data() + n, cumulative.begin());
  const double total = cumulative.back();
  field.terms = n;
  for (int m = 1; m <= n && trace_fraction < 1.0; ++m) {
    if (cumulative[static_cast<size_t>(m - 1)] / total >= trace_fraction) {
      field.terms = m;
      break;
    }
  }

  const double cov = kappa_stddev / kappa_mean;
  field.b_kappa = std::sqrt(std::log1p(cov * cov));
  field.a_kappa = std::log(kappa_mean) - 0.5 * field.b_kappa * field.b_kappa;

  constexpr int kRegionPoints = 5;
  field.region_modes.resize(kRegionPoints * kRegionPoints, field.terms);
  for (int j = 0; j < kRegionPoints; ++j) {
    for (int i = 0; i < kRegionPoints; ++i) {
      const Eigen::Vector2d z(-0.3 + (i + 0.5) * 0.1 / kRegionPoints,
                              -0.3 + (j + 0.5) * 0.1 / kRegionPoints);
      field.region_modes.row(j * kRegionPoints + i) = mode_row(field, z);
    }
  }
  return field;
}

FieldValue eole_realize(const EoleField& field, const Eigen::VectorXd& xi, const Eigen::Vector2d& z) {
  if (xi.size() != field.terms) throw std::invalid_argument("xi length must equal the retained terms");
  FieldValue value;
  value.g = mode_row(field, z).dot(xi);
  value.kappa = std::exp(field.a_kappa + field.b_kappa * value.g);
  return value;
}

double field_functional(const EoleField& field, const Eigen::VectorXd& xi) {
  if (xi.size() != field.terms) throw std::invalid_argument("xi length must equal the retained terms");
  const Eigen::VectorXd g = field.region_modes * xi;
  return (field.a_kappa + field.b_kappa * g.array()).exp().mean();
}

std::vector<std::string> benchmark_names() { return {"beam", "truss", "eole-field"}; }

Benchmark make_truss_benchmark(TrussGeometry geometry) {
  const auto loads = static_cast<int>(geometry.load_nodes.size());
  auto shared = std::make_shared<const TrussGeometry>(std::move(geometry));
  return {"truss",
          "mid-span deflection [m] of a plane truss; inputs A1, A2 [m^2], E1, E2 [MPa], P1..P" +
              std::to_string(loads) + " [kN]",
          truss_input_model(loads),
          [shared](const Eigen::VectorXd& x) { return truss_deflection(*shared, x); }};
}

Benchmark make_benchmark(std::string_view name) {
  if (name == "beam") {
    return {"beam", "mid-span deflection [m] of a simply supported beam; inputs b, h, L [m], E [MPa], P [MN]",
            beam_input_model(), [](const Eigen::VectorXd& x) { return beam_deflection(x); }};
  }
  if (name == "truss") return make_truss_benchmark(default_truss_geometry());
  if (name == "eole-field") {
    auto field = std::make_shared<const EoleField>(eole_build(GridSpec{}, 0.2, 0.99));
    std::vector<Marginal> marginals;
    for (int i = 1; i <= field->terms; ++i) {
      marginals.push_back(Marginal::normal(0.0, 1.0, "xi" + std::to_string(i)));
    }
    return {"eole-field",
            "mean lognormal conductivity over B of an EOLE-discretized field (53 standard normals)",
            InputModel(std::move(marginals)),
            [field](const Eigen::VectorXd& xi) { return field_functional(*field, xi); }};
  }
  throw std::invalid_argument("unknown benchmark '" + std::string(name) + "'");
}

Eigen::VectorXd evaluate(const Benchmark& benchmark, const Eigen::MatrixXd& points) {
  Eigen::VectorXd y(points.rows());
  for (Eigen::Index q = 0; q < points.rows(); ++q) y[q] = benchmark.model(points.row(q).transpose());
  return y;
}

}  // namespace metamodel
