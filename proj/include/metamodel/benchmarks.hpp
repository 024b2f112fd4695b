#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "metamodel/inputmodel.hpp"

namespace metamodel {

// ---------------------------------------------------------------------------
// Simply supported beam, inputs {b, h, L, E, P}; units m, MPa, MN.

double beam_deflection(const Eigen::VectorXd& x);
InputModel beam_input_model();

// ---------------------------------------------------------------------------
// Plane pin-jointed truss solved by the direct stiffness method.

enum class BarGroup { horizontal, diagonal };

struct TrussBar {
  int start = 0;
  int end = 0;
  BarGroup group = BarGroup::horizontal;
};

struct TrussSupport {
  int node = 0;
  bool fix_x = true;
  bool fix_y = true;
};

struct TrussGeometry {
  std::vector<Eigen::Vector2d> nodes;
  std::vector<TrussBar> bars;
  std::vector<TrussSupport> supports;
  std::vector<int> load_nodes;  ///< node receiving downward load P_k, k = 1..L
  int output_node = 0;          ///< node whose downward displacement is reported
  double modulus_factor = 1e3;  ///< converts E to load units per area (MPa -> kN/m^2)
};

/// 13-node, 23-bar truss: 24 m span, 2 m height, six loaded top-chord nodes,
/// pin at the left end, roller at the right end, output at mid-span.
TrussGeometry default_truss_geometry();
TrussGeometry truss_geometry_from_json(const nlohmann::json& document);
nlohmann::json to_json(const TrussGeometry& geometry);

/// x = {A1, A2, E1, E2, P1..PL}: (A1, E1) for horizontal bars, (A2, E2) for diagonals.
/// Returns the downward displacement of the output node (positive sag).
double truss_deflection(const TrussGeometry& geometry, const Eigen::VectorXd& x);
InputModel truss_input_model(int load_count = 6);

// ---------------------------------------------------------------------------
// EOLE discretization of a standard Gaussian field with squared-exponential
// correlation exp(-|z - z'|^2 / ell^2), mapped to a lognormal conductivity.

struct GridSpec {
  double x_min = -0.5, x_max = 0.5;
  double y_min = -0.5, y_max = 0.5;
  int nx = 11, ny = 11;
};

struct EoleField {
  Eigen::MatrixXd grid;          ///< n x 2 grid points
  double correlation_length = 0.2;
  Eigen::VectorXd eigenvalues;   ///< all n, descending, negatives clamped to zero
  Eigen::MatrixXd eigenvectors;  ///< columns aligned with eigenvalues
  int terms = 0;                 ///< retained M
  double a_kappa = 0.0;
  double b_kappa = 1.0;
  Eigen::MatrixXd region_modes;  ///< rows: averaging points in B; cols: phi_i^T C / sqrt(l_i)

  double correlation(const Eigen::Vector2d& a, const Eigen::Vector2d& b) const;
};

/// Retains the smallest M whose eigenvalues capture `trace_fraction` of the trace.
EoleField eole_build(const GridSpec& grid, double correlation_length, double trace_fraction,
                     double kappa_mean = 1.0, double kappa_stddev = 0.3);

struct FieldValue {
  double g = 0.0;
  double kappa = 0.0;
};

FieldValue eole_realize(const EoleField& field, const Eigen::VectorXd& xi, const Eigen::Vector2d& z);

/// Mean conductivity over a 5 x 5 point grid in B = (-0.3,-0.2) x (-0.3,-0.2).
double field_functional(const EoleField& field, const Eigen::VectorXd& xi);

// ---------------------------------------------------------------------------

struct Benchmark {
  std::string name;
  std::string description;
  InputModel input;
  std::function<double(const Eigen::VectorXd&)> model;
};

std::vector<std::string> benchmark_names();
Benchmark make_benchmark(std::string_view name);
Benchmark make_truss_benchmark(TrussGeometry geometry);

/// Evaluates the model at each row of physical points.
Eigen::VectorXd evaluate(const Benchmark& benchmark, const Eigen::MatrixXd& points);

}  // namespace metamodel
