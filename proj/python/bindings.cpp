#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "metamodel/benchmarks.hpp"
#include "metamodel/cli.hpp"
#include "metamodel/error.hpp"
#include "metamodel/io.hpp"
#include "metamodel/lra.hpp"
#include "metamodel/metrics.hpp"
#include "metamodel/pce.hpp"
#include "metamodel/polybasis.hpp"
#include "metamodel/sampling.hpp"

namespace py = pybind11;
using namespace metamodel;

namespace {

std::vector<PolyFamily> families_for(Eigen::Index dim, const std::string& family) {
  return std::vector<PolyFamily>(static_cast<size_t>(dim), poly_family_from_string(family));
}

void check_design(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses) {
  if (points.rows() != responses.size()) {
    throw std::invalid_argument("points and responses have different lengths");
  }
}

py::dict report_dict(const ErrorReport& report) {
  py::dict d;
  d["absolute"] = report.absolute;
  d["relative"] = report.relative ? py::cast(*report.relative) : py::none();
  d["sample_count"] = report.sample_count;
  d["kind"] = std::string(to_string(report.kind));
  if (report.threshold) d["threshold"] = *report.threshold;
  return d;
}

struct LraResult {
  LraModel model;
  int degree = 0;
  double selection_error = 0.0;
  std::vector<int> degrees_tried;
  std::vector<double> degree_errors;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Sparse PCE and canonical low-rank approximation surrogates";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ModelEvaluationError>(m, "ModelEvaluationError", PyExc_RuntimeError);
  py::register_exception<FitError>(m, "FitError", PyExc_RuntimeError);

  // Designs on the open unit hypercube.
  m.def("sobol", [](int dim, int count) { return sobol(dim, count).points; }, py::arg("dim"), py::arg("count"));
  m.def("lhs", [](int dim, int count, std::uint64_t seed) { return lhs(dim, count, seed).points; },
        py::arg("dim"), py::arg("count"), py::arg("seed"));
  m.def("maximin_lhs",
        [](int dim, int count, std::uint64_t seed, int trials) { return maximin_lhs(dim, count, seed, trials).points; },
        py::arg("dim"), py::arg("count"), py::arg("seed"), py::arg("trials") = 5);
  m.def("mcs", [](int dim, int count, std::uint64_t seed) { return mcs(dim, count, seed).points; },
        py::arg("dim"), py::arg("count"), py::arg("seed"));

  py::class_<InputModel>(m, "InputModel")
      .def_static("from_json", [](const std::string& text) { return input_model_from_json(nlohmann::json::parse(text)); })
      .def("to_json", [](const InputModel& model) { return to_json(model).dump(); })
      .def_property_readonly("dim", &InputModel::dim)
      .def("sample", &InputModel::sample, py::arg("u"))
      .def("to_standard", &InputModel::to_standard_rows, py::arg("x"))
      .def("from_standard", &InputModel::from_standard_rows, py::arg("z"));

  py::class_<Benchmark>(m, "Benchmark")
      .def_readonly("name", &Benchmark::name)
      .def_readonly("description", &Benchmark::description)
      .def_readonly("input", &Benchmark::input)
      .def("evaluate", [](const Benchmark& b, const Eigen::MatrixXd& x) {
        py::gil_scoped_release release;
        return evaluate(b, x);
      }, py::arg("x"));
  m.def("benchmark_names", &benchmark_names);
  m.def("make_benchmark", [](const std::string& name) { return make_benchmark(name); }, py::arg("name"));

  m.def("enumerate_hyperbolic", [](int dim, int total_degree, double q) {
    const BasisSet basis = enumerate_hyperbolic(dim, total_degree, q);
    std::vector<std::vector<int>> rows;
    for (const auto& alpha : basis.indices()) rows.push_back(alpha.degrees());
    return rows;
  }, py::arg("dim"), py::arg("total_degree"), py::arg("q") = 1.0);

  py::class_<PceModel>(m, "PceModel")
      .def_readonly("total_degree", &PceModel::total_degree)
      .def_readonly("q", &PceModel::q)
      .def_readonly("loo_error", &PceModel::loo_error)
      .def_readonly("coefficients", &PceModel::coefficients)
      .def_property_readonly("size", [](const PceModel& p) { return p.basis.size(); })
      .def("predict", [](const PceModel& p, const Eigen::MatrixXd& z) { return predict_pce(p, z); }, py::arg("z"))
      .def("to_json", [](const PceModel& p) { return to_json(p).dump(); })
      .def_static("from_json", [](const std::string& text) { return pce_from_json(nlohmann::json::parse(text)); });

  m.def("fit_pce",
        [](const Eigen::MatrixXd& z, const Eigen::VectorXd& y, std::optional<std::vector<int>> degrees,
           std::optional<std::vector<double>> q_values, const std::string& family) {
          check_design(z, y);
          PceOptions options;
          if (degrees) options.degrees = *degrees;
          if (q_values) options.q_values = *q_values;
          py::gil_scoped_release release;
          return fit_sparse_pce(z, y, families_for(z.cols(), family), options);
        },
        py::arg("z"), py::arg("y"), py::arg("degrees") = py::none(), py::arg("q_values") = py::none(),
        py::arg("family") = "hermite");

  py::class_<LraModel>(m, "LraModel")
      .def_property_readonly("rank", &LraModel::rank)
      .def_readonly("degrees", &LraModel::degrees)
      .def_readonly("b", &LraModel::b)
      .def_readonly("error_trace", &LraModel::error_trace)
      .def("predict", [](const LraModel& l, const Eigen::MatrixXd& z) { return predict_lra(l, z); }, py::arg("z"))
      .def("to_json", [](const LraModel& l) { return to_json(l).dump(); })
      .def_static("from_json", [](const std::string& text) { return lra_from_json(nlohmann::json::parse(text)); });

  py::class_<LraResult>(m, "LraResult")
      .def_readonly("model", &LraResult::model)
      .def_readonly("degree", &LraResult::degree)
      .def_readonly("selection_error", &LraResult::selection_error)
      .def_readonly("degrees_tried", &LraResult::degrees_tried)
      .def_readonly("degree_errors", &LraResult::degree_errors);

  m.def("fit_lra",
        [](const Eigen::MatrixXd& z, const Eigen::VectorXd& y, std::optional<std::vector<int>> degrees, int max_rank,
           int max_iterations, double min_error_decrease, std::uint64_t seed, int patience, const std::string& family) {
          check_design(z, y);
          const std::vector<int> candidates = degrees ? *degrees : PceOptions::default_degrees();
          py::gil_scoped_release release;
          const auto sel = select_degree_cv3(z, y, candidates, max_rank, families_for(z.cols(), family),
                                             StoppingRule{max_iterations, min_error_decrease}, seed, patience);
          return LraResult{sel.model, sel.degree, sel.error, sel.degrees_tried, sel.degree_errors};
        },
        py::arg("z"), py::arg("y"), py::arg("degrees") = py::none(), py::arg("max_rank") = 20,
        py::arg("max_iterations") = 50, py::arg("min_error_decrease") = 1e-6, py::arg("seed") = 1,
        py::arg("patience") = 2, py::arg("family") = "hermite");

  m.def("generalization_error", [](const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted) {
    return report_dict(generalization_error(exact, predicted));
  }, py::arg("exact"), py::arg("predicted"));
  m.def("conditional_error",
        [](const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted, double threshold, std::size_t min_subset) {
          return report_dict(conditional_generalization_error(exact, predicted, threshold, min_subset));
        },
        py::arg("exact"), py::arg("predicted"), py::arg("threshold"), py::arg("min_subset") = kDefaultMinConditionalSubset);
  m.def("response_quantile", &response_quantile, py::arg("values"), py::arg("level"));

  m.def("eole_terms", [](double correlation_length, double trace_fraction) {
    return eole_build(GridSpec{}, correlation_length, trace_fraction).terms;
  }, py::arg("correlation_length") = 0.2, py::arg("trace_fraction") = 0.99);

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "metamodel");
    py::gil_scoped_release release;
    return cli::run(args);
  }, py::arg("args"));
}
