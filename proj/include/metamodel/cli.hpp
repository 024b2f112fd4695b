#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "metamodel/benchmarks.hpp"
#include "metamodel/inputmodel.hpp"
#include "metamodel/lra.hpp"
#include "metamodel/metrics.hpp"
#include "metamodel/pce.hpp"
#include "metamodel/sampling.hpp"

namespace metamodel::cli {

// ---------------------------------------------------------------------------
// Run configuration (JSON document, schema in docs/config.schema.json).

struct ModelSourceSpec {
  std::optional<std::string> benchmark;      ///< built-in model name
  std::optional<std::string> command;        ///< external `<command> <in.csv> <out.csv>`
  std::optional<std::string> responses_csv;  ///< precomputed ED with header x1..xM,y
  std::optional<nlohmann::json> truss_geometry;
};

struct DesignSpec {
  Generator generator = Generator::sobol;
  int size = 50;
  std::uint64_t seed = 1;
  int trials = 5;  ///< maximin LHS candidates
};

enum class SurrogateFamily { pce, lra, both };

struct LraSpec {
  std::vector<int> degrees = PceOptions::default_degrees();
  int max_rank = 20;
  bool rank_by_loo = false;  ///< rank selection by corrected LOO instead of 3-fold CV
  StoppingRule rule;
  std::uint64_t cv_seed = 1;
  int degree_patience = 2;
};

struct SurrogateSpec {
  SurrogateFamily family = SurrogateFamily::both;
  PceOptions pce;
  LraSpec lra;
};

struct ValidationSpec {
  int size = 0;  ///< 0 disables validation in fit/compare
  std::uint64_t seed = 1;
  std::vector<double> quantiles;
  std::optional<std::string> csv;  ///< validation set given as x1..xM,y
};

struct CompareSpec {
  std::vector<int> sizes;
  int replications = 1;
};

struct RunConfig {
  ModelSourceSpec model;
  std::optional<InputModel> input;
  DesignSpec design;
  SurrogateSpec surrogate;
  ValidationSpec validation;
  CompareSpec compare;
  std::string out_dir = ".";
  int jobs = 1;
};

/// Throws ConfigError on any schema violation. `base_dir` resolves relative paths.
RunConfig parse_run_config(const nlohmann::json& document, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

// ---------------------------------------------------------------------------
// Model sources.

/// Runs `<command> <in.csv> <out.csv>` in `work_dir`. Throws ModelEvaluationError
/// distinctly for a nonzero exit, a row-count mismatch and non-numeric or
/// non-finite output (naming the row).
Eigen::VectorXd run_external_model(const std::string& command, const Eigen::MatrixXd& points,
                                   const std::string& work_dir);

class ModelSource {
 public:
  explicit ModelSource(const RunConfig& config);
  const InputModel& input() const { return *input_; }
  bool can_evaluate() const { return benchmark_.has_value() || command_.has_value(); }
  /// Physical points to responses; ModelEvaluationError on failure.
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& points) const;
  std::string describe() const;

 private:
  std::optional<Benchmark> benchmark_;
  std::optional<std::string> command_;
  std::optional<InputModel> input_;
  std::string work_dir_;
};

// ---------------------------------------------------------------------------
// Pipeline pieces shared by the subcommands.

struct ExperimentalData {
  Eigen::MatrixXd physical;
  Eigen::MatrixXd standard;
  Eigen::VectorXd responses;
  std::uint64_t seed = 0;
  std::string generator;
};

Design make_design(const DesignSpec& spec, int dim);
ExperimentalData build_design(const RunConfig& config, const ModelSource& source);

struct ValidationData {
  Eigen::MatrixXd standard;
  Eigen::VectorXd responses;
  std::uint64_t seed = 0;
  std::string origin;
};

/// Throws ConfigError when the validation size is zero and no CSV is given.
ValidationData build_validation(const RunConfig& config, const ModelSource& source);

struct LraFit {
  LraModel model;
  int degree = 0;
  int rank = 0;
  double selection_error = 0.0;  ///< err_CV3 (or corrected LOO when rank_by_loo)
  std::vector<int> degrees_tried;
  std::vector<double> degree_errors;
  std::vector<double> rank_errors;
  int loo_rank = 0;       ///< corrected-LOO rank at the selected degree, reported alongside
  double loo_error = 0.0;
};

PceModel fit_pce(const SurrogateSpec& spec, const ExperimentalData& ed, int jobs);
LraFit fit_lra(const SurrogateSpec& spec, const ExperimentalData& ed, int jobs);

/// Surrogate document: model fields plus the embedded input model.
nlohmann::json surrogate_document(const PceModel& model, const InputModel& input, const ExperimentalData& ed);
nlohmann::json surrogate_document(const LraFit& fit, const InputModel& input, const ExperimentalData& ed);

/// Generalization error plus the conditional curve; failing curve points are recorded, not thrown.
nlohmann::json validation_block(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted,
                                const ValidationData& validation, const std::vector<double>& quantiles);

// ---------------------------------------------------------------------------
// Subcommands. Each writes its outputs under config.out_dir and returns the report.

nlohmann::json cmd_fit(const RunConfig& config);
nlohmann::json cmd_compare(const RunConfig& config);
nlohmann::json cmd_validate(const RunConfig& config, const std::string& model_path);
nlohmann::json cmd_design(const RunConfig& config);
std::string bench_list();

/// Full command-line entry point; returns the process exit code
/// (0 ok, 2 configuration, 3 model evaluation, 4 fit failure, 1 other).
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

/// Median and quartiles with linear interpolation between order statistics.
struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};
Quartiles quartiles(std::vector<double> values);

}  // namespace metamodel::cli
