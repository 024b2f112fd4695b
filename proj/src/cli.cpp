#include "metamodel/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <sys/wait.h>

#include <CLI11.hpp>

#include "metamodel/error.hpp"
#include "metamodel/io.hpp"

namespace metamodel::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kReportVersion = 1;

[[noreturn]] void config_fail(const std::string& what) { throw ConfigError("config: " + what); }

void check_keys(const json& object, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!object.is_object()) config_fail(where + " must be an object");
  for (const auto& item : object.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) config_fail("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
T get_as(const json& object, const char* key, const std::string& where) {
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    config_fail(where + "." + key + " has the wrong type");
  }
}

std::uint64_t get_seed(const json& object, const char* key, const std::string& where) {
  const json& v = object.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    config_fail(where + "." + key + " must be a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

// A leading "./" or "../" program path is taken relative to the config file.
std::string resolve_command(const std::string& command, const std::string& base_dir) {
  if (command.rfind("./", 0) != 0 && command.rfind("../", 0) != 0) return command;
  const auto end = command.find(' ');
  const std::string program = resolve(command.substr(0, end), base_dir);
  return end == std::string::npos ? program : program + command.substr(end);
}

json load_document(const json& value, const std::string& base_dir) {
  return value.is_string() ? read_json_file(resolve(value.get<std::string>(), base_dir)) : value;
}

std::vector<PolyFamily> hermite(Eigen::Index dim) {
  return std::vector<PolyFamily>(static_cast<size_t>(dim), PolyFamily::hermite);
}

json seeded(const ErrorReport& report, std::uint64_t seed) {
  json doc = to_json(report);
  doc["seed"] = seed;
  return doc;
}

std::string error_text(const std::exception& e) { return e.what(); }

}  // namespace

// ---------------------------------------------------------------------------

RunConfig parse_run_config(const json& document, const std::string& base_dir) {
  check_keys(document, "config",
             {"model", "input_model", "design", "surrogate", "validation", "compare", "output", "jobs"});
  RunConfig config;
  try {
    if (!document.contains("model")) config_fail("missing 'model'");
    const json& model = document.at("model");
    check_keys(model, "model", {"benchmark", "command", "responses_csv", "truss_geometry"});
    int sources = 0;
    if (model.contains("benchmark")) {
      config.model.benchmark = get_as<std::string>(model, "benchmark", "model");
      const auto names = benchmark_names();
      if (std::find(names.begin(), names.end(), *config.model.benchmark) == names.end()) {
        config_fail("unknown benchmark '" + *config.model.benchmark + "'");
      }
      ++sources;
    }
    if (model.contains("command")) {
      config.model.command = resolve_command(get_as<std::string>(model, "command", "model"), base_dir);
      if (config.model.command->empty()) config_fail("model.command is empty");
      ++sources;
    }
    if (model.contains("responses_csv")) {
      config.model.responses_csv = resolve(get_as<std::string>(model, "responses_csv", "model"), base_dir);
      ++sources;
    }
    if (sources != 1) config_fail("model needs exactly one of benchmark, command, responses_csv");
    if (model.contains("truss_geometry")) {
      if (config.model.benchmark != "truss") config_fail("truss_geometry applies to the truss benchmark only");
      config.model.truss_geometry = load_document(model.at("truss_geometry"), base_dir);
      truss_geometry_from_json(*config.model.truss_geometry);  // validate early
    }

    if (document.contains("input_model")) {
      config.input = input_model_from_json(load_document(document.at("input_model"), base_dir));
    } else if (!config.model.benchmark) {
      config_fail("input_model is required unless the model is a built-in benchmark");
    }

    if (document.contains("design")) {
      const json& d = document.at("design");
      check_keys(d, "design", {"generator", "size", "seed", "trials"});
      if (d.contains("generator")) config.design.generator = generator_from_string(get_as<std::string>(d, "generator", "design"));
      if (d.contains("size")) config.design.size = get_as<int>(d, "size", "design");
      if (d.contains("seed")) config.design.seed = get_seed(d, "seed", "design");
      if (d.contains("trials")) config.design.trials = get_as<int>(d, "trials", "design");
    }
    if (config.design.size < 1) config_fail("design.size must be positive");
    if (config.design.trials < 1) config_fail("design.trials must be positive");

    if (document.contains("surrogate")) {
      const json& s = document.at("surrogate");
      check_keys(s, "surrogate", {"family", "pce", "lra"});
      if (s.contains("family")) {
        const auto family = get_as<std::string>(s, "family", "surrogate");
        if (family == "pce") {
          config.surrogate.family = SurrogateFamily::pce;
        } else if (family == "lra") {
          config.surrogate.family = SurrogateFamily::lra;
        } else if (family == "both") {
          config.surrogate.family = SurrogateFamily::both;
        } else {
          config_fail("surrogate.family must be pce, lra or both");
        }
      }
      if (s.contains("pce")) {
        const json& p = s.at("pce");
        check_keys(p, "surrogate.pce", {"degrees", "q_values", "max_basis_size", "degree_patience"});
        auto& o = config.surrogate.pce;
        if (p.contains("degrees")) o.degrees = get_as<std::vector<int>>(p, "degrees", "surrogate.pce");
        if (p.contains("q_values")) o.q_values = get_as<std::vector<double>>(p, "q_values", "surrogate.pce");
        if (p.contains("max_basis_size")) o.max_basis_size = get_as<std::size_t>(p, "max_basis_size", "surrogate.pce");
        if (p.contains("degree_patience")) o.degree_patience = get_as<int>(p, "degree_patience", "surrogate.pce");
      }
      if (s.contains("lra")) {
        const json& l = s.at("lra");
        check_keys(l, "surrogate.lra",
                   {"degrees", "max_rank", "rank_selection", "stopping_rule", "cv_seed", "degree_patience"});
        auto& o = config.surrogate.lra;
        if (l.contains("degrees")) o.degrees = get_as<std::vector<int>>(l, "degrees", "surrogate.lra");
        if (l.contains("max_rank")) o.max_rank = get_as<int>(l, "max_rank", "surrogate.lra");
        if (l.contains("rank_selection")) {
          const auto how = get_as<std::string>(l, "rank_selection", "surrogate.lra");
          if (how != "cv3" && how != "loo") config_fail("surrogate.lra.rank_selection must be cv3 or loo");
          o.rank_by_loo = how == "loo";
        }
        if (l.contains("stopping_rule")) {
          const json& r = l.at("stopping_rule");
          check_keys(r, "surrogate.lra.stopping_rule", {"max_iterations", "min_error_decrease"});
          if (r.contains("max_iterations")) o.rule.max_iterations = get_as<int>(r, "max_iterations", "stopping_rule");
          if (r.contains("min_error_decrease")) {
            o.rule.min_error_decrease = get_as<double>(r, "min_error_decrease", "stopping_rule");
          }
        }
        if (l.contains("cv_seed")) o.cv_seed = get_seed(l, "cv_seed", "surrogate.lra");
        if (l.contains("degree_patience")) o.degree_patience = get_as<int>(l, "degree_patience", "surrogate.lra");
      }
    }
    const auto& pce = config.surrogate.pce;
    if (pce.degrees.empty() || pce.q_values.empty()) config_fail("surrogate.pce grids must be nonempty");
    for (int p : pce.degrees) {
      if (p < 1) config_fail("surrogate.pce.degrees must be positive");
    }
    for (double q : pce.q_values) {
      if (!(q > 0.0 && q <= 1.0)) config_fail("surrogate.pce.q_values must lie in (0, 1]");
    }
    if (pce.degree_patience < 0) config_fail("surrogate.pce.degree_patience must be nonnegative");
    const auto& lra = config.surrogate.lra;
    if (lra.degrees.empty()) config_fail("surrogate.lra.degrees must be nonempty");
    for (int p : lra.degrees) {
      if (p < 1) config_fail("surrogate.lra.degrees must be positive");
    }
    if (lra.max_rank < 1) config_fail("surrogate.lra.max_rank must be positive");
    if (lra.rule.max_iterations < 1) config_fail("stopping_rule.max_iterations must be at least 1");
    if (!(lra.rule.min_error_decrease >= 0.0)) config_fail("stopping_rule.min_error_decrease must be nonnegative");
    if (lra.degree_patience < 0) config_fail("surrogate.lra.degree_patience must be nonnegative");

    if (document.contains("validation")) {
      const json& v = document.at("validation");
      check_keys(v, "validation", {"size", "seed", "quantiles", "csv"});
      if (v.contains("size")) config.validation.size = get_as<int>(v, "size", "validation");
      if (v.contains("seed")) config.validation.seed = get_seed(v, "seed", "validation");
      if (v.contains("quantiles")) config.validation.quantiles = get_as<std::vector<double>>(v, "quantiles", "validation");
      if (v.contains("csv")) config.validation.csv = resolve(get_as<std::string>(v, "csv", "validation"), base_dir);
    }
    if (config.validation.size < 0) config_fail("validation.size must be nonnegative");
    for (double q : config.validation.quantiles) {
      if (!(q >= 0.0 && q < 1.0)) config_fail("validation.quantiles must lie in [0, 1)");
    }

    const bool random_design = config.design.generator != Generator::sobol;
    config.compare.replications = random_design ? 20 : 1;
    if (document.contains("compare")) {
      const json& c = document.at("compare");
      check_keys(c, "compare", {"sizes", "replications"});
      if (c.contains("sizes")) config.compare.sizes = get_as<std::vector<int>>(c, "sizes", "compare");
      if (c.contains("replications")) config.compare.replications = get_as<int>(c, "replications", "compare");
    }
    for (int n : config.compare.sizes) {
      if (n < 1) config_fail("compare.sizes must be positive");
    }
    if (config.compare.replications < 1) config_fail("compare.replications must be positive");
    if (!random_design && config.compare.replications > 1) {
      config_fail("compare.replications > 1 needs a random design generator (Sobol designs are deterministic)");
    }

    if (document.contains("output")) {
      const json& o = document.at("output");
      check_keys(o, "output", {"dir"});
      if (o.contains("dir")) config.out_dir = resolve(get_as<std::string>(o, "dir", "output"), base_dir);
    }
    if (document.contains("jobs")) config.jobs = get_as<int>(document, "jobs", "config");
    if (config.jobs < 1) config_fail("jobs must be positive");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    config_fail(error_text(e));
  } catch (const std::domain_error& e) {
    config_fail(error_text(e));
  } catch (const json::exception& e) {
    config_fail(error_text(e));
  }
  if (config.input && config.model.benchmark) {
    const auto expected = make_benchmark(*config.model.benchmark).input.dim();
    if (config.input->dim() != expected) {
      config_fail("input_model has " + std::to_string(config.input->dim()) + " marginals, benchmark expects " +
                  std::to_string(expected));
    }
  }
  return config;
}

RunConfig load_run_config(const std::string& path) {
  const json document = read_json_file(path);
  const auto base = fs::absolute(fs::path(path)).parent_path().string();
  return parse_run_config(document, base);
}

// ---------------------------------------------------------------------------

Eigen::VectorXd run_external_model(const std::string& command, const Eigen::MatrixXd& points,
                                   const std::string& work_dir) {
  static std::atomic<std::uint64_t> counter{0};
  fs::create_directories(work_dir);
  const auto id = std::to_string(counter.fetch_add(1));
  const fs::path in_path = fs::path(work_dir) / ("in_" + id + ".csv");
  const fs::path out_path = fs::path(work_dir) / ("out_" + id + ".csv");
  write_csv(in_path.string(), points);
  fs::remove(out_path);
  const std::string line = command + " '" + in_path.string() + "' '" + out_path.string() + "'";
  const int status = std::system(line.c_str());
  if (status != 0) {
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : status;
    throw ModelEvaluationError("external model exited with status " + std::to_string(code) + ": " + command);
  }
  std::ifstream in(out_path);
  if (!in) throw ModelEvaluationError("external model wrote no output file " + out_path.string());
  std::vector<std::string> rows;
  std::string text;
  bool first = true;
  while (std::getline(in, text)) {
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    const bool header = first && text.find_first_of("0123456789") == std::string::npos &&
                        text != "nan" && text != "NaN" && text != "inf" && text != "-inf";
    first = false;
    if (!header) rows.push_back(text);
  }
  if (static_cast<Eigen::Index>(rows.size()) != points.rows()) {
    throw ModelEvaluationError("external model returned " + std::to_string(rows.size()) + " rows, expected " +
                               std::to_string(points.rows()));
  }
  Eigen::VectorXd y(points.rows());
  for (size_t r = 0; r < rows.size(); ++r) {
    std::string field = rows[r];
    const auto first_char = field.find_first_not_of(" \t");
    const auto last_char = field.find_last_not_of(" \t");
    field = field.substr(first_char, last_char - first_char + 1);
    double value = 0.0;
    try {
      value = parse_double(field);
    } catch (const ConfigError&) {
      throw ModelEvaluationError("external model output row " + std::to_string(r + 1) + " is not numeric: '" +
                                 field + "'");
    }
    if (!std::isfinite(value)) {
      throw ModelEvaluationError("external model output row " + std::to_string(r + 1) + " is non-finite (" +
                                 field + ")");
    }
    y[static_cast<Eigen::Index>(r)] = value;
  }
  fs::remove(in_path);
  fs::remove(out_path);
  return y;
}

ModelSource::ModelSource(const RunConfig& config) : work_dir_((fs::path(config.out_dir) / ".work").string()) {
  if (config.model.benchmark) {
    if (*config.model.benchmark == "truss" && config.model.truss_geometry) {
      benchmark_ = make_truss_benchmark(truss_geometry_from_json(*config.model.truss_geometry));
    } else {
      benchmark_ = make_benchmark(*config.model.benchmark);
    }
    input_ = config.input ? *config.input : benchmark_->input;
  } else {
    command_ = config.model.command;
    input_ = config.input;
  }
  if (!input_) throw ConfigError("config: no input model");
}

Eigen::VectorXd ModelSource::evaluate(const Eigen::MatrixXd& points) const {
  if (command_) return run_external_model(*command_, points, work_dir_);
  if (!benchmark_) throw ConfigError("config: the model source cannot evaluate new points (responses_csv)");
  try {
    return metamodel::evaluate(*benchmark_, points);
  } catch (const ModelEvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelEvaluationError(std::string("benchmark evaluation failed: ") + e.what());
  }
}

std::string ModelSource::describe() const {
  if (benchmark_) return "benchmark:" + benchmark_->name;
  if (command_) return "command:" + *command_;
  return "responses_csv";
}

// ---------------------------------------------------------------------------

Design make_design(const DesignSpec& spec, int dim) {
  switch (spec.generator) {
    case Generator::sobol: return sobol(dim, spec.size);
    case Generator::lhs: return lhs(dim, spec.size, spec.seed);
    case Generator::maximin_lhs: return maximin_lhs(dim, spec.size, spec.seed, spec.trials);
    case Generator::mcs: return mcs(dim, spec.size, spec.seed);
  }
  throw ConfigError("config: unknown generator");
}

ExperimentalData build_design(const RunConfig& config, const ModelSource& source) {
  ExperimentalData ed;
  if (config.model.responses_csv) {
    const auto table = design_from_table(read_csv_file(*config.model.responses_csv));
    if (table.points.cols() != source.input().dim()) {
      throw ConfigError("config: ED CSV has " + std::to_string(table.points.cols()) +
                        " input columns, input model has " + std::to_string(source.input().dim()));
    }
    if (!table.responses.allFinite()) throw ConfigError("config: ED CSV contains non-finite responses");
    ed.physical = table.points;
    ed.responses = table.responses;
    ed.generator = "csv";
  } else {
    const auto design = make_design(config.design, static_cast<int>(source.input().dim()));
    ed.physical = source.input().sample(design.points);
    ed.responses = source.evaluate(ed.physical);
    ed.seed = config.design.seed;
    ed.generator = std::string(to_string(config.design.generator));
  }
  try {
    ed.standard = source.input().to_standard_rows(ed.physical);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ED points outside the input support: ") + e.what());
  }
  return ed;
}

ValidationData build_validation(const RunConfig& config, const ModelSource& source) {
  ValidationData v;
  if (config.validation.csv) {
    const auto table = design_from_table(read_csv_file(*config.validation.csv));
    if (table.points.cols() != source.input().dim()) throw ConfigError("config: validation CSV has the wrong width");
    v.standard = source.input().to_standard_rows(table.points);
    v.responses = table.responses;
    v.origin = "csv";
    return v;
  }
  if (config.validation.size <= 0) throw ConfigError("config: validation.size must be positive");
  const auto design = mcs(static_cast<int>(source.input().dim()), config.validation.size, config.validation.seed);
  const Eigen::MatrixXd physical = source.input().sample(design.points);
  v.responses = source.evaluate(physical);
  v.standard = source.input().to_standard_rows(physical);
  v.seed = config.validation.seed;
  v.origin = "mcs";
  return v;
}

PceModel fit_pce(const SurrogateSpec& spec, const ExperimentalData& ed, int jobs) {
  PceOptions options = spec.pce;
  options.jobs = jobs;
  try {
    return fit_sparse_pce(ed.standard, ed.responses, hermite(ed.standard.cols()), options);
  } catch (const std::invalid_argument& e) {
    throw FitError(std::string("PCE: ") + e.what());
  }
}

LraFit fit_lra(const SurrogateSpec& spec, const ExperimentalData& ed, int /*jobs*/) {
  const auto& o = spec.lra;
  const auto m = static_cast<size_t>(ed.standard.cols());
  const auto fam = hermite(ed.standard.cols());
  LraFit fit;
  try {
    std::vector<int> degrees = o.degrees;
    std::sort(degrees.begin(), degrees.end());
    degrees.erase(std::unique(degrees.begin(), degrees.end()), degrees.end());
    if (o.rank_by_loo) {
      double best = std::numeric_limits<double>::infinity();
      int stale = 0;
      for (int p : degrees) {
        double error = std::numeric_limits<double>::infinity();
        try {
          const auto seq = fit_lra_sequence(ed.standard, ed.responses, o.max_rank, std::vector<int>(m, p), fam, o.rule);
          auto sel = select_rank_loo(seq, ed.responses);
          error = sel.error;
          if (error < best) {
            best = error;
            fit.degree = p;
            fit.rank = sel.rank;
            fit.selection_error = error;
            fit.rank_errors = sel.rank_errors;
            fit.model = std::move(sel.model);
            fit.loo_rank = sel.rank;
            fit.loo_error = sel.error;
          }
        } catch (const FitError&) {
        }
        fit.degrees_tried.push_back(p);
        fit.degree_errors.push_back(error);
        if (error < std::numeric_limits<double>::infinity() && error == best) {
          stale = 0;
        } else if (o.degree_patience > 0 && ++stale >= o.degree_patience) {
          break;
        }
      }
      if (!(best < std::numeric_limits<double>::infinity())) throw FitError("LRA: every degree candidate failed");
      return fit;
    }
    if (degrees.size() == 1) {
      auto sel = select_rank_cv3(ed.standard, ed.responses, o.max_rank, std::vector<int>(m, degrees[0]), fam, o.rule,
                                 o.cv_seed);
      fit.degree = degrees[0];
      fit.rank = sel.rank;
      fit.selection_error = sel.error;
      fit.rank_errors = sel.rank_errors;
      fit.degrees_tried = {degrees[0]};
      fit.degree_errors = {sel.error};
      fit.model = std::move(sel.model);
    } else {
      auto sel = select_degree_cv3(ed.standard, ed.responses, degrees, o.max_rank, fam, o.rule, o.cv_seed,
                                   o.degree_patience);
      fit.degree = sel.degree;
      fit.rank = sel.rank;
      fit.selection_error = sel.error;
      fit.rank_errors = sel.rank_errors;
      fit.degrees_tried = sel.degrees_tried;
      fit.degree_errors = sel.degree_errors;
      fit.model = std::move(sel.model);
    }
  } catch (const std::invalid_argument& e) {
    throw FitError(std::string("LRA: ") + e.what());
  }
  // Corrected-LOO rank at the selected degree, reported alongside the CV3 choice.
  try {
    const auto seq = fit_lra_sequence(ed.standard, ed.responses, o.max_rank, std::vector<int>(m, fit.degree), fam,
                                      o.rule);
    const auto loo = select_rank_loo(seq, ed.responses);
    fit.loo_rank = loo.rank;
    fit.loo_error = loo.error;
  } catch (const std::exception&) {
    fit.loo_rank = 0;
    fit.loo_error = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

json surrogate_document(const PceModel& model, const InputModel& input, const ExperimentalData& ed) {
  json doc = to_json(model, ed_fingerprint(ed.physical, ed.responses));
  doc["input_model"] = to_json(input);
  return doc;
}

json surrogate_document(const LraFit& fit, const InputModel& input, const ExperimentalData& ed) {
  json doc = to_json(fit.model, ed_fingerprint(ed.physical, ed.responses));
  doc["input_model"] = to_json(input);
  return doc;
}

json validation_block(const Eigen::VectorXd& exact, const Eigen::VectorXd& predicted, const ValidationData& validation,
                      const std::vector<double>& quantiles) {
  json block;
  block["generalization_error"] = seeded(generalization_error(exact, predicted), validation.seed);
  json curve = json::array();
  for (double level : quantiles) {
    json point = {{"quantile", level}};
    const double threshold = response_quantile(exact, level);
    point["threshold"] = finite_or_null(threshold);
    try {
      point["error"] = seeded(conditional_generalization_error(exact, predicted, threshold), validation.seed);
    } catch (const std::domain_error& e) {
      point["error"] = nullptr;
      point["failure"] = e.what();
    }
    curve.push_back(point);
  }
  block["conditional_errors"] = curve;
  return block;
}

namespace {

json design_block(const RunConfig& config, const ExperimentalData& ed) {
  json block = {{"generator", ed.generator},
                {"size", ed.responses.size()},
                {"fingerprint", ed_fingerprint(ed.physical, ed.responses)}};
  if (ed.generator != "csv") {
    block["seed"] = ed.seed;
    if (config.design.generator == Generator::maximin_lhs) block["trials"] = config.design.trials;
  }
  return block;
}

json validation_header(const ValidationData& v) {
  json h = {{"origin", v.origin}, {"size", v.responses.size()}};
  if (v.origin == "mcs") h["seed"] = v.seed;
  return h;
}

json pce_selection(const PceModel& model) {
  json grid = json::array();
  for (const auto& cell : model.grid) {
    grid.push_back({{"degree", cell.degree},
                    {"q", cell.q},
                    {"candidate_size", cell.candidate_size},
                    {"selected_size", cell.selected_size},
                    {"score", finite_or_null(cell.score)},
                    {"skipped", cell.skipped}});
  }
  return {{"total_degree", model.total_degree},
          {"q", model.q},
          {"basis_size", model.basis.size()},
          {"candidate_size", model.candidate_size},
          {"loo_error", finite_or_null(model.loo_error)},
          {"grid", grid}};
}

json number_list(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(finite_or_null(v));
  return out;
}

json lra_selection(const LraFit& fit, const LraSpec& spec) {
  return {{"criterion", spec.rank_by_loo ? "loo" : "cv3"},
          {"degree", fit.degree},
          {"rank", fit.rank},
          {"selection_error", finite_or_null(fit.selection_error)},
          {"degrees_tried", fit.degrees_tried},
          {"degree_errors", number_list(fit.degree_errors)},
          {"rank_errors", number_list(fit.rank_errors)},
          {"loo_rank", fit.loo_rank},
          {"loo_error", finite_or_null(fit.loo_error)},
          {"stopping_rule",
           {{"max_iterations", spec.rule.max_iterations}, {"min_error_decrease", spec.rule.min_error_decrease}}},
          {"cv_seed", spec.cv_seed}};
}

bool wants_pce(const RunConfig& c) { return c.surrogate.family != SurrogateFamily::lra; }
bool wants_lra(const RunConfig& c) { return c.surrogate.family != SurrogateFamily::pce; }

json header(const std::string& command, const ModelSource& source) {
  return {{"report_version", kReportVersion},
          {"command", command},
          {"model_source", source.describe()},
          {"input_dimension", source.input().dim()}};
}

void write_report(const RunConfig& config, const std::string& name, const json& report) {
  fs::create_directories(config.out_dir);
  write_json_file((fs::path(config.out_dir) / name).string(), report);
}

// Runs both surrogate families on one ED; failures are recorded per family.
json compare_cell(const RunConfig& config, const ModelSource& source, int size, std::uint64_t seed,
                  const std::optional<ValidationData>& validation) {
  RunConfig cell_config = config;
  cell_config.design.size = size;
  cell_config.design.seed = seed;
  json cell = {{"size", size}, {"seed", seed}};
  ExperimentalData ed;
  try {
    ed = build_design(cell_config, source);
  } catch (const ModelEvaluationError& e) {
    cell["status"] = "failed";
    cell["failure"] = std::string("model evaluation: ") + e.what();
    return cell;
  }
  cell["status"] = "ok";
  cell["fingerprint"] = ed_fingerprint(ed.physical, ed.responses);
  auto run_family = [&](const std::string& name, auto&& fit_and_predict) {
    json entry;
    try {
      auto [selection, on_ed, on_validation] = fit_and_predict();
      entry["status"] = "ok";
      entry["selection"] = selection;
      entry["empirical_error"] = seeded(empirical_error(ed.responses, on_ed), seed);
      if (validation) {
        const json block = validation_block(validation->responses, on_validation, *validation,
                                            config.validation.quantiles);
        entry["generalization_error"] = block["generalization_error"];
        entry["conditional_errors"] = block["conditional_errors"];
      }
    } catch (const FitError& e) {
      entry = {{"status", "failed"}, {"failure", e.what()}};
    } catch (const std::invalid_argument& e) {
      entry = {{"status", "failed"}, {"failure", e.what()}};
    }
    cell[name] = entry;
  };
  const Eigen::MatrixXd empty;
  if (wants_pce(config)) {
    run_family("pce", [&] {
      const auto model = fit_pce(config.surrogate, ed, 1);
      json sel = {{"total_degree", model.total_degree}, {"q", model.q}, {"basis_size", model.basis.size()},
                  {"loo_error", finite_or_null(model.loo_error)}};
      Eigen::VectorXd val = validation ? predict_pce(model, validation->standard) : Eigen::VectorXd();
      return std::tuple{sel, Eigen::VectorXd(predict_pce(model, ed.standard)), val};
    });
  }
  if (wants_lra(config)) {
    run_family("lra", [&] {
      const auto fit = fit_lra(config.surrogate, ed, 1);
      json sel = {{"degree", fit.degree}, {"rank", fit.rank}, {"selection_error", finite_or_null(fit.selection_error)},
                  {"loo_rank", fit.loo_rank}};
      Eigen::VectorXd val = validation ? predict_lra(fit.model, validation->standard) : Eigen::VectorXd();
      return std::tuple{sel, Eigen::VectorXd(predict_lra(fit.model, ed.standard)), val};
    });
  }
  return cell;
}

json stats_json(const std::vector<double>& values) {
  if (values.empty()) return nullptr;
  const auto q = quartiles(values);
  return {{"median", q.median}, {"q1", q.q1}, {"q3", q.q3}, {"count", values.size()}};
}

}  // namespace

Quartiles quartiles(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("quartiles of an empty set");
  std::sort(values.begin(), values.end());
  auto at = [&](double level) {
    const double h = level * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

// ---------------------------------------------------------------------------

json cmd_fit(const RunConfig& config) {
  const ModelSource source(config);
  const auto ed = build_design(config, source);
  std::optional<ValidationData> validation;
  if (config.validation.size > 0 || config.validation.csv) validation = build_validation(config, source);

  fs::create_directories(config.out_dir);
  write_csv((fs::path(config.out_dir) / "ed.csv").string(), ed.physical, ed.responses);

  json report = header("fit", source);
  report["design"] = design_block(config, ed);
  report["validation"] = validation ? validation_header(*validation) : json(nullptr);
  json surrogates = json::object();
  std::optional<double> pce_err, lra_err;
  if (wants_pce(config)) {
    const auto model = fit_pce(config.surrogate, ed, config.jobs);
    write_json_file((fs::path(config.out_dir) / "pce_model.json").string(), surrogate_document(model, source.input(), ed));
    std::ofstream table(fs::path(config.out_dir) / "pce_basis.txt");
    write_basis_table(table, model.basis);
    json entry = {{"selection", pce_selection(model)},
                  {"empirical_error", seeded(empirical_error(ed.responses, predict_pce(model, ed.standard)), ed.seed)},
                  {"model_file", "pce_model.json"},
                  {"basis_file", "pce_basis.txt"}};
    if (validation) {
      const json block = validation_block(validation->responses, predict_pce(model, validation->standard), *validation,
                                          config.validation.quantiles);
      entry.update(block);
      pce_err = block["generalization_error"]["relative"].is_number()
                    ? std::optional<double>(block["generalization_error"]["relative"].get<double>())
                    : std::nullopt;
    }
    surrogates["pce"] = entry;
  }
  if (wants_lra(config)) {
    const auto fit = fit_lra(config.surrogate, ed, config.jobs);
    write_json_file((fs::path(config.out_dir) / "lra_model.json").string(), surrogate_document(fit, source.input(), ed));
    json entry = {{"selection", lra_selection(fit, config.surrogate.lra)},
                  {"empirical_error", seeded(empirical_error(ed.responses, predict_lra(fit.model, ed.standard)), ed.seed)},
                  {"model_file", "lra_model.json"}};
    if (validation) {
      const json block = validation_block(validation->responses, predict_lra(fit.model, validation->standard),
                                          *validation, config.validation.quantiles);
      entry.update(block);
      lra_err = block["generalization_error"]["relative"].is_number()
                    ? std::optional<double>(block["generalization_error"]["relative"].get<double>())
                    : std::nullopt;
    }
    surrogates["lra"] = entry;
  }
  report["surrogates"] = surrogates;
  if (pce_err && lra_err && *lra_err > 0.0) report["pce_over_lra_generalization"] = *pce_err / *lra_err;
  write_report(config, "report.json", report);
  return report;
}

json cmd_compare(const RunConfig& config) {
  if (config.compare.sizes.empty()) throw ConfigError("config: compare.sizes must be nonempty");
  if (config.model.responses_csv) throw ConfigError("config: compare needs an evaluable model source");
  const ModelSource source(config);
  std::optional<ValidationData> validation;
  if (config.validation.size > 0 || config.validation.csv) validation = build_validation(config, source);

  struct Task {
    int size;
    int replication;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int n : config.compare.sizes) {
    for (int r = 0; r < config.compare.replications; ++r) {
      tasks.push_back({n, r, config.design.seed + static_cast<std::uint64_t>(r)});
    }
  }
  std::vector<json> cells(tasks.size());
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
      try {
        cells[i] = compare_cell(config, source, tasks[i].size, tasks[i].seed, validation);
        cells[i]["replication"] = tasks[i].replication;
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  const int threads = std::max(1, std::min<int>(config.jobs, static_cast<int>(tasks.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  json report = header("compare", source);
  json seeds = json::array();
  for (int r = 0; r < config.compare.replications; ++r) seeds.push_back(config.design.seed + static_cast<std::uint64_t>(r));
  report["design"] = {{"generator", std::string(to_string(config.design.generator))},
                      {"sizes", config.compare.sizes},
                      {"replications", config.compare.replications},
                      {"seeds", seeds}};
  if (config.design.generator == Generator::maximin_lhs) report["design"]["trials"] = config.design.trials;
  report["validation"] = validation ? validation_header(*validation) : json(nullptr);
  report["cells"] = cells;

  json summary = json::array();
  std::ostringstream table;
  table << "size,family,successes,failures,median,q1,q3\n";
  for (int n : config.compare.sizes) {
    for (const char* family : {"pce", "lra"}) {
      if ((std::string(family) == "pce" && !wants_pce(config)) || (std::string(family) == "lra" && !wants_lra(config))) {
        continue;
      }
      std::vector<double> gen;
      std::vector<std::vector<double>> cond(config.validation.quantiles.size());
      int ok = 0, failed = 0;
      for (const auto& cell : cells) {
        if (cell["size"] != n) continue;
        if (cell["status"] != "ok" || cell[family]["status"] != "ok") {
          ++failed;
          continue;
        }
        ++ok;
        const json& entry = cell[family];
        if (entry.contains("generalization_error") && entry["generalization_error"]["relative"].is_number()) {
          gen.push_back(entry["generalization_error"]["relative"].get<double>());
        }
        if (entry.contains("conditional_errors")) {
          for (size_t k = 0; k < cond.size(); ++k) {
            const json& point = entry["conditional_errors"][k];
            if (point["error"].is_object() && point["error"]["relative"].is_number()) {
              cond[k].push_back(point["error"]["relative"].get<double>());
            }
          }
        }
      }
      json conditional = json::array();
      for (size_t k = 0; k < cond.size(); ++k) {
        conditional.push_back({{"quantile", config.validation.quantiles[k]}, {"relative", stats_json(cond[k])}});
      }
      summary.push_back({{"size", n},
                         {"family", family},
                         {"successes", ok},
                         {"failures", failed},
                         {"generalization_relative", stats_json(gen)},
                         {"conditional_relative", conditional}});
      table << n << ',' << family << ',' << ok << ',' << failed;
      if (gen.empty()) {
        table << ",,,\n";
      } else {
        const auto q = quartiles(gen);
        table << ',' << format_double(q.median) << ',' << format_double(q.q1) << ',' << format_double(q.q3) << '\n';
      }
    }
  }
  report["summary"] = summary;
  write_report(config, "compare_report.json", report);
  std::ofstream csv(fs::path(config.out_dir) / "compare_table.csv", std::ios::binary);
  csv << table.str();
  return report;
}

json cmd_validate(const RunConfig& config, const std::string& model_path) {
  if (config.validation.size <= 0 && !config.validation.csv) {
    throw ConfigError("config: validate needs validation.size > 0 or validation.csv");
  }
  const json document = read_json_file(model_path);
  if (!document.is_object() || !document.contains("type")) throw ConfigError(model_path + ": not a surrogate document");
  const std::string type = document["type"].is_string() ? document["type"].get<std::string>() : "";
  if (type != "pce" && type != "lra") throw ConfigError(model_path + ": unknown surrogate type");
  RunConfig effective = config;
  if (document.contains("input_model")) effective.input = input_model_from_json(document["input_model"]);
  const ModelSource source(effective);
  const auto validation = build_validation(effective, source);
  if (validation.standard.cols() != source.input().dim()) throw ConfigError("validation set width mismatch");

  Eigen::VectorXd predicted;
  if (type == "pce") {
    const auto model = pce_from_json(document);
    if (model.basis.dim() != static_cast<size_t>(source.input().dim())) {
      throw ConfigError(model_path + ": model dimension differs from the input model");
    }
    predicted = predict_pce(model, validation.standard);
  } else {
    const auto model = lra_from_json(document);
    if (model.degrees.size() != static_cast<size_t>(source.input().dim())) {
      throw ConfigError(model_path + ": model dimension differs from the input model");
    }
    predicted = predict_lra(model, validation.standard);
  }
  json report = header("validate", source);
  report["surrogate_type"] = type;
  if (document.contains("ed_fingerprint")) report["ed_fingerprint"] = document["ed_fingerprint"];
  report["validation"] = validation_header(validation);
  report.update(validation_block(validation.responses, predicted, validation, config.validation.quantiles));
  write_report(config, "validation_report.json", report);
  return report;
}

json cmd_design(const RunConfig& config) {
  if (config.model.responses_csv) throw ConfigError("config: design needs an input model from a benchmark or input_model");
  const ModelSource source(config);
  const auto design = make_design(config.design, static_cast<int>(source.input().dim()));
  const Eigen::MatrixXd physical = source.input().sample(design.points);
  fs::create_directories(config.out_dir);
  write_csv((fs::path(config.out_dir) / "design.csv").string(), physical);
  json report = header("design", source);
  report["design"] = {{"generator", std::string(to_string(config.design.generator))},
                      {"size", config.design.size},
                      {"seed", config.design.seed},
                      {"file", "design.csv"}};
  if (config.design.generator == Generator::maximin_lhs) report["design"]["trials"] = config.design.trials;
  return report;
}

std::string bench_list() {
  std::ostringstream out;
  for (const auto& name : benchmark_names()) {
    const auto b = make_benchmark(name);
    out << name << " (M=" << b.input.dim() << "): " << b.description << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Sparse PCE and canonical low-rank surrogate models"};
  app.require_subcommand(1);
  std::string config_path, model_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "run configuration (JSON)");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed, "override the design seed");
    sub->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", out_dir, "output directory");
  };
  auto* fit = app.add_subcommand("fit", "fit surrogate(s) and write models plus report.json");
  add_common(fit, true);
  auto* compare = app.add_subcommand("compare", "PCE versus LRA over an N sweep with replications");
  add_common(compare, true);
  auto* validate = app.add_subcommand("validate", "generalization and conditional errors of a saved model");
  add_common(validate, true);
  validate->add_option("--model", model_path, "surrogate document written by fit")->required();
  auto* bench = app.add_subcommand("bench-list", "list built-in benchmarks");
  auto* design = app.add_subcommand("design", "write a design CSV in physical coordinates");
  add_common(design, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (bench->parsed()) {
      std::cout << bench_list();
      return 0;
    }
    RunConfig config = load_run_config(config_path);
    if (seed) config.design.seed = *seed;
    if (jobs) config.jobs = *jobs;
    if (!out_dir.empty()) config.out_dir = out_dir;
    json report;
    if (fit->parsed()) {
      report = cmd_fit(config);
    } else if (compare->parsed()) {
      report = cmd_compare(config);
    } else if (validate->parsed()) {
      report = cmd_validate(config, model_path);
    } else if (design->parsed()) {
      report = cmd_design(config);
    }
    std::cout << report.dump(2) << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const ModelEvaluationError& e) {
    std::cerr << "model evaluation error: " << e.what() << '\n';
    return 3;
  } catch (const FitError& e) {
    std::cerr << "fit failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace metamodel::cli
