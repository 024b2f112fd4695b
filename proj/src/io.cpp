#include "metamodel/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "metamodel/error.hpp"

namespace metamodel {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

const json& require(const json& doc, const char* key, const std::string& context) {
  if (!doc.is_object() || !doc.contains(key)) fail(context + ": missing key '" + key + "'");
  return doc.at(key);
}

double number(const json& value, const std::string& context) {
  if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!value.is_number()) fail(context + ": expected a number");
  return value.get<double>();
}

Eigen::VectorXd vector_from(const json& value, const std::string& context) {
  if (!value.is_array()) fail(context + ": expected an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(value.size()));
  for (size_t i = 0; i < value.size(); ++i) v[static_cast<Eigen::Index>(i)] = number(value[i], context);
  return v;
}

json vector_to(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(finite_or_null(v[i]));
  return out;
}

std::vector<PolyFamily> poly_families_from(const json& value, const std::string& context) {
  if (!value.is_array()) fail(context + ": expected an array of family names");
  std::vector<PolyFamily> out;
  for (const auto& name : value) {
    if (!name.is_string()) fail(context + ": family names must be strings");
    try {
      out.push_back(poly_family_from_string(name.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      fail(context + ": " + e.what());
    }
  }
  return out;
}

json poly_families_to(const std::vector<PolyFamily>& families) {
  json out = json::array();
  for (auto f : families) out.push_back(std::string(to_string(f)));
  return out;
}

template <typename Fn>
auto guarded(const std::string& context, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    fail(context + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    fail(context + ": " + e.what());
  } catch (const std::domain_error& e) {
    fail(context + ": " + e.what());
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  for (auto& f : fields) {
    const auto first = f.find_first_not_of(" \t");
    const auto last = f.find_last_not_of(" \t");
    f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
  }
  return fields;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text) {
  std::string lowered(text);
  for (auto& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lowered == "nan" || lowered == "+nan" || lowered == "-nan") return std::numeric_limits<double>::quiet_NaN();
  if (lowered == "inf" || lowered == "+inf" || lowered == "infinity") return std::numeric_limits<double>::infinity();
  if (lowered == "-inf" || lowered == "-infinity") return -std::numeric_limits<double>::infinity();
  std::string_view body = text;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(body.data(), body.data() + body.size(), value);
  if (body.empty() || result.ec != std::errc() || result.ptr != body.data() + body.size()) {
    fail("not a number: '" + std::string(text) + "'");
  }
  return value;
}

json finite_or_null(double value) {
  return std::isfinite(value) ? json(value) : json(nullptr);
}

// ---------------------------------------------------------------------------

json to_json(const InputModel& model) {
  json marginals = json::array();
  for (const auto& m : model.marginals()) {
    json entry = {{"family", std::string(to_string(m.family()))},
                  {"parameterization", "natural"},
                  {"values", {m.param(0), m.param(1)}}};
    if (!m.label().empty()) entry["label"] = m.label();
    marginals.push_back(entry);
  }
  json doc = {{"marginals", marginals}};
  if (!model.independent()) {
    json corr = json::array();
    const auto& c = model.correlation();
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) corr.push_back(c(i, j));
    }
    doc["correlation"] = corr;
  }
  return doc;
}

InputModel input_model_from_json(const json& document) {
  const std::string context = "input model";
  return guarded(context, [&] {
    const json& list = require(document, "marginals", context);
    if (!list.is_array() || list.empty()) fail(context + ": 'marginals' must be a nonempty array");
    std::vector<Marginal> marginals;
    for (size_t i = 0; i < list.size(); ++i) {
      const std::string where = context + ": marginal " + std::to_string(i + 1);
      const json& entry = list[i];
      const Family family = family_from_string(require(entry, "family", where).get<std::string>());
      const std::string param =
          entry.contains("parameterization") ? entry.at("parameterization").get<std::string>() : "natural";
      const Eigen::VectorXd values = vector_from(require(entry, "values", where), where);
      if (values.size() != 2) fail(where + ": 'values' must hold two numbers");
      const std::string label = entry.contains("label") ? entry.at("label").get<std::string>() : std::string();
      if (param == "moments") {
        marginals.push_back(marginal_from_moments(family, values[0], values[1], label));
      } else if (param == "natural") {
        switch (family) {
          case Family::normal: marginals.push_back(Marginal::normal(values[0], values[1], label)); break;
          case Family::lognormal: marginals.push_back(Marginal::lognormal(values[0], values[1], label)); break;
          case Family::uniform: marginals.push_back(Marginal::uniform(values[0], values[1], label)); break;
          case Family::gumbel: marginals.push_back(Marginal::gumbel(values[0], values[1], label)); break;
          case Family::truncated_normal:
            marginals.push_back(Marginal::truncated_normal(values[0], values[1], label));
            break;
        }
      } else {
        fail(where + ": parameterization must be 'moments' or 'natural'");
      }
    }
    if (!document.contains("correlation") || document.at("correlation").is_null()) {
      return InputModel(std::move(marginals));
    }
    const Eigen::VectorXd flat = vector_from(document.at("correlation"), context + ": correlation");
    const auto m = static_cast<Eigen::Index>(marginals.size());
    if (flat.size() != m * m) fail(context + ": correlation must hold M*M row-major entries");
    Eigen::MatrixXd corr(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) corr(i, j) = flat[i * m + j];
    }
    return InputModel(std::move(marginals), corr);
  });
}

// ---------------------------------------------------------------------------

std::string ed_fingerprint(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&](const void* data, size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < bytes; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ULL;
    }
  };
  const std::int64_t shape[2] = {points.rows(), points.cols()};
  mix(shape, sizeof shape);
  // Row-major traversal so the hash does not depend on storage order.
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      const double v = points(i, j);
      mix(&v, sizeof v);
    }
  }
  mix(responses.data(), sizeof(double) * static_cast<size_t>(responses.size()));
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

json to_json(const PceModel& model, const std::string& fingerprint) {
  json indices = json::array();
  for (const auto& alpha : model.basis.indices()) indices.push_back(alpha.degrees());
  json grid = json::array();
  for (const auto& cell : model.grid) {
    grid.push_back({{"degree", cell.degree},
                    {"q", cell.q},
                    {"candidate_size", cell.candidate_size},
                    {"selected_size", cell.selected_size},
                    {"score", finite_or_null(cell.score)},
                    {"skipped", cell.skipped}});
  }
  json doc = {{"type", "pce"},
              {"families", poly_families_to(model.basis.families())},
              {"indices", indices},
              {"coefficients", vector_to(model.coefficients)},
              {"selection",
               {{"total_degree", model.total_degree},
                {"q", model.q},
                {"loo_error", finite_or_null(model.loo_error)},
                {"candidate_size", model.candidate_size},
                {"grid", grid}}}};
  if (!fingerprint.empty()) doc["ed_fingerprint"] = fingerprint;
  return doc;
}

PceModel pce_from_json(const json& document) {
  const std::string context = "PCE model";
  return guarded(context, [&] {
    if (document.contains("type") && document.at("type") != "pce") fail(context + ": type is not 'pce'");
    PceModel model;
    const auto families = poly_families_from(require(document, "families", context), context);
    const json& list = require(document, "indices", context);
    if (!list.is_array()) fail(context + ": 'indices' must be an array");
    std::vector<MultiIndex> indices;
    for (const auto& row : list) {
      auto degrees = row.get<std::vector<int>>();
      if (degrees.size() != families.size()) fail(context + ": multi-index length differs from the family count");
      for (int d : degrees) {
        if (d < 0) fail(context + ": negative degree in multi-index");
      }
      indices.emplace_back(std::move(degrees));
    }
    model.basis = BasisSet(families, std::move(indices));
    model.coefficients = vector_from(require(document, "coefficients", context), context + ": coefficients");
    if (static_cast<size_t>(model.coefficients.size()) != model.basis.size()) {
      fail(context + ": coefficient count differs from the basis size");
    }
    if (!model.coefficients.allFinite()) fail(context + ": coefficients must be finite");
    if (document.contains("selection")) {
      const json& sel = document.at("selection");
      model.total_degree = sel.value("total_degree", 0);
      model.q = sel.value("q", 1.0);
      model.loo_error = sel.contains("loo_error") ? number(sel.at("loo_error"), context) : 0.0;
      model.candidate_size = sel.value("candidate_size", size_t{0});
      if (sel.contains("grid")) {
        for (const auto& c : sel.at("grid")) {
          PceGridCell cell;
          cell.degree = c.at("degree").get<int>();
          cell.q = c.at("q").get<double>();
          cell.candidate_size = c.at("candidate_size").get<size_t>();
          cell.selected_size = c.at("selected_size").get<size_t>();
          cell.score = number(c.at("score"), context);
          cell.skipped = c.at("skipped").get<bool>();
          model.grid.push_back(cell);
        }
      }
    }
    return model;
  });
}

json to_json(const LraModel& model, const std::string& fingerprint) {
  json components = json::array();
  for (const auto& comp : model.components) {
    json dims = json::array();
    for (const auto& z : comp.coefficients) dims.push_back(vector_to(z));
    components.push_back(dims);
  }
  json traces = json::array();
  for (const auto& t : model.error_trace) {
    json row = json::array();
    for (double e : t) row.push_back(finite_or_null(e));
    traces.push_back(row);
  }
  json doc = {{"type", "lra"},
              {"families", poly_families_to(model.families)},
              {"degrees", model.degrees},
              {"rank", model.rank()},
              {"b", vector_to(model.b)},
              {"components", components},
              {"stopping_rule",
               {{"max_iterations", model.rule.max_iterations},
                {"min_error_decrease", model.rule.min_error_decrease}}},
              {"iterations", model.iterations},
              {"error_trace", traces},
              {"collinear", model.collinear}};
  if (!fingerprint.empty()) doc["ed_fingerprint"] = fingerprint;
  return doc;
}

LraModel lra_from_json(const json& document) {
  const std::string context = "LRA model";
  return guarded(context, [&] {
    if (document.contains("type") && document.at("type") != "lra") fail(context + ": type is not 'lra'");
    LraModel model;
    model.families = poly_families_from(require(document, "families", context), context);
    model.degrees = require(document, "degrees", context).get<std::vector<int>>();
    if (model.degrees.size() != model.families.size()) fail(context + ": degrees and families differ in length");
    for (int d : model.degrees) {
      if (d < 0) fail(context + ": negative degree");
    }
    model.b = vector_from(require(document, "b", context), context + ": b");
    const json& comps = require(document, "components", context);
    if (!comps.is_array() || comps.size() != static_cast<size_t>(model.b.size())) {
      fail(context + ": component count differs from the length of b");
    }
    for (const auto& comp : comps) {
      if (!comp.is_array() || comp.size() != model.degrees.size()) {
        fail(context + ": each component needs one coefficient array per dimension");
      }
      RankOneComponent c;
      for (size_t i = 0; i < comp.size(); ++i) {
        Eigen::VectorXd z = vector_from(comp[i], context + ": component");
        if (z.size() != model.degrees[i] + 1) fail(context + ": coefficient array length must be degree + 1");
        c.coefficients.push_back(std::move(z));
      }
      model.components.push_back(std::move(c));
    }
    if (!model.b.allFinite()) fail(context + ": b must be finite");
    if (document.contains("stopping_rule")) {
      const json& r = document.at("stopping_rule");
      model.rule.max_iterations = r.value("max_iterations", model.rule.max_iterations);
      model.rule.min_error_decrease = r.value("min_error_decrease", model.rule.min_error_decrease);
    }
    if (document.contains("iterations")) model.iterations = document.at("iterations").get<std::vector<int>>();
    if (document.contains("error_trace")) {
      for (const auto& row : document.at("error_trace")) {
        std::vector<double> t;
        for (const auto& e : row) t.push_back(number(e, context));
        model.error_trace.push_back(std::move(t));
      }
    }
    model.collinear = document.value("collinear", false);
    return model;
  });
}

json to_json(const ErrorReport& report) {
  json doc = {{"kind", std::string(to_string(report.kind))},
              {"absolute", finite_or_null(report.absolute)},
              {"relative", report.relative ? finite_or_null(*report.relative) : json(nullptr)},
              {"sample_count", report.sample_count}};
  if (report.threshold) doc["threshold"] = finite_or_null(*report.threshold);
  return doc;
}

ErrorReport error_report_from_json(const json& document) {
  const std::string context = "error report";
  return guarded(context, [&] {
    ErrorReport report;
    const std::string kind = require(document, "kind", context).get<std::string>();
    if (kind == "empirical") {
      report.kind = ErrorKind::empirical;
    } else if (kind == "generalization") {
      report.kind = ErrorKind::generalization;
    } else if (kind == "conditional") {
      report.kind = ErrorKind::conditional;
    } else {
      fail(context + ": unknown kind '" + kind + "'");
    }
    report.absolute = number(require(document, "absolute", context), context);
    const json& rel = require(document, "relative", context);
    if (!rel.is_null()) report.relative = number(rel, context);
    report.sample_count = require(document, "sample_count", context).get<size_t>();
    if (document.contains("threshold") && !document.at("threshold").is_null()) {
      report.threshold = number(document.at("threshold"), context);
    }
    return report;
  });
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const Eigen::MatrixXd& points, const std::optional<Eigen::VectorXd>& responses) {
  if (responses && responses->size() != points.rows()) {
    throw std::invalid_argument("response count differs from the number of points");
  }
  for (Eigen::Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << 'x' << (j + 1);
  if (responses) out << (points.cols() ? "," : "") << 'y';
  out << '\n';
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) out << (j ? "," : "") << format_double(points(i, j));
    if (responses) out << (points.cols() ? "," : "") << format_double((*responses)[i]);
    out << '\n';
  }
}

void write_csv(const std::string& path, const Eigen::MatrixXd& points, const std::optional<Eigen::VectorXd>& responses) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, points, responses);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

CsvTable read_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::vector<std::vector<double>> rows;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size()) {
      fail(source + ": line " + std::to_string(line_number) + " has " + std::to_string(fields.size()) +
           " fields, expected " + std::to_string(table.header.size()));
    }
    std::vector<double> row;
    for (const auto& f : fields) {
      try {
        row.push_back(parse_double(f));
      } catch (const ConfigError&) {
        fail(source + ": line " + std::to_string(line_number) + ": not a number: '" + f + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (table.header.empty()) fail(source + ": empty CSV (no header)");
  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return table;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  return read_csv(in, path);
}

ExperimentalDesign design_from_table(const CsvTable& table) {
  const auto cols = static_cast<Eigen::Index>(table.header.size());
  if (cols < 2 || table.header.back() != "y") fail("ED CSV header must be x1..xM,y");
  for (Eigen::Index j = 0; j + 1 < cols; ++j) {
    if (table.header[static_cast<size_t>(j)] != "x" + std::to_string(j + 1)) {
      fail("ED CSV header must be x1..xM,y (column " + std::to_string(j + 1) + " is '" +
           table.header[static_cast<size_t>(j)] + "')");
    }
  }
  return {table.values.leftCols(cols - 1), table.values.col(cols - 1)};
}

// ---------------------------------------------------------------------------

void write_basis_table(std::ostream& out, const BasisSet& basis) {
  for (const auto& alpha : basis.indices()) {
    for (size_t i = 0; i < alpha.dim(); ++i) out << (i ? " " : "") << alpha[i];
    out << '\n';
  }
}

std::vector<MultiIndex> read_basis_table(std::istream& in) {
  std::vector<MultiIndex> out;
  std::string line;
  size_t width = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    fields.imbue(std::locale::classic());
    std::vector<int> degrees;
    int d = 0;
    while (fields >> d) {
      if (d < 0) fail("basis table: negative degree");
      degrees.push_back(d);
    }
    if (!fields.eof()) fail("basis table: non-integer entry in '" + line + "'");
    if (width == 0) width = degrees.size();
    if (degrees.size() != width) fail("basis table: rows differ in length");
    out.emplace_back(std::move(degrees));
  }
  return out;
}

// ---------------------------------------------------------------------------

json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const json& document) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << document.dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace metamodel
