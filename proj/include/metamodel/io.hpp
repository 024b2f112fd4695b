#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "metamodel/inputmodel.hpp"
#include "metamodel/lra.hpp"
#include "metamodel/metrics.hpp"
#include "metamodel/pce.hpp"
#include "metamodel/polybasis.hpp"

namespace metamodel {

// Malformed documents raise ConfigError with the offending key in the message.

/// Shortest round-trip decimal form, independent of the C++ locale.
std::string format_double(double value);
/// Strict locale-independent parse; accepts nan/inf spellings. Throws ConfigError.
double parse_double(std::string_view text);

// ---------------------------------------------------------------------------
// Input model: {"marginals": [{family, parameterization, values, label?}], "correlation"?}
// "natural" values are the Marginal parameters; "moments" values are [mean, CoV].

nlohmann::json to_json(const InputModel& model);
InputModel input_model_from_json(const nlohmann::json& document);

// ---------------------------------------------------------------------------
// Surrogate documents.

/// FNV-1a hash of the ED bytes (points then responses), as 16 hex digits.
std::string ed_fingerprint(const Eigen::MatrixXd& points, const Eigen::VectorXd& responses);

nlohmann::json to_json(const PceModel& model, const std::string& fingerprint = {});
PceModel pce_from_json(const nlohmann::json& document);

nlohmann::json to_json(const LraModel& model, const std::string& fingerprint = {});
LraModel lra_from_json(const nlohmann::json& document);

nlohmann::json to_json(const ErrorReport& report);
ErrorReport error_report_from_json(const nlohmann::json& document);

/// Non-finite values become null so documents stay valid JSON.
nlohmann::json finite_or_null(double value);

// ---------------------------------------------------------------------------
// CSV tables. Headers are x1..xM with an optional trailing y.

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

void write_csv(std::ostream& out, const Eigen::MatrixXd& points,
               const std::optional<Eigen::VectorXd>& responses = std::nullopt);
void write_csv(const std::string& path, const Eigen::MatrixXd& points,
               const std::optional<Eigen::VectorXd>& responses = std::nullopt);

/// Parses a rectangular numeric table with a header row.
CsvTable read_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv_file(const std::string& path);

/// Splits a table whose header is x1..xM,y into points and responses.
struct ExperimentalDesign {
  Eigen::MatrixXd points;
  Eigen::VectorXd responses;
};
ExperimentalDesign design_from_table(const CsvTable& table);

// ---------------------------------------------------------------------------
// Basis table: one multi-index per line, space-separated.

void write_basis_table(std::ostream& out, const BasisSet& basis);
std::vector<MultiIndex> read_basis_table(std::istream& in);

// ---------------------------------------------------------------------------

nlohmann::json read_json_file(const std::string& path);
/// Writes `document` with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& document);

}  // namespace metamodel
