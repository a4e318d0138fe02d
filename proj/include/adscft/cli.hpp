#pragma once

// Batch driver for the verification experiments. A run configuration is
// resolved from built-in defaults, an optional JSON file and flag overrides
// (in that order, later sources win), validated field by field, executed, and
// reported as a JSON record plus an optional CSV table.

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace adscft::cli {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitTolerance = 2;

/// Invalid configuration. `field` is the dotted path of the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& reason);
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Library version string.
const char* library_version();

/// Experiment names in a fixed order.
const std::vector<std::string>& experiments();

/// One-line description of an experiment.
std::string summary(const std::string& experiment);

/// CSV column documentation for --help.
std::string csv_columns(const std::string& experiment);

/// Built-in defaults: {"params", "seed", "workers", "tolerances", "options"}.
/// Throws ConfigError for an unknown experiment.
Json default_config(const std::string& experiment);

struct RunConfig {
  std::string experiment;
  Json config;  // fully resolved and validated
};

/// Merges defaults, `file` and `overrides` (JSON merge patches), then
/// validates. A params override naming nu or m2 replaces both. workers = 0
/// resolves through ADSCFT_WORKERS or the hardware count.
RunConfig resolve(const std::string& experiment, const Json& file = Json::object(),
                  const Json& overrides = Json::object());

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  int exit_code = kExitPass;
  Json record;  // schema, experiment, version, seed, config, inputs, outputs, checks, errors, ...
  Table table;
};

/// Runs the experiment. Library errors are caught into record["errors"]:
/// DomainError maps to kExitUsage, anything else to kExitTolerance.
RunResult run(const RunConfig& cfg);

/// Record serialization used for result files (2-space indent, sorted keys).
std::string dump_record(const Json& record);
std::string to_csv(const Table& table);

/// Writes <out_dir>/<experiment>.json and, when the table has rows,
/// <out_dir>/<experiment>.csv. Creates out_dir if needed.
void write_outputs(const RunResult& result, const std::string& experiment,
                   const std::string& out_dir);

/// Sets `path` (dotted, e.g. "options.samples") in `target` to `value`,
/// parsed as JSON when possible and as a string otherwise.
void set_path(Json& target, const std::string& path, const std::string& value);

}  // namespace adscft::cli
