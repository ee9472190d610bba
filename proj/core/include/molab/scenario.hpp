#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "molab/report.hpp"

namespace molab {

inline constexpr int kSchemaVersion = 1;
const char* library_version();

// 64-bit FNV-1a of the compact dump, as 16 hex digits.
std::string config_hash(const json& config);

// One table of a report. CSV columns follow `columns`.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;

  json to_json() const;  // array of {column: value}
  std::string to_csv() const;
};

// %.17g, with inf / -inf / nan spelled out.
std::string format_csv_number(double v);

struct ScenarioOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> resolution;
};

struct Scenario {
  json config;      // effective config after overrides
  json overrides = json::object();
  std::string name;
  std::uint64_t seed = 0;
  int dim = 2;
  std::size_t resolution = 0;
  std::string task;
};

// Validates the whole document, including the task section. Throws
// ConfigError (or ParseError) with a path-qualified message.
Scenario parse_scenario(const json& config, const ScenarioOverrides& overrides = {});
Scenario load_scenario(const std::string& path, const ScenarioOverrides& overrides = {});

struct ScenarioResult {
  json report;
  std::vector<Table> tables;
  int exit_code = 0;  // 0 pass, 1 verification failure, 2 usage/config, 3 numeric
};

ScenarioResult run_scenario(const Scenario& scenario);

// Writes DIR/<name>.json and, when `csv`, DIR/<name>.<table>.csv.
std::vector<std::string> write_outputs(const ScenarioResult& result, const std::string& name,
                                       const std::string& dir, bool csv);

// Built-in shapes and field constructors.
json gallery_json();

}  // namespace molab
