#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "molab/expression.hpp"
#include "molab/scenario.hpp"

using namespace molab;

namespace {

json minimal_norm() {
  return json::parse(R"({
    "schema_version": 1, "name": "t", "seed": 3, "dimension": 2,
    "field": {"p": 2},
    "domain": {"shape": "square", "resolution": 16},
    "task": {"kind": "norm", "u": 1}
  })");
}

std::string config_error(const json& j) {
  try {
    parse_scenario(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Hash, Fnv1a) {
  // 64-bit FNV-1a of the compact dump
  EXPECT_EQ(config_hash(json::parse(R"({"a": 1})")), "9c3e82dd6fcae8b1");
  EXPECT_EQ(config_hash(json::parse(R"({"a": 1})")), config_hash(json{{"a", 1}}));
}

TEST(Csv, SeventeenDigits) {
  EXPECT_EQ(format_csv_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_csv_number(1.0), "1");
  EXPECT_EQ(format_csv_number(-std::numeric_limits<double>::infinity()), "-inf");
  Table t{"x", {"a", "b"}, {{1.5, "lab,el"}, {2, true}}};
  EXPECT_EQ(t.to_csv(), "a,b\n1.5,\"lab,el\"\n2,true\n");
}

TEST(Parse, MinimalConfig) {
  const Scenario s = parse_scenario(minimal_norm());
  EXPECT_EQ(s.task, "norm");
  EXPECT_EQ(s.seed, 3u);
  EXPECT_EQ(s.resolution, 16u);
}

TEST(Parse, Errors) {
  json j = minimal_norm();
  j["schema_version"] = 2;
  EXPECT_NE(config_error(j).find("schema_version"), std::string::npos);
  j = minimal_norm();
  j["extra"] = 1;
  EXPECT_NE(config_error(j).find("unknown key 'extra'"), std::string::npos);
  j = minimal_norm();
  j["task"]["kind"] = "dance";
  EXPECT_NE(config_error(j).find("unknown task"), std::string::npos);
  j = minimal_norm();
  j["domain"]["shape"] = "cube";
  EXPECT_NE(config_error(j).find("dimension"), std::string::npos);
  j = minimal_norm();
  j["field"]["p"] = "min(2,)";
  EXPECT_NE(config_error(j).find("arity error at offset 6"), std::string::npos);
  j = minimal_norm();
  j["task"]["space"] = "sobolev";
  EXPECT_NE(config_error(j).find("grad"), std::string::npos);
  j = minimal_norm();
  j["field"]["p"] = 3;
  j["field"]["q"] = 2;
  j["field"]["theorem_mode"] = true;
  EXPECT_NE(config_error(j), "");
}

TEST(Run, NormOfOneIsOne) {
  const ScenarioResult r = run_scenario(parse_scenario(minimal_norm()));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.report.at("status"), "pass");
  EXPECT_NEAR(r.report.at("sub_reports")[0].at("details").at("norm").get<double>(), 1.0, 1e-12);
  for (const char* k : {"schema_version", "config_hash", "seed", "task", "status", "sub_reports", "tables",
                        "library_version", "resolution", "overrides"})
    EXPECT_TRUE(r.report.contains(k)) << k;
}

TEST(Run, OverridesAreRecordedAndHashed) {
  ScenarioOverrides ov;
  ov.seed = 99;
  ov.resolution = 8;
  const Scenario s = parse_scenario(minimal_norm(), ov);
  EXPECT_EQ(s.overrides.at("seed"), 99);
  EXPECT_EQ(s.overrides.at("resolution"), 8);
  EXPECT_NE(config_hash(s.config), config_hash(parse_scenario(minimal_norm()).config));
  EXPECT_EQ(run_scenario(s).report.at("resolution"), 8);
}

TEST(Run, PreconditionFailureIsStructured) {
  json j = minimal_norm();
  j["task"] = {{"kind", "conditions"}, {"conditions", {"A0"}}};
  j["field"] = {{"p", 2}, {"r", -1}, {"a", 1}};
  const ScenarioResult r = run_scenario(parse_scenario(j));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.report.at("status"), "fail");
  EXPECT_EQ(r.report.at("sub_reports")[0].at("error").at("kind"), "precondition");
}

TEST(Run, Deterministic) {
  for (const auto& e : std::filesystem::directory_iterator(MOLAB_SCENARIO_DIR)) {
    if (e.path().extension() != ".json") continue;
    const std::string name = e.path().stem().string();
    if (name.rfind("embed", 0) == 0) continue;  // covered by the acceptance suite
    const Scenario s = load_scenario(e.path().string());
    EXPECT_EQ(run_scenario(s).report.dump(), run_scenario(s).report.dump()) << name;
  }
}

TEST(Outputs, WritesJsonAndCsv) {
  const auto dir = std::filesystem::temp_directory_path() / "molab_unit_outputs";
  std::filesystem::remove_all(dir);
  const ScenarioResult r = run_scenario(parse_scenario(minimal_norm()));
  const auto files = write_outputs(r, "t", dir.string(), true);
  ASSERT_EQ(files.size(), 2u);
  std::ifstream in(dir / "t.norm.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "scale,norm,log_norm,modular_at_norm,iterations,log_space");
  EXPECT_EQ(json::parse(std::ifstream(dir / "t.json")), r.report);
}

TEST(Gallery, ListsShapesAndTasks) {
  const json g = gallery_json();
  EXPECT_GE(g.at("shapes").size(), 7u);
  EXPECT_EQ(g.at("tasks").size(), 6u);
}
