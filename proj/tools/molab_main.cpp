#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "molab/scenario.hpp"

namespace {

int run(const std::string& path, const std::string& out_dir, std::optional<std::uint64_t> seed,
        std::optional<std::size_t> resolution, bool csv_flag) {
  molab::ScenarioOverrides ov;
  ov.seed = seed;
  ov.resolution = resolution;
  const molab::Scenario sc = molab::load_scenario(path, ov);
  const molab::ScenarioResult res = molab::run_scenario(sc);
  const bool csv = csv_flag || sc.config.value("output", molab::json::object()).value("csv", false);
  const auto files = molab::write_outputs(res, sc.name, out_dir, csv);
  std::cerr << sc.name << ": " << res.report.at("status").get<std::string>();
  if (res.report.contains("error")) std::cerr << " (" << res.report["error"]["message"].get<std::string>() << ")";
  std::cerr << "\n";
  for (const auto& f : files) std::cerr << "  wrote " << f << "\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"molab: logarithmic double-phase Musielak-Orlicz numerics"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(molab::library_version()));

  std::string config;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> resolution;
  bool csv = false;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write its report");
  run_cmd->add_option("config", config, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "Output directory");
  run_cmd->add_option("--seed", seed, "Override the scenario seed");
  run_cmd->add_option("--resolution", resolution, "Override the grid resolution")->check(CLI::Range(2, 4096));
  run_cmd->add_flag("--csv", csv, "Also write tables as CSV");

  std::string check_path;
  auto* check_cmd = app.add_subcommand("check-config", "Validate a scenario without running it");
  check_cmd->add_option("config", check_path, "Scenario JSON")->required()->check(CLI::ExistingFile);

  auto* gallery_cmd = app.add_subcommand("gallery", "List built-in domains, field constructors and tasks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return run(config, out_dir, seed, resolution, csv);
    if (*check_cmd) {
      const molab::Scenario sc = molab::load_scenario(check_path);
      std::cout << sc.name << ": ok (task " << sc.task << ", hash " << molab::config_hash(sc.config) << ")\n";
      return 0;
    }
    if (*gallery_cmd) {
      std::cout << molab::gallery_json().dump(2) << "\n";
      return 0;
    }
  } catch (const molab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const molab::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const molab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
