#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "geig/errors.hpp"
#include "geig/experiment.hpp"

namespace {

// 0 success, 1 config or IO problem, 2 solver gave up.
std::optional<geig::ExperimentConfig> load(const std::string& path) {
  const geig::ConfigResult r = geig::validate_config(path);
  for (const auto& e : r.errors) std::cerr << "error: " << e << "\n";
  return r.config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiresolution eigensolvers for rough elliptic operators"};
  app.set_version_flag("--version", std::string(geig::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  bool print = false;
  bool quiet = false;
  std::string decomposition_dir;

  auto* run = app.add_subcommand("run", "Solve the configured eigenproblem");
  run->add_option("config", config_path, "Experiment config (JSON) or a previous manifest.json")
      ->required();
  run->add_option("-o,--output", output_dir, "Override output_dir");
  run->add_flag("-q,--quiet", quiet, "No progress log");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", config_path, "Experiment config (JSON)")->required();
  validate->add_flag("--print", print, "Print the fully resolved config");

  auto* transform = app.add_subcommand("transform", "Build and save the level operators");
  transform->add_option("config", config_path, "Experiment config (JSON)")->required();
  transform->add_option("-o,--output", output_dir, "Override output_dir");

  auto* diag = app.add_subcommand("diag", "Condition numbers and decay of a saved decomposition");
  diag->add_option("dir", decomposition_dir, "Directory written by 'transform'")
      ->required()
      ->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*diag) {
      std::cout << geig::diagnose_decomposition(decomposition_dir).dump(2) << "\n";
      return 0;
    }
    auto cfg = load(config_path);
    if (!cfg) return 1;
    if (!output_dir.empty()) cfg->output_dir = output_dir;
    if (*validate) {
      if (print) std::cout << cfg->to_json().dump(2) << "\n";
      else std::cout << "ok\n";
      return 0;
    }
    std::ofstream null_stream;
    std::ostream& log = quiet ? null_stream : std::cerr;
    if (*transform) {
      geig::transform_experiment(*cfg, log);
      return 0;
    }
    return geig::run_experiment(*cfg, log);
  } catch (const geig::LoadError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
