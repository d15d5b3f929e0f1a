#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "floorlab/config.hpp"
#include "floorlab/errors.hpp"
#include "floorlab/runner.hpp"

namespace {

int run_command(const std::string& config_path, const std::optional<std::string>& out_dir,
                const std::optional<std::uint64_t>& seed, bool desk_scale) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "floorlab: cannot read config " << config_path << "\n";
    return static_cast<int>(floorlab::ExitCode::kConfig);
  }
  std::stringstream text;
  text << in.rdbuf();

  floorlab::ExperimentConfig config;
  try {
    config = floorlab::parse_config(text.str());
    if (out_dir) config.set("output_dir", *out_dir);
    if (seed) config.set("master_seed", std::to_string(*seed));
    if (desk_scale) config.set("desk_scale", "true");
  } catch (const floorlab::ConfigError& e) {
    std::cerr << "floorlab: " << config_path << ": " << e.what() << "\n";
    return static_cast<int>(floorlab::ExitCode::kConfig);
  }

  std::cerr << "floorlab: running " << config.experiment << " -> " << config.text("output_dir")
            << "\n";
  const auto manifest = floorlab::run(config);
  if (manifest.status != floorlab::ExitCode::kOk) {
    std::cerr << "floorlab: " << config.experiment << " failed: " << manifest.error << "\n";
    return static_cast<int>(manifest.status);
  }
  for (const auto& f : manifest.outputs) {
    std::cout << config.text("output_dir") << "/" << f.name << "  " << f.checksum << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"floorlab: descent floors of spin glasses and dense networks"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  bool desk_scale = false;
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory (overrides output_dir)");
  run->add_option("--seed", seed, "master seed (overrides master_seed)");
  run->add_flag("--desk-scale", desk_scale, "subsample MNIST (MNIST experiments only)");

  auto* list = app.add_subcommand("list", "print the experiment registry");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const auto& name : floorlab::experiment_registry()) {
      std::cout << name << "\t" << floorlab::experiment_description(name) << "\n";
    }
    return 0;
  }
  return run_command(config_path, out_dir, seed, desk_scale);
}
