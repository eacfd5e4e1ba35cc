// wavescat: scattering matrices of 2-D Helmholtz waveguides over (mu, R) grids.
//
//   wavescat validate --config sweep.json
//   wavescat run --config sweep.json [--workers N] [--output DIR]

#include "wavescat/errors.hpp"
#include "wavescat/sweep.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Scattering matrices of waveguides by the truncated-domain functional method"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  std::string output;

  auto *run = app.add_subcommand("run", "Solve every (mu, R) grid point and write the artifacts");
  auto *validate = app.add_subcommand("validate", "Check config, scene and thresholds without solving");
  for (auto *sub : {run, validate}) {
    sub->add_option("--config", config_path, "Sweep configuration (JSON)")->required();
    sub->add_option("--workers", workers, "Worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--output", output, "Output directory (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wavescat::kExitConfig;
  }

  wavescat::RunConfig config;
  try {
    config = wavescat::load_config(config_path);
  } catch (const wavescat::Error &e) {
    std::cerr << "error: " << e.what() << '\n';
    return wavescat::kExitConfig;
  }
  if (workers > 0) config.workers = workers;
  if (!output.empty()) config.output_dir = output;

  if (validate->parsed()) return wavescat::validate_command(config, std::cout, std::cerr);
  return wavescat::run_command(config, std::cout, std::cerr);
}
