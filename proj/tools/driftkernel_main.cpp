// driftkernel: run a configured experiment, or render the report of a
// finished run.
//
//   driftkernel run <config.json> [--workers N] [--out DIR]
//   driftkernel report <run-dir>
//
// Exit codes: 0 all required checks pass, 1 configuration or usage error,
// 2 at least one required check failed (or the run itself broke down).

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "driftkernel/experiment.hpp"

namespace {

int do_run(const std::string& config_path, int workers,
           const std::string& out_dir) {
  std::ifstream is(config_path, std::ios::binary);
  if (!is) {
    std::cerr << "error: cannot read config file " << config_path << "\n";
    return 1;
  }
  std::stringstream buf;
  buf << is.rdbuf();

  dk::ExperimentConfig cfg;
  try {
    cfg = dk::parse_config(buf.str());
  } catch (const dk::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    dk::RunResult res = dk::run_experiment(cfg, workers, out_dir);
    std::cout << res.manifest.render_text();
    std::cout << "config " << cfg.hash_prefix() << "  manifest "
              << res.manifest.hash_prefix() << "\n";
    for (const auto& f : res.files) std::cout << "wrote " << f << "\n";
    return res.required_pass ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: run failed: " << e.what() << "\n";
    return 2;
  }
}

int do_report(const std::string& run_dir) {
  try {
    bool ok = false;
    std::cout << dk::render_report(run_dir, &ok);
    return ok ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heat kernel of the drift-perturbed fractional Laplacian: "
               "series construction, path simulation, and checks"};
  app.require_subcommand(1);

  std::string config_path, run_dir, out_dir;
  int workers = 0;

  CLI::App* run = app.add_subcommand("run", "execute a config file");
  run->add_option("config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--workers", workers,
                  "worker threads (default: hardware concurrency)");
  run->add_option("--out", out_dir, "override the config's output directory");

  CLI::App* rep = app.add_subcommand("report", "summarize a run directory");
  rep->add_option("dir", run_dir, "directory holding a run manifest")
      ->required()
      ->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return do_run(config_path, workers, out_dir);
  return do_report(run_dir);
}
