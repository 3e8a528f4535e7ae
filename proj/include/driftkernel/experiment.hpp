#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftkernel/geometry.hpp"
#include "driftkernel/report.hpp"
#include "driftkernel/types.hpp"

namespace dk {

// Experiment orchestration: one JSON config describes a (domain, drift,
// grid, MC) setup plus a list of check groups; run_experiment executes the
// pipeline (tabulate base -> sum series -> simulate paths -> checks) and
// writes a manifest and detail CSVs whose names embed the config hash.
//
// Determinism contract: the canonical config echo fixes every effective
// setting (defaults filled in), all randomness flows from the config seed,
// and both the series and the path histograms are worker-count invariant,
// so one config file always produces one manifest hash.

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DriftSpec {
  std::string kind = "zero";  // zero | constant | bump | singular
  Vec value{0.0, 0.0};        // constant: the vector; bump: amplitude
  Vec center{0.0, 0.0};       // bump center / singular pole
  double radius = 1.0;        // bump support radius
  double power = 0.0;         // singular: |b| ~ kappa r^{-power}
  double kappa = 0.0;
};

struct ExperimentConfig {
  StableParams params{2, 1.5};
  double theta = 1.0;  // boundary smoothness exponent of the domain catalog
  Domain domain = Domain::whole_plane();
  std::string domain_kind = "whole_plane";
  DriftSpec drift;

  // grid (alpha-dependent defaults when the config omits them)
  Vec box_lo{0.0, 0.0}, box_hi{0.0, 0.0};
  double h = 0.0;
  double T = 0.5;
  int n_t = 8;
  int s_panels = 6;
  double t_span = 64.0;

  // series
  int k_max = 8;
  double series_tol = 1e-6;

  // Monte Carlo (absent block: series-only run)
  bool has_mc = false;
  long n_paths = 200000;
  double mc_dt = 2e-3;
  uint64_t seed = 1;

  Vec target{0.0, 0.0};  // series target y
  Vec x0{0.0, 0.0};      // MC start
  std::vector<std::string> checks;  // expanded group list, fixed order
  std::vector<std::pair<std::string, double>> tolerances;  // id -> override
  std::string out_dir = "runs";

  // Canonical JSON echo of the effective settings: fixed key order, shortest
  // round-trip numbers. fnv1a64 of this string is the config hash.
  std::string canonical_json(int indent = -1) const;
  std::string hash_prefix() const;

  // Tolerance for a check id: the override if present, else fallback.
  double tol(const std::string& id, double fallback) const;
};

// Check groups a config may request ("checks": ["free_kernel", ...] or
// "default"). "default" expands to every group applicable to the configured
// (domain, drift, mc) combination. Requesting a group the combination cannot
// support is a ConfigError naming the group.
const std::vector<std::string>& known_check_groups();

// Parse + validate. Unknown keys, malformed values, and unsupported
// combinations throw ConfigError with the offending field in the message.
ExperimentConfig parse_config(const std::string& json_text);

struct RunResult {
  RunManifest manifest;
  std::string out_dir;
  std::vector<std::string> files;  // paths written, manifest first
  bool required_pass = false;      // every non-surrogate check passed
};

// Execute the configured pipeline and write artifacts. workers <= 0 picks
// hardware concurrency. out_dir_override replaces config.out_dir (the one
// permitted out-of-band setting); it does not enter the config echo.
RunResult run_experiment(const ExperimentConfig& cfg, int workers = 0,
                         const std::string& out_dir_override = "");

// Render the summary table for a run directory (one row per check:
// id | provenance | constant | tolerance | pass). Byte-identical for the
// same directory contents. required_pass (optional out) mirrors RunResult.
// Throws std::runtime_error when no manifest is found or it fails to parse.
std::string render_report(const std::string& run_dir,
                          bool* required_pass = nullptr);

}  // namespace dk
