#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace dk {

// One verifier outcome. lhs/rhs/ratio carry the primary comparison; the
// metrics list holds any extra named numbers in a fixed (insertion) order so
// serialization is reproducible.
struct CheckReport {
  std::string name;
  bool pass = false;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double constant = 0.0;   // fitted constant / tolerance the check ran under
  std::string provenance;  // "closed-form", "quadrature", "series", "montecarlo", "surrogate"
  std::string notes;
  std::vector<std::pair<std::string, double>> metrics;

  void metric(const std::string& k, double v) { metrics.emplace_back(k, v); }
  double metric(const std::string& k) const {
    for (const auto& [key, v] : metrics)
      if (key == k) return v;
    return std::numeric_limits<double>::quiet_NaN();
  }
};

// Canonical JSON text for a report / a run manifest. Keys are emitted in a
// fixed order and doubles use shortest round-trip formatting, so equal inputs
// produce byte-equal text (the manifest hash relies on this).
std::string to_json(const CheckReport& r, int indent = -1);

struct RunManifest {
  std::string tool_version;
  std::string config_json;  // canonical config echo
  std::vector<CheckReport> reports;

  // FNV-1a 64 over the canonical serialization (no timestamps anywhere).
  uint64_t hash() const;
  std::string hash_prefix() const;  // first 12 hex digits
  std::string to_json(int indent = -1) const;
  // one "[PASS]/[FAIL] name: detail" line per report
  std::string render_text() const;
  bool all_pass() const;
};

uint64_t fnv1a64(const std::string& bytes);
std::string format_double(double v);  // shortest round-trip decimal

}  // namespace dk
