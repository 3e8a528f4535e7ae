#include "driftkernel/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "json.hpp"

namespace dk {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

uint64_t fnv1a64(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex12(uint64_t h) {
  static const char* hex = "0123456789abcdef";
  std::string s(12, '0');
  for (int i = 0; i < 12; ++i) s[size_t(i)] = hex[(h >> (60 - 4 * i)) & 0xf];
  return s;
}

nlohmann::ordered_json report_json(const CheckReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["pass"] = r.pass;
  j["lhs"] = format_double(r.lhs);
  j["rhs"] = format_double(r.rhs);
  j["ratio"] = format_double(r.ratio);
  j["constant"] = format_double(r.constant);
  j["provenance"] = r.provenance;
  j["notes"] = r.notes;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.metrics) m[k] = format_double(v);
  j["metrics"] = m;
  return j;
}

}  // namespace

std::string to_json(const CheckReport& r, int indent) {
  return report_json(r).dump(indent);
}

std::string RunManifest::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["tool_version"] = tool_version;
  j["config_hash"] = hex12(fnv1a64(config_json));
  j["config"] = nlohmann::ordered_json::parse(
      config_json.empty() ? "{}" : config_json);
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  j["reports"] = arr;
  j["all_pass"] = all_pass();
  return j.dump(indent);
}

uint64_t RunManifest::hash() const { return fnv1a64(to_json(-1)); }

std::string RunManifest::hash_prefix() const { return hex12(hash()); }

std::string RunManifest::render_text() const {
  std::ostringstream os;
  for (const auto& r : reports) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.notes.empty()) os << ": " << r.notes;
    os << " (lhs=" << format_double(r.lhs) << " rhs=" << format_double(r.rhs)
       << " ratio=" << format_double(r.ratio) << ")";
    os << "\n";
  }
  os << (all_pass() ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED") << "\n";
  return os.str();
}

bool RunManifest::all_pass() const {
  for (const auto& r : reports)
    if (!r.pass) return false;
  return true;
}

}  // namespace dk
