#include "driftkernel/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "driftkernel/duhamel.hpp"
#include "driftkernel/envelope.hpp"
#include "driftkernel/kato.hpp"
#include "driftkernel/montecarlo.hpp"
#include "driftkernel/quadrature.hpp"
#include "driftkernel/stable.hpp"
#include "driftkernel/verify.hpp"
#include "json.hpp"

namespace dk {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kToolVersion = "driftkernel 0.1.0";

[[noreturn]] void fail(const std::string& m) { throw ConfigError("config: " + m); }

std::string hex12(uint64_t h) {
  static const char* hex = "0123456789abcdef";
  std::string s(12, '0');
  for (int i = 0; i < 12; ++i) s[size_t(i)] = hex[(h >> (60 - 4 * i)) & 0xf];
  return s;
}

// ---- parsing helpers --------------------------------------------------------

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (item.key() == a) ok = true;
    if (!ok) fail(ctx.empty() ? "unknown key '" + item.key() + "'"
                              : ctx + ": unknown key '" + item.key() + "'");
  }
}

double num_field(const json& obj, const std::string& ctx, const char* key,
                 double def, bool required = false) {
  if (!obj.contains(key)) {
    if (required) fail(ctx + key + " is required");
    return def;
  }
  const json& v = obj.at(key);
  if (!v.is_number()) fail(ctx + key + " must be a number");
  return v.get<double>();
}

long int_field(const json& obj, const std::string& ctx, const char* key,
               long def) {
  if (!obj.contains(key)) return def;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(ctx + key + " must be an integer");
  return v.get<long>();
}

Vec vec_field(const json& obj, const std::string& ctx, const char* key,
              const Vec& def, bool required = false) {
  if (!obj.contains(key)) {
    if (required) fail(ctx + key + " is required");
    return def;
  }
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    fail(ctx + key + " must be an array of two numbers");
  return Vec{v[0].get<double>(), v[1].get<double>()};
}

ordered_json array2(const Vec& v) {
  return ordered_json::array({v[0], v[1]});
}

// ---- check groups -----------------------------------------------------------

const std::vector<std::string> kGroups = {
    "free_kernel", "envelope", "kato",      "contraction", "translation",
    "two_sided",   "gradient", "ck",        "generator",   "mass",
    "continuity",  "harnack",  "mc_density"};

const std::vector<std::string> kTheoremGroups = {
    "two_sided", "gradient", "ck", "generator", "mass", "continuity"};

const std::vector<std::string> kCheckIds = {
    "free.normalization",      "free.scaling",
    "free.cauchy",             "free.gradient_fd",
    "free.ck",                 "envelope.spread",
    "envelope.gam",            "envelope.3p",
    "envelope.integral_26",    "kato.modulus",
    "kato.covanishing",        "contraction.horizon",
    "oracle.translation",      "oracle.translation_gradient",
    "main.i.two_sided_series", "main.i.two_sided_mc",
    "main.ii.gradient_fit",    "main.ii.gradient_stability",
    "main.ii.dual_duhamel",    "main.iii.ck_series",
    "main.iii.ck_mc",          "main.iv.generator_identity",
    "main.v.mass_whole_space", "main.v.mass_relative",
    "main.v.mass_dirichlet",   "main.vi.strong_continuity",
    "harnack.ball",            "harnack.stability",
    "mc.density_vs_table"};

bool drift_is_smooth_constant(const ExperimentConfig& c) {
  return c.drift.kind == "zero" || c.drift.kind == "constant";
}

// Empty string: applicable. Otherwise the reason it is not.
std::string group_blocker(const ExperimentConfig& c, const std::string& g) {
  bool whole = c.domain_kind == "whole_plane";
  if (g == "translation") {
    if (!whole || !drift_is_smooth_constant(c))
      return "the translation oracle needs the whole plane and a constant "
             "(or zero) drift";
  } else if (g == "harnack") {
    if (c.domain_kind != "disk") return "harnack needs a disk domain";
    if (!c.has_mc) return "harnack needs an mc block";
  } else if (g == "mc_density") {
    if (!whole || !drift_is_smooth_constant(c))
      return "mc_density needs the whole plane and a constant (or zero) drift";
    if (!c.has_mc) return "mc_density needs an mc block";
  }
  return "";
}

}  // namespace

const std::vector<std::string>& known_check_groups() { return kGroups; }

double ExperimentConfig::tol(const std::string& id, double fallback) const {
  for (const auto& [k, v] : tolerances)
    if (k == id) return v;
  return fallback;
}

std::string ExperimentConfig::canonical_json(int indent) const {
  ordered_json j;
  j["alpha"] = params.alpha;
  j["d"] = params.d;
  j["theta"] = theta;
  ordered_json dj;
  dj["kind"] = domain_kind;
  if (domain_kind == "disk") {
    dj["center"] = array2(domain.center());
    dj["radius"] = domain.radius();
  } else if (domain_kind == "half_plane") {
    dj["normal"] = array2(domain.center());
    dj["offset"] = domain.radius();
  }
  j["domain"] = dj;
  ordered_json bj;
  bj["kind"] = drift.kind;
  if (drift.kind == "constant") {
    bj["value"] = array2(drift.value);
  } else if (drift.kind == "bump") {
    bj["center"] = array2(drift.center);
    bj["radius"] = drift.radius;
    bj["amplitude"] = array2(drift.value);
  } else if (drift.kind == "singular") {
    bj["point"] = array2(drift.center);
    bj["power"] = drift.power;
    bj["kappa"] = drift.kappa;
  }
  j["drift"] = bj;
  j["grid"] = {{"box_lo", array2(box_lo)}, {"box_hi", array2(box_hi)},
               {"h", h},                   {"T", T},
               {"n_t", n_t},               {"s_panels", s_panels},
               {"t_span", t_span}};
  j["series"] = {{"k_max", k_max}, {"tol", series_tol}};
  if (has_mc)
    j["mc"] = {{"n_paths", n_paths}, {"dt", mc_dt}, {"seed", seed}};
  else
    j["mc"] = nullptr;
  j["target"] = array2(target);
  j["x0"] = array2(x0);
  j["checks"] = checks;
  ordered_json tj = ordered_json::object();
  for (const auto& [k, v] : tolerances) tj[k] = v;
  j["tolerances"] = tj;
  j["out_dir"] = out_dir;
  return j.dump(indent);
}

std::string ExperimentConfig::hash_prefix() const {
  return hex12(fnv1a64(canonical_json(-1)));
}

ExperimentConfig parse_config(const std::string& json_text) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) fail("not valid JSON");
  if (!root.is_object()) fail("top level must be a JSON object");
  check_keys(root, "", {"alpha", "d", "theta", "domain", "drift", "grid",
                        "series", "mc", "checks", "tolerances", "target", "x0",
                        "out_dir"});

  ExperimentConfig c;
  double alpha = num_field(root, "", "alpha", 0.0, true);
  long d = int_field(root, "", "d", 2);
  if (d != 2) fail("d: only d = 2 is supported");
  if (!(alpha > 1.0 && alpha < 2.0))
    fail("alpha must lie in (1,2): the gradient perturbation needs alpha > 1");
  c.params = StableParams(2, alpha);
  c.theta = num_field(root, "", "theta", 1.0);
  if (!(c.theta > 0.0 && c.theta <= 1.0)) fail("theta must lie in (0,1]");
  if (!(c.theta > alpha / 2.0))
    fail("theta must exceed alpha/2 (boundary smoothness pairing); got theta=" +
         format_double(c.theta) + ", alpha/2=" + format_double(alpha / 2.0));

  // domain
  if (root.contains("domain")) {
    const json& dj = root.at("domain");
    if (!dj.is_object() || !dj.contains("kind") || !dj.at("kind").is_string())
      fail("domain must be an object with a string 'kind'");
    c.domain_kind = dj.at("kind").get<std::string>();
    if (c.domain_kind == "whole_plane") {
      check_keys(dj, "domain", {"kind"});
      c.domain = Domain::whole_plane();
    } else if (c.domain_kind == "disk") {
      check_keys(dj, "domain", {"kind", "center", "radius"});
      Vec ctr = vec_field(dj, "domain.", "center", Vec{0.0, 0.0});
      double rad = num_field(dj, "domain.", "radius", 1.0);
      if (!(rad > 0.0)) fail("domain.radius must be > 0");
      c.domain = Domain::disk(ctr, rad);
    } else if (c.domain_kind == "half_plane") {
      check_keys(dj, "domain", {"kind", "normal", "offset"});
      Vec n = vec_field(dj, "domain.", "normal", Vec{0.0, 1.0});
      if (!(n.norm() > 0.0)) fail("domain.normal must be nonzero");
      double off = num_field(dj, "domain.", "offset", 0.0);
      c.domain = Domain::half_plane(n, off);
    } else {
      fail("domain.kind must be one of whole_plane | disk | half_plane");
    }
  }

  // drift
  if (root.contains("drift")) {
    const json& bj = root.at("drift");
    if (!bj.is_object() || !bj.contains("kind") || !bj.at("kind").is_string())
      fail("drift must be an object with a string 'kind'");
    c.drift.kind = bj.at("kind").get<std::string>();
    if (c.drift.kind == "zero") {
      check_keys(bj, "drift", {"kind"});
    } else if (c.drift.kind == "constant") {
      check_keys(bj, "drift", {"kind", "value"});
      c.drift.value = vec_field(bj, "drift.", "value", Vec{0.0, 0.0}, true);
    } else if (c.drift.kind == "bump") {
      check_keys(bj, "drift", {"kind", "center", "radius", "amplitude"});
      c.drift.center = vec_field(bj, "drift.", "center", Vec{0.0, 0.0});
      c.drift.radius = num_field(bj, "drift.", "radius", 1.0);
      if (!(c.drift.radius > 0.0)) fail("drift.radius must be > 0");
      c.drift.value = vec_field(bj, "drift.", "amplitude", Vec{0.0, 0.0}, true);
    } else if (c.drift.kind == "singular") {
      check_keys(bj, "drift", {"kind", "point", "power", "kappa"});
      c.drift.center = vec_field(bj, "drift.", "point", Vec{0.0, 0.0});
      c.drift.power = num_field(bj, "drift.", "power", 0.0, true);
      c.drift.kappa = num_field(bj, "drift.", "kappa", 1.0);
      if (!(c.drift.kappa >= 0.0)) fail("drift.kappa must be >= 0");
      if (!(c.drift.power >= 0.0 && c.drift.power < alpha - 1.0))
        fail("drift.power must lie in [0, alpha-1) so the drift stays in the "
             "contraction class; got power=" + format_double(c.drift.power) +
             ", alpha-1=" + format_double(alpha - 1.0));
    } else {
      fail("drift.kind must be one of zero | constant | bump | singular");
    }
  }

  // grid defaults, then overrides
  double h_def = alpha >= 1.4 ? 0.25 : 0.125;
  double half = alpha >= 1.4 ? 6.0 : 4.5;
  if (c.domain_kind == "disk") {
    double pad = c.domain.radius() + 2.0 * h_def;
    c.box_lo = c.domain.center() - Vec{pad, pad};
    c.box_hi = c.domain.center() + Vec{pad, pad};
  } else {
    c.box_lo = Vec{-half, -half};
    c.box_hi = Vec{half, half};
  }
  c.h = h_def;
  if (root.contains("grid")) {
    const json& gj = root.at("grid");
    if (!gj.is_object()) fail("grid must be an object");
    check_keys(gj, "grid",
               {"box_lo", "box_hi", "h", "T", "n_t", "s_panels", "t_span"});
    c.box_lo = vec_field(gj, "grid.", "box_lo", c.box_lo);
    c.box_hi = vec_field(gj, "grid.", "box_hi", c.box_hi);
    c.h = num_field(gj, "grid.", "h", c.h);
    c.T = num_field(gj, "grid.", "T", c.T);
    c.n_t = int(int_field(gj, "grid.", "n_t", c.n_t));
    c.s_panels = int(int_field(gj, "grid.", "s_panels", c.s_panels));
    c.t_span = num_field(gj, "grid.", "t_span", c.t_span);
  }
  if (!(c.h > 0.0)) fail("grid.h must be > 0");
  if (!(c.box_hi[0] > c.box_lo[0] && c.box_hi[1] > c.box_lo[1]))
    fail("grid.box_hi must exceed grid.box_lo componentwise");
  double wx = (c.box_hi[0] - c.box_lo[0]) / c.h;
  double wy = (c.box_hi[1] - c.box_lo[1]) / c.h;
  if (wx < 4.0 || wy < 4.0) fail("grid: box must span at least 4 cells of h");
  if (wx * wy > 20000.0)
    fail("grid: more than 20000 cells; raise h or shrink the box");
  if (!(c.T > 0.0)) fail("grid.T must be > 0");
  if (c.n_t < 2 || c.n_t > 64) fail("grid.n_t must lie in [2, 64]");
  if (c.s_panels < 2 || c.s_panels > 32)
    fail("grid.s_panels must lie in [2, 32]");
  if (!(c.t_span > 1.0)) fail("grid.t_span must be > 1");

  // series
  if (root.contains("series")) {
    const json& sj = root.at("series");
    if (!sj.is_object()) fail("series must be an object");
    check_keys(sj, "series", {"k_max", "tol"});
    c.k_max = int(int_field(sj, "series.", "k_max", c.k_max));
    c.series_tol = num_field(sj, "series.", "tol", c.series_tol);
  }
  if (c.k_max < 1 || c.k_max > 32) fail("series.k_max must lie in [1, 32]");
  if (!(c.series_tol > 0.0)) fail("series.tol must be > 0");

  // mc
  if (root.contains("mc") && !root.at("mc").is_null()) {
    const json& mj = root.at("mc");
    if (!mj.is_object()) fail("mc must be an object");
    check_keys(mj, "mc", {"n_paths", "dt", "seed"});
    c.has_mc = true;
    c.n_paths = int_field(mj, "mc.", "n_paths", c.n_paths);
    c.mc_dt = num_field(mj, "mc.", "dt", c.mc_dt);
    long s = int_field(mj, "mc.", "seed", 1);
    if (s < 0) fail("mc.seed must be >= 0");
    c.seed = uint64_t(s);
    if (c.n_paths < 100) fail("mc.n_paths must be >= 100");
    if (!(c.mc_dt > 0.0 && c.mc_dt <= c.T)) fail("mc.dt must lie in (0, T]");
  }

  // target / x0
  Vec target_def{0.0, 0.0};
  if (c.domain_kind == "disk") {
    target_def = c.domain.center();
  } else if (c.domain_kind == "half_plane") {
    target_def = c.domain.center() * c.domain.radius() + c.domain.center() * 1.0;
  }
  c.target = vec_field(root, "", "target", target_def);
  if (!c.domain.contains(c.target)) fail("target must lie inside the domain");
  c.x0 = vec_field(root, "", "x0", c.target);
  if (!c.domain.contains(c.x0)) fail("x0 must lie inside the domain");

  // checks
  std::vector<std::string> requested;
  bool use_default = true;
  if (root.contains("checks")) {
    const json& cj = root.at("checks");
    if (cj.is_string()) {
      if (cj.get<std::string>() != "default")
        fail("checks: the only string form is \"default\"");
    } else if (cj.is_array()) {
      use_default = false;
      for (const auto& e : cj) {
        if (!e.is_string()) fail("checks entries must be strings");
        requested.push_back(e.get<std::string>());
      }
    } else {
      fail("checks must be \"default\" or an array of group names");
    }
  }
  if (use_default) {
    for (const auto& g : kGroups) {
      if (!group_blocker(c, g).empty()) continue;
      if (g == "translation" && c.drift.value.norm() == 0.0) continue;
      requested.push_back(g);
    }
  } else {
    for (const auto& g : requested) {
      if (std::find(kGroups.begin(), kGroups.end(), g) == kGroups.end())
        fail("checks: unknown group '" + g + "'");
      std::string why = group_blocker(c, g);
      if (!why.empty()) fail("checks: '" + g + "' does not apply here: " + why);
    }
  }
  // catalog order, deduplicated
  for (const auto& g : kGroups)
    if (std::find(requested.begin(), requested.end(), g) != requested.end())
      c.checks.push_back(g);
  bool any_theorem = false, all_theorem = true;
  for (const auto& g : kTheoremGroups) {
    bool in = std::find(c.checks.begin(), c.checks.end(), g) != c.checks.end();
    any_theorem = any_theorem || in;
    all_theorem = all_theorem && in;
  }
  if (any_theorem && !all_theorem) {
    std::string missing;
    for (const auto& g : kTheoremGroups)
      if (std::find(c.checks.begin(), c.checks.end(), g) == c.checks.end())
        missing += missing.empty() ? g : ", " + g;
    fail("checks: the six main-theorem groups stand together; missing: " +
         missing);
  }
  if (c.checks.empty()) fail("checks: nothing to run");

  // tolerances
  if (root.contains("tolerances")) {
    const json& tj = root.at("tolerances");
    if (!tj.is_object()) fail("tolerances must be an object");
    for (const auto& item : tj.items()) {
      if (std::find(kCheckIds.begin(), kCheckIds.end(), item.key()) ==
          kCheckIds.end())
        fail("tolerances: unknown check id '" + item.key() + "'");
      if (!item.value().is_number() || !(item.value().get<double>() > 0.0))
        fail("tolerances." + item.key() + " must be a positive number");
      c.tolerances.emplace_back(item.key(), item.value().get<double>());
    }
    std::sort(c.tolerances.begin(), c.tolerances.end());
  }

  if (root.contains("out_dir")) {
    if (!root.at("out_dir").is_string() ||
        root.at("out_dir").get<std::string>().empty())
      fail("out_dir must be a nonempty string");
    c.out_dir = root.at("out_dir").get<std::string>();
  }
  return c;
}

// ---- run orchestration ------------------------------------------------------

namespace {

struct Ctx {
  const ExperimentConfig& cfg;
  int workers = 1;
  bool whole = true;
  DriftField b = drift_zero();
  Vec bv{0.0, 0.0};  // constant part (zero unless drift.kind == "constant")
  std::shared_ptr<const RadialKernelTable> table{};

  std::shared_ptr<const GridSpec> grid{};
  std::unique_ptr<KernelField> base{}, series{};
  SeriesDiagnostics diag{};
  bool series_tried = false, series_ok = false;
  std::string series_err{};

  std::unique_ptr<DensityEstimate> est_T{};

  bool want(const std::string& g) const {
    return std::find(cfg.checks.begin(), cfg.checks.end(), g) !=
           cfg.checks.end();
  }

  void ensure_grid() {
    if (grid) return;
    grid = make_grid(cfg.params, cfg.domain, cfg.box_lo, cfg.box_hi, cfg.h,
                     cfg.T, cfg.n_t, cfg.s_panels, cfg.t_span);
  }

  void ensure_series() {
    if (series_tried) return;
    series_tried = true;
    ensure_grid();
    base = std::make_unique<KernelField>(tabulate_base_kernel(
        grid, cfg.target,
        whole ? SourceKind::free_kernel : SourceKind::envelope));
    try {
      auto [f, d] = sum_series(*base, b, cfg.k_max, cfg.series_tol, workers);
      series = std::make_unique<KernelField>(std::move(f));
      diag = d;
      series_ok = true;
    } catch (const ContractionError& e) {
      diag.c_emp = e.c_emp;
      series_err = e.what();
    }
  }

  PathConfig path_config(const DriftField& drift_field) const {
    PathConfig pc;
    pc.params = cfg.params;
    pc.dt = cfg.mc_dt;
    pc.horizon = cfg.T;
    pc.n_paths = cfg.n_paths;
    pc.seed = cfg.seed;
    if (!whole) pc.domain = cfg.domain;
    pc.drift = drift_field;
    return pc;
  }

  void ensure_mc() {
    if (est_T || !cfg.has_mc) return;
    ensure_grid();
    est_T = std::make_unique<DensityEstimate>(
        estimate_density(path_config(b), cfg.x0, cfg.T, grid->space, workers));
  }
};

DriftField build_drift(const ExperimentConfig& c) {
  if (c.drift.kind == "constant")
    return drift_constant(c.drift.value, c.domain);
  if (c.drift.kind == "bump")
    return drift_bump(c.drift.center, c.drift.radius, c.drift.value, c.domain);
  if (c.drift.kind == "singular")
    return drift_singular(c.drift.center, c.drift.power, c.drift.kappa,
                          c.domain);
  return drift_zero();
}

// Dirichlet runs build the series on the envelope base, which is a stand-in
// for the killed kernel, not the kernel itself; reports driven by it are
// downgraded so they never gate the exit status.
void mark_surrogate(CheckReport& r, const std::string& why) {
  r.provenance = "surrogate";
  r.notes = r.notes.empty() ? why : r.notes + "; " + why;
}

void push_tol(std::vector<CheckReport>& out, CheckReport r, double tol) {
  r.metric("tolerance", tol);
  out.push_back(std::move(r));
}

template <typename F>
void guarded(std::vector<CheckReport>& out, const std::string& id, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    CheckReport r;
    r.name = id;
    r.pass = false;
    r.provenance = "error";
    r.notes = e.what();
    out.push_back(std::move(r));
  }
}

CheckReport skipped(const std::string& id, const std::string& why) {
  CheckReport r;
  r.name = id;
  r.pass = false;
  r.provenance = "error";
  r.notes = "skipped: " + why;
  return r;
}

// ---- free-kernel checks -----------------------------------------------------

void run_free_checks(Ctx& c, std::vector<CheckReport>& out) {
  const StableParams& p = c.cfg.params;
  const RadialKernelTable& tb = *c.table;

  guarded(out, "free.normalization", [&] {
    double tol = c.cfg.tol("free.normalization", 1e-3);
    double inner =
        integrate([&](double u) { return u * tb.profile(u); }, 0.0, 5.0,
                  QuadSpec{1e-10, 1e-300, 15});
    double mass = 2.0 * kPi * inner + tb.tail_mass(1.0, 5.0);
    CheckReport r;
    r.name = "free.normalization";
    r.provenance = "quadrature";
    r.lhs = std::abs(mass - 1.0);
    r.rhs = tol;
    r.ratio = r.lhs / tol;
    r.constant = mass;
    r.pass = r.lhs <= tol;
    r.notes = "unit-time profile mass against 1";
    r.metric("mass", mass);
    push_tol(out, std::move(r), tol);
  });

  guarded(out, "free.scaling", [&] {
    double tol = c.cfg.tol("free.scaling", 1e-8);
    QuadSpec q{1e-11, 1e-300, 15};
    double dev = 0.0;
    double inv = 1.0 / p.alpha;
    for (double t : {0.3, 1.0, 2.5}) {
      for (Vec x : {Vec{0.4, 0.2}, Vec{1.5, -1.0}}) {
        double a = eval_free_kernel(p, t, x, q);
        double b = std::pow(t, -p.d * inv) *
                   eval_free_kernel(p, 1.0, x * std::pow(t, -inv), q);
        dev = std::max(dev, std::abs(a - b) / a);
      }
    }
    CheckReport r;
    r.name = "free.scaling";
    r.provenance = "quadrature";
    r.lhs = dev;
    r.rhs = tol;
    r.ratio = dev / tol;
    r.constant = dev;
    r.pass = dev <= tol;
    r.notes = "self-similarity of the kernel under the time scaling";
    push_tol(out, std::move(r), tol);
  });

  guarded(out, "free.cauchy", [&] {
    double tol = c.cfg.tol("free.cauchy", 1e-6);
    StableParams cauchy(2, 1.0);
    QuadSpec q{1e-10, 1e-300, 15};
    double dev = 0.0;
    for (auto [t, x] : std::vector<std::pair<double, Vec>>{
             {0.5, Vec{0.3, 0.2}}, {1.0, Vec{1.0, 0.0}}, {2.0, Vec{0.5, -1.5}}}) {
      double closed =
          t / (2.0 * kPi * std::pow(t * t + x.norm2(), 1.5));
      double got = eval_free_kernel(cauchy, t, x, q);
      dev = std::max(dev, std::abs(got - closed) / closed);
    }
    CheckReport r;
    r.name = "free.cauchy";
    r.provenance = "closed-form";
    r.lhs = dev;
    r.rhs = tol;
    r.ratio = dev / tol;
    r.constant = dev;
    r.pass = dev <= tol;
    r.notes = "alpha = 1 kernel against its elementary closed form";
    push_tol(out, std::move(r), tol);
  });

  guarded(out, "free.gradient_fd", [&] {
    double tol = c.cfg.tol("free.gradient_fd", 1e-4);
    QuadSpec q{1e-11, 1e-300, 15};
    double eps = 1e-4, dev = 0.0;
    for (Vec x : {Vec{0.6, 0.3}, Vec{1.8, -0.9}}) {
      Vec g = eval_free_kernel_gradient(p, 1.0, x, q);
      for (int k = 0; k < 2; ++k) {
        Vec xp = x, xm = x;
        xp[k] += eps;
        xm[k] -= eps;
        double fd = (eval_free_kernel(p, 1.0, xp, q) -
                     eval_free_kernel(p, 1.0, xm, q)) /
                    (2.0 * eps);
        dev = std::max(dev, std::abs(g[k] - fd) / g.norm());
      }
    }
    CheckReport r;
    r.name = "free.gradient_fd";
    r.provenance = "quadrature";
    r.lhs = dev;
    r.rhs = tol;
    r.ratio = dev / tol;
    r.constant = dev;
    r.pass = dev <= tol;
    r.notes = "analytic gradient against central differences";
    push_tol(out, std::move(r), tol);
  });

  guarded(out, "free.ck", [&] {
    double tol = c.cfg.tol("free.ck", 1e-3);
    double t1 = 0.6, t2 = 0.4;
    Vec x{0.8, 0.3};
    double R = x.norm() + 30.0 * std::pow(t1 + t2, 1.0 / p.alpha);
    int n_theta = 96;
    auto ring = [&](double r) {
      double acc = 0.0;
      for (int k = 0; k < n_theta; ++k) {
        double th = 2.0 * kPi * (k + 0.5) / n_theta;
        Vec z{r * std::cos(th), r * std::sin(th)};
        acc += tb.value(t1, (x - z).norm());
      }
      return (acc / n_theta) * tb.value(t2, r) * r * 2.0 * kPi;
    };
    double comp = integrate(ring, 0.0, R, QuadSpec{1e-9, 1e-300, 15});
    double direct = tb.value(t1 + t2, x.norm());
    double allowance =
        tb.value(t1, std::max(R - x.norm(), 1.0)) * tb.tail_mass(t2, R);
    CheckReport r;
    r.name = "free.ck";
    r.provenance = "quadrature";
    r.lhs = std::abs(comp - direct);
    r.rhs = tol * direct + allowance;
    r.ratio = r.lhs / r.rhs;
    r.constant = comp / direct;
    r.pass = r.lhs <= r.rhs;
    r.notes = "semigroup composition of the free kernel by radial-angular "
              "quadrature";
    r.metric("composition", comp);
    r.metric("direct", direct);
    r.metric("tail_allowance", allowance);
    push_tol(out, std::move(r), tol);
  });
}

// ---- envelope checks --------------------------------------------------------

void run_envelope_checks(Ctx& c, std::vector<CheckReport>& out) {
  const StableParams& p = c.cfg.params;
  EnvelopeParams env(p, c.cfg.domain, c.cfg.T);
  const RadialKernelTable& tb = *c.table;

  guarded(out, "envelope.spread", [&] {
    double tol = c.cfg.tol("envelope.spread", 100.0);
    std::vector<double> num, den;
    for (int i = 0; i < 8; ++i) {
      double t = c.cfg.T * std::pow(64.0, -(7.0 - i) / 7.0);
      double sc = std::pow(t, 1.0 / p.alpha);
      for (int k = 0; k < 25; ++k) {
        double u = sc * std::pow(10.0, -2.0 + 4.0 * k / 24.0);
        num.push_back(tb.value(t, u));
        den.push_back(rho_gamma(p, 1.0, t, Vec{u, 0.0}));
      }
    }
    push_tol(out,
             check_ratio_spread("envelope.spread", "quadrature", num, den, tol),
             tol);
  });

  auto sweep_check = [&](const std::string& id, const RatioSweep& s) {
    double tol = c.cfg.tol(id, 1.5);
    CheckReport r = check_stability(id, "quadrature", s.max_first_half,
                                    s.max_ratio, tol);
    r.constant = s.max_ratio;
    r.notes = "fitted constant of the randomized ratio sweep; stability of "
              "the fit under doubled sampling";
    r.metric("n", double(s.n));
    r.metric("median_ratio", s.median_ratio);
    push_tol(out, std::move(r), tol);
  };

  guarded(out, "envelope.gam",
          [&] { sweep_check("envelope.gam", sweep_gam(env, 10000, c.cfg.seed ^ 0x67616dull)); });
  if (!c.whole) {
    guarded(out, "envelope.3p",
            [&] { sweep_check("envelope.3p", sweep_3p(env, 10000, c.cfg.seed ^ 0x337000ull)); });
    guarded(out, "envelope.integral_26", [&] {
      sweep_check("envelope.integral_26",
                  sweep_integral_26(env, 10000, c.cfg.seed ^ 0x260000ull));
    });
  }
}

// ---- kato checks ------------------------------------------------------------

void run_kato_checks(Ctx& c, std::vector<CheckReport>& out) {
  const StableParams& p = c.cfg.params;
  const Domain& dom = c.cfg.domain;
  double alpha = p.alpha;

  std::vector<Vec> probes = {c.cfg.target, c.cfg.x0};
  for (const Vec& s :
       sample_interior(dom, c.cfg.box_lo, c.cfg.box_hi, 3, 17))
    probes.push_back(s);
  if (c.cfg.drift.kind == "singular" && dom.contains(c.cfg.drift.center))
    probes.push_back(c.cfg.drift.center);

  guarded(out, "kato.modulus", [&] {
    CheckReport r;
    r.name = "kato.modulus";
    if (c.cfg.drift.kind == "zero") {
      double k = kato_modulus(c.b, dom, p, 0.5, probes);
      r.provenance = "closed-form";
      r.lhs = k;
      r.rhs = 0.0;
      r.constant = k;
      r.pass = k == 0.0;
      r.notes = "drift vanishes identically, so does its modulus";
      push_tol(out, std::move(r), 0.0);
      return;
    }
    if (c.cfg.drift.kind == "constant") {
      double tol = c.cfg.tol("kato.modulus", 1e-6);
      // one probe deep enough that the ball stays inside the domain
      Vec deep = c.cfg.target;
      double dist = dom.signed_distance(deep);
      double speed = c.cfg.drift.value.norm();
      std::vector<double> radii;
      for (double rr : {0.25, 0.5, 1.0})
        if (!std::isfinite(dist) || rr <= 0.8 * dist) radii.push_back(rr);
      if (radii.empty()) radii.push_back(0.5 * dist);
      double dev = 0.0;
      for (double rr : radii) {
        double closed =
            2.0 * kPi * std::pow(rr, alpha - 1.0) / (alpha - 1.0) * speed;
        double got = kato_modulus(c.b, dom, p, rr, {deep});
        dev = std::max(dev, std::abs(got - closed) / closed);
      }
      r.provenance = "closed-form";
      r.lhs = dev;
      r.rhs = tol;
      r.ratio = dev / tol;
      r.constant = dev;
      r.pass = dev <= tol;
      r.notes = "constant-drift modulus against its closed form";
      push_tol(out, std::move(r), tol);
      return;
    }
    // bump / singular: finite and nondecreasing in the radius
    double k25 = kato_modulus(c.b, dom, p, 0.25, probes);
    double k50 = kato_modulus(c.b, dom, p, 0.5, probes);
    double k1 = kato_modulus(c.b, dom, p, 1.0, probes);
    r.provenance = "quadrature";
    r.lhs = k1;
    r.rhs = k1;
    r.constant = k1;
    r.pass = std::isfinite(k1) && k25 <= k50 * (1.0 + 1e-12) &&
             k50 <= k1 * (1.0 + 1e-12);
    r.notes = "modulus finite and nondecreasing in the ball radius";
    r.metric("K(0.25)", k25);
    r.metric("K(0.5)", k50);
    r.metric("K(1)", k1);
    out.push_back(std::move(r));
  });

  guarded(out, "kato.covanishing", [&] {
    double shrink = c.cfg.tol("kato.covanishing", 0.75);
    double beta0 = (alpha - 1.0) / alpha;
    double beta = std::min(1.0, beta0 + 0.3);
    std::vector<double> K, B;
    for (int j = 0; j <= 6; ++j) {
      double r = std::pow(2.0, -j);
      K.push_back(kato_modulus(c.b, dom, p, r, probes));
      B.push_back(beta_criterion(c.b, dom, p, beta, r, probes));
    }
    CheckReport r;
    r.name = "kato.covanishing";
    r.provenance = "quadrature";
    if (K[0] == 0.0 && B[0] == 0.0) {
      r.pass = true;
      r.constant = 0.0;
      r.notes = "drift vanishes identically; both moduli are zero";
      push_tol(out, std::move(r), shrink);
      return;
    }
    bool mono = true;
    for (int j = 1; j <= 6; ++j)
      mono = mono && K[size_t(j)] <= K[size_t(j) - 1] * (1.0 + 1e-12) &&
             B[size_t(j)] <= B[size_t(j) - 1] * (1.0 + 1e-12);
    r.lhs = std::max(K[6] / K[0], B[6] / B[0]);
    r.rhs = shrink;
    r.ratio = r.lhs / shrink;
    r.constant = K[0];
    r.pass = mono && r.lhs <= shrink;
    r.notes = "ball modulus and its time-split companion vanish together "
              "along dyadic radii/times";
    r.metric("K(1)", K[0]);
    r.metric("K(2^-6)", K[6]);
    r.metric("B(1)", B[0]);
    r.metric("B(2^-6)", B[6]);
    r.metric("beta", beta);
    push_tol(out, std::move(r), shrink);
  });
}

// ---- series-backed checks ---------------------------------------------------

void run_contraction_check(Ctx& c, std::vector<CheckReport>& out) {
  guarded(out, "contraction.horizon", [&] {
    double tol = c.cfg.tol("contraction.horizon", 0.9);
    c.ensure_series();
    if (!c.series_ok) {
      CheckReport r;
      r.name = "contraction.horizon";
      r.provenance = "series";
      r.lhs = c.diag.c_emp;
      r.rhs = 1.0;
      r.ratio = c.diag.c_emp;
      r.constant = c.diag.c_emp;
      r.pass = false;
      r.notes = c.series_err;
      push_tol(out, std::move(r), tol);
      return;
    }
    CheckReport r = check_contraction(c.diag, tol, 1.2);
    if (!c.whole) mark_surrogate(r, "series built on the envelope base");
    push_tol(out, std::move(r), tol);
  });
}

void run_translation_checks(Ctx& c, std::vector<CheckReport>& out) {
  guarded(out, "oracle.translation", [&] {
    c.ensure_series();
    if (!c.series_ok) {
      out.push_back(skipped("oracle.translation", c.series_err));
      out.push_back(skipped("oracle.translation_gradient", c.series_err));
      return;
    }
    double tol_v = c.cfg.tol("oracle.translation", 0.05);
    double tol_g = c.cfg.tol("oracle.translation_gradient", 0.07);
    const RadialKernelTable& tb = *c.table;
    const GridSpec& g = *c.grid;
    double dev_v = 0.0, dev_g = 0.0;
    long n_v = 0, n_g = 0;
    for (double t : {c.cfg.T / 2.0, c.cfg.T}) {
      // row floors from the exact reference
      double vmax = 0.0, gmax = 0.0;
      std::vector<double> ref(g.space.points.size());
      std::vector<Vec> refg(g.space.points.size());
      for (size_t j = 0; j < g.space.points.size(); ++j) {
        Vec u = c.cfg.target - g.space.points[j] - c.bv * t;
        ref[j] = tb.value(t, u.norm());
        refg[j] = tb.gradient(t, u) * -1.0;
        vmax = std::max(vmax, ref[j]);
        gmax = std::max(gmax, refg[j].norm());
      }
      for (size_t j = 0; j < g.space.points.size(); ++j) {
        if (ref[j] > 1e-6 * vmax) {
          double got = c.series->value(t, g.space.points[j]);
          dev_v = std::max(dev_v, std::abs(got - ref[j]) / ref[j]);
          ++n_v;
        }
        if (refg[j].norm() > 0.05 * gmax) {
          Vec got = c.series->gradient(t, g.space.points[j]);
          dev_g = std::max(dev_g, (got - refg[j]).norm() / refg[j].norm());
          ++n_g;
        }
      }
    }
    CheckReport rv;
    rv.name = "oracle.translation";
    rv.provenance = "closed-form";
    rv.lhs = dev_v;
    rv.rhs = tol_v;
    rv.ratio = dev_v / tol_v;
    rv.constant = dev_v;
    rv.pass = n_v > 0 && dev_v <= tol_v;
    rv.notes = "summed series against the exactly translated free kernel";
    rv.metric("nodes", double(n_v));
    push_tol(out, std::move(rv), tol_v);

    CheckReport rg;
    rg.name = "oracle.translation_gradient";
    rg.provenance = "closed-form";
    rg.lhs = dev_g;
    rg.rhs = tol_g;
    rg.ratio = dev_g / tol_g;
    rg.constant = dev_g;
    rg.pass = n_g > 0 && dev_g <= tol_g;
    rg.notes = "series gradient against the translated kernel gradient";
    rg.metric("nodes", double(n_g));
    push_tol(out, std::move(rg), tol_g);
  });
}

void run_two_sided_checks(Ctx& c, std::vector<CheckReport>& out) {
  double spread = c.cfg.tol("main.i.two_sided_series", c.whole ? 100.0 : 200.0);
  guarded(out, "main.i.two_sided_series", [&] {
    c.ensure_series();
    if (!c.series_ok) {
      out.push_back(skipped("main.i.two_sided_series", c.series_err));
      return;
    }
    EnvelopeParams env(c.cfg.params, c.cfg.domain, c.cfg.T);
    CheckReport r = check_two_sided_series(*c.series, env, spread);
    if (!c.whole) mark_surrogate(r, "series built on the envelope base");
    push_tol(out, std::move(r), spread);
  });
  if (c.cfg.has_mc) {
    guarded(out, "main.i.two_sided_mc", [&] {
      double mc_spread = c.cfg.tol("main.i.two_sided_mc", c.whole ? 100.0 : 200.0);
      c.ensure_mc();
      EnvelopeParams env(c.cfg.params, c.cfg.domain, c.cfg.T);
      push_tol(out, check_two_sided_mc(*c.est_T, env, c.cfg.x0, mc_spread),
               mc_spread);
    });
  }
}

void run_gradient_checks(Ctx& c, std::vector<CheckReport>& out) {
  guarded(out, "main.ii.gradient_fit", [&] {
    c.ensure_series();
    if (!c.series_ok) {
      out.push_back(skipped("main.ii.gradient_fit", c.series_err));
      return;
    }
    long excl = 0;
    double c_fine = fit_gradient_constant(*c.series, *c.base, c.cfg.domain, &excl);
    CheckReport r;
    r.name = "main.ii.gradient_fit";
    r.provenance = "series";
    r.lhs = c_fine;
    r.rhs = c_fine;
    r.constant = c_fine;
    r.pass = std::isfinite(c_fine) && c_fine > 0.0;
    r.notes = "fitted constant of the gradient bound over resolved rows";
    r.metric("excluded_nodes", double(excl));
    if (!c.whole) mark_surrogate(r, "series built on the envelope base");
    out.push_back(std::move(r));
  });

  guarded(out, "main.ii.gradient_stability", [&] {
    c.ensure_series();
    if (!c.series_ok) {
      out.push_back(skipped("main.ii.gradient_stability", c.series_err));
      return;
    }
    double growth = c.cfg.tol("main.ii.gradient_stability", 1.5);
    double c_fine = fit_gradient_constant(*c.series, *c.base, c.cfg.domain);
    auto coarse_grid =
        make_grid(c.cfg.params, c.cfg.domain, c.cfg.box_lo, c.cfg.box_hi,
                  2.0 * c.cfg.h, c.cfg.T, c.cfg.n_t, c.cfg.s_panels,
                  c.cfg.t_span);
    KernelField coarse_base = tabulate_base_kernel(
        coarse_grid, c.cfg.target,
        c.whole ? SourceKind::free_kernel : SourceKind::envelope);
    auto coarse = sum_series(coarse_base, c.b, c.cfg.k_max, c.cfg.series_tol,
                             c.workers);
    double c_coarse =
        fit_gradient_constant(coarse.first, coarse_base, c.cfg.domain);
    CheckReport rs = check_stability("main.ii.gradient_stability", "series",
                                     c_coarse, c_fine, growth);
    rs.notes = "gradient constant under one step of lattice refinement";
    if (!c.whole) mark_surrogate(rs, "series built on the envelope base");
    push_tol(out, std::move(rs), growth);
  });

  guarded(out, "main.ii.dual_duhamel", [&] {
    c.ensure_series();
    if (!c.series_ok) {
      out.push_back(skipped("main.ii.dual_duhamel", c.series_err));
      return;
    }
    double tol = c.cfg.tol("main.ii.dual_duhamel", 0.05);
    CheckReport r = dual_duhamel_check(*c.base, *c.series, c.b, tol, c.workers);
    if (!c.whole) mark_surrogate(r, "series built on the envelope base");
    push_tol(out, std::move(r), tol);
  });
}

void run_ck_checks(Ctx& c, std::vector<CheckReport>& out) {
  double s = c.cfg.T / 2.0, t = c.cfg.T;
  if (c.whole || !c.cfg.has_mc) {
    guarded(out, "main.iii.ck_series", [&] {
      double tol = c.cfg.tol("main.iii.ck_series", 0.05);
      c.ensure_series();
      if (!c.series_ok) {
        out.push_back(skipped("main.iii.ck_series", c.series_err));
        return;
      }
      double reach = std::pow(c.cfg.T, 1.0 / c.cfg.params.alpha);
      std::vector<Vec> probes = {c.cfg.target + Vec{reach, 0.0},
                                 c.cfg.target + Vec{-0.7 * reach, 0.4 * reach},
                                 c.cfg.target + Vec{0.0, -reach}};
      for (Vec& q : probes) {
        // keep probes well inside the lattice (and the domain)
        for (int k = 0; k < 2; ++k)
          q[k] = std::min(std::max(q[k], c.cfg.box_lo[k] + 3.0 * c.cfg.h),
                          c.cfg.box_hi[k] - 3.0 * c.cfg.h);
        if (!c.cfg.domain.contains(q))
          q = c.cfg.target + (q - c.cfg.target) * 0.3;
      }
      SourceKind kind =
          c.whole ? SourceKind::free_kernel : SourceKind::envelope;
      bool reversible = c.cfg.drift.kind == "zero" || c.cfg.drift.kind == "constant";
      std::vector<KernelField> lefts;
      for (const Vec& q : probes) {
        KernelField lb = tabulate_base_kernel(c.grid, q, kind);
        if (reversible && c.cfg.drift.kind == "constant") {
          DriftField rev = drift_constant(c.bv * -1.0, c.cfg.domain);
          lefts.push_back(
              sum_series(lb, rev, std::min(c.cfg.k_max, 4), 1e-4, c.workers)
                  .first);
        } else {
          lefts.push_back(std::move(lb));  // symmetric zero-drift factor
        }
      }
      std::vector<const KernelField*> lp;
      for (const auto& f : lefts) lp.push_back(&f);
      const KernelField& right = reversible ? *c.series : *c.base;
      const KernelField& direct = right;
      CheckReport r =
          check_chapman_kolmogorov(lp, probes, right, direct, s, t, tol);
      if (!c.whole)
        mark_surrogate(r, "composition on the envelope base");
      else if (!reversible)
        mark_surrogate(r, "composition checked for the zero-drift kernel; "
                          "drifted composition is covered by constant-drift "
                          "configurations");
      push_tol(out, std::move(r), tol);
    });
    return;
  }
  guarded(out, "main.iii.ck_mc", [&] {
    double sigmas = c.cfg.tol("main.iii.ck_mc", 3.0);
    c.ensure_grid();
    bool drift_free = c.cfg.drift.kind == "zero";
    PathConfig pc = c.path_config(drift_free ? c.b : drift_zero());
    DensityEstimate left =
        estimate_density(pc, c.cfg.x0, t - s, c.grid->space, c.workers);
    DensityEstimate right =
        estimate_density(pc, c.cfg.target, s, c.grid->space, c.workers);
    DensityEstimate direct =
        drift_free && c.est_T
            ? *c.est_T
            : estimate_density(pc, c.cfg.x0, t, c.grid->space, c.workers);
    CheckReport r =
        check_chapman_kolmogorov_mc(left, right, direct, c.cfg.target, sigmas);
    if (!drift_free)
      mark_surrogate(r, "composition checked with the drift disabled (the "
                        "symmetric-factor trick needs zero drift)");
    push_tol(out, std::move(r), sigmas);
  });
}

void run_generator_check(Ctx& c, std::vector<CheckReport>& out) {
  guarded(out, "main.iv.generator_identity", [&] {
    double tol = c.cfg.tol("main.iv.generator_identity", 1e-2);
    bool real = c.whole && drift_is_smooth_constant(c.cfg);
    Vec bv = c.cfg.drift.kind == "constant" ? c.cfg.drift.value : Vec{0.0, 0.0};
    std::vector<Vec> samples = {Vec{0.0, 0.0}, Vec{0.35, 0.0}, Vec{-0.3, 0.15},
                                Vec{0.0, -0.4}, Vec{0.2, 0.3}};
    CheckReport r = check_generator_identity(c.cfg.params, bv, Vec{0.0, 0.0},
                                             1.0, samples, 0.05, tol);
    if (!real)
      mark_surrogate(r, c.whole
                            ? "identity checked with the drift frozen to its "
                              "constant part; non-constant terms are covered "
                              "by constant-drift configurations"
                            : "whole-space surrogate mode (path noise makes "
                              "the killed-form quadrature unreliable)");
    push_tol(out, std::move(r), tol);
  });
}

void run_mass_checks(Ctx& c, std::vector<CheckReport>& out) {
  if (c.whole) {
    if (drift_is_smooth_constant(c.cfg)) {
      guarded(out, "main.v.mass_whole_space", [&] {
        double tol = c.cfg.tol("main.v.mass_whole_space", 1e-3);
        c.ensure_series();
        if (!c.series_ok) {
          out.push_back(skipped("main.v.mass_whole_space", c.series_err));
          return;
        }
        push_tol(out, check_mass_whole_space(*c.series, *c.base, c.bv, tol),
                 tol);
      });
    } else {
      guarded(out, "main.v.mass_relative", [&] {
        double tol = c.cfg.tol("main.v.mass_relative", 5e-3);
        c.ensure_series();
        if (!c.series_ok) {
          out.push_back(skipped("main.v.mass_relative", c.series_err));
          return;
        }
        int last = c.grid->n_t() - 1;
        double ms = c.series->mass(last), mb = c.base->mass(last);
        CheckReport r;
        r.name = "main.v.mass_relative";
        r.lhs = std::abs(ms / mb - 1.0);
        r.rhs = tol;
        r.ratio = r.lhs / tol;
        r.constant = ms;
        r.pass = r.lhs <= tol;
        r.notes = "horizon-row lattice mass against the conservative base";
        r.metric("series_mass", ms);
        r.metric("base_mass", mb);
        mark_surrogate(r, "box-escape mass of the drifted kernel has no "
                          "closed complement here");
        push_tol(out, std::move(r), tol);
      });
    }
    return;
  }
  if (c.cfg.has_mc) {
    guarded(out, "main.v.mass_dirichlet", [&] {
      double sigmas = c.cfg.tol("main.v.mass_dirichlet", 3.0);
      c.ensure_mc();
      push_tol(out, check_mass_dirichlet(*c.est_T, sigmas), sigmas);
    });
  } else {
    guarded(out, "main.v.mass_dirichlet", [&] {
      double tol = c.cfg.tol("main.v.mass_dirichlet", 1e-3);
      c.ensure_series();
      if (!c.series_ok) {
        out.push_back(skipped("main.v.mass_dirichlet", c.series_err));
        return;
      }
      double m = c.series->mass(c.grid->n_t() - 1);
      CheckReport r;
      r.name = "main.v.mass_dirichlet";
      r.lhs = m;
      r.rhs = 1.0 + tol;
      r.ratio = m / r.rhs;
      r.constant = m;
      r.pass = m <= r.rhs;
      r.notes = "horizon-row lattice mass of the killed surrogate stays "
                "sub-Markov";
      mark_surrogate(r, "series built on the envelope base");
      push_tol(out, std::move(r), tol);
    });
  }
}

void run_continuity_check(Ctx& c, std::vector<CheckReport>& out) {
  guarded(out, "main.vi.strong_continuity", [&] {
    bool real = c.whole && drift_is_smooth_constant(c.cfg);
    Vec bv = c.cfg.drift.kind == "constant" ? c.cfg.drift.value : Vec{0.0, 0.0};
    TestFunction f = bump_function(Vec{0.0, 0.0}, 1.0);
    std::vector<Vec> samples;
    for (int i = -1; i <= 1; ++i)
      for (int j = -1; j <= 1; ++j)
        samples.push_back(Vec{0.6 * i, 0.6 * j});
    CheckReport r =
        check_strong_continuity(c.cfg.params, bv, f, samples, 1, 6);
    if (!real)
      mark_surrogate(r, c.whole ? "drift frozen to its constant part"
                                : "whole-space surrogate mode");
    out.push_back(std::move(r));
  });
}

void run_harnack_checks(Ctx& c, std::vector<CheckReport>& out) {
  guarded(out, "harnack.ball", [&] {
    double cmax = c.cfg.tol("harnack.ball", 50.0);
    double growth = c.cfg.tol("harnack.stability", 1.5);
    c.ensure_grid();
    Vec ctr = c.cfg.domain.center();
    double R = c.cfg.domain.radius();
    std::vector<Vec> starts = {ctr, ctr + Vec{0.45 * R, 0.0},
                               ctr + Vec{-0.22 * R, 0.39 * R},
                               ctr + Vec{0.1 * R, -0.4 * R}};
    PathConfig pc = c.path_config(c.b);
    auto family_at = [&](long n_paths) {
      PathConfig q = pc;
      q.n_paths = n_paths;
      std::vector<DensityEstimate> fam;
      for (const Vec& x : starts)
        fam.push_back(estimate_density(q, x, c.cfg.T, c.grid->space, c.workers));
      return fam;
    };
    std::vector<DensityEstimate> full = family_at(c.cfg.n_paths);
    CheckReport r = check_harnack(full, starts, c.cfg.domain, c.cfg.params,
                                  c.cfg.T, 12, cmax);
    double c_full = r.constant;
    push_tol(out, std::move(r), cmax);

    std::vector<DensityEstimate> quarter =
        family_at(std::max(c.cfg.n_paths / 4, 1000l));
    CheckReport rq = check_harnack(quarter, starts, c.cfg.domain, c.cfg.params,
                                   c.cfg.T, 12, cmax);
    CheckReport rs = check_stability("harnack.stability", "montecarlo",
                                     rq.constant, c_full, growth);
    rs.notes = "fitted constant under path quadrupling";
    push_tol(out, std::move(rs), growth);
  });
}

void run_mc_density_check(Ctx& c, std::vector<CheckReport>& out) {
  guarded(out, "mc.density_vs_table", [&] {
    double frac = c.cfg.tol("mc.density_vs_table", 0.9);
    c.ensure_mc();
    const DensityEstimate& est = *c.est_T;
    const RadialKernelTable& tb = *c.table;
    double t = c.cfg.T;
    Vec shift = c.cfg.x0 + c.bv * t;
    double g = c.cfg.h / (2.0 * std::sqrt(3.0));
    long total = 0, inside = 0;
    for (size_t j = 0; j < est.points.size(); ++j) {
      if (est.low_confidence(j)) continue;
      double ref = 0.0;
      for (double sx : {-g, g})
        for (double sy : {-g, g})
          ref += tb.value(
              t, (est.points[j] + Vec{sx, sy} - shift).norm());
      ref *= 0.25;
      ++total;
      if (std::abs(est.value[j] - ref) <= 3.0 * est.ci[j]) ++inside;
    }
    CheckReport r;
    r.name = "mc.density_vs_table";
    r.provenance = "montecarlo";
    r.lhs = total > 0 ? double(inside) / double(total) : 0.0;
    r.rhs = frac;
    r.ratio = r.lhs / frac;
    r.constant = r.lhs;
    r.pass = total > 0 && r.lhs >= frac;
    r.notes = "share of confident cells whose histogram value sits within 3 "
              "half-widths of the cell-averaged kernel";
    r.metric("cells", double(total));
    r.metric("inside", double(inside));
    push_tol(out, std::move(r), frac);
  });
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, int workers,
                         const std::string& out_dir_override) {
  if (workers <= 0) {
    unsigned hc = std::thread::hardware_concurrency();
    workers = hc == 0 ? 4 : int(hc);
  }
  Ctx c{cfg};
  c.workers = workers;
  c.whole = cfg.domain_kind == "whole_plane";
  c.b = build_drift(cfg);
  c.table = RadialKernelTable::shared(cfg.params);
  if (cfg.drift.kind == "constant") c.bv = cfg.drift.value;

  std::vector<CheckReport> reports;
  if (c.want("free_kernel")) run_free_checks(c, reports);
  if (c.want("envelope")) run_envelope_checks(c, reports);
  if (c.want("kato")) run_kato_checks(c, reports);
  if (c.want("contraction")) run_contraction_check(c, reports);
  if (c.want("translation")) run_translation_checks(c, reports);
  if (c.want("two_sided")) run_two_sided_checks(c, reports);
  if (c.want("gradient")) run_gradient_checks(c, reports);
  if (c.want("ck")) run_ck_checks(c, reports);
  if (c.want("generator")) run_generator_check(c, reports);
  if (c.want("mass")) run_mass_checks(c, reports);
  if (c.want("continuity")) run_continuity_check(c, reports);
  if (c.want("harnack")) run_harnack_checks(c, reports);
  if (c.want("mc_density")) run_mc_density_check(c, reports);

  std::sort(reports.begin(), reports.end(),
            [](const CheckReport& a, const CheckReport& b) {
              return a.name < b.name;
            });

  RunResult res;
  res.manifest.tool_version = kToolVersion;
  res.manifest.config_json = cfg.canonical_json(-1);
  res.manifest.reports = std::move(reports);
  res.required_pass = true;
  for (const auto& r : res.manifest.reports)
    if (r.provenance != "surrogate" && !r.pass) res.required_pass = false;

  res.out_dir = out_dir_override.empty() ? cfg.out_dir : out_dir_override;
  std::filesystem::create_directories(res.out_dir);
  std::string prefix = cfg.hash_prefix();
  auto emit = [&](const std::string& name, const std::string& body) {
    std::string path = res.out_dir + "/" + prefix + "_" + name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << body;
    res.files.push_back(path);
  };

  emit("manifest.json", res.manifest.to_json(2) + "\n");

  {
    std::ostringstream cs;
    cs << "check,provenance,lhs,rhs,ratio,constant,tolerance,pass\n";
    for (const auto& r : res.manifest.reports) {
      double tl = r.metric("tolerance");
      cs << r.name << ',' << r.provenance << ',' << format_double(r.lhs) << ','
         << format_double(r.rhs) << ',' << format_double(r.ratio) << ','
         << format_double(r.constant) << ','
         << (std::isnan(tl) ? "" : format_double(tl)) << ','
         << (r.pass ? 1 : 0) << '\n';
    }
    emit("checks.csv", cs.str());
  }
  if (c.series_ok) {
    std::ostringstream fs;
    write_field_csv(*c.series, c.grid->n_t() - 1, fs);
    emit("field_horizon.csv", fs.str());
  }
  if (c.est_T) {
    std::ostringstream ds;
    write_density_csv(*c.est_T, ds);
    emit("density.csv", ds.str());
    if (!c.whole) {
      c.ensure_grid();
      SurvivalEstimate sv = estimate_survival(c.path_config(c.b), cfg.x0,
                                              c.grid->t_nodes, workers);
      std::ostringstream ss;
      write_survival_csv(sv, ss);
      emit("survival.csv", ss.str());
    }
  }
  emit("summary.txt", res.manifest.render_text());
  return res;
}

std::string render_report(const std::string& run_dir, bool* required_pass) {
  namespace fs = std::filesystem;
  std::vector<std::string> manifests;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(run_dir, ec)) {
    std::string n = e.path().filename().string();
    if (n.size() > 14 && n.substr(n.size() - 14) == "_manifest.json")
      manifests.push_back(e.path().string());
  }
  if (ec) throw std::runtime_error("cannot read directory " + run_dir);
  if (manifests.empty())
    throw std::runtime_error("no *_manifest.json in " + run_dir);
  std::sort(manifests.begin(), manifests.end());

  std::ifstream is(manifests.front(), std::ios::binary);
  std::stringstream buf;
  buf << is.rdbuf();
  ordered_json j = ordered_json::parse(buf.str(), nullptr, false);
  if (j.is_discarded() || !j.contains("reports") || !j["reports"].is_array())
    throw std::runtime_error("corrupt manifest: " + manifests.front());

  struct Row {
    std::string id, prov, constant, tolerance, pass;
  };
  std::vector<Row> rows;
  bool req = true;
  for (const auto& r : j["reports"]) {
    Row row;
    row.id = r.value("name", "?");
    row.prov = r.value("provenance", "?");
    row.constant = r.value("constant", "-");
    row.tolerance = "-";
    if (r.contains("metrics") && r["metrics"].contains("tolerance"))
      row.tolerance = r["metrics"]["tolerance"].get<std::string>();
    bool pass = r.value("pass", false);
    row.pass = pass ? "PASS" : "FAIL";
    if (row.prov != "surrogate" && !pass) req = false;
    rows.push_back(std::move(row));
  }
  size_t w_id = 5, w_prov = 10, w_c = 8, w_t = 9;
  for (const auto& r : rows) {
    w_id = std::max(w_id, r.id.size());
    w_prov = std::max(w_prov, r.prov.size());
    w_c = std::max(w_c, r.constant.size());
    w_t = std::max(w_t, r.tolerance.size());
  }
  auto pad = [](const std::string& s, size_t w) {
    return s + std::string(w - s.size(), ' ');
  };
  std::ostringstream os;
  os << pad("check", w_id) << " | " << pad("provenance", w_prov) << " | "
     << pad("constant", w_c) << " | " << pad("tolerance", w_t) << " | pass\n";
  os << std::string(w_id, '-') << "-+-" << std::string(w_prov, '-') << "-+-"
     << std::string(w_c, '-') << "-+-" << std::string(w_t, '-') << "-+-----\n";
  long failed = 0, surrogate = 0;
  for (const auto& r : rows) {
    os << pad(r.id, w_id) << " | " << pad(r.prov, w_prov) << " | "
       << pad(r.constant, w_c) << " | " << pad(r.tolerance, w_t) << " | "
       << r.pass << "\n";
    if (r.pass == "FAIL") ++failed;
    if (r.prov == "surrogate") ++surrogate;
  }
  os << rows.size() << " checks, " << failed << " failed (" << surrogate
     << " surrogate rows are informational)\n";
  os << "required checks: " << (req ? "PASS" : "FAIL") << "\n";
  os << "config " << j.value("config_hash", "?") << "  manifest "
     << hex12(fnv1a64(j.dump(-1))) << "\n";
  if (required_pass) *required_pass = req;
  return os.str();
}

}  // namespace dk
