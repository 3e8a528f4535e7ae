#include "driftkernel/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

#include "driftkernel/parallel.hpp"
#include "driftkernel/report.hpp"

namespace dk {

namespace {

constexpr long kChunk = 8192;  // paths per accumulation block

// 95% Agresti-Coull half-width for a count out of n trials.
double binom_halfwidth(long hits, long n) {
  double nt = double(n) + 4.0;
  double pt = (double(hits) + 2.0) / nt;
  return 1.96 * std::sqrt(pt * (1.0 - pt) / nt);
}

Vec capped_drift(const PathConfig& cfg, const Vec& x) {
  Vec v = cfg.drift(x);
  double m = v.norm();
  if (m > cfg.cap_bmax) v = v * (cfg.cap_bmax / m);
  return v;
}

// One Euler step: exact stable increment plus drift frozen at the left
// endpoint. The RNG stream is keyed by (path, step), so the step is
// reproducible in isolation.
Vec euler_step(const PathConfig& cfg, const Vec& x, uint64_t path,
               uint64_t step) {
  RngStream rng(cfg.seed, path, step);
  Vec dx = sample_stable_increment(cfg.params, cfg.dt, rng);
  return x + cfg.dt * capped_drift(cfg, x) + dx;
}

PathResult run_path(const PathConfig& cfg, const Vec& x0, uint64_t path,
                    long n_steps) {
  PathResult r;
  r.x = x0;
  if (cfg.domain && !cfg.domain->contains(x0)) {
    r.killed = true;
    return r;
  }
  for (long k = 0; k < n_steps; ++k) {
    r.x = euler_step(cfg, r.x, path, uint64_t(k));
    if (cfg.domain && !cfg.domain->contains(r.x)) {
      r.killed = true;
      r.time = double(k + 1) * cfg.dt;
      return r;
    }
  }
  r.time = double(n_steps) * cfg.dt;
  return r;
}

long steps_for(const PathConfig& cfg, double t) {
  if (!(t > 0.0) || t > cfg.horizon * (1.0 + 1e-12))
    throw std::invalid_argument("evaluation time outside (0, horizon]");
  return std::max<long>(1, std::llround(t / cfg.dt));
}

int cell_of(const InteriorGrid& g, const Vec& x) {
  int i = int(std::floor((x[0] - g.origin[0]) / g.h));
  int j = int(std::floor((x[1] - g.origin[1]) / g.h));
  return g.at(i, j);
}

}  // namespace

void PathConfig::validate() const {
  params.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (!(horizon >= dt)) throw std::invalid_argument("horizon must be >= dt");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (!(cap_bmax > 0.0)) throw std::invalid_argument("cap_bmax must be positive");
  if (!drift.b) throw std::invalid_argument("drift field is empty");
}

double sample_subordinator(double alpha_half, double t, RngStream& rng) {
  // Kanter's representation: with U uniform on (0,1), E standard exponential,
  //   A(u) = sin((1-a) pi u) sin(a pi u)^{a/(1-a)} / sin(pi u)^{1/(1-a)},
  //   S_1  = (A(U)/E)^{(1-a)/a},
  // evaluated in logs so the u -> {0,1} endpoints cannot overflow.
  const double a = alpha_half;
  double u = rng.uniform();
  double e = -std::log(rng.uniform());
  double log_a_of_u = std::log(std::sin((1.0 - a) * kPi * u)) +
                      (a / (1.0 - a)) * std::log(std::sin(a * kPi * u)) -
                      (1.0 / (1.0 - a)) * std::log(std::sin(kPi * u));
  double s1 = std::exp(((1.0 - a) / a) * (log_a_of_u - std::log(e)));
  return std::pow(t, 1.0 / a) * s1;
}

Vec sample_stable_increment(const StableParams& params, double dt,
                            RngStream& rng) {
  double s = sample_subordinator(0.5 * params.alpha, dt, rng);
  double r = std::sqrt(2.0 * s);
  Vec dx;
  for (int i = 0; i < params.d; i += 2) {
    double z0 = 0.0, z1 = 0.0;
    rng.normal_pair(z0, z1);
    dx[i] = r * z0;
    if (i + 1 < params.d) dx[i + 1] = r * z1;
  }
  return dx;
}

double cap_radius(const DriftField& b, double bmax) {
  if (!b.pole || b.pole_p <= 0.0) return 0.0;
  return std::pow(b.pole_kappa / bmax, 1.0 / b.pole_p);
}

PathResult simulate_killed_path(const PathConfig& cfg, const Vec& x0,
                                uint64_t path_index) {
  cfg.validate();
  return run_path(cfg, x0, path_index, steps_for(cfg, cfg.horizon));
}

double DensityEstimate::total_mass() const {
  double m = 0.0;
  for (size_t j = 0; j < value.size(); ++j) m += value[j] * weights[j];
  return m;
}

double DensityEstimate::ci_mass() const {
  double m = 0.0;
  for (size_t j = 0; j < ci.size(); ++j) m += ci[j] * weights[j];
  return m;
}

DensityEstimate estimate_density(const PathConfig& cfg, const Vec& x0,
                                 double t, const InteriorGrid& grid,
                                 int workers, long min_hits,
                                 std::function<double(const Vec&)> smooth_ref) {
  cfg.validate();
  const long n_steps = steps_for(cfg, t);
  const size_t n_cells = grid.points.size();
  const long n_chunks = (cfg.n_paths + kChunk - 1) / kChunk;

  // Integer hit counts per fixed-size path block, merged in block order:
  // identical totals for every worker count.
  std::vector<std::vector<long>> counts(static_cast<size_t>(n_chunks));
  std::vector<long> alive(size_t(n_chunks), 0);
  parallel_for(size_t(n_chunks), workers, [&](size_t c) {
    std::vector<long> local(n_cells, 0);
    long local_alive = 0;
    long lo = long(c) * kChunk;
    long hi = std::min(cfg.n_paths, lo + kChunk);
    for (long p = lo; p < hi; ++p) {
      PathResult r = run_path(cfg, x0, uint64_t(p), n_steps);
      if (r.killed) continue;
      ++local_alive;
      int cell = cell_of(grid, r.x);
      if (cell >= 0) ++local[size_t(cell)];
    }
    counts[c] = std::move(local);
    alive[c] = local_alive;
  });

  DensityEstimate est;
  est.t = double(n_steps) * cfg.dt;
  est.x0 = x0;
  est.points = grid.points;
  est.weights = grid.weights;
  est.value.assign(n_cells, 0.0);
  est.ci.assign(n_cells, 0.0);
  est.hits.assign(n_cells, 0);
  est.n_paths = cfg.n_paths;
  est.min_hits = min_hits;
  for (long c = 0; c < n_chunks; ++c) {
    est.n_surviving += alive[size_t(c)];
    for (size_t j = 0; j < n_cells; ++j) est.hits[j] += counts[size_t(c)][j];
  }
  const double n = double(cfg.n_paths);
  for (size_t j = 0; j < n_cells; ++j) {
    est.value[j] = double(est.hits[j]) / (n * est.weights[j]);
    est.ci[j] = binom_halfwidth(est.hits[j], cfg.n_paths) / est.weights[j];
  }

  if (smooth_ref) {
    // Ratio-to-reference smoothing over the 3x3 cell neighborhood, then a
    // global rescale so the binned mass is exactly preserved.
    std::vector<double> ref(n_cells, 0.0), ratio(n_cells, 0.0);
    for (size_t j = 0; j < n_cells; ++j) {
      ref[j] = smooth_ref(est.points[j]);
      if (ref[j] > 0.0) ratio[j] = est.value[j] / ref[j];
    }
    double mass_raw = est.total_mass();
    std::vector<double> sm(n_cells, 0.0);
    for (size_t j = 0; j < n_cells; ++j) {
      if (!(ref[j] > 0.0)) {
        sm[j] = est.value[j];
        continue;
      }
      int ci0 = int(std::floor((est.points[j][0] - grid.origin[0]) / grid.h));
      int cj0 = int(std::floor((est.points[j][1] - grid.origin[1]) / grid.h));
      double acc = 0.0;
      int cnt = 0;
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          int k = grid.at(ci0 + di, cj0 + dj);
          if (k < 0 || !(ref[size_t(k)] > 0.0)) continue;
          acc += ratio[size_t(k)];
          ++cnt;
        }
      sm[j] = (acc / double(cnt)) * ref[j];
    }
    double mass_sm = 0.0;
    for (size_t j = 0; j < n_cells; ++j) mass_sm += sm[j] * est.weights[j];
    double scale = mass_sm > 0.0 ? mass_raw / mass_sm : 1.0;
    for (size_t j = 0; j < n_cells; ++j) est.value[j] = sm[j] * scale;
  }
  return est;
}

SurvivalEstimate estimate_survival(const PathConfig& cfg, const Vec& x0,
                                   const std::vector<double>& t_list,
                                   int workers) {
  cfg.validate();
  for (double t : t_list)
    if (t < 0.0 || t > cfg.horizon * (1.0 + 1e-12))
      throw std::invalid_argument("survival time outside [0, horizon]");
  const long n_steps = std::max<long>(1, std::llround(cfg.horizon / cfg.dt));
  const long n_chunks = (cfg.n_paths + kChunk - 1) / kChunk;
  const size_t nt = t_list.size();

  std::vector<std::vector<long>> alive(static_cast<size_t>(n_chunks));
  parallel_for(size_t(n_chunks), workers, [&](size_t c) {
    std::vector<long> local(nt, 0);
    long lo = long(c) * kChunk;
    long hi = std::min(cfg.n_paths, lo + kChunk);
    for (long p = lo; p < hi; ++p) {
      PathResult r = run_path(cfg, x0, uint64_t(p), n_steps);
      // killed at r.time means tau <= r.time: survives t iff t < exit time
      double exit = r.killed ? r.time : std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < nt; ++i)
        if (t_list[i] < exit - 1e-12 * cfg.dt) ++local[i];
    }
    alive[c] = std::move(local);
  });

  SurvivalEstimate est;
  est.times = t_list;
  est.value.assign(nt, 0.0);
  est.ci.assign(nt, 0.0);
  est.n_paths = cfg.n_paths;
  for (long c = 0; c < n_chunks; ++c)
    for (size_t i = 0; i < nt; ++i) est.value[i] += double(alive[size_t(c)][i]);
  for (size_t i = 0; i < nt; ++i) {
    long k = long(est.value[i]);
    est.value[i] = double(k) / double(cfg.n_paths);
    est.ci[i] = binom_halfwidth(k, cfg.n_paths);
  }
  return est;
}

std::function<double(double, const Vec&)> make_density_surface(
    const PathConfig& cfg, const Vec& y, const std::vector<double>& t_nodes,
    const InteriorGrid& grid, std::function<double(const Vec&)> smooth_ref,
    double max_rel_ci, int workers) {
  cfg.validate();
  if (cfg.drift(Vec{0.0, 0.0}).norm() + cfg.drift(Vec{1.0, 0.0}).norm() > 0.0)
    throw std::invalid_argument(
        "density surface requires zero drift (symmetric kernel)");
  if (t_nodes.empty()) throw std::invalid_argument("no time nodes");

  auto fields = std::make_shared<std::vector<DensityEstimate>>();
  for (double t : t_nodes) {
    DensityEstimate est =
        estimate_density(cfg, y, t, grid, workers, 5, smooth_ref);
    std::vector<double> rel;
    for (size_t j = 0; j < est.value.size(); ++j)
      if (!est.low_confidence(j) && est.value[j] > 0.0)
        rel.push_back(est.ci[j] / est.value[j]);
    double med = 1.0 / 0.0;
    if (!rel.empty()) {
      size_t mid = rel.size() / 2;
      std::nth_element(rel.begin(), rel.begin() + mid, rel.end());
      med = rel[mid];
    }
    if (!(med <= max_rel_ci))
      throw QualityError("monte carlo surface too noisy at t = " +
                             format_double(t) + " (median rel ci " +
                             format_double(med) + ")",
                         med);
    fields->push_back(std::move(est));
  }

  std::vector<double> ts = t_nodes;
  InteriorGrid g = grid;
  return [fields, ts, g](double t, const Vec& x) -> double {
    size_t best = 0;
    double dbest = std::abs(ts[0] - t);
    for (size_t i = 1; i < ts.size(); ++i) {
      double d = std::abs(ts[i] - t);
      if (d < dbest) {
        dbest = d;
        best = i;
      }
    }
    int cell = cell_of(g, x);
    if (cell < 0) return 0.0;
    return (*fields)[best].value[size_t(cell)];
  };
}

void write_density_csv(const DensityEstimate& est, std::ostream& os) {
  os << "x,y,w,value,ci,hits\n";
  for (size_t j = 0; j < est.points.size(); ++j) {
    os << format_double(est.points[j][0]) << ','
       << format_double(est.points[j][1]) << ','
       << format_double(est.weights[j]) << ',' << format_double(est.value[j])
       << ',' << format_double(est.ci[j]) << ',' << est.hits[j] << '\n';
  }
}

void write_survival_csv(const SurvivalEstimate& est, std::ostream& os) {
  os << "t,survival,ci\n";
  for (size_t i = 0; i < est.times.size(); ++i) {
    os << format_double(est.times[i]) << ',' << format_double(est.value[i])
       << ',' << format_double(est.ci[i]) << '\n';
  }
}

std::string to_json(const DensityEstimate& est, int indent) {
  long low = 0;
  double vmax = 0.0;
  for (size_t j = 0; j < est.value.size(); ++j) {
    if (est.low_confidence(j)) ++low;
    vmax = std::max(vmax, est.value[j]);
  }
  nlohmann::ordered_json j;
  j["t"] = est.t;
  j["x0"] = {est.x0[0], est.x0[1]};
  j["n_paths"] = est.n_paths;
  j["n_surviving"] = est.n_surviving;
  j["cells"] = est.value.size();
  j["low_confidence_cells"] = low;
  j["total_mass"] = est.total_mass();
  j["ci_mass"] = est.ci_mass();
  j["max_value"] = vmax;
  return j.dump(indent);
}

std::string to_json(const SurvivalEstimate& est, int indent) {
  nlohmann::ordered_json j;
  j["n_paths"] = est.n_paths;
  j["t"] = est.times;
  j["survival"] = est.value;
  j["ci"] = est.ci;
  return j.dump(indent);
}

}  // namespace dk
