#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "driftkernel/geometry.hpp"
#include "driftkernel/kato.hpp"
#include "driftkernel/rng.hpp"
#include "driftkernel/stable.hpp"
#include "driftkernel/types.hpp"

namespace dk {

// Path simulation of the drifted isotropic stable process, optionally killed
// on exiting a domain. This is the library's independent oracle: it shares no
// numerics with the series construction (no kernel tables, no quadrature),
// only the symbol exp(-t|xi|^alpha) realized by subordinating a Brownian
// increment. Everything downstream is a histogram of simulated endpoints.
//
// Discretization contract
//   - Euler-Maruyama with drift frozen at the step's left endpoint:
//     X_{k+1} = X_k + b(X_k) dt + dX_k, dX_k an exact stable increment.
//     For constant b the scheme is exact in law.
//   - Killing is checked at step times only. A path that leaves and re-enters
//     within one step is not caught, so survival is over-estimated by an
//     O(dt)-scale boundary effect; control it by halving dt and comparing.
//   - Unbounded catalog drifts are capped at |b| <= cap_bmax; cap_radius()
//     reports the radius around a registered pole inside which the cap is
//     active, so reports can carry the (bmax, eps) pair.
//
// Reproducibility
//   Every random draw is addressed by (seed; path, step) through the
//   counter-based generator in rng.hpp. Histograms accumulate integer hit
//   counts in fixed-size path blocks that are merged in block order, so any
//   worker count produces bit-identical estimates.
struct PathConfig {
  StableParams params{2, 1.5};
  double dt = 0.0;       // Euler step, > 0
  double horizon = 0.0;  // largest time the config is good for, >= dt
  long n_paths = 0;
  uint64_t seed = 1;
  std::optional<Domain> domain;  // absent: whole plane, never kills
  DriftField drift = drift_zero();
  double cap_bmax = 100.0;  // |b| cap (singular catalog entries)

  void validate() const;  // throws std::invalid_argument on a bad field
};

// One-sided stable variate with Laplace transform
//   E exp(-lambda S_t) = exp(-t lambda^{alpha_half}),   0 < alpha_half < 1,
// via the Chambers-Mallows-Stuck / Kanter transform of two uniforms
// (rejection-free; S_t = t^{1/alpha_half} S_1 by scaling).
double sample_subordinator(double alpha_half, double t, RngStream& rng);

// Increment of the isotropic alpha-stable process over a step of length dt:
// sqrt(2 S) Z with S = sample_subordinator(alpha/2, dt) and Z a standard
// Gaussian vector, so E exp(i xi . dX) = exp(-dt |xi|^alpha).
Vec sample_stable_increment(const StableParams& params, double dt,
                            RngStream& rng);

// Radius around the drift's registered pole inside which |b| > bmax, i.e.
// where the simulation cap is active. 0 when the field has no pole.
double cap_radius(const DriftField& b, double bmax);

struct PathResult {
  bool killed = false;
  double time = 0.0;  // exit time if killed, else the simulated horizon
  Vec x{0.0, 0.0};    // terminal position (first outside point if killed)
};

// Simulate one path started at x0 up to the config horizon. A start outside
// the domain is a kill at time zero, not an error. path_index selects the
// RNG stream, so distinct indices give independent paths under one seed.
PathResult simulate_killed_path(const PathConfig& cfg, const Vec& x0,
                                uint64_t path_index = 0);

// Histogram density estimate on the cells of an InteriorGrid. value[j]
// estimates the cell average of the transition density p(t, x0, .) over cell
// j; ci[j] is a 95% Agresti-Coull half-width (nonzero even at zero hits, so
// coverage statements stay honest in empty cells). Cells with fewer than
// min_hits surviving endpoints are flagged low-confidence and should be left
// out of ratio checks.
struct DensityEstimate {
  double t = 0.0;
  Vec x0{0.0, 0.0};
  std::vector<Vec> points;
  std::vector<double> weights;  // clipped cell areas (from the grid)
  std::vector<double> value;    // >= 0
  std::vector<double> ci;      // 95% half-widths
  std::vector<long> hits;
  long n_paths = 0;
  long n_surviving = 0;  // alive at time t (binned or not)
  long min_hits = 0;

  bool low_confidence(size_t j) const { return hits[j] < min_hits; }
  double total_mass() const;  // sum value . weight  (= binned fraction)
  double ci_mass() const;     // sum ci . weight
};

// Estimate p^b(t, x0, .) (no domain) or the killed density p^{b,D}(t, x0, .)
// (domain set) by binning surviving endpoints at the step time nearest t.
// When smooth_ref is nonempty the estimate is divided by the reference,
// averaged over the 3x3 cell neighborhood, and multiplied back -- a
// variance reduction that is exact wherever the true density is proportional
// to the reference; ci is left at its raw per-cell value (conservative).
DensityEstimate estimate_density(const PathConfig& cfg, const Vec& x0,
                                 double t, const InteriorGrid& grid,
                                 int workers = 1, long min_hits = 5,
                                 std::function<double(const Vec&)> smooth_ref = {});

struct SurvivalEstimate {
  std::vector<double> times;
  std::vector<double> value;  // in [0,1]; exactly 1 at t = 0 for interior x0
  std::vector<double> ci;    // 95% half-widths
  long n_paths = 0;
};

// P(tau > t) for each requested time, all from the same path ensemble, so
// the point estimates are exactly nonincreasing along sorted times.
SurvivalEstimate estimate_survival(const PathConfig& cfg, const Vec& x0,
                                   const std::vector<double>& t_list,
                                   int workers = 1);

// Fitted MC surface for use as a sampled base kernel: builds a (smoothed)
// density estimate at every requested time from paths started at y, and
// returns the lookup (t, x) -> estimated density, constant on cells, zero
// outside the grid. Meaningful as a kernel in x only when the underlying
// process is symmetric, i.e. zero drift; the config's drift must be zero.
// Throws QualityError when the median relative half-width over confident
// cells exceeds max_rel_ci at any time node (the surface would be noise).
std::function<double(double, const Vec&)> make_density_surface(
    const PathConfig& cfg, const Vec& y, const std::vector<double>& t_nodes,
    const InteriorGrid& grid, std::function<double(const Vec&)> smooth_ref,
    double max_rel_ci, int workers = 1);

// CSV: "x,y,w,value,ci,hits" rows / "t,survival,ci" rows.
void write_density_csv(const DensityEstimate& est, std::ostream& os);
void write_survival_csv(const SurvivalEstimate& est, std::ostream& os);

// JSON summary (counts, mass, flags) / full curve. Shortest round-trip
// number formatting, fixed key order.
std::string to_json(const DensityEstimate& est, int indent = -1);
std::string to_json(const SurvivalEstimate& est, int indent = -1);

}  // namespace dk
