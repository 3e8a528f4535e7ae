#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "driftkernel/geometry.hpp"
#include "driftkernel/types.hpp"

namespace dk {

// Drift vector field with zero extension outside its domain. The closure is
// the ground truth; the scalar metadata feeds truncation bounds (|b(y)| <=
// tail_c |y|^{-tail_p} for |y| >= tail_from) and the pole fields mark a known
// point singularity |b| ~ kappa |y - pole|^{-pole_p}.
struct DriftField {
  std::function<Vec(const Vec&)> b;
  double bound_hint = 0.0;  // sup |b| where finite (0 = unknown)
  std::string description;

  double tail_from = 0.0;
  double tail_c = 0.0;
  double tail_p = 0.0;

  std::optional<Vec> pole;
  double pole_p = 0.0;
  double pole_kappa = 1.0;

  Vec operator()(const Vec& x) const { return b(x); }
};

// Catalog. Every field masks itself by the domain (zero outside).
DriftField drift_zero();
DriftField drift_constant(const Vec& v, const Domain& dom);
DriftField drift_bump(const Vec& center, double radius, const Vec& amplitude,
                      const Domain& dom);
// |b(y)| = kappa |y-y0|^{-p}, radial direction away from y0
DriftField drift_singular(const Vec& y0, double p, double kappa,
                          const Domain& dom);

// K^{a,D}_{|b|}(r): sup over the probe set of
//   int_{D cap B(x,r)} |b(y)| |x-y|^{a-1-d} dy   (d = 2 only).
// The radial singularity is removed by substitution; a probe sitting on a
// registered pole with pole_p >= alpha-1 makes the integral diverge and the
// returned modulus is +infinity (that is the analytic value, not a failure).
double kato_modulus(const DriftField& b, const Domain& dom,
                    const StableParams& p, double r,
                    const std::vector<Vec>& probes, const QuadSpec& q = {});

// Time-split companion integral: sup over probes of
//   int_D (|y-x|^{a-1-d} AND t^beta |y-x|^{a-1-d-a beta}) |b(y)| dy,
// defined for beta > (alpha-1)/alpha; vanishes with t exactly when the
// modulus above vanishes with r.
double beta_criterion(const DriftField& b, const Domain& dom,
                      const StableParams& p, double beta, double t,
                      const std::vector<Vec>& probes, const QuadSpec& q = {});

}  // namespace dk
