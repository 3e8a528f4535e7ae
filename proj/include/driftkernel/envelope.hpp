#pragma once

#include <memory>

#include "driftkernel/geometry.hpp"
#include "driftkernel/report.hpp"
#include "driftkernel/stable.hpp"

namespace dk {

// Boundary-decay envelope machinery on a fixed horizon T:
//   q~(t,x)     = 1 AND rho(x)^{alpha/2}/sqrt(t)
//   q^D(t,x,y)  = q~(t,x) q~(t,y) p(t, y-x)
// with p the unperturbed kernel (table-backed).
struct EnvelopeParams {
  StableParams params;
  Domain domain;
  double T = 1.0;
  std::shared_ptr<const RadialKernelTable> table;

  EnvelopeParams(const StableParams& p, const Domain& d, double horizon)
      : params(p), domain(d), T(horizon), table(RadialKernelTable::shared(p)) {
    if (!(T > 0.0)) throw std::domain_error("EnvelopeParams: T must be > 0");
  }
};

double q_tilde(const EnvelopeParams& env, double t, const Vec& x);
double q_envelope(const EnvelopeParams& env, double t, const Vec& x, const Vec& y);

// Pointwise inequality checks. Each compares a left side against the closed
// right side; pass means ratio <= c_fit (the caller supplies the constant,
// typically fitted as the max ratio of a randomized sweep).

// time integral of the comparison profile:
//   lhs = int_0^t rho^gamma(s, x) ds   (s^gamma endpoint removed by
//   substitution), rhs = |x|^{a gamma - d} AND t^{1+gamma} |x|^{-d-a}.
CheckReport check_gam(const EnvelopeParams& env, double gamma, double t,
                      const Vec& x, double c_fit);

// three-point bound: lhs = q^D(t-s,x,z) q^D(s,z,y) / q^D(t,x,y),
// rhs = rho(z)^alpha (rho^0(t-s, x-z) + rho^0(s, z-y)).
CheckReport check_3p(const EnvelopeParams& env, double t, double s, const Vec& x,
                     const Vec& y, const Vec& z, double c_fit);

// integral bound, both sides 1-D quadratures on (0, t/2]:
//   lhs = q~(t,z) int s^{-1/a} q^D(s,z,y) ds
//   rhs = q~(t,y) int s^{-1/a} q~(s,z) rho^1(s, z-y) ds
// The s^{-1/a} endpoint falls to the substitution u = s^{(a-1)/a}; both
// integrals start at the same relative floor so the coincident-point case
// (z = y, where each side alone diverges) still has a well-defined ratio.
CheckReport check_integral_26(const EnvelopeParams& env, double t, const Vec& y,
                              const Vec& z, double c_fit);

// Randomized ratio sweeps used to fit the constants. Deterministic in seed.
struct RatioSweep {
  int n = 0;
  double max_ratio = 0.0;
  double median_ratio = 0.0;
  double max_first_half = 0.0;  // max over the first n/2 samples (stability probe)
};
RatioSweep sweep_gam(const EnvelopeParams& env, int n, uint64_t seed);
RatioSweep sweep_3p(const EnvelopeParams& env, int n, uint64_t seed);
RatioSweep sweep_integral_26(const EnvelopeParams& env, int n, uint64_t seed);

}  // namespace dk
