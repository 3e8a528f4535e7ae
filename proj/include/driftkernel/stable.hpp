#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "driftkernel/quadrature.hpp"
#include "driftkernel/types.hpp"

namespace dk {

// ---------------------------------------------------------------------------
// One-sided beta-stable subordinator at unit time, E exp(-l S) = exp(-l^beta),
// beta in (0,1). Zolotarev single-integral representation for moderate s,
// convergent inverse-power series in the tail.
// ---------------------------------------------------------------------------
double subordinator_density(double beta, double s, const QuadSpec& q = {});

// log of Zolotarev's A(phi) on (0,pi); A is increasing, A(0+)=beta^{b/(1-b)}(1-b).
double zolotarev_log_a(double beta, double phi);

// ---------------------------------------------------------------------------
// Free kernel of the isotropic alpha-stable process, symbol exp(-t|xi|^alpha):
//   p(t,x) = int_0^inf (4 pi s)^{-d/2} exp(-|x|^2/(4s)) g_{a/2}(t,s) ds.
// All evaluations reduce to t=1 by exact scaling, so the scaling identity
// p(t,x) = t^{-d/a} p(1, t^{-1/a} x) holds to rounding.
// ---------------------------------------------------------------------------
double eval_free_kernel(const StableParams& p, double t, const Vec& x,
                        const QuadSpec& q = {});
// radial profile and its derivative at unit time
double free_kernel_profile(const StableParams& p, double u, const QuadSpec& q = {});
double free_kernel_profile_derivative(const StableParams& p, double u,
                                      const QuadSpec& q = {});
Vec eval_free_kernel_gradient(const StableParams& p, double t, const Vec& x,
                              const QuadSpec& q = {});

// p(t,0) in closed form: (2pi)^{-d} |S^{d-1}| Gamma(d/alpha) / (alpha t^{d/alpha}).
double free_kernel_at_origin(const StableParams& p, double t);

// Comparison profile rho^gamma(t,x) = t^gamma / (|x| + t^{1/alpha})^{d+alpha}.
double rho_gamma(const StableParams& p, double gamma, double t, const Vec& x);
double rho_gamma_radial(const StableParams& p, double gamma, double t, double r);

// ---------------------------------------------------------------------------
// Fast radial table: unit-time profile P1(u) and derivative on Hermite splines
// (u^2 variable below u=1, log u above). Deliberate approximation component
// with tested accuracy; the quadrature evaluators above stay uncached.
// ---------------------------------------------------------------------------
class RadialKernelTable {
 public:
  RadialKernelTable(const StableParams& p, int inner_nodes = 600,
                    int outer_nodes = 900, double u_max = 2000.0);

  const StableParams& params() const { return params_; }

  // p(t,|x|), d p/d r, and the gradient vector at offset x
  double value(double t, double r) const;
  double radial_derivative(double t, double r) const;
  Vec gradient(double t, const Vec& x) const;

  // unit-time profile lookups
  double profile(double u) const;
  double profile_derivative(double u) const;

  // int_{|x|>R} p(t,x) dx, by adaptive quadrature on the table profile
  double tail_mass(double t, double R) const;

  // Shared per-(d,alpha) instances (built once, immutable afterwards).
  static std::shared_ptr<const RadialKernelTable> shared(const StableParams& p);

 private:
  StableParams params_;
  double u_max_;
  double tail_amp_;  // fitted |x|^{-d-alpha} amplitude for u > u_max
  // inner spline in w = u^2 on [0,1]; outer spline in v = log u on [0, log u_max]
  struct Hermite {
    double lo = 0, hi = 1, h = 1;
    std::vector<double> y, dy;  // values and d/dvar at uniform nodes
    double eval(double x) const;
    double eval_derivative(double x) const;
  };
  Hermite inner_p_, outer_logp_;    // P1 (inner direct, outer log P1)
  Hermite inner_m_, outer_logm_;    // M(u) = -P1'(u)/u (inner), log(-P1') (outer)
};

// ---------------------------------------------------------------------------
// Test functions and the generator.
// ---------------------------------------------------------------------------
struct TestFunction {
  std::function<double(const Vec&)> f;
  std::function<Vec(const Vec&)> grad;              // optional
  std::function<double(const Vec&)> laplacian_trace; // optional: tr Hess
  Vec center{0.0, 0.0};        // support sits inside |x-center| < support_radius
  double support_radius = 1.0;
};

// Smooth bump supported on |x - center| < radius (value exp(1-1/(1-s^2))).
TestFunction bump_function(const Vec& center, double radius, double amplitude = 1.0);

// Fractional Laplacian -(-Delta)^{alpha/2} f at x (d=2 only), via the
// compensated singular integral with the exact angular factor.
double frac_laplacian_apply(const StableParams& p, const TestFunction& f,
                            const Vec& x, const QuadSpec& q = {});

// Normalizing constant of the jump kernel c_{d,alpha} |z|^{-d-alpha}.
double frac_laplacian_constant(const StableParams& p);

}  // namespace dk
