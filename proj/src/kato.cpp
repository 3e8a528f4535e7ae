#include "driftkernel/kato.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driftkernel/quadrature.hpp"

namespace dk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// integral of |b| over the part of the circle of radius s around x that the
// domain covers. The covered set is a single arc with computable center and
// half-angle; placing the midpoint nodes on that arc only keeps the result
// smooth in s (nodes crossing the boundary would otherwise jitter it at the
// node-spacing scale and stall the radial quadrature).
double angular_integral(const DriftField& b, const Domain& dom, const Vec& x,
                        double s, int n) {
  double th0 = 0.0, half = kPi;  // default: the full circle
  switch (dom.kind()) {
    case Domain::Kind::disk: {
      Vec cx = dom.center() - x;
      double d = cx.norm(), R = dom.radius();
      if (d > 1e-15) {
        double c = (d * d + s * s - R * R) / (2.0 * d * s);
        if (c >= 1.0) return 0.0;  // ring wholly outside
        if (c > -1.0) {
          th0 = std::atan2(cx[1], cx[0]);
          half = std::acos(c);
        }
      } else if (s >= R) {
        return 0.0;
      }
      break;
    }
    case Domain::Kind::half_plane: {
      double rho = dom.signed_distance(x);
      if (s > rho) {
        Vec nrm = dom.inward_normal(x);
        th0 = std::atan2(nrm[1], nrm[0]);
        half = std::acos(std::max(-1.0, -rho / s));
      }
      break;
    }
    case Domain::Kind::whole_plane:
      break;
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double th = th0 + half * (2.0 * (i + 0.5) / n - 1.0);
    Vec y{x[0] + s * std::cos(th), x[1] + s * std::sin(th)};
    acc += b(y).norm();
  }
  return acc * 2.0 * half / n;
}

bool probe_on_pole(const DriftField& b, const Vec& x) {
  return b.pole && (x - *b.pole).norm() < 1e-12;
}

// Radii where the ring coverage kinks or jumps: inside them a ring around x
// is wholly in the domain, past the last one wholly outside (disk) or the
// coverage shrinks smoothly (half plane). Splitting the radial quadrature at
// these points keeps every piece smooth enough for the adaptive rule.
std::vector<double> coverage_breaks(const Domain& dom, const Vec& x) {
  switch (dom.kind()) {
    case Domain::Kind::disk: {
      double d = (x - dom.center()).norm();
      return {dom.radius() - d, dom.radius() + d};
    }
    case Domain::Kind::half_plane:
      return {dom.signed_distance(x)};
    case Domain::Kind::whole_plane:
      break;
  }
  return {};
}

// int_0^r s^{alpha-2-shift} A(s) ds with A bounded; substitution
// u = s^e (e = alpha-1-shift) makes it int_0^{r^e} A(u^{1/e}) du / e.
double radial_integral(const DriftField& b, const Domain& dom, const Vec& x,
                       double r, double alpha, double shift, int nth,
                       const QuadSpec& q) {
  double e = alpha - 1.0 - shift;
  if (e <= 0.0) return kInf;
  bool on_pole = probe_on_pole(b, x);
  // rings this small round away against the probe coordinates; on a pole the
  // registered asymptote is exact there (the pole sits strictly inside, so
  // the ring is uncovered by the boundary)
  double s_snap = 1e-10 * (1.0 + x.norm());
  auto f = [&](double u) {
    double s = std::pow(u, 1.0 / e);
    double a;
    if (on_pole)
      a = s < s_snap ? b.pole_kappa * 2.0 * kPi
                     : angular_integral(b, dom, x, s, nth) * std::pow(s, b.pole_p);
    else
      a = angular_integral(b, dom, x, s, nth);
    return a / e;
  };
  // on-pole probes: A(s) = s^{-pole_p} * (masked angular factor); the
  // rescaled integrand above stays bounded, and shift has absorbed pole_p.
  double u_hi = std::pow(r, e);
  double u_partial = u_hi;  // first break: beyond it rings are partly covered
  std::vector<double> cuts = {0.0, u_hi};
  for (double s : coverage_breaks(dom, x)) {
    double u = std::pow(s, e);
    if (u > 0.0 && u < u_hi) {
      cuts.push_back(u);
      u_partial = std::min(u_partial, u);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    QuadSpec qi = q;
    // partially covered rings: the midpoint arc estimate steps as nodes cross
    // the boundary, so only ~1/nth relative accuracy is meaningful there
    bool partial = cuts[i] >= u_partial;
    qi.rel_tol = std::max({q.rel_tol, partial ? 3e-4 : 0.0,
                           b.pole ? 3e-4 : 1e-7});
    acc += integrate(f, cuts[i], cuts[i + 1], qi);
  }
  return acc;
}

double pole_shift(const DriftField& b, const Vec& x) {
  return probe_on_pole(b, x) ? b.pole_p : 0.0;
}

}  // namespace

DriftField drift_zero() {
  DriftField f;
  f.b = [](const Vec& x) { return Vec::zero(x.dim); };
  f.description = "zero";
  return f;
}

DriftField drift_constant(const Vec& v, const Domain& dom) {
  DriftField f;
  f.b = [v, dom](const Vec& x) { return dom.contains(x) ? v : Vec::zero(x.dim); };
  f.bound_hint = v.norm();
  f.description = "constant";
  if (dom.kind() == Domain::Kind::disk) {
    f.tail_from = dom.center().norm() + dom.radius();
    f.tail_c = 0.0;
  } else {
    f.tail_from = 0.0;
    f.tail_c = v.norm();
    f.tail_p = 0.0;
  }
  return f;
}

DriftField drift_bump(const Vec& center, double radius, const Vec& amplitude,
                      const Domain& dom) {
  DriftField f;
  f.b = [=](const Vec& x) {
    if (!dom.contains(x)) return Vec::zero(x.dim);
    double w = (x - center).norm2() / (radius * radius);
    if (w >= 1.0) return Vec::zero(x.dim);
    return amplitude * std::exp(1.0 - 1.0 / (1.0 - w));
  };
  f.bound_hint = amplitude.norm();
  f.description = "bump";
  f.tail_from = center.norm() + radius;
  f.tail_c = 0.0;
  return f;
}

DriftField drift_singular(const Vec& y0, double p, double kappa,
                          const Domain& dom) {
  if (!(p > 0.0) || !(p < 2.0))
    throw std::domain_error("drift_singular: exponent must lie in (0,2)");
  DriftField f;
  f.b = [=](const Vec& x) {
    if (!dom.contains(x)) return Vec::zero(x.dim);
    Vec r = x - y0;
    double n = r.norm();
    if (n < 1e-300) return Vec::zero(x.dim);
    return r * (kappa * std::pow(n, -p - 1.0));
  };
  f.description = "singular";
  f.pole = y0;
  f.pole_p = p;
  f.pole_kappa = kappa;
  // for |y| >= 4(1+|y0|): |y-y0| >= 3|y|/4, so |b| <= kappa (4/3)^p |y|^{-p}
  f.tail_from = 4.0 * (1.0 + y0.norm());
  f.tail_c = kappa * std::pow(0.75, -p);
  f.tail_p = p;
  return f;
}

double kato_modulus(const DriftField& b, const Domain& dom,
                    const StableParams& p, double r,
                    const std::vector<Vec>& probes, const QuadSpec& q) {
  p.validate();
  p.require_supercritical();
  if (p.d != 2) throw std::domain_error("kato_modulus: d = 2 only");
  if (!(r > 0.0)) throw std::domain_error("kato_modulus: r must be > 0");
  const int nth = 128;
  double best = 0.0;
  std::vector<Vec> all = probes;
  if (b.pole && dom.contains(*b.pole)) all.push_back(*b.pole);
  for (const Vec& x : all) {
    if (!dom.contains(x)) continue;
    double v = radial_integral(b, dom, x, r, p.alpha, pole_shift(b, x), nth, q);
    best = std::max(best, v);
  }
  return best;
}

double beta_criterion(const DriftField& b, const Domain& dom,
                      const StableParams& p, double beta, double t,
                      const std::vector<Vec>& probes, const QuadSpec& q) {
  p.validate();
  p.require_supercritical();
  if (p.d != 2) throw std::domain_error("beta_criterion: d = 2 only");
  if (!(beta > (p.alpha - 1.0) / p.alpha))
    throw std::domain_error("beta_criterion: beta must exceed (alpha-1)/alpha");
  if (!(t > 0.0)) throw std::domain_error("beta_criterion: t must be > 0");

  const int nth = 128;
  const double alpha = p.alpha;
  const double sstar = std::pow(t, 1.0 / alpha);

  double best = 0.0;
  std::vector<Vec> all = probes;
  if (b.pole && dom.contains(*b.pole)) all.push_back(*b.pole);
  for (const Vec& x : all) {
    if (!dom.contains(x)) continue;
    double shift = pole_shift(b, x);
    double inner = radial_integral(b, dom, x, sstar, alpha, shift, nth, q);
    if (inner == kInf) return kInf;

    // outer: t^beta int_{s*}^{S} s^{alpha-2-a beta} A(s) ds, log variable,
    // split at the coverage break radii, plus the analytic tail bound past S
    // from the field's decay metadata
    double S = std::max({4.0 * sstar, b.tail_from, 8.0});
    auto f = [&](double v) {
      double s = std::exp(v);
      return angular_integral(b, dom, x, s, nth) *
             std::pow(s, alpha - 1.0 - alpha * beta);
    };
    double v_lo = std::log(sstar), v_hi = std::log(S);
    double v_partial = v_hi;
    std::vector<double> cuts = {v_lo, v_hi};
    for (double sb : coverage_breaks(dom, x)) {
      double v = std::log(sb);
      if (v > v_lo && v < v_hi) {
        cuts.push_back(v);
        v_partial = std::min(v_partial, v);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    double outer = 0.0;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
      QuadSpec qi = q;
      qi.rel_tol = std::max({q.rel_tol, cuts[i] >= v_partial ? 3e-4 : 0.0,
                             b.pole ? 3e-4 : 1e-7});
      outer += integrate(f, cuts[i], cuts[i + 1], qi);
    }
    outer *= std::pow(t, beta);
    double tail = 0.0;
    if (b.tail_c > 0.0) {
      double ex = alpha - 1.0 - alpha * beta - b.tail_p;  // must be < 0
      if (ex >= 0.0) return kInf;
      tail = std::pow(t, beta) * b.tail_c * 2.0 * kPi * std::pow(S, ex) / (-ex);
    }
    best = std::max(best, inner + outer + tail);
  }
  return best;
}

}  // namespace dk
