// Drift catalog and smallness moduli. The constant-drift and point-singularity
// cases have elementary closed forms:
//   constant |b| on the whole plane:  K(r) = |b| 2 pi r^{a-1} / (a-1)
//   |b| = kappa |y-y0|^{-p}, probe at y0:  K(r) = kappa 2 pi r^{a-1-p} / (a-1-p)
// and the time-split companion, constant |b| on the whole plane:
//   B(t) = 2 pi |b| t^{(a-1)/a} (1/(a-1) + 1/(a b + 1 - a)).
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "driftkernel/kato.hpp"

using namespace dk;

namespace {

constexpr double kTwoPi = 2.0 * kPi;

StableParams sp(double alpha) {
  StableParams p;
  p.d = 2;
  p.alpha = alpha;
  return p;
}

double const_k(double alpha, double bnorm, double r) {
  return bnorm * kTwoPi * std::pow(r, alpha - 1.0) / (alpha - 1.0);
}

double sing_k(double alpha, double kappa, double p, double r) {
  return kappa * kTwoPi * std::pow(r, alpha - 1.0 - p) / (alpha - 1.0 - p);
}

double const_beta(double alpha, double beta, double bnorm, double t) {
  double c = 1.0 / (alpha - 1.0) + 1.0 / (alpha * beta + 1.0 - alpha);
  return kTwoPi * bnorm * std::pow(t, (alpha - 1.0) / alpha) * c;
}

}  // namespace

TEST_CASE("constant drift, whole plane: closed-form modulus") {
  Domain whole = Domain::whole_plane();
  DriftField b = drift_constant(Vec{0.3, -0.4}, whole);  // |b| = 0.5
  std::vector<Vec> probes = {Vec{0.0, 0.0}, Vec{3.0, 4.0}};
  for (double alpha : {1.2, 1.5, 1.8}) {
    for (double r : {0.25, 1.0, 2.0}) {
      double k = kato_modulus(b, whole, sp(alpha), r, probes);
      CHECK(k == doctest::Approx(const_k(alpha, 0.5, r)).epsilon(1e-8));
    }
  }
}

TEST_CASE("constant drift: modulus is linear in |b| and scales as r^{a-1}") {
  Domain whole = Domain::whole_plane();
  StableParams p = sp(1.5);
  std::vector<Vec> probes = {Vec{0.0, 0.0}};
  double k1 = kato_modulus(drift_constant(Vec{1.0, 0.0}, whole), whole, p, 1.0, probes);
  double k3 = kato_modulus(drift_constant(Vec{0.0, 3.0}, whole), whole, p, 1.0, probes);
  CHECK(k3 == doctest::Approx(3.0 * k1).epsilon(1e-10));
  CHECK(k1 == doctest::Approx(4.0 * kPi).epsilon(1e-8));  // 2 pi / (a-1), a = 3/2

  double k4 = kato_modulus(drift_constant(Vec{1.0, 0.0}, whole), whole, p, 4.0, probes);
  CHECK(k4 / k1 == doctest::Approx(std::pow(4.0, 0.5)).epsilon(1e-8));
}

TEST_CASE("constant drift: co-vanishing along a dyadic radius sequence") {
  Domain whole = Domain::whole_plane();
  StableParams p = sp(1.2);
  DriftField b = drift_constant(Vec{0.3, 0.0}, whole);
  std::vector<Vec> probes = {Vec{0.0, 0.0}};
  double prev = kato_modulus(b, whole, p, 1.0, probes);
  double decay = std::pow(2.0, -(p.alpha - 1.0));
  for (int j = 1; j <= 12; ++j) {
    double cur = kato_modulus(b, whole, p, std::pow(2.0, -j), probes);
    CHECK(cur < prev);
    CHECK(cur / prev == doctest::Approx(decay).epsilon(1e-7));
    prev = cur;
  }
  CHECK(prev < 0.2 * kato_modulus(b, whole, p, 1.0, probes));
}

TEST_CASE("zero drift has zero modulus") {
  Domain whole = Domain::whole_plane();
  double k = kato_modulus(drift_zero(), whole, sp(1.5), 1.0, {Vec{0.0, 0.0}});
  CHECK(k == 0.0);
}

TEST_CASE("probes outside the domain are ignored; empty effective set gives 0") {
  Domain disk = Domain::disk(Vec{0.0, 0.0}, 1.0);
  DriftField b = drift_constant(Vec{1.0, 0.0}, disk);
  double k = kato_modulus(b, disk, sp(1.5), 0.5, {Vec{10.0, 0.0}});
  CHECK(k == 0.0);
}

TEST_CASE("domain masking: disk-supported drift caps the modulus at the disk") {
  // probe at the disk center: rings of radius s <= R are fully covered and
  // rings beyond R contribute nothing, so K(r) freezes at K(R) for r >= R
  Domain disk = Domain::disk(Vec{0.0, 0.0}, 1.0);
  StableParams p = sp(1.5);
  DriftField b = drift_constant(Vec{0.0, 1.0}, disk);
  std::vector<Vec> probes = {Vec{0.0, 0.0}};

  double inside = kato_modulus(b, disk, p, 0.5, probes);
  CHECK(inside == doctest::Approx(const_k(1.5, 1.0, 0.5)).epsilon(1e-8));

  double capped = kato_modulus(b, disk, p, 3.0, probes);
  CHECK(capped == doctest::Approx(const_k(1.5, 1.0, 1.0)).epsilon(1e-8));
  CHECK(capped < const_k(1.5, 1.0, 3.0));

  // off-center probe: rings past R - d are only partly covered, so the value
  // sits strictly between the fully-covered closed forms at those two radii
  double off = kato_modulus(b, disk, p, 1.0, {Vec{0.5, 0.0}});
  CHECK(off > const_k(1.5, 1.0, 0.5));
  CHECK(off < const_k(1.5, 1.0, 1.0));
  CHECK(off < kato_modulus(b, disk, p, 1.5, {Vec{0.5, 0.0}}));
}

TEST_CASE("singular drift: closed-form modulus at the pole") {
  Domain whole = Domain::whole_plane();
  Vec pole{0.5, -0.25};
  for (auto [alpha, pw] : {std::pair{1.8, 0.3}, {1.5, 0.45}, {1.2, 0.1}}) {
    DriftField b = drift_singular(pole, pw, 0.7, whole);
    // the pole is appended to the probe set automatically
    double k = kato_modulus(b, whole, sp(alpha), 0.5, {Vec{2.0, 2.0}});
    CHECK(k == doctest::Approx(sing_k(alpha, 0.7, pw, 0.5)).epsilon(1e-6));
  }
}

TEST_CASE("singular drift at or past the critical exponent diverges") {
  Domain whole = Domain::whole_plane();
  StableParams p = sp(1.5);
  for (double pw : {0.5, 0.9}) {  // alpha - 1 = 0.5
    DriftField b = drift_singular(Vec{0.0, 0.0}, pw, 1.0, whole);
    double k = kato_modulus(b, whole, p, 0.5, {Vec{0.0, 0.0}});
    CHECK(std::isinf(k));
  }
}

TEST_CASE("singular drift with the pole outside the domain stays finite") {
  Domain disk = Domain::disk(Vec{0.0, 0.0}, 1.0);
  DriftField b = drift_singular(Vec{5.0, 0.0}, 1.2, 1.0, disk);
  double k = kato_modulus(b, disk, sp(1.5), 0.5, {Vec{0.0, 0.0}});
  CHECK(std::isfinite(k));
  CHECK(k > 0.0);
  // |b| <= kappa / 3.5^{1.2} on the ball of radius 1/2 around the center
  CHECK(k < const_k(1.5, std::pow(3.5, -1.2), 0.5) * 1.001);
}

TEST_CASE("modulus takes the sup over probes") {
  Domain whole = Domain::whole_plane();
  StableParams p = sp(1.5);
  DriftField b = drift_singular(Vec{0.0, 0.0}, 0.45, 1.0, whole);
  double far = kato_modulus(b, whole, p, 0.25, {Vec{6.0, 0.0}});
  double at_pole = sing_k(1.5, 1.0, 0.45, 0.25);
  // sup includes the auto-added pole, which dominates any far probe
  CHECK(far == doctest::Approx(at_pole).epsilon(1e-6));
  CHECK(far > kTwoPi * std::pow(6.25, -0.45) * std::pow(0.25, 0.5) / 0.5 * 0.5);
}

TEST_CASE("bump drift: modulus bounded by the constant-drift value") {
  Domain whole = Domain::whole_plane();
  StableParams p = sp(1.5);
  Vec c{0.0, 0.0};
  DriftField b = drift_bump(c, 1.0, Vec{0.0, 2.0}, whole);
  CHECK(b.bound_hint == doctest::Approx(2.0));

  double small = kato_modulus(b, whole, p, 0.2, {c});
  double cap = const_k(1.5, 2.0, 0.2);
  CHECK(small < cap);
  CHECK(small > 0.95 * cap);  // profile is within 4.2% of its peak out to w = 0.04

  // far outside the support the field vanishes identically
  double outside = kato_modulus(b, whole, p, 0.5, {Vec{8.0, 0.0}});
  CHECK(outside == 0.0);
}

TEST_CASE("parameter validation") {
  Domain whole = Domain::whole_plane();
  DriftField b = drift_constant(Vec{1.0, 0.0}, whole);
  std::vector<Vec> probes = {Vec{0.0, 0.0}};

  CHECK_THROWS_AS(kato_modulus(b, whole, sp(1.5), 0.0, probes), std::domain_error);
  CHECK_THROWS_AS(kato_modulus(b, whole, sp(1.5), -1.0, probes), std::domain_error);
  CHECK_THROWS_AS(kato_modulus(b, whole, sp(0.9), 1.0, probes), std::domain_error);
  CHECK_THROWS_AS(kato_modulus(b, whole, sp(1.0), 1.0, probes), std::domain_error);
  StableParams d3 = sp(1.5);
  d3.d = 3;
  CHECK_THROWS_AS(kato_modulus(b, whole, d3, 1.0, probes), std::domain_error);

  CHECK_THROWS_AS(drift_singular(Vec{0.0, 0.0}, 0.0, 1.0, whole), std::domain_error);
  CHECK_THROWS_AS(drift_singular(Vec{0.0, 0.0}, 2.0, 1.0, whole), std::domain_error);

  // time-split criterion: exponent window and time positivity
  CHECK_THROWS_AS(beta_criterion(b, whole, sp(1.5), 1.0 / 3.0, 0.5, probes),
                  std::domain_error);
  CHECK_THROWS_AS(beta_criterion(b, whole, sp(1.5), 0.5, 0.0, probes),
                  std::domain_error);
}

TEST_CASE("time-split criterion: closed form for constant drift") {
  Domain whole = Domain::whole_plane();
  DriftField b = drift_constant(Vec{0.3, 0.0}, whole);
  std::vector<Vec> probes = {Vec{0.0, 0.0}};
  for (auto [alpha, beta] : {std::pair{1.5, 0.5}, {1.2, 0.3}, {1.8, 0.8}}) {
    for (double t : {0.5, 0.05}) {
      double v = beta_criterion(b, whole, sp(alpha), beta, t, probes);
      CHECK(v == doctest::Approx(const_beta(alpha, beta, 0.3, t)).epsilon(1e-6));
    }
  }
}

TEST_CASE("time-split criterion: co-vanishing along a dyadic time sequence") {
  Domain whole = Domain::whole_plane();
  StableParams p = sp(1.5);
  DriftField b = drift_constant(Vec{0.3, 0.0}, whole);
  std::vector<Vec> probes = {Vec{0.0, 0.0}};
  double prev = beta_criterion(b, whole, p, 0.5, 1.0, probes);
  double decay = std::pow(4.0, -(p.alpha - 1.0) / p.alpha);
  for (int j = 1; j <= 6; ++j) {
    double cur = beta_criterion(b, whole, p, 0.5, std::pow(4.0, -j), probes);
    CHECK(cur < prev);
    CHECK(cur / prev == doctest::Approx(decay).epsilon(1e-6));
    prev = cur;
  }
}

TEST_CASE("time-split criterion: disk-supported drift, probe at the center") {
  // rings past the disk radius R = 1 are empty, so the outer leg truncates:
  //   B(t) = 2 pi |b| [ s*^{a-1}/(a-1) + t^b (s*^{a-1-ab} - 1)/(ab+1-a) ]
  Domain disk = Domain::disk(Vec{0.0, 0.0}, 1.0);
  DriftField b = drift_constant(Vec{0.0, 1.0}, disk);
  double alpha = 1.5, beta = 0.5, t = 0.2;
  double sstar = std::pow(t, 1.0 / alpha);
  double exact =
      kTwoPi * (std::pow(sstar, 0.5) / 0.5 +
                std::pow(t, beta) * (std::pow(sstar, -0.25) - 1.0) / 0.25);
  double v = beta_criterion(b, disk, sp(alpha), beta, t, {Vec{0.0, 0.0}});
  CHECK(v == doctest::Approx(exact).epsilon(1e-7));
}

TEST_CASE("time-split criterion: singular field is bracketed by its closed form") {
  // probe at the pole: exact value
  //   kappa 2 pi t^{(a-1-p)/a} [ 1/(a-1-p) + 1/(ab+1-a+p) ];
  // past the numeric horizon the implementation switches to the field's decay
  // bound, which overestimates slightly, so the result lands in [exact, 1.01 exact]
  Domain whole = Domain::whole_plane();
  double alpha = 1.8, beta = 0.8, pw = 0.3, kappa = 0.7, t = 0.5;
  DriftField b = drift_singular(Vec{0.0, 0.0}, pw, kappa, whole);
  double e1 = alpha - 1.0 - pw, e2 = alpha * beta + 1.0 - alpha + pw;
  double exact = kappa * kTwoPi * std::pow(t, e1 / alpha) * (1.0 / e1 + 1.0 / e2);
  double v = beta_criterion(b, whole, sp(alpha), beta, t, {});
  CHECK(v >= exact * (1.0 - 1e-6));
  CHECK(v <= exact * 1.01);
}

TEST_CASE("time-split criterion: divergent cases propagate to +inf") {
  Domain whole = Domain::whole_plane();
  // pole at criticality
  DriftField b = drift_singular(Vec{0.0, 0.0}, 0.6, 1.0, whole);
  CHECK(std::isinf(beta_criterion(b, whole, sp(1.5), 0.9, 0.5, {})));
}
