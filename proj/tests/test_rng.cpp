#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "driftkernel/rng.hpp"

using namespace dk;

TEST_CASE("philox blocks are pure functions of the counter") {
  uint32_t a[4], b[4];
  Philox::block(42, 7, 1000, 3, a);
  Philox::block(42, 7, 1000, 3, b);
  for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("philox blocks change when any address component changes") {
  uint32_t base[4];
  Philox::block(42, 7, 1000, 3, base);
  auto differs = [&](uint64_t seed, uint64_t path, uint64_t step, uint32_t blk) {
    uint32_t out[4];
    Philox::block(seed, path, step, blk, out);
    for (int i = 0; i < 4; ++i)
      if (out[i] != base[i]) return true;
    return false;
  };
  CHECK(differs(43, 7, 1000, 3));
  CHECK(differs(42, 8, 1000, 3));
  CHECK(differs(42, 7, 1001, 3));
  CHECK(differs(42, 7, 1000, 4));
  // high halves of path/step are part of the address too
  CHECK(differs(42, 7 | (1ull << 40), 1000, 3));
  CHECK(differs(42, 7, 1000 | (1ull << 40), 3));
}

TEST_CASE("streams replay identically and stay in (0,1)") {
  RngStream s1(9, 5, 2), s2(9, 5, 2);
  for (int i = 0; i < 1000; ++i) {
    double u = s1.uniform();
    CHECK(u == s2.uniform());
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("distinct paths give decorrelated streams") {
  const int n = 20000;
  RngStream a(1, 0, 0), b(1, 1, 0);
  double sab = 0, sa = 0, sb = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    double x = a.uniform(), y = b.uniform();
    sab += x * y;
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
  }
  double cov = sab / n - (sa / n) * (sb / n);
  double va = saa / n - (sa / n) * (sa / n);
  double vb = sbb / n - (sb / n) * (sb / n);
  double corr = cov / std::sqrt(va * vb);
  CHECK(std::abs(corr) < 0.03);
  // uniform moments
  CHECK(std::abs(sa / n - 0.5) < 0.01);
  CHECK(std::abs(va - 1.0 / 12.0) < 0.005);
}

TEST_CASE("normal pairs have standard moments") {
  const int n = 200000;
  RngStream s(123, 0, 0);
  double sum = 0, sum2 = 0, sum3 = 0;
  for (int i = 0; i < n / 2; ++i) {
    double z0, z1;
    s.normal_pair(z0, z1);
    for (double z : {z0, z1}) {
      sum += z;
      sum2 += z * z;
      sum3 += z * z * z;
    }
  }
  double mean = sum / n, var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.012);       // ~5 sigma at this n
  CHECK(std::abs(var - 1.0) < 0.025);
  CHECK(std::abs(sum3 / n) < 0.05);
}

TEST_CASE("normal pair is the advertised transform of two uniforms") {
  RngStream raw(77, 3, 1), tf(77, 3, 1);
  double u1 = raw.uniform(), u2 = raw.uniform();
  double z0, z1;
  tf.normal_pair(z0, z1);
  double r = std::sqrt(-2.0 * std::log(u1));
  CHECK(z0 == doctest::Approx(r * std::cos(2.0 * kPi * u2)).epsilon(1e-15));
  CHECK(z1 == doctest::Approx(r * std::sin(2.0 * kPi * u2)).epsilon(1e-15));
}

TEST_CASE("streams do not collide across a path block") {
  // 64-bit words sampled from different paths should all be distinct
  std::set<uint64_t> seen;
  for (uint64_t p = 0; p < 2000; ++p) {
    RngStream s(5, p, 0);
    uint64_t w = uint64_t(s.uniform() * 9007199254740992.0);
    seen.insert(w);
  }
  CHECK(seen.size() == 2000);
}
