#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "driftkernel/quadrature.hpp"
#include "driftkernel/types.hpp"

using namespace dk;

TEST_CASE("adaptive rule reproduces elementary closed forms") {
  CHECK(std::abs(integrate([](double x) { return x * x; }, 0.0, 1.0) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(integrate([](double x) { return std::sin(x); }, 0.0, kPi) - 2.0) < 1e-10);
  CHECK(std::abs(integrate([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1.0) -
                 kPi / 4.0) < 1e-12);
  // exponential over a long range
  CHECK(std::abs(integrate([](double x) { return std::exp(-x); }, 0.0, 40.0) - 1.0) < 1e-9);
}

TEST_CASE("degenerate interval integrates to zero") {
  CHECK(integrate([](double) { return 1.0; }, 2.0, 2.0) == 0.0);
  CHECK(integrate([](double) { return 1.0; }, 3.0, 2.0) == 0.0);
}

TEST_CASE("integrate_nothrow reports the achieved accuracy") {
  QuadSpec q;
  double ach = -1.0;
  double v = integrate_nothrow([](double x) { return std::cos(x); }, 0.0, 1.0, q, &ach);
  CHECK(std::abs(v - std::sin(1.0)) < 1e-12);
  CHECK(ach >= 0.0);
  CHECK(ach < q.rel_tol);
}

TEST_CASE("graded panels: weights partition the interval") {
  for (int panels : {2, 6, 17, 40}) {
    Mesh1D m = graded_panels(-1.5, 2.25, panels, 2.5);
    REQUIRE(m.x.size() == m.w.size());
    double sum = 0.0;
    for (size_t i = 0; i < m.w.size(); ++i) {
      sum += m.w[i];
      CHECK(m.x[i] > -1.5);
      CHECK(m.x[i] < 2.25);
      CHECK(m.w[i] > 0.0);
    }
    CHECK(std::abs(sum - 3.75) < 1e-12);
  }
}

TEST_CASE("graded panels resolve endpoint singularities") {
  // int_0^1 x^{-1/2} dx = 2; the self-similar first panel carries the error
  Mesh1D m = graded_panels(0.0, 1.0, 40, 3.0);
  double acc = 0.0;
  for (size_t i = 0; i < m.x.size(); ++i) acc += m.w[i] / std::sqrt(m.x[i]);
  CHECK(std::abs(acc - 2.0) < 4e-3);
  // steeper grading shrinks the endpoint error
  Mesh1D m4 = graded_panels(0.0, 1.0, 40, 4.0);
  double acc4 = 0.0;
  for (size_t i = 0; i < m4.x.size(); ++i) acc4 += m4.w[i] / std::sqrt(m4.x[i]);
  CHECK(std::abs(acc4 - 2.0) < std::abs(acc - 2.0));

  // int_0^1 log x dx = -1
  double lg = 0.0;
  for (size_t i = 0; i < m.x.size(); ++i) lg += m.w[i] * std::log(m.x[i]);
  CHECK(std::abs(lg + 1.0) < 1e-3);
}

TEST_CASE("graded panels cluster toward both endpoints") {
  Mesh1D m = graded_panels(0.0, 1.0, 10, 2.0);
  // first and last nodes hug the ends much tighter than uniform spacing
  CHECK(m.x.front() < 0.01);
  CHECK(m.x.back() > 0.99);
  double mid_gap = 0.0;
  for (size_t i = 1; i < m.x.size(); ++i)
    if (m.x[i - 1] < 0.5 && m.x[i] >= 0.5) mid_gap = m.x[i] - m.x[i - 1];
  CHECK(mid_gap > m.x.front());
}

TEST_CASE("graded panels on malformed input give an empty mesh") {
  CHECK(graded_panels(1.0, 1.0, 4, 2.0).x.empty());
  CHECK(graded_panels(2.0, 1.0, 4, 2.0).x.empty());
  CHECK(graded_panels(0.0, 1.0, 0, 2.0).x.empty());
}

TEST_CASE("pchip: exact at nodes, exact on linear data") {
  std::vector<double> x = {0.0, 0.7, 1.1, 2.0, 3.5};
  std::vector<double> y;
  for (double xi : x) y.push_back(2.0 * xi - 1.0);
  Pchip p(x, y);
  for (size_t i = 0; i < x.size(); ++i) CHECK(p(x[i]) == doctest::Approx(y[i]).epsilon(1e-15));
  for (double t : {0.1, 0.9, 1.7, 3.0})
    CHECK(p(t) == doctest::Approx(2.0 * t - 1.0).epsilon(1e-13));
}

TEST_CASE("pchip: monotone data stays monotone, no overshoot") {
  std::vector<double> x = {0.0, 1.0, 2.0, 3.0, 4.0};
  std::vector<double> y = {0.0, 0.1, 0.2, 5.0, 5.1};  // sharp knee
  Pchip p(x, y);
  double prev = p(0.0);
  for (int k = 1; k <= 400; ++k) {
    double cur = p(4.0 * k / 400.0);
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }
  CHECK(p(3.5) <= 5.1);
  CHECK(p(0.5) >= 0.0);
}

TEST_CASE("pchip clamps outside the node range") {
  Pchip p({0.0, 1.0, 2.0}, {1.0, 3.0, 2.0});
  CHECK(p(-5.0) == 1.0);
  CHECK(p(10.0) == 2.0);
}

TEST_CASE("pchip rejects malformed nodes") {
  CHECK_THROWS_AS(Pchip({1.0, 0.5}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Pchip({0.0, 0.0}, {0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Pchip({0.0, 1.0}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(Pchip({0.0}, {0.0}), std::invalid_argument);
}
