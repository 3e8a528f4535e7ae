#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "driftkernel/geometry.hpp"

using namespace dk;

TEST_CASE("whole plane: infinite inradius, no boundary") {
  Domain d = Domain::whole_plane();
  CHECK(std::isinf(d.signed_distance(Vec{1e9, -1e9})));
  CHECK(d.contains(Vec{0.0, 0.0}));
  CHECK(!d.bounded());
  CHECK_THROWS(d.project_to_boundary(Vec{1.0, 0.0}));
  CHECK_THROWS(d.inward_normal(Vec{1.0, 0.0}));
}

TEST_CASE("disk: exact signed distance and boundary projection") {
  Vec c{0.5, -1.0};
  Domain d = Domain::disk(c, 2.0);
  CHECK(d.bounded());
  CHECK(d.signed_distance(c) == doctest::Approx(2.0));
  CHECK(d.signed_distance(Vec{2.5, -1.0}) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(d.signed_distance(Vec{3.5, -1.0}) == doctest::Approx(-1.0));
  CHECK(d.contains(Vec{1.0, -1.0}));
  CHECK(!d.contains(Vec{4.0, 4.0}));

  Vec x{1.5, 0.0};
  Vec pb = d.project_to_boundary(x);
  CHECK((pb - c).norm() == doctest::Approx(2.0).epsilon(1e-13));
  // projection lies on the ray from the center through x
  double cross = (pb - c)[0] * (x - c)[1] - (pb - c)[1] * (x - c)[0];
  CHECK(std::abs(cross) < 1e-12);
  Vec n = d.inward_normal(x);
  CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(n.dot(c - pb) > 0.0);  // points inward
}

TEST_CASE("half plane: normalized normal, exact distance") {
  Domain d = Domain::half_plane(Vec{3.0, 4.0}, 2.0);  // n=(0.6,0.8), offset 2/5
  Vec n = d.center();
  CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-14));
  // signed distance is linear with unit slope along the normal
  Vec p0 = n * d.radius();
  CHECK(d.signed_distance(p0) == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(d.signed_distance(p0 + n * 1.25) == doctest::Approx(1.25).epsilon(1e-13));
  CHECK(d.signed_distance(p0 - n * 0.75) == doctest::Approx(-0.75).epsilon(1e-13));
  Vec far = p0 + n * 2.0 + Vec{-n[1], n[0]} * 5.0;
  Vec pb = d.project_to_boundary(far);
  CHECK(d.signed_distance(pb) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((far - pb).norm() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cell coverage: interior, exterior, straight cut") {
  Domain disk = Domain::disk(Vec{0.0, 0.0}, 2.0);
  CHECK(disk.cell_coverage(Vec{-0.1, -0.1}, 0.2) == doctest::Approx(0.04).epsilon(1e-13));
  CHECK(disk.cell_coverage(Vec{5.0, 5.0}, 0.2) == 0.0);

  // vertical boundary through a cell: exact rectangle area
  Domain hp = Domain::half_plane(Vec{1.0, 0.0}, 0.0);  // x > 0
  CHECK(hp.cell_coverage(Vec{-0.05, 0.0}, 0.2) == doctest::Approx(0.2 * 0.15).epsilon(1e-13));
  // diagonal boundary through cell corners: half the cell
  Domain diag = Domain::half_plane(Vec{1.0, 1.0}, 0.0);  // x + y > 0
  CHECK(diag.cell_coverage(Vec{-0.1, -0.1}, 0.2) == doctest::Approx(0.02).epsilon(1e-12));

  // disk cut: coverage between 0 and h^2, decreasing as the cell slides out
  double inner = disk.cell_coverage(Vec{1.9, -0.1}, 0.2);
  double outer = disk.cell_coverage(Vec{2.0, -0.1}, 0.2);
  CHECK(inner > 0.0);
  CHECK(inner < 0.04);
  CHECK(outer < inner);
}

TEST_CASE("interior grid: covered area matches the disk area") {
  Domain d = Domain::disk(Vec{0.0, 0.0}, 1.5);
  InteriorGrid g = interior_grid(d, Vec{-2.0, -2.0}, Vec{2.0, 2.0}, 0.1);
  REQUIRE(g.points.size() == g.weights.size());
  double area = 0.0;
  for (double w : g.weights) area += w;
  CHECK(area == doctest::Approx(kPi * 1.5 * 1.5).epsilon(1e-4));
  for (const Vec& p : g.points) CHECK(d.signed_distance(p) > -0.1);
}

TEST_CASE("interior grid: cell_index round-trips to points") {
  Domain d = Domain::disk(Vec{0.2, -0.3}, 1.2);
  InteriorGrid g = interior_grid(d, Vec{-1.5, -2.0}, Vec{2.0, 1.5}, 0.25);
  int found = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      int k = g.at(i, j);
      if (k < 0) continue;
      ++found;
      REQUIRE(k < int(g.points.size()));
      Vec expect{g.origin[0] + (i + 0.5) * g.h, g.origin[1] + (j + 0.5) * g.h};
      CHECK((g.points[size_t(k)] - expect).norm() < 1e-12);
    }
  CHECK(found == int(g.points.size()));
  CHECK(g.at(-1, 0) == -1);
  CHECK(g.at(g.nx, 0) == -1);
}

TEST_CASE("interior grid: whole plane covers the box exactly") {
  InteriorGrid g = interior_grid(Domain::whole_plane(), Vec{-1.0, -1.0},
                                 Vec{1.0, 1.0}, 0.25);
  CHECK(int(g.points.size()) == g.nx * g.ny);
  double area = 0.0;
  for (double w : g.weights) area += w;
  CHECK(area == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(g.layer.empty());
}

TEST_CASE("boundary layer probes hug the wall with zero weight") {
  Domain d = Domain::disk(Vec{0.0, 0.0}, 1.5);
  double h = 0.1;
  InteriorGrid g = interior_grid(d, Vec{-2.0, -2.0}, Vec{2.0, 2.0}, h);
  CHECK(!g.layer.empty());
  for (const Vec& p : g.layer) {
    double rho = d.signed_distance(p);
    CHECK(rho > 0.0);
    CHECK(rho <= 1.5 * h);
  }
}

TEST_CASE("cell weight correction: half-plane closed form") {
  // rho is exactly linear there, so the cell mean of rho^e is elementary
  Domain d = Domain::half_plane(Vec{1.0, 0.0}, 0.0);
  double e = 0.75, h = 0.1;
  for (double c0 : {0.3, 1.2}) {
    double mean = (std::pow(c0 + h / 2, 1 + e) - std::pow(c0 - h / 2, 1 + e)) /
                  ((1 + e) * h);
    double expect = mean / std::pow(c0, e);
    CHECK(cell_weight_correction(d, Vec{c0, 0.4}, h, e) ==
          doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("cell weight correction tends to 1 as the cell shrinks") {
  Domain d = Domain::disk(Vec{0.0, 0.0}, 1.5);
  double c1 = cell_weight_correction(d, Vec{0.0, 0.0}, 0.1, 0.75);
  double c2 = cell_weight_correction(d, Vec{0.0, 0.0}, 0.01, 0.75);
  CHECK(c1 > 0.9);
  CHECK(c1 < 1.0);
  CHECK(std::abs(c2 - 1.0) < std::abs(c1 - 1.0));
  CHECK(c2 == doctest::Approx(1.0).epsilon(5e-3));
  double near = cell_weight_correction(d, Vec{1.45, 0.0}, 0.1, 0.75);
  CHECK(near > 0.0);
  CHECK(near < 2.0);
}

TEST_CASE("interior sampling is deterministic and stays inside") {
  Domain d = Domain::disk(Vec{0.0, 0.0}, 1.0);
  auto a = sample_interior(d, Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 50, 7);
  auto b = sample_interior(d, Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 50, 7);
  auto c = sample_interior(d, Vec{-1.0, -1.0}, Vec{1.0, 1.0}, 50, 8);
  REQUIRE(a.size() == 50);
  REQUIRE(b.size() == 50);
  bool same = true, diff = false;
  for (size_t i = 0; i < a.size(); ++i) {
    same = same && (a[i] - b[i]).norm() == 0.0;
    diff = diff || (a[i] - c[i]).norm() > 0.0;
    CHECK(d.contains(a[i]));
  }
  CHECK(same);
  CHECK(diff);
}

TEST_CASE("interior grid rejects malformed boxes") {
  CHECK_THROWS(interior_grid(Domain::whole_plane(), Vec{1.0, 0.0}, Vec{0.0, 1.0}, 0.1));
  CHECK_THROWS(interior_grid(Domain::whole_plane(), Vec{0.0, 0.0}, Vec{1.0, 1.0}, 0.0));
  CHECK_THROWS(interior_grid(Domain::whole_plane(), Vec{0.0, 0.0}, Vec{1.0, 1.0}, -0.5));
}
