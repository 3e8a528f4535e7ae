#pragma once

#include <vector>

#include "driftkernel/types.hpp"

namespace dk {

// Open subsets of the plane used at desk scale. signed_distance is positive
// inside, negative outside, and exact for every kind (whole plane: +inf).
class Domain {
 public:
  enum class Kind { whole_plane, disk, half_plane };

  static Domain whole_plane();
  static Domain disk(const Vec& center, double radius);
  // { x : n . x > b } with |n| = 1 (n is normalized on construction)
  static Domain half_plane(const Vec& normal, double b);

  Kind kind() const { return kind_; }
  double signed_distance(const Vec& x) const;
  bool contains(const Vec& x) const { return signed_distance(x) > 0.0; }
  bool bounded() const { return kind_ == Kind::disk; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }

  // Closest boundary point and the inward unit normal at it. Whole plane has
  // no boundary; calling these on it throws.
  Vec project_to_boundary(const Vec& x) const;
  Vec inward_normal(const Vec& x) const;

  // Area of the intersection of the axis-aligned cell [lo, lo+h]^2 with the
  // domain. Exact for half planes (polygon clip); disks use corner tests plus
  // a chord quadrature on partially covered cells.
  double cell_coverage(const Vec& lo, double h) const;

 private:
  Kind kind_ = Kind::whole_plane;
  Vec center_{0.0, 0.0};   // disk center / half-plane normal
  double radius_ = 0.0;    // disk radius / half-plane offset
};

// Lattice covering of the domain restricted to a box: cell centers with
// clipped-cell quadrature weights (sum of weights = covered area), plus a
// zero-weight layer of near-boundary probe points graded toward the wall.
// cell_index maps lattice coordinates (i,j) -> position in points, or -1 for
// cells with no interior coverage; the stencil convolutions and the bilinear
// interpolation of tabulated fields rely on it.
struct InteriorGrid {
  double h = 0.0;
  Vec origin{0.0, 0.0};          // box_lo; cell (i,j) center = origin + (i+.5, j+.5) h
  int nx = 0, ny = 0;
  std::vector<Vec> points;       // cell centers that carry positive weight
  std::vector<double> weights;   // clipped cell areas
  std::vector<int> cell_index;   // nx*ny, row-major in i (x) then j (y)
  std::vector<Vec> layer;        // zero-weight probes, rho in ~[h/10, h]

  int at(int i, int j) const {
    if (i < 0 || i >= nx || j < 0 || j >= ny) return -1;
    return cell_index[size_t(i) * ny + j];
  }
};

InteriorGrid interior_grid(const Domain& d, const Vec& box_lo,
                           const Vec& box_hi, double h);

// Mean of rho^e over the cell around `center`, relative to rho(center)^e,
// on the inside part of the cell (16-point product rule). Cells far from the
// boundary return ~1; use as a weight correction when integrating functions
// that vanish like rho^e.
double cell_weight_correction(const Domain& d, const Vec& center, double h,
                              double e);

// Deterministic uniform draws from the domain restricted to the box
// (rejection from the box; Philox-backed, reproducible for fixed seed).
std::vector<Vec> sample_interior(const Domain& d, const Vec& box_lo,
                                 const Vec& box_hi, int n, uint64_t seed);

}  // namespace dk
