#include "driftkernel/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driftkernel/rng.hpp"

namespace dk {

Domain Domain::whole_plane() { return Domain{}; }

Domain Domain::disk(const Vec& center, double radius) {
  if (!(radius > 0.0)) throw std::domain_error("Domain::disk: radius must be > 0");
  Domain d;
  d.kind_ = Kind::disk;
  d.center_ = center;
  d.radius_ = radius;
  return d;
}

Domain Domain::half_plane(const Vec& normal, double b) {
  double n = normal.norm();
  if (!(n > 0.0)) throw std::domain_error("Domain::half_plane: zero normal");
  Domain d;
  d.kind_ = Kind::half_plane;
  d.center_ = normal * (1.0 / n);
  d.radius_ = b / n;
  return d;
}

double Domain::signed_distance(const Vec& x) const {
  switch (kind_) {
    case Kind::whole_plane:
      return std::numeric_limits<double>::infinity();
    case Kind::disk:
      return radius_ - (x - center_).norm();
    case Kind::half_plane:
      return center_.dot(x) - radius_;
  }
  return 0.0;
}

Vec Domain::project_to_boundary(const Vec& x) const {
  switch (kind_) {
    case Kind::disk: {
      Vec r = x - center_;
      double n = r.norm();
      if (n == 0.0) {  // center: any boundary point is closest
        Vec e{1.0, 0.0};
        return center_ + e * radius_;
      }
      return center_ + r * (radius_ / n);
    }
    case Kind::half_plane:
      return x - center_ * (center_.dot(x) - radius_);
    case Kind::whole_plane:
      break;
  }
  throw std::domain_error("project_to_boundary: domain has no boundary");
}

Vec Domain::inward_normal(const Vec& x) const {
  switch (kind_) {
    case Kind::disk: {
      Vec r = x - center_;
      double n = r.norm();
      if (n == 0.0) return Vec{-1.0, 0.0};
      return r * (-1.0 / n);
    }
    case Kind::half_plane:
      return center_;
    case Kind::whole_plane:
      break;
  }
  throw std::domain_error("inward_normal: domain has no boundary");
}

namespace {

// Area of a convex polygon clipped by the half plane {n.x > b}
// (Sutherland-Hodgman against a single line, then the shoelace formula).
double clip_area_half_plane(const std::vector<Vec>& poly, const Vec& n, double b) {
  std::vector<Vec> out;
  size_t m = poly.size();
  for (size_t i = 0; i < m; ++i) {
    const Vec& p = poly[i];
    const Vec& q = poly[(i + 1) % m];
    double dp = n.dot(p) - b, dq = n.dot(q) - b;
    if (dp >= 0.0) out.push_back(p);
    if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
      double t = dp / (dp - dq);
      out.push_back(p + (q - p) * t);
    }
  }
  double a = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    const Vec& p = out[i];
    const Vec& q = out[(i + 1) % out.size()];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * std::abs(a);
}

// Area of [x0,x1]x[y0,y1] intersected with the disk |p - c| < R:
// integrate the covered chord length over x (integrand is C^0, with kinks
// where the circle meets the horizontal edges; 200-panel midpoint is ample
// for the h << R cells used here, and the corner cases stay exact).
double cell_disk_area(double x0, double x1, double y0, double y1, const Vec& c,
                      double R) {
  int inside = 0;
  double R2 = R * R;
  for (double cx : {x0, x1})
    for (double cy : {y0, y1}) {
      double dx = cx - c[0], dy = cy - c[1];
      if (dx * dx + dy * dy < R2) ++inside;
    }
  // quick outs: cell entirely beyond the circle's bounding box
  if (x1 < c[0] - R || x0 > c[0] + R || y1 < c[1] - R || y0 > c[1] + R)
    return 0.0;
  if (inside == 4) return (x1 - x0) * (y1 - y0);

  const int n = 200;
  double hx = (x1 - x0) / n, area = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = x0 + (i + 0.5) * hx;
    double dx = x - c[0];
    double disc = R2 - dx * dx;
    if (disc <= 0.0) continue;
    double half = std::sqrt(disc);
    double lo = std::max(y0, c[1] - half), hi = std::min(y1, c[1] + half);
    if (hi > lo) area += (hi - lo) * hx;
  }
  return area;
}

}  // namespace

double Domain::cell_coverage(const Vec& lo, double h) const {
  switch (kind_) {
    case Kind::whole_plane:
      return h * h;
    case Kind::half_plane: {
      std::vector<Vec> cell = {lo, Vec{lo[0] + h, lo[1]},
                               Vec{lo[0] + h, lo[1] + h}, Vec{lo[0], lo[1] + h}};
      return clip_area_half_plane(cell, center_, radius_);
    }
    case Kind::disk:
      return cell_disk_area(lo[0], lo[0] + h, lo[1], lo[1] + h, center_, radius_);
  }
  return 0.0;
}

InteriorGrid interior_grid(const Domain& d, const Vec& box_lo, const Vec& box_hi,
                           double h) {
  if (!(h > 0.0)) throw std::domain_error("interior_grid: h must be > 0");
  if (!(box_hi[0] > box_lo[0]) || !(box_hi[1] > box_lo[1]))
    throw std::domain_error("interior_grid: empty box");
  InteriorGrid g;
  g.h = h;
  g.origin = box_lo;
  int nx = std::max(1, int(std::lround((box_hi[0] - box_lo[0]) / h)));
  int ny = std::max(1, int(std::lround((box_hi[1] - box_lo[1]) / h)));
  g.nx = nx;
  g.ny = ny;
  g.cell_index.assign(size_t(nx) * ny, -1);
  const double wfloor = 1e-14 * h * h;
  static const double kLayerDepths[] = {0.1, 0.2, 0.35, 0.55, 0.8};
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      Vec lo{box_lo[0] + i * h, box_lo[1] + j * h};
      double w = d.cell_coverage(lo, h);
      if (w <= wfloor) continue;
      Vec c{lo[0] + 0.5 * h, lo[1] + 0.5 * h};
      g.cell_index[size_t(i) * ny + j] = int(g.points.size());
      g.points.push_back(c);
      g.weights.push_back(w);
      if (d.kind() != Domain::Kind::whole_plane &&
          std::abs(d.signed_distance(c)) < h) {
        Vec b = d.project_to_boundary(c);
        Vec in = d.inward_normal(c);
        for (double s : kLayerDepths) {
          Vec p = b + in * (s * h);
          if (d.contains(p)) g.layer.push_back(p);
        }
      }
    }
  }
  return g;
}

double cell_weight_correction(const Domain& d, const Vec& center, double h,
                              double e) {
  double rc = d.signed_distance(center);
  if (!(rc > 0.0)) return 0.0;
  if (!std::isfinite(rc) || rc > 100.0 * h) return 1.0;
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                               0.6521451548625461, 0.3478548451374538};
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      Vec p{center[0] + 0.5 * h * gx[i], center[1] + 0.5 * h * gx[j]};
      double rho = d.signed_distance(p);
      if (rho <= 0.0) continue;
      double w = gw[i] * gw[j];
      num += w * std::pow(rho, e);
      den += w;
    }
  if (den == 0.0) return 0.0;
  return (num / den) / std::pow(rc, e);
}

std::vector<Vec> sample_interior(const Domain& d, const Vec& box_lo,
                                 const Vec& box_hi, int n, uint64_t seed) {
  std::vector<Vec> out;
  out.reserve(n);
  uint64_t path = 0;
  while (int(out.size()) < n) {
    RngStream rs(seed, path++, 0);
    Vec p{box_lo[0] + (box_hi[0] - box_lo[0]) * rs.uniform(),
          box_lo[1] + (box_hi[1] - box_lo[1]) * rs.uniform()};
    if (d.contains(p)) out.push_back(p);
    if (path > uint64_t(n) * 10000 + 1000000)
      throw std::runtime_error("sample_interior: acceptance rate too low");
  }
  return out;
}

}  // namespace dk
