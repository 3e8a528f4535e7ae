#pragma once

#include <functional>
#include <vector>

#include "driftkernel/types.hpp"

namespace dk {

// Adaptive Gauss-Kronrod (15-point) on [a,b]. Throws AccuracyError if the
// error estimate exceeds max(rel_tol * |I|, abs_floor) by a wide margin.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadSpec& q = {});

// Same, but failure to converge is reported through *achieved instead of a throw.
double integrate_nothrow(const std::function<double(double)>& f, double a,
                         double b, const QuadSpec& q, double* achieved);

// Nodes/weights of a composite Gauss-Legendre rule (4-point panels) on [a,b]
// with panels graded toward both endpoints by the given exponent:
// panel boundaries accumulate at a and b symmetrically, glued at the midpoint.
struct Mesh1D {
  std::vector<double> x;
  std::vector<double> w;
};
Mesh1D graded_panels(double a, double b, int panels, double grading);

// Monotone (Fritsch-Carlson) cubic interpolant. Evaluation outside the node
// range clamps to the end values.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);
  double operator()(double x) const;
  bool empty() const { return x_.empty(); }

 private:
  std::vector<double> x_, y_, m_;  // nodes, values, node slopes
};

}  // namespace dk
