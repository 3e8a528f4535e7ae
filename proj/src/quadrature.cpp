#include "driftkernel/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace dk {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

double integrate_nothrow(const std::function<double(double)>& f, double a,
                         double b, const QuadSpec& q, double* achieved) {
  if (!(b > a)) {
    if (achieved) *achieved = 0.0;
    return 0.0;
  }
  double err = 0.0, l1 = 0.0;
  double val = GK::integrate(f, a, b, q.max_depth, q.rel_tol, &err, &l1);
  if (achieved) {
    double scale = std::max({std::abs(val), l1 * 1e-3, q.abs_floor});
    *achieved = err / scale;
  }
  return val;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadSpec& q) {
  double ach = 0.0;
  double val = integrate_nothrow(f, a, b, q, &ach);
  // The Kronrod error estimate is conservative; refuse only on a wide miss.
  if (ach > 50.0 * q.rel_tol && std::abs(val) > q.abs_floor)
    throw AccuracyError("adaptive quadrature did not converge", q.rel_tol, ach);
  return val;
}

Mesh1D graded_panels(double a, double b, int panels, double grading) {
  // 4-point Gauss-Legendre nodes on [-1,1]
  static const double gx[4] = {-0.8611363115940526, -0.3399810435848563,
                               0.3399810435848563, 0.8611363115940526};
  static const double gw[4] = {0.3478548451374538, 0.6521451548625461,
                               0.6521451548625461, 0.3478548451374538};
  Mesh1D m;
  if (!(b > a) || panels < 1) return m;
  int half = std::max(1, panels / 2);
  double mid = 0.5 * (a + b), len = 0.5 * (b - a);
  std::vector<double> edges;
  edges.reserve(2 * half + 1);
  for (int j = 0; j <= half; ++j)
    edges.push_back(a + len * std::pow(double(j) / half, grading));
  for (int j = half - 1; j >= 0; --j)
    edges.push_back(b - (edges[j] - a));
  (void)mid;
  for (size_t p = 0; p + 1 < edges.size(); ++p) {
    double lo = edges[p], hi = edges[p + 1];
    double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (int i = 0; i < 4; ++i) {
      m.x.push_back(c + h * gx[i]);
      m.w.push_back(h * gw[i]);
    }
  }
  return m;
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  size_t n = x_.size();
  if (n != y_.size() || n < 2)
    throw std::invalid_argument("Pchip: need >= 2 matching nodes");
  for (size_t i = 1; i < n; ++i)
    if (!(x_[i] > x_[i - 1]))
      throw std::invalid_argument("Pchip: nodes must increase");
  std::vector<double> d(n - 1);
  for (size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
  m_.assign(n, 0.0);
  m_[0] = d[0];
  m_[n - 1] = d[n - 2];
  for (size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      m_[i] = 0.0;
    } else {
      // weighted harmonic mean (shape preserving)
      double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      double w0 = 2.0 * h1 + h0, w1 = h1 + 2.0 * h0;
      m_[i] = (w0 + w1) / (w0 / d[i - 1] + w1 / d[i]);
    }
  }
}

double Pchip::operator()(double x) const {
  size_t n = x_.size();
  if (x <= x_[0]) return y_[0];
  if (x >= x_[n - 1]) return y_[n - 1];
  size_t hi = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
  size_t i = hi - 1;
  double h = x_[i + 1] - x_[i], t = (x - x_[i]) / h;
  double t2 = t * t, t3 = t2 * t;
  double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * y_[i] + h * h10 * m_[i] + h01 * y_[i + 1] + h * h11 * m_[i + 1];
}

}  // namespace dk
