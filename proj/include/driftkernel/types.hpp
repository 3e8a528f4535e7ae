#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace dk {

// Small fixed-capacity point type. Desk scale is d=2; anything up to 4 works
// for the radial/lattice machinery. Angular quadratures require d=2.
struct Vec {
  std::array<double, 4> c{};
  int dim = 2;

  Vec() = default;
  Vec(double x, double y) : c{x, y, 0.0, 0.0}, dim(2) {}
  Vec(double x, double y, double z) : c{x, y, z, 0.0}, dim(3) {}
  static Vec zero(int d) {
    Vec v;
    v.dim = d;
    return v;
  }
  double& operator[](int i) { return c[static_cast<size_t>(i)]; }
  double operator[](int i) const { return c[static_cast<size_t>(i)]; }

  Vec operator+(const Vec& o) const {
    Vec r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] += o.c[i];
    return r;
  }
  Vec operator-(const Vec& o) const {
    Vec r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] -= o.c[i];
    return r;
  }
  Vec operator*(double s) const {
    Vec r = *this;
    for (int i = 0; i < dim; ++i) r.c[i] *= s;
    return r;
  }
  double dot(const Vec& o) const {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += c[i] * o.c[i];
    return s;
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
};

inline Vec operator*(double s, const Vec& v) { return v * s; }

// Index of the isotropic stable process, symbol exp(-t|xi|^alpha).
struct StableParams {
  int d = 2;
  double alpha = 1.5;

  StableParams() = default;
  StableParams(int d_, double alpha_) : d(d_), alpha(alpha_) { validate(); }
  void validate() const {
    if (d < 1 || d > 4) throw std::domain_error("StableParams: d must be in [1,4]");
    if (!(alpha > 0.0) || !(alpha < 2.0))
      throw std::domain_error("StableParams: alpha must lie in (0,2)");
  }
  // Gradient-perturbation theory needs alpha > 1; ops that rely on it call this.
  void require_supercritical() const {
    if (!(alpha > 1.0))
      throw std::domain_error("operation requires alpha > 1");
  }
};

// Accuracy request for adaptive quadratures.
struct QuadSpec {
  double rel_tol = 1e-8;
  double abs_floor = 1e-300;  // results below this are treated as zero
  int max_depth = 15;
};

// Thrown when an adaptive rule cannot meet the requested tolerance.
class AccuracyError : public std::runtime_error {
 public:
  double requested;
  double achieved;
  AccuracyError(const std::string& what, double req, double ach)
      : std::runtime_error(what + " (requested rel " + short_g(req) +
                           ", achieved " + short_g(ach) + ")"),
        requested(req),
        achieved(ach) {}

 private:
  static std::string short_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }
};

// Thrown by the series machinery when the empirical contraction factor is >= 1.
class ContractionError : public std::runtime_error {
 public:
  double c_emp;
  explicit ContractionError(double c)
      : std::runtime_error("Duhamel series does not contract at this horizon "
                           "(empirical factor " + std::to_string(c) +
                           " >= 1); shrink the time horizon"),
        c_emp(c) {}
};

// Thrown when Monte Carlo surfaces are too noisy to use as a kernel source.
class QualityError : public std::runtime_error {
 public:
  double noise_level;
  explicit QualityError(const std::string& what, double noise)
      : std::runtime_error(what), noise_level(noise) {}
};

constexpr double kPi = 3.14159265358979323846;

}  // namespace dk
