#pragma once

#include <functional>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "driftkernel/geometry.hpp"
#include "driftkernel/kato.hpp"
#include "driftkernel/report.hpp"
#include "driftkernel/stable.hpp"

namespace dk {

// Picard iteration for the drift-perturbed kernel,
//
//   p^b = p0 + sum_{k>=1} p_k,
//   p_k(t,x,y) = int_0^t int_D p_{k-1}(t-s,x,z) b(z).grad_z p0(s,z,y) dz ds,
//
// tabulated on a space/time grid for one target y at a time. Space integrals
// run over the interior lattice; the base-kernel factor is applied through
// radial stencils over lattice offsets, so each step is a weighted stack of
// discrete convolutions. Time integrals use panels graded toward both
// endpoints; the exponent is fixed so the s^{-1/alpha} endpoint behaviour of
// the gradient factor is integrated with O(panel) error.
//
// Sub-lattice transients: below s_res ~ 9 (h/2pi)^alpha the kernel at time s
// is narrower than a cell and a raw lattice sum misrepresents it. Stencils
// are therefore renormalized to preserve discrete mass (value) and the first
// moment (gradient), and analytic gradient slices get the matching moment
// correction, so short-time slabs contribute their continuum limit instead of
// sampling noise. Residual effects are recorded in SeriesDiagnostics.

enum class SourceKind {
  free_kernel,  // unperturbed whole-plane kernel, table-backed
  envelope,     // q~(t,x) q~(t,y) p0(t,y-x): a Dirichlet surrogate, not the
                // killed kernel itself; runs built on it are labeled as such
  sampled,      // externally estimated surface (path simulation); usable as a
                // tabulated field but not as the recursion's base factor
};

const char* to_string(SourceKind s);

struct GridSpec {
  StableParams params;
  Domain domain;
  double T = 1.0;                // horizon; time nodes live in (0, T]
  std::vector<double> t_nodes;   // increasing, geometric toward 0
  InteriorGrid space;
  int s_panels = 6;              // graded panels per inner time integral
  double s_grading = 2.5;
  double s_res = 0.0;            // lattice time-resolution scale 9 (h/2pi)^alpha
  double space_tail = 0.0;       // free-kernel mass outside the box at t = T
  std::shared_ptr<const RadialKernelTable> table;

  int n_pts() const { return int(space.points.size()); }
  int n_t() const { return int(t_nodes.size()); }
};

// Box lattice [lo, hi]^2 clipped to the domain, n_t geometric time nodes on
// [T/t_span, T]. Throws std::domain_error on malformed input.
std::shared_ptr<const GridSpec> make_grid(const StableParams& params,
                                          const Domain& domain, const Vec& box_lo,
                                          const Vec& box_hi, double h, double T,
                                          int n_t = 8, int s_panels = 6,
                                          double t_span = 64.0);

// One tabulated kernel slot: values and source-point gradients of
// k(t, x, target) at every (t_i, x_j). Off-node evaluation is monotone cubic
// in log t along columns and bilinear across the lattice, exact at nodes.
struct KernelField {
  std::shared_ptr<const GridSpec> grid;
  Vec target{0.0, 0.0};
  SourceKind source = SourceKind::free_kernel;
  bool signed_values = false;  // Picard terms alternate in sign
  bool analytic_base = false;  // evaluate straight from the table/envelope
                               // formula at off-node times (set on base slots)

  // row-major [n_t][n_pts]
  std::vector<double> val, gx, gy;
  // log-t pchip slopes, same shape; rebuilt by finalize()
  std::vector<double> sval, sgx, sgy;

  int n_t() const { return grid ? grid->n_t() : 0; }
  int n_pts() const { return grid ? grid->n_pts() : 0; }
  double node_value(int i, int j) const { return val[size_t(i) * n_pts() + j]; }
  Vec node_gradient(int i, int j) const {
    size_t k = size_t(i) * n_pts() + j;
    return Vec{gx[k], gy[k]};
  }

  // interpolants; value/gradient clamp t to the node range, bilinear treats
  // cells outside the lattice (or without interior coverage) as zero
  double value(double t, const Vec& x) const;
  Vec gradient(double t, const Vec& x) const;
  double column_value(double t, int j) const;
  Vec column_gradient(double t, int j) const;

  double mass(int i) const;  // sum_j w_j val(i,j), raw lattice mass

  void finalize();  // (re)build the log-t slopes
};

// Tabulate the base slot p0(., ., target). `sampled_fn` supplies the surface
// for SourceKind::sampled (gradients are filled by lattice differencing);
// passing it for other kinds, or omitting it for sampled, throws
// std::invalid_argument.
KernelField tabulate_base_kernel(
    std::shared_ptr<const GridSpec> grid, const Vec& target, SourceKind source,
    const std::function<double(double, const Vec&)>& sampled_fn = {});

// One Picard step with the previous term in the first slot,
//   p_k(t,x,y) = int int p_{k-1}(t-s,x,z) b(z).grad_z p0(s,z,y) dz ds.
// Uses translation invariance to read p_{k-1}(t-s,x,z) from the per-target
// field, so it requires the whole plane; serves as an independent cross-check
// of the adjoint form. Output carries values only.
KernelField picard_step(const KernelField& base, const KernelField& prev,
                        const DriftField& b, int workers = 1);

// Same step with the base in the first slot,
//   p_k(t,x,y) = int int p0(t-s,x,z) b(z).grad_z p_{k-1}(s,z,y) dz ds.
// Works on any domain (base free or envelope), and accumulates grad_x p_k by
// differentiating the first slot, so the output is again a full field.
KernelField picard_step_adjoint(const KernelField& base, const KernelField& prev,
                                const DriftField& b, int workers = 1);

// C_emp(t) = max over lattice x of
//   int_0^t int p0(t-s,x,z) |b(z)| |grad_z p0(s,z,y)| dz ds / p0(t,x,y),
// the empirical contraction factor of the step at horizon t (y = base
// target). Linear in |b|; scales like t^{(alpha-1)/alpha} on the whole plane.
double contraction_estimate(const KernelField& base, const DriftField& b,
                            double t, int workers = 1);

struct SeriesDiagnostics {
  std::vector<double> r_k;      // sup_j,i |p_k| / p0, k = 1..k_used
  double c_emp = 0.0;           // contraction_estimate at T
  int k_used = 0;
  double residual_bound = 0.0;  // r_K c/(1-c), bound on the dropped tail
  double space_tail = 0.0;      // from GridSpec
  double s_res = 0.0;           // from GridSpec
  double clamped_s_mass = 0.0;  // share of the horizon row's inner time mass
                                // below the first node, where tabulated terms
                                // clamp (or sub-lattice slabs were dropped)
  bool geometric_ok = true;     // r_{k+1} <= 1.2 c_emp r_k held throughout
};

// Run the iteration until r_k/(1-c) < tol or k_max steps, return the summed
// field (with gradients) and diagnostics. Throws ContractionError when
// c_emp >= 1, since the series has no usable contraction there.
std::pair<KernelField, SeriesDiagnostics> sum_series(const KernelField& base,
                                                     const DriftField& b,
                                                     int k_max, double tol,
                                                     int workers = 1);

// grad_x p^b by term-wise differentiation of the first slot; same engine as
// sum_series, returned field's gx/gy columns are the series gradient.
KernelField gradient_series(const KernelField& base, const DriftField& b,
                            int k_max, double tol, int workers = 1);

// Re-inserts the summed field into the fixed-point equation:
//   p^b =? p0 + int int p0(t-s,x,z) b(z).grad_z p^b(s,z,y) dz ds,
// reporting the max relative defect over nodes where p0 is not negligible.
CheckReport dual_duhamel_check(const KernelField& base, const KernelField& series,
                               const DriftField& b, double tol, int workers = 1);

// Columnar dumps (doubles as shortest round-trip strings).
std::string to_json(const KernelField& f, int indent = -1);
std::string to_json(const SeriesDiagnostics& d, int indent = -1);
// one time slice as CSV: x,y,w,val,gx,gy
void write_field_csv(const KernelField& f, int t_index, std::ostream& os);

}  // namespace dk
