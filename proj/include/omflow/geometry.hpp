#pragma once

// Tensor calculus for a time-dependent family of Riemannian metrics g(t)
// presented in a single coordinate chart.

#include "omflow/core.hpp"

#include <functional>
#include <limits>
#include <string>

namespace omflow {

/// Axis-aligned box in R^n that bounds the chart.
struct DomainBox {
  Vec lo;
  Vec hi;

  static DomainBox cube(int n, double half_width);
  static DomainBox box(const Vec& lo, const Vec& hi);

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const;
  double diameter() const;
};

using MetricFn = std::function<Mat(double t, const Vec& x)>;
using MetricDxFn = std::function<Mat(double t, const Vec& x, int k)>;
using MetricDxxFn = std::function<Mat(double t, const Vec& x, int k, int l)>;
using DistanceFn = std::function<double(double t, const Vec& x, const Vec& y)>;

/// Everything needed to build a MetricFamily. Only `dim`, `t_end`, `domain`
/// and `g` are mandatory; missing derivatives fall back to central
/// differences.
struct MetricFamilySpec {
  std::string name = "custom";
  int dim = 0;
  double t_begin = 0.0;
  double t_end = 0.0;
  DomainBox domain;
  MetricFn g;
  MetricFn dg_dt;
  MetricDxFn dg_dx;
  MetricDxxFn d2g_dx;
  DistanceFn distance;
  std::function<double(double)> injectivity_radius;
  /// True when g(t, x) does not depend on x. Lets Christoffel symbols and the
  /// Monte Carlo drift skip work; only set it when it is exactly true.
  bool spatially_constant = false;
  /// True when distance(t, x, y) equals sqrt((y-x)^T g(t) (y-x)) exactly, which
  /// lets the Monte Carlo kernel evaluate it from a precomputed table.
  bool quadratic_distance = false;
  /// Finite-difference steps; 0 selects 1e-5 * domain diameter (space) and
  /// 1e-5 * max(1, |t_end - t_begin|) (time).
  double h_x = 0.0;
  double h_t = 0.0;
};

class MetricFamily {
 public:
  MetricFamily() = default;
  explicit MetricFamily(MetricFamilySpec spec);

  int dim() const { return spec_.dim; }
  const std::string& name() const { return spec_.name; }
  double t_begin() const { return spec_.t_begin; }
  double t_end() const { return spec_.t_end; }
  const DomainBox& domain() const { return spec_.domain; }
  bool spatially_constant() const { return spec_.spatially_constant; }
  bool quadratic_distance() const { return spec_.quadratic_distance; }
  double h_x() const { return h_x_; }
  double h_t() const { return h_t_; }

  bool contains(double t, const Vec& x) const;
  void require_inside(double t, const Vec& x) const;

  // Raw component access; no domain or definiteness checks.
  Mat g(double t, const Vec& x) const { return spec_.g(t, x); }
  Mat dg_dt(double t, const Vec& x) const;
  Mat dg_dx(double t, const Vec& x, int k) const;
  Mat d2g_dx(double t, const Vec& x, int k, int l) const;

  // Central-difference versions, regardless of what was supplied.
  Mat fd_dg_dt(double t, const Vec& x) const;
  Mat fd_dg_dx(double t, const Vec& x, int k) const;
  Mat fd_d2g_dx(double t, const Vec& x, int k, int l) const;

  bool has_analytic_dt() const { return static_cast<bool>(spec_.dg_dt); }
  bool has_analytic_dx() const { return static_cast<bool>(spec_.dg_dx); }
  bool has_analytic_dxx() const { return static_cast<bool>(spec_.d2g_dx); }

  /// Riemannian distance d(t, x, y). Without a closed form this is the
  /// small-separation approximation sqrt((y-x)^T g(t,x) (y-x)), whose relative
  /// error is O(|y - x|).
  double distance(double t, const Vec& x, const Vec& y) const;
  bool has_closed_form_distance() const { return static_cast<bool>(spec_.distance); }

  double injectivity_radius(double t) const;

  const MetricFamilySpec& spec() const { return spec_; }

 private:
  MetricFamilySpec spec_;
  double h_x_ = 0.0;
  double h_t_ = 0.0;
};

/// Drift vector field Z(t, x) in chart components.
struct VectorField {
  std::function<Vec(double, const Vec&)> value;
  /// jacobian(t, x)(i, k) = dZ^i / dx^k. Optional.
  std::function<Mat(double, const Vec&)> jacobian;
  /// dZ/dt. Optional.
  std::function<Vec(double, const Vec&)> time_derivative;
  double h = 1e-6;
  std::string description = "custom";
  /// Set by zero() and constant(): the value does not depend on (t, x).
  bool is_constant = false;

  Vec operator()(double t, const Vec& x) const { return value(t, x); }
  Mat dx(double t, const Vec& x) const;
  Vec dt(double t, const Vec& x) const;

  static VectorField zero(int n);
  static VectorField constant(const Vec& mu);
  /// Z(x) = A x.
  static VectorField linear(const Mat& a);
};

struct CurvatureTensors {
  /// riemann(i, k, l, j) is indexed so that the normal-coordinate expansion
  /// reads g_ij = delta_ij - 1/3 sum_kl riemann(i,k,l,j) x_k x_l. With this
  /// convention riemann(a,b,c,d) = -<R(e_c, e_d) e_b, e_a>, so riemann(0,1,0,1)
  /// = -K on a surface of Gaussian curvature K.
  Tensor4 riemann;
  Mat ricci;
  double scalar = 0.0;
  Tensor3 christoffel;
};

/// Checked metric evaluation: domain membership and positive definiteness.
Mat metric_at(const MetricFamily& family, double t, const Vec& x);

/// g^{-1}; throws SingularMetric when g is not safely invertible.
Mat inverse_metric(const Mat& g);

/// Christoffel symbols of the second kind, gamma(i, k, l) = Gamma^i_kl.
Tensor3 christoffel(const MetricFamily& family, double t, const Vec& x);

/// Spatial derivatives of the Christoffel symbols: result(m, i, k, l) =
/// d_m Gamma^i_kl.
Tensor4 christoffel_dx(const MetricFamily& family, double t, const Vec& x);

CurvatureTensors curvature(const MetricFamily& family, double t, const Vec& x);

double scalar_curvature(const MetricFamily& family, double t, const Vec& x);

/// g^{-1} gdot v, i.e. the vector with <gdot# v, w>_g = gdot(v, w).
Vec gdot_sharp(const MetricFamily& family, double t, const Vec& x, const Vec& v);

/// tr(g^{-1} gdot).
double trace_gdot(const MetricFamily& family, double t, const Vec& x);

/// div_g Z = (1/sqrt(det g)) d_i (sqrt(det g) Z^i).
double divergence(const MetricFamily& family, const VectorField& z, double t, const Vec& x);

/// Chart drift of (1/2) Delta_g: -1/2 g^{jk} Gamma^i_jk.
Vec laplacian_drift(const MetricFamily& family, double t, const Vec& x);

/// Symmetric positive square root of g^{-1}; eigenvalues clamped at 1e-14.
Mat sqrt_inverse_metric(const Mat& g);

/// A g(t, x)-orthonormal frame (columns), namely g^{-1/2}.
Mat orthonormal_frame(const MetricFamily& family, double t, const Vec& x);

/// max |F^T g F - I|.
double orthonormality_defect(const Mat& g, const Mat& frame);

/// Express a chart 4-tensor in the basis given by the frame columns.
Tensor4 to_frame(const Tensor4& chart, const Mat& frame);

// Built-in analytic families.
namespace families {

/// Static Euclidean R^n on the cube [-half_width, half_width]^n.
MetricFamily euclidean(int n, double half_width = 10.0,
                       double t_end = std::numeric_limits<double>::infinity());

/// g(t) = exp(2 lambda(t)) delta on the cube [-half_width, half_width]^n.
MetricFamily conformal(int n, std::function<double(double)> lambda,
                       std::function<double(double)> lambda_dot, double t_end,
                       double half_width = 10.0, std::string name = "conformal");

/// Conformal family with lambda(t) = rate * t.
MetricFamily conformal_linear(int n, double rate, double t_end, double half_width = 10.0);

/// Flat torus chart [0, 2 pi)^n with g(t) = diag(a_i exp(b_i t)).
MetricFamily flat_torus(const Vec& coefficients, const Vec& rates, double t_end);

/// Round S^n (n = 2, 3) in the stereographic chart evolving under
/// d/dt g = alpha Ric: g(t) = c(t) 4/(1+|x|^2)^2 delta, c(t) = c0 + alpha (n-1) t.
MetricFamily ricci_sphere(int n, double alpha, double c0, double t_end, double half_width = 3.0);

/// c(t) for ricci_sphere.
double sphere_scale(int n, double alpha, double c0, double t);

}  // namespace families

}  // namespace omflow
