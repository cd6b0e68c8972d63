#pragma once

// Time-coupled parallel transport, exponential maps, normal coordinates and
// the normal-coordinate identities used as oracles.

#include "omflow/curve.hpp"
#include "omflow/geometry.hpp"

#include <memory>
#include <vector>

namespace omflow {

/// Frame tau_t e_1 .. tau_t e_n (columns, chart components) on the ODE grid.
struct FramePath {
  std::vector<double> t_grid;
  std::vector<Mat> frames;

  /// Linear interpolation between grid frames.
  Mat tau(double t) const;
  /// max over the grid of |tau^T g(t, phi(t)) tau - I|.
  double max_defect(const MetricFamily& family, const Curve& curve) const;
};

/// Integrates d tau / dt = -Gamma(phi', tau) - 1/2 g^{-1} gdot tau with classical
/// RK4 on `steps` uniform steps (default T/2000).
FramePath parallel_transport(const MetricFamily& family, const Curve& curve, const Mat& frame0,
                             int steps = 2000);

struct ExpMapResult {
  Vec point;
  /// d exp(v) / dv, from the Jacobi-field variational equations.
  Mat jacobian;
  /// Relative change of |x'|_g along the geodesic.
  double speed_drift = 0.0;
};

/// exp^t_x(v) for the metric g(t), by RK4 on the geodesic equation over unit
/// parameter time.
Vec exp_map(const MetricFamily& family, double t, const Vec& x, const Vec& v, int steps = 200);
ExpMapResult exp_map_with_jacobian(const MetricFamily& family, double t, const Vec& x, const Vec& v,
                                   int steps = 200);

/// g(t)-normal coordinates around a center with a chosen orthonormal frame.
class NormalCoordinateFrame {
 public:
  NormalCoordinateFrame(MetricFamily family, double t, Vec center, Mat frame, int steps = 200);

  double t() const { return t_; }
  const Vec& center() const { return center_; }
  const Mat& frame() const { return frame_; }
  const MetricFamily& family() const { return family_; }

  /// exp(t, center, frame * y).
  Vec from_normal(const Vec& y) const;
  /// Inverse of from_normal by damped Newton shooting.
  Vec to_normal(const Vec& x, int max_iter = 50, double tol = 1e-13) const;
  /// Metric components in normal coordinates, G = J^T g J with J = d from_normal.
  Mat pulled_back_metric(const Vec& y) const;

 private:
  MetricFamily family_;
  double t_ = 0.0;
  Vec center_;
  Mat frame_;
  int steps_ = 200;
};

NormalCoordinateFrame normal_frame(const MetricFamily& family, double t, const Vec& center, const Mat& frame);

struct CartanReport {
  std::vector<double> radii;
  /// fitted(i, j, k, l): coefficient of x_k x_l in G_ij, symmetric in (k, l).
  Tensor4 fitted;
  /// -1/3 riemann(i,k,l,j) symmetrized over (k, l), in the frame basis.
  Tensor4 expected;
  double max_deviation = 0.0;
  /// max |G - I - expected quadratic| over the sample points, per radius.
  std::vector<double> remainder;
  /// log2 of the remainder ratio between consecutive (halved) radii.
  double observed_order = 0.0;
};

/// Fits the quadratic term of the normal-coordinate metric at radius radii[0]
/// and measures the remainder at every radius. The frame defaults to g^{-1/2}.
CartanReport cartan_expansion_check(const MetricFamily& family, double t, const Vec& center,
                                    std::vector<double> radii = {1e-2, 5e-3});

/// gamma^i = 1/2 sum_j d G^{ij} / d y_j, by central differences of G^{-1}.
Vec hara_drift(const NormalCoordinateFrame& ncf, const Vec& y, double h = 1e-5);

struct HaraIdentityReport {
  /// |sum_i (1 - G^{ii}) - 2 sum_j gamma^j y_j|
  double trace_identity = 0.0;
  /// max_i |sum_j G^{ij} y_j - y_i|
  double gauss_lemma = 0.0;
  Vec gamma;
};

HaraIdentityReport hara_identities(const NormalCoordinateFrame& ncf, const Vec& y);

}  // namespace omflow
