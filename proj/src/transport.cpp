#include "omflow/transport.hpp"

#include <cmath>
#include <sstream>

namespace omflow {

Mat FramePath::tau(double t) const {
  if (t_grid.empty()) throw ConfigError("empty frame path");
  if (t <= t_grid.front()) return frames.front();
  if (t >= t_grid.back()) return frames.back();
  const double h = t_grid[1] - t_grid[0];
  const auto k = std::min(static_cast<std::size_t>((t - t_grid.front()) / h), t_grid.size() - 2);
  const double s = (t - t_grid[k]) / h;
  return (1.0 - s) * frames[k] + s * frames[k + 1];
}

double FramePath::max_defect(const MetricFamily& family, const Curve& curve) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    const double t = t_grid[k];
    worst = std::max(worst, orthonormality_defect(family.g(t, curve(t)), frames[k]));
  }
  return worst;
}

FramePath parallel_transport(const MetricFamily& family, const Curve& curve, const Mat& frame0, int steps) {
  if (steps < 1) throw ConfigError("parallel transport needs at least one step");
  const int n = family.dim();
  if (curve.dim() != n || frame0.rows() != n || frame0.cols() != n) {
    throw ConfigError("curve/frame dimension does not match the metric family");
  }
  const Mat g0 = metric_at(family, 0.0, curve(0.0));
  const double defect0 = orthonormality_defect(g0, frame0);
  if (defect0 > 1e-10) {
    std::ostringstream os;
    os << "initial frame is not orthonormal (defect " << defect0 << ")";
    throw NotOrthonormal(os.str());
  }

  auto rhs = [&](double t, const Mat& tau) -> Mat {
    const Vec x = curve(t);
    family.require_inside(t, x);
    const Mat g = family.g(t, x);
    const Mat ginv = inverse_metric(g);
    Mat out = -0.5 * ginv * (family.dg_dt(t, x) * tau);
    if (!family.spatially_constant()) {
      const Vec v = curve.velocity(t);
      const Tensor3 gam = christoffel(family, t, x);
      for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) {
          double s = 0.0;
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) s += gam(i, j, k) * v[j] * tau(k, a);
          out(i, a) -= s;
        }
    }
    return out;
  };

  FramePath path;
  path.t_grid.reserve(static_cast<std::size_t>(steps) + 1);
  path.frames.reserve(static_cast<std::size_t>(steps) + 1);
  const double T = curve.T();
  const double h = T / steps;
  Mat tau = frame0;
  path.t_grid.push_back(0.0);
  path.frames.push_back(tau);
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Mat k1 = rhs(t, tau);
    const Mat k2 = rhs(t + 0.5 * h, tau + 0.5 * h * k1);
    const Mat k3 = rhs(t + 0.5 * h, tau + 0.5 * h * k2);
    const Mat k4 = rhs(t + h, tau + h * k3);
    tau += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    path.t_grid.push_back(k + 1 == steps ? T : (k + 1) * h);
    path.frames.push_back(tau);
  }
  return path;
}

namespace {

struct GeodesicState {
  Vec x, u;
  Mat X, U;
};

GeodesicState geodesic_rhs(const MetricFamily& family, double t, const GeodesicState& s, bool jacobi) {
  const int n = family.dim();
  family.require_inside(t, s.x);
  GeodesicState d;
  d.x = s.u;
  d.u = Vec::Zero(n);
  if (jacobi) {
    d.X = s.U;
    d.U = Mat::Zero(n, n);
  }
  if (family.spatially_constant()) return d;
  const Tensor3 gam = christoffel(family, t, s.x);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) acc += gam(i, j, k) * s.u[j] * s.u[k];
    d.u[i] = -acc;
  }
  if (jacobi) {
    const Tensor4 dgam = christoffel_dx(family, t, s.x);
    for (int i = 0; i < n; ++i)
      for (int a = 0; a < n; ++a) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) {
            double dg = 0.0;
            for (int m = 0; m < n; ++m) dg += dgam(m, i, j, k) * s.X(m, a);
            acc += dg * s.u[j] * s.u[k] + 2.0 * gam(i, j, k) * s.u[j] * s.U(k, a);
          }
        d.U(i, a) = -acc;
      }
  }
  return d;
}

GeodesicState axpy(const GeodesicState& s, double h, const GeodesicState& d, bool jacobi) {
  GeodesicState r;
  r.x = s.x + h * d.x;
  r.u = s.u + h * d.u;
  if (jacobi) {
    r.X = s.X + h * d.X;
    r.U = s.U + h * d.U;
  }
  return r;
}

ExpMapResult integrate_geodesic(const MetricFamily& family, double t, const Vec& x, const Vec& v, int steps,
                                bool jacobi) {
  const int n = family.dim();
  if (x.size() != n || v.size() != n) throw ConfigError("exp_map: dimension mismatch");
  if (steps < 1) throw ConfigError("exp_map needs at least one step");
  const Mat g0 = metric_at(family, t, x);
  const double speed0 = std::sqrt(std::max(0.0, v.dot(g0 * v)));
  const double rinj = family.injectivity_radius(t);
  if (!(speed0 < rinj)) {
    std::ostringstream os;
    os << "exp_map: |v|_g = " << speed0 << " is not below the injectivity radius " << rinj;
    throw OutOfDomain(os.str());
  }
  GeodesicState s;
  s.x = x;
  s.u = v;
  if (jacobi) {
    s.X = Mat::Zero(n, n);
    s.U = Mat::Identity(n, n);
  }
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    const GeodesicState k1 = geodesic_rhs(family, t, s, jacobi);
    const GeodesicState k2 = geodesic_rhs(family, t, axpy(s, 0.5 * h, k1, jacobi), jacobi);
    const GeodesicState k3 = geodesic_rhs(family, t, axpy(s, 0.5 * h, k2, jacobi), jacobi);
    const GeodesicState k4 = geodesic_rhs(family, t, axpy(s, h, k3, jacobi), jacobi);
    s.x += (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    s.u += (h / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    if (jacobi) {
      s.X += (h / 6.0) * (k1.X + 2.0 * k2.X + 2.0 * k3.X + k4.X);
      s.U += (h / 6.0) * (k1.U + 2.0 * k2.U + 2.0 * k3.U + k4.U);
    }
    if (!s.x.allFinite() || !s.u.allFinite()) throw StepFailure("exp_map: geodesic integration produced NaN");
  }
  family.require_inside(t, s.x);
  ExpMapResult r;
  r.point = s.x;
  if (jacobi) r.jacobian = s.X;
  const double speed1 = std::sqrt(std::max(0.0, s.u.dot(family.g(t, s.x) * s.u)));
  r.speed_drift = speed0 > 0.0 ? std::abs(speed1 - speed0) / speed0 : speed1;
  if (r.speed_drift > 1e-6) {
    std::ostringstream os;
    os << "exp_map: geodesic speed drifted by " << r.speed_drift << " (increase steps)";
    throw StepFailure(os.str());
  }
  return r;
}

}  // namespace

Vec exp_map(const MetricFamily& family, double t, const Vec& x, const Vec& v, int steps) {
  return integrate_geodesic(family, t, x, v, steps, false).point;
}

ExpMapResult exp_map_with_jacobian(const MetricFamily& family, double t, const Vec& x, const Vec& v, int steps) {
  return integrate_geodesic(family, t, x, v, steps, true);
}

NormalCoordinateFrame::NormalCoordinateFrame(MetricFamily family, double t, Vec center, Mat frame, int steps)
    : family_(std::move(family)), t_(t), center_(std::move(center)), frame_(std::move(frame)), steps_(steps) {
  const Mat g = metric_at(family_, t_, center_);
  const double defect = orthonormality_defect(g, frame_);
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "normal frame basis is not orthonormal (defect " << defect << ")";
    throw NotOrthonormal(os.str());
  }
}

Vec NormalCoordinateFrame::from_normal(const Vec& y) const {
  return exp_map(family_, t_, center_, frame_ * y, steps_);
}

Vec NormalCoordinateFrame::to_normal(const Vec& x, int max_iter, double tol) const {
  const Mat g = family_.g(t_, center_);
  // The frame is g-orthonormal, so its inverse is F^T g.
  const Mat finv = frame_.transpose() * g;
  Vec y = finv * (x - center_);
  const double scale = std::max(1.0, x.norm());
  ExpMapResult cur = exp_map_with_jacobian(family_, t_, center_, frame_ * y, steps_);
  double res = (cur.point - x).norm();
  for (int it = 0; it < max_iter; ++it) {
    if (res <= tol * scale) return y;
    const Mat J = cur.jacobian * frame_;
    const Vec step = J.partialPivLu().solve(cur.point - x);
    double lambda = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Vec trial = y - lambda * step;
      try {
        ExpMapResult next = exp_map_with_jacobian(family_, t_, center_, frame_ * trial, steps_);
        const double r = (next.point - x).norm();
        if (r < res) {
          y = trial;
          cur = std::move(next);
          res = r;
          improved = true;
          break;
        }
      } catch (const OutOfDomain&) {
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }
  if (res <= tol * scale) return y;
  std::ostringstream os;
  os << "to_normal: shooting did not converge (residual " << res << ")";
  throw NoConvergence(os.str());
}

Mat NormalCoordinateFrame::pulled_back_metric(const Vec& y) const {
  const ExpMapResult r = exp_map_with_jacobian(family_, t_, center_, frame_ * y, steps_);
  const Mat J = r.jacobian * frame_;
  return J.transpose() * family_.g(t_, r.point) * J;
}

NormalCoordinateFrame normal_frame(const MetricFamily& family, double t, const Vec& center, const Mat& frame) {
  return NormalCoordinateFrame(family, t, center, frame);
}

CartanReport cartan_expansion_check(const MetricFamily& family, double t, const Vec& center,
                                    std::vector<double> radii) {
  if (radii.size() < 2) throw ConfigError("cartan check needs at least two radii");
  const int n = family.dim();
  const Mat frame = orthonormal_frame(family, t, center);
  const NormalCoordinateFrame ncf(family, t, center, frame);

  CartanReport rep;
  rep.radii = radii;
  const Tensor4 rf = to_frame(curvature(family, t, center).riemann, frame);
  rep.expected = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) rep.expected(i, j, k, l) = -(rf(i, k, l, j) + rf(i, l, k, j)) / 6.0;

  const Mat I = Mat::Identity(n, n);
  auto even_part = [&](const Vec& y) -> Mat {
    return 0.5 * (ncf.pulled_back_metric(y) + ncf.pulled_back_metric(-y)) - I;
  };
  const double rho = radii.front();
  rep.fitted = Tensor4(n);
  std::vector<Mat> diag(n);
  for (int k = 0; k < n; ++k) {
    diag[k] = even_part(rho * Vec(I.col(k))) / (rho * rho);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) rep.fitted(i, j, k, k) = diag[k](i, j);
  }
  for (int k = 0; k < n; ++k)
    for (int l = k + 1; l < n; ++l) {
      const Vec u = (I.col(k) + I.col(l)) / std::sqrt(2.0);
      const Mat off = even_part(rho * u) / (rho * rho) - 0.5 * (diag[k] + diag[l]);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          rep.fitted(i, j, k, l) = off(i, j);
          rep.fitted(i, j, l, k) = off(i, j);
        }
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          rep.max_deviation = std::max(rep.max_deviation, std::abs(rep.fitted(i, j, k, l) - rep.expected(i, j, k, l)));

  for (double r : radii) {
    std::vector<Vec> dirs;
    for (int k = 0; k < n; ++k) {
      dirs.push_back(I.col(k));
      for (int l = k + 1; l < n; ++l) {
        dirs.push_back((I.col(k) + I.col(l)) / std::sqrt(2.0));
        dirs.push_back((I.col(k) - I.col(l)) / std::sqrt(2.0));
      }
    }
    double worst = 0.0;
    for (const Vec& d : dirs) {
      for (double sign : {1.0, -1.0}) {
        const Vec y = sign * r * d;
        Mat q = I;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
              for (int l = 0; l < n; ++l) q(i, j) += rep.expected(i, j, k, l) * y[k] * y[l];
        worst = std::max(worst, (ncf.pulled_back_metric(y) - q).cwiseAbs().maxCoeff());
      }
    }
    rep.remainder.push_back(worst);
  }
  const std::size_t m = rep.remainder.size();
  rep.observed_order = std::log(rep.remainder[m - 2] / rep.remainder[m - 1]) / std::log(radii[m - 2] / radii[m - 1]);
  return rep;
}

Vec hara_drift(const NormalCoordinateFrame& ncf, const Vec& y, double h) {
  const int n = static_cast<int>(y.size());
  Vec gamma = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    Vec yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    const Mat dinv = (inverse_metric(ncf.pulled_back_metric(yp)) - inverse_metric(ncf.pulled_back_metric(ym))) / (2.0 * h);
    for (int i = 0; i < n; ++i) gamma[i] += 0.5 * dinv(i, j);
  }
  return gamma;
}

HaraIdentityReport hara_identities(const NormalCoordinateFrame& ncf, const Vec& y) {
  HaraIdentityReport rep;
  const Mat ginv = inverse_metric(ncf.pulled_back_metric(y));
  rep.gamma = hara_drift(ncf, y);
  const double lhs = (Vec::Ones(y.size()) - ginv.diagonal()).sum();
  rep.trace_identity = std::abs(lhs - 2.0 * rep.gamma.dot(y));
  rep.gauss_lemma = (ginv * y - y).cwiseAbs().maxCoeff();
  return rep;
}

}  // namespace omflow
