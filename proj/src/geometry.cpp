#include "omflow/geometry.hpp"

#include <cmath>
#include <sstream>

namespace omflow {

namespace {

std::string describe_point(double t, const Vec& x) {
  std::ostringstream os;
  os << "t=" << t << " x=(";
  for (int i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
  os << ")";
  return os.str();
}

}  // namespace

DomainBox DomainBox::cube(int n, double half_width) {
  DomainBox b;
  b.lo = Vec::Constant(n, -half_width);
  b.hi = Vec::Constant(n, half_width);
  return b;
}

DomainBox DomainBox::box(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size()) throw ConfigError("domain box bounds have different dimensions");
  for (int i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw ConfigError("domain box has empty extent");
  }
  return DomainBox{lo, hi};
}

bool DomainBox::contains(const Vec& x) const {
  if (x.size() != lo.size()) return false;
  for (int i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  }
  return true;
}

double DomainBox::diameter() const {
  double d2 = 0.0;
  for (int i = 0; i < lo.size(); ++i) {
    const double w = hi[i] - lo[i];
    if (!std::isfinite(w)) return 1.0;
    d2 += w * w;
  }
  return std::sqrt(d2);
}

MetricFamily::MetricFamily(MetricFamilySpec spec) : spec_(std::move(spec)) {
  if (spec_.dim < 1 || spec_.dim > kMaxDim) {
    throw UnsupportedDimension("metric family dimension must be in [1, " + std::to_string(kMaxDim) +
                               "], got " + std::to_string(spec_.dim));
  }
  if (!spec_.g) throw ConfigError("metric family '" + spec_.name + "' has no metric function");
  if (spec_.domain.dim() != spec_.dim) throw ConfigError("domain box dimension does not match family");
  if (!(spec_.t_end > spec_.t_begin)) throw ConfigError("metric family needs t_end > t_begin");
  h_x_ = spec_.h_x > 0.0 ? spec_.h_x : 1e-5 * spec_.domain.diameter();
  const double span = spec_.t_end - spec_.t_begin;
  h_t_ = spec_.h_t > 0.0 ? spec_.h_t : 1e-5 * (std::isfinite(span) ? std::max(1.0, span) : 1.0);
}

bool MetricFamily::contains(double t, const Vec& x) const {
  const double span = spec_.t_end - spec_.t_begin;
  const double slack = std::isfinite(span) ? 1e-12 * std::max(1.0, span) : 0.0;
  if (!(t >= spec_.t_begin - slack && t <= spec_.t_end + slack)) return false;
  return spec_.domain.contains(x);
}

void MetricFamily::require_inside(double t, const Vec& x) const {
  if (!contains(t, x)) {
    throw OutOfDomain("point outside the chart of family '" + spec_.name + "': " + describe_point(t, x));
  }
}

Mat MetricFamily::dg_dt(double t, const Vec& x) const {
  if (spec_.dg_dt) return spec_.dg_dt(t, x);
  return fd_dg_dt(t, x);
}

Mat MetricFamily::dg_dx(double t, const Vec& x, int k) const {
  if (spec_.dg_dx) return spec_.dg_dx(t, x, k);
  return fd_dg_dx(t, x, k);
}

Mat MetricFamily::d2g_dx(double t, const Vec& x, int k, int l) const {
  if (spec_.d2g_dx) return spec_.d2g_dx(t, x, k, l);
  return fd_d2g_dx(t, x, k, l);
}

Mat MetricFamily::fd_dg_dt(double t, const Vec& x) const {
  return (spec_.g(t + h_t_, x) - spec_.g(t - h_t_, x)) / (2.0 * h_t_);
}

Mat MetricFamily::fd_dg_dx(double t, const Vec& x, int k) const {
  Vec xp = x, xm = x;
  xp[k] += h_x_;
  xm[k] -= h_x_;
  return (spec_.g(t, xp) - spec_.g(t, xm)) / (2.0 * h_x_);
}

Mat MetricFamily::fd_d2g_dx(double t, const Vec& x, int k, int l) const {
  if (spec_.dg_dx) {
    Vec xp = x, xm = x;
    xp[l] += h_x_;
    xm[l] -= h_x_;
    return (spec_.dg_dx(t, xp, k) - spec_.dg_dx(t, xm, k)) / (2.0 * h_x_);
  }
  // Second differences need a coarser step to keep round-off in check.
  const double h = std::sqrt(h_x_) * 1e-2 * std::sqrt(spec_.domain.diameter());
  if (k == l) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    return (spec_.g(t, xp) - 2.0 * spec_.g(t, x) + spec_.g(t, xm)) / (h * h);
  }
  Vec xpp = x, xpm = x, xmp = x, xmm = x;
  xpp[k] += h, xpp[l] += h;
  xpm[k] += h, xpm[l] -= h;
  xmp[k] -= h, xmp[l] += h;
  xmm[k] -= h, xmm[l] -= h;
  return (spec_.g(t, xpp) - spec_.g(t, xpm) - spec_.g(t, xmp) + spec_.g(t, xmm)) / (4.0 * h * h);
}

double MetricFamily::distance(double t, const Vec& x, const Vec& y) const {
  if (spec_.distance) return spec_.distance(t, x, y);
  const Vec d = y - x;
  return std::sqrt(std::max(0.0, d.dot(spec_.g(t, x) * d)));
}

double MetricFamily::injectivity_radius(double t) const {
  if (spec_.injectivity_radius) return spec_.injectivity_radius(t);
  return std::numeric_limits<double>::infinity();
}

Mat VectorField::dx(double t, const Vec& x) const {
  if (jacobian) return jacobian(t, x);
  const int n = static_cast<int>(x.size());
  Mat jac(n, n);
  for (int k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    jac.col(k) = (value(t, xp) - value(t, xm)) / (2.0 * h);
  }
  return jac;
}

Vec VectorField::dt(double t, const Vec& x) const {
  if (time_derivative) return time_derivative(t, x);
  return (value(t + h, x) - value(t - h, x)) / (2.0 * h);
}

VectorField VectorField::zero(int n) {
  VectorField z;
  z.value = [n](double, const Vec&) { return Vec::Zero(n).eval(); };
  z.jacobian = [n](double, const Vec&) { return Mat::Zero(n, n).eval(); };
  z.time_derivative = z.value;
  z.description = "zero";
  z.is_constant = true;
  return z;
}

VectorField VectorField::constant(const Vec& mu) {
  const int n = static_cast<int>(mu.size());
  VectorField z;
  z.value = [mu](double, const Vec&) { return mu; };
  z.jacobian = [n](double, const Vec&) { return Mat::Zero(n, n).eval(); };
  z.time_derivative = [n](double, const Vec&) { return Vec::Zero(n).eval(); };
  z.description = "constant";
  z.is_constant = true;
  return z;
}

VectorField VectorField::linear(const Mat& a) {
  const int n = static_cast<int>(a.rows());
  VectorField z;
  z.value = [a](double, const Vec& x) { return Vec(a * x); };
  z.jacobian = [a](double, const Vec&) { return a; };
  z.time_derivative = [n](double, const Vec&) { return Vec::Zero(n).eval(); };
  z.description = "linear";
  return z;
}

Mat metric_at(const MetricFamily& family, double t, const Vec& x) {
  family.require_inside(t, x);
  Mat g = family.g(t, x);
  if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
    throw NotPositiveDefinite("metric is not symmetric at " + describe_point(t, x));
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(g, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw NotPositiveDefinite("metric has a non-positive eigenvalue at " + describe_point(t, x));
  }
  return g;
}

Mat inverse_metric(const Mat& g) {
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) throw SingularMetric("metric is not invertible (Cholesky failed)");
  const double scale = g.cwiseAbs().maxCoeff();
  if (llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 1e-7 * std::sqrt(scale)) {
    throw SingularMetric("metric is numerically singular");
  }
  return llt.solve(Mat::Identity(g.rows(), g.cols()));
}

namespace {

// Christoffel symbols of the first kind, first(p, k, l) = Gamma_{p,kl}.
Tensor3 christoffel_first(const std::array<Mat, kMaxDim>& dg, int n) {
  Tensor3 first(n);
  for (int p = 0; p < n; ++p)
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) first(p, k, l) = 0.5 * (dg[k](p, l) + dg[l](p, k) - dg[p](k, l));
  return first;
}

Tensor3 raise_first(const Tensor3& first, const Mat& ginv, int n) {
  Tensor3 second(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) {
        double s = 0.0;
        for (int p = 0; p < n; ++p) s += ginv(i, p) * first(p, k, l);
        second(i, k, l) = s;
        second(i, l, k) = s;
      }
  return second;
}

}  // namespace

Tensor3 christoffel(const MetricFamily& family, double t, const Vec& x) {
  family.require_inside(t, x);
  const int n = family.dim();
  if (family.spatially_constant()) {
    inverse_metric(family.g(t, x));
    return Tensor3(n);
  }
  const Mat ginv = inverse_metric(family.g(t, x));
  std::array<Mat, kMaxDim> dg;
  for (int k = 0; k < n; ++k) dg[k] = family.dg_dx(t, x, k);
  return raise_first(christoffel_first(dg, n), ginv, n);
}

Tensor4 christoffel_dx(const MetricFamily& family, double t, const Vec& x) {
  family.require_inside(t, x);
  const int n = family.dim();
  Tensor4 out(n);
  if (family.spatially_constant()) return out;
  const Mat ginv = inverse_metric(family.g(t, x));
  std::array<Mat, kMaxDim> dg;
  for (int k = 0; k < n; ++k) dg[k] = family.dg_dx(t, x, k);
  const Tensor3 first = christoffel_first(dg, n);
  std::array<std::array<Mat, kMaxDim>, kMaxDim> d2g;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      d2g[a][b] = family.d2g_dx(t, x, a, b);
      d2g[b][a] = d2g[a][b];
    }
  for (int m = 0; m < n; ++m) {
    const Mat dginv = -ginv * dg[m] * ginv;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
          double s = 0.0;
          for (int p = 0; p < n; ++p) {
            const double dfirst = 0.5 * (d2g[m][k](p, l) + d2g[m][l](p, k) - d2g[m][p](k, l));
            s += dginv(i, p) * first(p, k, l) + ginv(i, p) * dfirst;
          }
          out(m, i, k, l) = s;
          out(m, i, l, k) = s;
        }
  }
  return out;
}

CurvatureTensors curvature(const MetricFamily& family, double t, const Vec& x) {
  const int n = family.dim();
  CurvatureTensors c;
  c.christoffel = christoffel(family, t, x);
  const Mat g = family.g(t, x);
  const Mat ginv = inverse_metric(g);
  c.riemann = Tensor4(n);
  c.ricci = Mat::Zero(n, n);
  if (family.spatially_constant()) return c;

  const Tensor4 dgamma = christoffel_dx(family, t, x);
  const Tensor3& gam = c.christoffel;
  // up(m, b, c, d) = R^m_{bcd} with R(d_c, d_d) d_b = R^m_{bcd} d_m.
  Tensor4 up(n);
  for (int m = 0; m < n; ++m)
    for (int b = 0; b < n; ++b)
      for (int cc = 0; cc < n; ++cc)
        for (int d = 0; d < n; ++d) {
          double s = dgamma(cc, m, d, b) - dgamma(d, m, cc, b);
          for (int e = 0; e < n; ++e) s += gam(m, cc, e) * gam(e, d, b) - gam(m, d, e) * gam(e, cc, b);
          up(m, b, cc, d) = s;
        }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int cc = 0; cc < n; ++cc)
        for (int d = 0; d < n; ++d) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += g(a, m) * up(m, b, cc, d);
          c.riemann(a, b, cc, d) = -s;
        }
  for (int b = 0; b < n; ++b)
    for (int d = 0; d < n; ++d) {
      double s = 0.0;
      for (int m = 0; m < n; ++m) s += up(m, b, m, d);
      c.ricci(b, d) = s;
    }
  c.ricci = (0.5 * (c.ricci + c.ricci.transpose())).eval();
  c.scalar = (ginv.cwiseProduct(c.ricci)).sum();
  return c;
}

double scalar_curvature(const MetricFamily& family, double t, const Vec& x) {
  if (family.spatially_constant()) {
    family.require_inside(t, x);
    return 0.0;
  }
  return curvature(family, t, x).scalar;
}

Vec gdot_sharp(const MetricFamily& family, double t, const Vec& x, const Vec& v) {
  family.require_inside(t, x);
  const Mat ginv = inverse_metric(family.g(t, x));
  return ginv * (family.dg_dt(t, x) * v);
}

double trace_gdot(const MetricFamily& family, double t, const Vec& x) {
  family.require_inside(t, x);
  const Mat ginv = inverse_metric(family.g(t, x));
  return ginv.cwiseProduct(family.dg_dt(t, x)).sum();
}

double divergence(const MetricFamily& family, const VectorField& z, double t, const Vec& x) {
  family.require_inside(t, x);
  const int n = family.dim();
  const Mat ginv = inverse_metric(family.g(t, x));
  const Vec zx = z(t, x);
  double div = z.dx(t, x).trace();
  if (!family.spatially_constant()) {
    // d_i log sqrt(det g) = 1/2 tr(g^{-1} d_i g)
    for (int i = 0; i < n; ++i) div += 0.5 * zx[i] * ginv.cwiseProduct(family.dg_dx(t, x, i)).sum();
  }
  return div;
}

Vec laplacian_drift(const MetricFamily& family, double t, const Vec& x) {
  const int n = family.dim();
  Vec b = Vec::Zero(n);
  if (family.spatially_constant()) return b;
  const Mat ginv = inverse_metric(family.g(t, x));
  const Tensor3 gam = christoffel(family, t, x);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += ginv(j, k) * gam(i, j, k);
    b[i] = -0.5 * s;
  }
  return b;
}

Mat sqrt_inverse_metric(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(g);
  Vec inv_eval = eig.eigenvalues();
  for (int i = 0; i < inv_eval.size(); ++i) {
    const double lam = inv_eval[i] > 0.0 ? 1.0 / inv_eval[i] : 0.0;
    inv_eval[i] = std::sqrt(std::max(lam, 1e-14));
  }
  return eig.eigenvectors() * inv_eval.asDiagonal() * eig.eigenvectors().transpose();
}

Mat orthonormal_frame(const MetricFamily& family, double t, const Vec& x) {
  return sqrt_inverse_metric(metric_at(family, t, x));
}

double orthonormality_defect(const Mat& g, const Mat& frame) {
  const Mat gram = frame.transpose() * g * frame;
  return (gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

Tensor4 to_frame(const Tensor4& chart, const Mat& frame) {
  const int n = chart.dim();
  // Contract one index at a time.
  Tensor4 a(n), b(n);
  for (int p = 0; p < n; ++p)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int i = 0; i < n; ++i) s += chart(i, j, k, l) * frame(i, p);
          a(p, j, k, l) = s;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += a(p, j, k, l) * frame(j, q);
          b(p, q, k, l) = s;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int k = 0; k < n; ++k) s += b(p, q, k, l) * frame(k, r);
          a(p, q, r, l) = s;
        }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s4 = 0; s4 < n; ++s4) {
          double s = 0.0;
          for (int l = 0; l < n; ++l) s += a(p, q, r, l) * frame(l, s4);
          b(p, q, r, s4) = s;
        }
  return b;
}

}  // namespace omflow
