#include "omflow/geometry.hpp"

#include <cmath>

namespace omflow::families {

namespace {

void check_dim(int n) {
  if (n < 1 || n > kMaxDim) {
    throw UnsupportedDimension("chart dimension must be in [1, " + std::to_string(kMaxDim) + "], got " +
                               std::to_string(n));
  }
}

}  // namespace

MetricFamily euclidean(int n, double half_width, double t_end) {
  check_dim(n);
  MetricFamilySpec s;
  s.name = "euclidean";
  s.dim = n;
  s.t_end = t_end;
  s.domain = DomainBox::cube(n, half_width);
  s.g = [n](double, const Vec&) { return Mat::Identity(n, n).eval(); };
  s.dg_dt = [n](double, const Vec&) { return Mat::Zero(n, n).eval(); };
  s.dg_dx = [n](double, const Vec&, int) { return Mat::Zero(n, n).eval(); };
  s.d2g_dx = [n](double, const Vec&, int, int) { return Mat::Zero(n, n).eval(); };
  s.distance = [](double, const Vec& x, const Vec& y) { return (x - y).norm(); };
  s.spatially_constant = true;
  s.quadratic_distance = true;
  return MetricFamily(std::move(s));
}

MetricFamily conformal(int n, std::function<double(double)> lambda, std::function<double(double)> lambda_dot,
                       double t_end, double half_width, std::string name) {
  check_dim(n);
  if (!lambda || !lambda_dot) throw ConfigError("conformal family needs lambda and its derivative");
  MetricFamilySpec s;
  s.name = std::move(name);
  s.dim = n;
  s.t_end = t_end;
  s.domain = DomainBox::cube(n, half_width);
  s.g = [n, lambda](double t, const Vec&) { return (std::exp(2.0 * lambda(t)) * Mat::Identity(n, n)).eval(); };
  s.dg_dt = [n, lambda, lambda_dot](double t, const Vec&) {
    return (2.0 * lambda_dot(t) * std::exp(2.0 * lambda(t)) * Mat::Identity(n, n)).eval();
  };
  s.dg_dx = [n](double, const Vec&, int) { return Mat::Zero(n, n).eval(); };
  s.d2g_dx = [n](double, const Vec&, int, int) { return Mat::Zero(n, n).eval(); };
  s.distance = [lambda](double t, const Vec& x, const Vec& y) { return std::exp(lambda(t)) * (x - y).norm(); };
  s.spatially_constant = true;
  s.quadratic_distance = true;
  return MetricFamily(std::move(s));
}

MetricFamily conformal_linear(int n, double rate, double t_end, double half_width) {
  return conformal(
      n, [rate](double t) { return rate * t; }, [rate](double) { return rate; }, t_end, half_width, "conformal");
}

MetricFamily flat_torus(const Vec& coefficients, const Vec& rates, double t_end) {
  const int n = static_cast<int>(coefficients.size());
  check_dim(n);
  if (rates.size() != n) throw ConfigError("torus coefficients and rates differ in length");
  for (int i = 0; i < n; ++i) {
    if (!(coefficients[i] > 0.0)) throw ConfigError("torus coefficients must be positive");
  }
  MetricFamilySpec s;
  s.name = "torus";
  s.dim = n;
  s.t_end = t_end;
  s.domain = DomainBox::box(Vec::Zero(n), Vec::Constant(n, 2.0 * M_PI));
  s.g = [coefficients, rates](double t, const Vec&) {
    return Mat((coefficients.array() * (rates.array() * t).exp()).matrix().asDiagonal());
  };
  s.dg_dt = [coefficients, rates](double t, const Vec&) {
    return Mat((rates.array() * coefficients.array() * (rates.array() * t).exp()).matrix().asDiagonal());
  };
  s.dg_dx = [n](double, const Vec&, int) { return Mat::Zero(n, n).eval(); };
  s.d2g_dx = [n](double, const Vec&, int, int) { return Mat::Zero(n, n).eval(); };
  s.distance = [coefficients, rates](double t, const Vec& x, const Vec& y) {
    double d2 = 0.0;
    for (int i = 0; i < x.size(); ++i) {
      double d = std::remainder(y[i] - x[i], 2.0 * M_PI);
      d2 += coefficients[i] * std::exp(rates[i] * t) * d * d;
    }
    return std::sqrt(d2);
  };
  s.spatially_constant = true;
  return MetricFamily(std::move(s));
}

double sphere_scale(int n, double alpha, double c0, double t) { return c0 + alpha * (n - 1) * t; }

MetricFamily ricci_sphere(int n, double alpha, double c0, double t_end, double half_width) {
  if (n != 2 && n != 3) throw UnsupportedDimension("the Ricci-flow sphere is available for n = 2, 3");
  if (!(c0 > 0.0)) throw ConfigError("sphere scale c0 must be positive");
  if (!(sphere_scale(n, alpha, c0, t_end) > 0.0)) {
    throw ConfigError("sphere collapses before t_end (c(t_end) <= 0)");
  }
  const double cdot = alpha * (n - 1);
  MetricFamilySpec s;
  s.name = "sphere";
  s.dim = n;
  s.t_end = t_end;
  s.domain = DomainBox::cube(n, half_width);
  s.g = [=](double t, const Vec& x) {
    const double q = 1.0 + x.squaredNorm();
    return (sphere_scale(n, alpha, c0, t) * 4.0 / (q * q) * Mat::Identity(n, n)).eval();
  };
  s.dg_dt = [=](double, const Vec& x) {
    const double q = 1.0 + x.squaredNorm();
    return (cdot * 4.0 / (q * q) * Mat::Identity(n, n)).eval();
  };
  s.dg_dx = [=](double t, const Vec& x, int k) {
    const double q = 1.0 + x.squaredNorm();
    const double c = sphere_scale(n, alpha, c0, t);
    return (-16.0 * c * x[k] / (q * q * q) * Mat::Identity(n, n)).eval();
  };
  s.d2g_dx = [=](double t, const Vec& x, int k, int l) {
    const double q = 1.0 + x.squaredNorm();
    const double c = sphere_scale(n, alpha, c0, t);
    const double q3 = q * q * q;
    const double v = 4.0 * c * (-4.0 * (k == l ? 1.0 : 0.0) / q3 + 24.0 * x[k] * x[l] / (q3 * q));
    return (v * Mat::Identity(n, n)).eval();
  };
  s.distance = [=](double t, const Vec& x, const Vec& y) {
    // Chord length between the inverse stereographic images on the unit sphere.
    const double qx = 1.0 + x.squaredNorm();
    const double qy = 1.0 + y.squaredNorm();
    double chord2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = 2.0 * x[i] / qx - 2.0 * y[i] / qy;
      chord2 += d * d;
    }
    const double d = (x.squaredNorm() - 1.0) / qx - (y.squaredNorm() - 1.0) / qy;
    chord2 += d * d;
    const double half = std::min(1.0, 0.5 * std::sqrt(chord2));
    return std::sqrt(sphere_scale(n, alpha, c0, t)) * 2.0 * std::asin(half);
  };
  s.injectivity_radius = [=](double t) { return 0.9 * M_PI * std::sqrt(sphere_scale(n, alpha, c0, t)); };
  s.h_x = 1e-5;
  return MetricFamily(std::move(s));
}

}  // namespace omflow::families
