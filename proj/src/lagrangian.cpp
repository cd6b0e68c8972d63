#include "omflow/lagrangian.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

namespace omflow {

WeightFunction WeightFunction::unit() {
  WeightFunction w;
  w.f = [](double) { return 1.0; };
  w.f_prime = [](double) { return 0.0; };
  w.f_min = 1.0;
  w.description = "unit";
  return w;
}

WeightFunction WeightFunction::exponential(double rate) {
  WeightFunction w;
  w.f = [rate](double t) { return std::exp(rate * t); };
  w.f_prime = [rate](double t) { return rate * std::exp(rate * t); };
  w.f_min = 1e-12;
  w.description = "exp";
  return w;
}

void WeightFunction::validate(double T) const {
  if (!f || !f_prime) throw ConfigError("weight function needs f and f'");
  if (!(f_min > 0.0)) throw NonPositiveWeight("weight floor f_min must be positive");
  for (int k = 0; k <= 1000; ++k) {
    const double t = T * k / 1000.0;
    const double v = f(t);
    if (!(v >= f_min)) {
      std::ostringstream os;
      os << "weight f(" << t << ") = " << v << " is below the floor " << f_min;
      throw NonPositiveWeight(os.str());
    }
  }
}

LagrangianSample om_lagrangian(const MetricFamily& family, const VectorField& z, double t, const Vec& x,
                               const Vec& v) {
  family.require_inside(t, x);
  const Mat g = family.g(t, x);
  inverse_metric(g);
  const Vec w = z(t, x) - v;
  LagrangianSample s;
  s.t = t;
  s.kinetic = 0.5 * w.dot(g * w);
  s.div_term = 0.5 * divergence(family, z, t, x);
  s.scalar_term = -scalar_curvature(family, t, x) / 12.0;
  s.trace_term = 0.25 * trace_gdot(family, t, x);
  s.total = s.kinetic + s.div_term + s.scalar_term + s.trace_term;
  return s;
}

namespace {

double simpson(int steps, double T, const std::function<double(double)>& fn) {
  if (steps < 2 || steps % 2 != 0) throw ConfigError("Simpson quadrature needs an even number of intervals >= 2");
  const double h = T / steps;
  double sum = fn(0.0) + fn(T);
  for (int k = 1; k < steps; ++k) sum += (k % 2 ? 4.0 : 2.0) * fn(k * h);
  return sum * h / 3.0;
}

VectorField scaled_field(const VectorField& z, const WeightFunction& w) {
  VectorField out;
  out.description = z.description;
  out.h = z.h;
  out.value = [z, w](double t, const Vec& x) {
    const double f = w(t);
    return Vec((f * f) * z(t, x));
  };
  out.jacobian = [z, w](double t, const Vec& x) {
    const double f = w(t);
    return Mat((f * f) * z.dx(t, x));
  };
  return out;
}

LagrangianSample time_changed_sample(const MetricFamily& tc_family, const VectorField& tc_z,
                                     const WeightFunction& w, double t, const Vec& x, const Vec& v) {
  const double f = w(t);
  const double f2 = f * f;
  LagrangianSample s = om_lagrangian(tc_family, tc_z, t, x, f2 * v);
  const double back = 1.0 / f2;
  s.kinetic *= back;
  s.div_term *= back;
  s.scalar_term *= back;
  s.trace_term *= back;
  s.total = s.kinetic + s.div_term + s.scalar_term + s.trace_term;
  s.variant = "time_changed";
  return s;
}

LagrangianSample printed_sample(const MetricFamily& family, const VectorField& z, const WeightFunction& w,
                                double t, const Vec& x, const Vec& v) {
  family.require_inside(t, x);
  const Mat g = family.g(t, x);
  inverse_metric(g);
  const double f = w(t);
  const Vec d = z(t, x) - v;
  LagrangianSample s;
  s.t = t;
  s.kinetic = d.dot(g * d);
  s.div_term = 0.5 * divergence(family, z, t, x);
  s.scalar_term = -scalar_curvature(family, t, x) / 12.0;
  s.trace_term = 0.25 * trace_gdot(family, t, x) / (f * f);
  s.weight_term = -0.5 * family.dim() * w.f_prime(t) / (f * f * f);
  s.total = s.kinetic + s.div_term + s.scalar_term + s.trace_term + s.weight_term;
  s.variant = "printed";
  s.note = "printed weighted formula: kinetic coefficient is 1, not 1/2, so f = 1 does not reproduce H";
  return s;
}

}  // namespace

double action(const MetricFamily& family, const VectorField& z, const Curve& curve, int steps) {
  return simpson(steps, curve.T(),
                 [&](double t) { return om_lagrangian(family, z, t, curve(t), curve.velocity(t)).total; });
}

MetricFamily time_changed_family(const MetricFamily& family, const WeightFunction& w) {
  MetricFamilySpec s = family.spec();
  s.name = family.name() + "/time-changed";
  s.h_x = family.h_x();
  s.h_t = family.h_t();
  auto inv2 = [w](double t) {
    const double f = w(t);
    return 1.0 / (f * f);
  };
  s.g = [family, inv2](double t, const Vec& x) { return Mat(inv2(t) * family.g(t, x)); };
  // d/ds (f^{-2} g) = f^2 d/dt (f^{-2} g) = gdot - 2 (f'/f) g
  s.dg_dt = [family, w](double t, const Vec& x) {
    return Mat(family.dg_dt(t, x) - (2.0 * w.f_prime(t) / w(t)) * family.g(t, x));
  };
  s.dg_dx = [family, inv2](double t, const Vec& x, int k) { return Mat(inv2(t) * family.dg_dx(t, x, k)); };
  s.d2g_dx = [family, inv2](double t, const Vec& x, int k, int l) {
    return Mat(inv2(t) * family.d2g_dx(t, x, k, l));
  };
  s.distance = [family, w](double t, const Vec& x, const Vec& y) { return family.distance(t, x, y) / w(t); };
  s.injectivity_radius = [family, w](double t) { return family.injectivity_radius(t) / w(t); };
  return MetricFamily(std::move(s));
}

LagrangianSample weighted_lagrangian(const MetricFamily& family, const VectorField& z, const WeightFunction& w,
                                     double t, const Vec& x, const Vec& v, WeightedVariant variant) {
  if (!(w(t) >= w.f_min)) throw NonPositiveWeight("weight is below its floor at t = " + std::to_string(t));
  if (variant == WeightedVariant::printed) return printed_sample(family, z, w, t, x, v);
  return time_changed_sample(time_changed_family(family, w), scaled_field(z, w), w, t, x, v);
}

double weighted_action(const MetricFamily& family, const VectorField& z, const WeightFunction& w,
                       const Curve& curve, WeightedVariant variant, int steps) {
  w.validate(curve.T());
  if (variant == WeightedVariant::printed) {
    return simpson(steps, curve.T(),
                   [&](double t) { return printed_sample(family, z, w, t, curve(t), curve.velocity(t)).total; });
  }
  const MetricFamily tc = time_changed_family(family, w);
  const VectorField tz = scaled_field(z, w);
  return simpson(steps, curve.T(), [&](double t) {
    return time_changed_sample(tc, tz, w, t, curve(t), curve.velocity(t)).total;
  });
}

TimeChange time_change(const WeightFunction& w, double T) {
  if (!(T > 0.0)) throw ConfigError("time change needs T > 0");
  w.validate(T);
  auto inv2 = [w](double t) {
    const double f = w(t);
    return 1.0 / (f * f);
  };
  TimeChange tc;
  tc.T = T;
  if (w.is_unit()) {
    tc.delta_inv = [](double t) { return t; };
    tc.delta = [](double u) { return u; };
    tc.S = T;
    return tc;
  }
  tc.delta_inv = [inv2](double t) {
    if (t == 0.0) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(inv2, 0.0, t, 15, 1e-14);
  };
  tc.S = tc.delta_inv(T);
  const double S = tc.S;
  auto delta_inv = tc.delta_inv;
  tc.delta = [delta_inv, inv2, T, S](double u) {
    if (u < 0.0 || u > S * (1.0 + 1e-12)) {
      throw ConfigError("time change: argument outside [0, S]");
    }
    double lo = 0.0, hi = T;
    double t = T * (u / S);
    for (int it = 0; it < 200; ++it) {
      const double r = delta_inv(t) - u;
      if (r > 0.0) {
        hi = t;
      } else {
        lo = t;
      }
      if (std::abs(r) <= 1e-15 * std::max(1.0, S)) break;
      double next = t - r / inv2(t);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo <= 1e-15 * std::max(1.0, T)) break;
      t = next;
    }
    return t;
  };
  return tc;
}

}  // namespace omflow
