#pragma once

// The Onsager-Machlup Lagrangian, its action, the weighted variant and the
// associated time change.

#include "omflow/curve.hpp"
#include "omflow/geometry.hpp"

#include <functional>
#include <string>

namespace omflow {

struct LagrangianSample {
  double t = 0.0;
  double kinetic = 0.0;      // 1/2 |Z - v|^2_g (|Z - v|^2_g in the printed weighted formula)
  double div_term = 0.0;     // 1/2 div_g Z
  double scalar_term = 0.0;  // -R_g / 12
  double trace_term = 0.0;   // 1/4 tr_g gdot
  /// Extra term of the printed weighted formula, -1/2 n f' f^{-3}; zero otherwise.
  double weight_term = 0.0;
  double total = 0.0;
  std::string variant = "standard";
  /// Non-empty when the evaluated formula is known to disagree with the
  /// unweighted Lagrangian at f = 1.
  std::string note;
};

struct WeightFunction {
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  double f_min = 1e-12;
  std::string description = "custom";

  double operator()(double t) const { return f(t); }

  static WeightFunction unit();
  /// f(t) = exp(rate t).
  static WeightFunction exponential(double rate);
  /// Throws NonPositiveWeight unless f >= f_min on a 1001-point grid of [0, T].
  void validate(double T) const;
  bool is_unit() const { return description == "unit"; }
};

enum class WeightedVariant { printed, time_changed };

LagrangianSample om_lagrangian(const MetricFamily& family, const VectorField& z, double t, const Vec& x,
                               const Vec& v);

/// Composite Simpson rule over `steps` intervals (even, >= 2) of H along the curve.
double action(const MetricFamily& family, const VectorField& z, const Curve& curve, int steps = 1000);

LagrangianSample weighted_lagrangian(const MetricFamily& family, const VectorField& z, const WeightFunction& w,
                                     double t, const Vec& x, const Vec& v, WeightedVariant variant);

double weighted_action(const MetricFamily& family, const VectorField& z, const WeightFunction& w,
                       const Curve& curve, WeightedVariant variant, int steps = 1000);

/// The family f^{-2}(t) g(t), with its time derivative taken along the new
/// clock s = int_0^t f^{-2}; still indexed by the original time t.
MetricFamily time_changed_family(const MetricFamily& family, const WeightFunction& w);

struct TimeChange {
  double T = 0.0;
  /// S = int_0^T f^{-2}.
  double S = 0.0;
  std::function<double(double)> delta_inv;  // t -> int_0^t f^{-2}
  std::function<double(double)> delta;      // inverse of delta_inv on [0, S]
};

TimeChange time_change(const WeightFunction& w, double T);

}  // namespace omflow
