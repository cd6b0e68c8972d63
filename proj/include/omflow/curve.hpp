#pragma once

// Smooth chart curves phi : [0, T] -> R^n with velocity and acceleration.

#include "omflow/core.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace omflow {

class Curve {
 public:
  using PointFn = std::function<Vec(double)>;

  Curve() = default;

  /// Closed-form curve. A missing acceleration falls back to central
  /// differences of the velocity.
  static Curve analytic(double T, PointFn phi, PointFn phi_dot, PointFn phi_ddot = {});
  /// Clamped cubic spline through K+1 uniformly spaced knots (K >= 1). End
  /// slopes come from one-sided differences of up to fourth order.
  static Curve spline(double T, std::vector<Vec> knots);
  /// Piecewise Hermite interpolation on a uniform grid: cubic from values and
  /// velocities, quintic when accelerations are supplied as well.
  static Curve hermite(double T, std::vector<Vec> knots, std::vector<Vec> velocities,
                       std::vector<Vec> accelerations = {});
  static Curve constant(double T, const Vec& x);
  /// phi(t) = a + (t / T)(b - a).
  static Curve line(double T, const Vec& a, const Vec& b);

  double T() const { return T_; }
  int dim() const { return dim_; }
  bool valid() const { return static_cast<bool>(phi_); }
  const std::string& kind() const { return kind_; }

  Vec operator()(double t) const { return phi_(t); }
  Vec velocity(double t) const { return phi_dot_(t); }
  Vec acceleration(double t) const;

  /// Samples phi at steps + 1 uniform times.
  std::vector<Vec> sample(int steps) const;

 private:
  double T_ = 0.0;
  int dim_ = 0;
  std::string kind_;
  PointFn phi_;
  PointFn phi_dot_;
  PointFn phi_ddot_;
};

/// Reads a curve from CSV with header "t,x_1,...,x_n". Times must start at 0 and
/// be uniformly spaced; the result is the clamped cubic spline through the rows.
Curve load_curve_csv(const std::string& path);

/// Writes steps + 1 uniform samples of the curve as CSV.
void write_curve_csv(const std::string& path, const Curve& curve, int steps);

/// sqrt(int_0^T |a(t) - b(t)|^2 dt) in chart coordinates, by Simpson's rule.
double l2_distance(const Curve& a, const Curve& b, int steps = 2000);

}  // namespace omflow
