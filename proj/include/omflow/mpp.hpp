#pragma once

// Most probable paths: Euler-Lagrange residuals, a shooting boundary-value
// solver and a direct discretized minimizer used as an independent oracle.

#include "omflow/curve.hpp"
#include "omflow/geometry.hpp"

#include <vector>

namespace omflow {

struct ELResidualReport {
  std::vector<double> t_grid;
  std::vector<Vec> residual;
  /// sup over the grid of |residual|_g.
  double max_norm = 0.0;
};

/// Acceleration prescribed by the Euler-Lagrange equation of the action at
/// (t, x, v). Gradients of the potential part use central differences with
/// step h (0 selects the family's spatial step).
Vec el_acceleration(const MetricFamily& family, const VectorField& z, double t, const Vec& x, const Vec& v,
                    double h = 0.0);

/// Residual phi'' - el_acceleration along the curve on grid_steps + 1 points.
/// With Z = 0 this is nabla_t phi' + gdot#(phi') + grad R / 12 - grad(tr gdot) / 4.
ELResidualReport el_residual(const MetricFamily& family, const VectorField& z, const Curve& curve,
                             int grid_steps = 200);

/// Coefficient of grad R in the Euler-Lagrange equation under d/dt g = alpha Ric.
double ricci_flow_gradient_coefficient(double alpha);

/// Residual of nabla_t phi' + alpha Ric#(phi') + ((1 - 3 alpha)/12) grad R along
/// the curve, for families evolving by d/dt g = alpha Ric.
ELResidualReport ricci_flow_el_residual(const MetricFamily& family, double alpha, const Curve& curve,
                                        int grid_steps = 200);

struct BVPSolution {
  Curve curve;
  Vec v0;
  int shots = 0;
  double terminal_error = 0.0;
  double action = 0.0;
};

struct BVPOptions {
  int ode_steps = 500;
  int max_iter = 50;
  double tol = 1e-8;
  /// Relative size of the +/- perpendicular perturbation of the initial velocity.
  double perturbation = 0.5;
  int action_steps = 1000;
};

struct BVPResult {
  /// Smallest-action critical curve.
  BVPSolution best;
  /// All distinct critical curves found from the default initial guesses.
  std::vector<BVPSolution> solutions;
};

/// Integrates the Euler-Lagrange system from (x0, v0) with RK4; the returned
/// curve is the quintic Hermite interpolant of the ODE states.
Curve integrate_el(const MetricFamily& family, const VectorField& z, const Vec& x0, const Vec& v0, double T,
                   int steps);

/// Single shooting with Newton on the initial velocity. With `init` unset the
/// guesses are the chart straight line and two perpendicular perturbations.
BVPResult solve_mpp_bvp(const MetricFamily& family, const VectorField& z, const Vec& x0, const Vec& xT, double T,
                        const BVPOptions& opts = {}, const Curve* init = nullptr);

struct DirectOptions {
  int max_iter = 100000;
  double grad_tol = 1e-7;
  double fd_step = 1e-6;
  int action_steps = 1000;
};

struct DirectResult {
  Curve curve;
  std::vector<Vec> knots;
  int iterations = 0;
  double gradient_norm = 0.0;
  /// Discrete objective (piecewise-linear path, Simpson per segment).
  double discrete_action = 0.0;
  /// Action of the returned spline, Simpson with action_steps intervals.
  double action = 0.0;
};

/// Minimizes the discretized action over the K - 1 interior knots of a path on
/// K uniform intervals, starting from the chart straight line.
DirectResult minimize_action_direct(const MetricFamily& family, const VectorField& z, const Vec& x0,
                                    const Vec& xT, double T, int K, const DirectOptions& opts = {});

/// Gradient of the discrete objective with respect to the interior knots
/// (central differences), stacked knot by knot.
std::vector<Vec> discrete_action_gradient(const MetricFamily& family, const VectorField& z,
                                          const std::vector<Vec>& knots, double T, double fd_step = 1e-6);

}  // namespace omflow
