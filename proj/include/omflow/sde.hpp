#pragma once

// Simulation of the inhomogeneous diffusion L_t = 1/2 Delta_t + Z(t), Monte
// Carlo tube probabilities, the Dirichlet eigenvalue lambda_1 and the
// small-ball prediction.

#include "omflow/curve.hpp"
#include "omflow/geometry.hpp"
#include "omflow/lagrangian.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace omflow {

struct DiffusionSpec {
  MetricFamily family;
  VectorField z;
  Vec x0;
  double T = 1.0;
  /// Euler-Maruyama step; 0 selects T / 4000.
  double dt = 0.0;

  int steps() const;
  void validate() const;
};

struct SimulatedPath {
  std::vector<double> t;
  std::vector<Vec> x;
  /// True when the path left the chart; x then ends at the last inside point.
  bool exited_chart = false;
};

/// Euler-Maruyama path of chain `chain`; uses the same random stream as the
/// tube estimator, so chain i here is path i there.
SimulatedPath simulate_path(const DiffusionSpec& spec, std::uint64_t seed, std::uint64_t chain = 0);

struct TubeEstimate {
  double epsilon = 0.0;
  std::uint64_t n_paths = 0;
  std::uint64_t n_hits = 0;
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::uint64_t seed = 0;
};

/// 95% interval: normal approximation, or [0, 1 - 0.05^{1/N}] without hits.
TubeEstimate make_estimate(double epsilon, std::uint64_t n_paths, std::uint64_t n_hits, std::uint64_t seed);

struct TubeTarget {
  Curve curve;
  WeightFunction weight = WeightFunction::unit();
  std::vector<double> epsilons;
};

struct TubeOptions {
  std::uint64_t n_paths = 100000;
  std::uint64_t seed = 1;
  /// 0 selects the number of hardware threads.
  int threads = 0;
  /// Kill paths that cross the tube boundary between grid points, with the
  /// Brownian-bridge probability exp(-2 r0 r1 / dt). Off means grid-only.
  bool bridge_correction = true;
  /// Keep (chain, mask, X_T) of every path that survives at least one tube.
  bool collect_survivors = false;
};

struct Survivor {
  std::uint64_t chain = 0;
  /// Bit (target * n_eps + eps_index) is set when that tube was not exited.
  std::uint64_t mask = 0;
  Vec x_T;
};

struct TubeRun {
  /// estimates[target][eps_index]
  std::vector<std::vector<TubeEstimate>> estimates;
  /// Sorted by chain.
  std::vector<Survivor> survivors;
  /// How many paths ended with each non-empty survival mask.
  std::map<std::uint64_t, std::uint64_t> survivor_masks;
  /// Number of paths that left the chart.
  std::uint64_t chart_exits = 0;
};

/// Evaluates every (target, epsilon) tube on the same simulated paths.
/// All targets must use the same number of epsilons; at most 64 tubes.
TubeRun tube_probabilities(const DiffusionSpec& spec, const std::vector<TubeTarget>& targets,
                           const TubeOptions& opts);

TubeEstimate tube_probability(const DiffusionSpec& spec, const Curve& curve, double epsilon,
                              const WeightFunction& weight, std::uint64_t n_paths, std::uint64_t seed,
                              int threads = 0);

/// First Dirichlet eigenvalue of -1/2 Delta on the unit ball of R^n,
/// j_{n/2-1,1}^2 / 2, for 1 <= n <= 10.
double lambda1_dirichlet(int n);

/// First positive zero of J_nu, nu > -1, by bisection on the power series.
double bessel_first_zero(double nu);

struct AsymptoticPrediction {
  double lambda1 = 0.0;
  /// int_0^T f^{-2}.
  double weight_integral = 0.0;
  /// lambda1 * weight_integral / eps^2.
  double decay_exponent = 0.0;
  /// int_0^T H~ (time-changed variant) along the curve.
  double action = 0.0;
  /// exp(-action).
  double action_factor = 0.0;
  std::optional<double> constant_C;

  /// log of the prediction without C: -decay_exponent - action.
  double log_prediction() const { return -decay_exponent - action; }
};

AsymptoticPrediction asymptotic_prediction(const MetricFamily& family, const VectorField& z, const Curve& curve,
                                           const WeightFunction& weight, double epsilon, int steps = 1000);

/// Estimates C by least squares of log p + lambda1 I / eps^2 + action
/// against eps^2 (intercept = log C). Needs at least two epsilons.
double calibrate_constant(const std::vector<double>& epsilons, const std::vector<double>& p_hats,
                          double lambda1, double weight_integral, double action);

struct RatioReport {
  TubeEstimate a;
  TubeEstimate b;
  std::uint64_t joint_hits = 0;
  double ratio = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double action_a = 0.0;
  double action_b = 0.0;
  /// exp(action_b - action_a).
  double theory = 0.0;
};

/// Tube ratio p_a / p_b on shared paths with a delta-method 95% interval that
/// accounts for the correlation of the two counts.
RatioReport ratio_experiment(const DiffusionSpec& spec, const Curve& curve_a, const Curve& curve_b, double epsilon,
                             std::uint64_t n_paths, std::uint64_t seed, int threads = 0, int action_steps = 1000);

}  // namespace omflow
