#pragma once

// Experiment configuration: a flat "key = value" text format with dotted keys,
// '#' comments and one entry per line. Lists are comma separated.

#include "omflow/curve.hpp"
#include "omflow/geometry.hpp"
#include "omflow/lagrangian.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace omflow::config {

struct FamilyConfig {
  /// euclidean | conformal | torus | sphere
  std::string name = "euclidean";
  int n = 1;
  /// Chart half width; 0 selects the family default (3 for the sphere, 10 otherwise).
  double half_width = 0.0;
  /// Last time covered by the family; 0 means "the horizon T".
  double t_end = 0.0;
  /// conformal: lambda(t) = lambda * t (linear) or 1/2 log(1 + lambda * t) (log).
  std::string profile = "linear";
  double lambda = 0.0;
  /// sphere
  double alpha = -2.0;
  double c0 = 1.0;
  /// torus
  std::vector<double> coeffs;
  std::vector<double> rates;

  bool operator==(const FamilyConfig&) const = default;
};

struct DriftConfig {
  /// zero | constant | linear (Z(x) = A x, A row-major in `matrix`)
  std::string kind = "zero";
  std::vector<double> mu;
  std::vector<double> matrix;

  bool operator==(const DriftConfig&) const = default;
};

struct CurveConfig {
  /// constant (x) | line (a -> b) | csv (path)
  std::string kind = "constant";
  std::vector<double> x;
  std::vector<double> a;
  std::vector<double> b;
  std::string path;

  bool operator==(const CurveConfig&) const = default;
};

struct WeightConfig {
  /// unit | exponential (f = exp(rate t))
  std::string kind = "unit";
  double rate = 0.0;

  bool operator==(const WeightConfig&) const = default;
};

struct ExperimentConfig {
  FamilyConfig family;
  DriftConfig drift;
  CurveConfig curve;
  /// Second curve for ratio experiments; kind "none" when unused.
  CurveConfig curve_b{"none", {}, {}, {}, {}};
  WeightConfig weight;
  double T = 1.0;
  std::vector<double> epsilon{0.5};
  std::uint64_t n_paths = 100000;
  std::uint64_t seed = 1;
  /// Euler-Maruyama step, 0 selects T / 4000.
  double dt = 0.0;
  /// Simpson intervals for actions and sample rows for series output.
  int steps = 1000;
  /// Boundary points for the most-probable-path solvers.
  std::vector<double> mpp_x0;
  std::vector<double> mpp_xT;
  /// Intervals of the direct minimizer used as the oracle.
  int mpp_knots = 200;
  /// Output directory.
  std::string out = ".";

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses config text; `source` names the input in diagnostics. Throws
/// ConfigError with "source:line: message" on malformed input.
ExperimentConfig parse(const std::string& text, const std::string& source = "<config>");
ExperimentConfig load(const std::string& path);

/// Applies "key=value" overrides on top of the text, as if appended to it.
ExperimentConfig parse_with_overrides(const std::string& text, const std::vector<std::string>& overrides,
                                      const std::string& source = "<config>");

/// Canonical text for a configuration; parse(emit(c)) == c.
std::string emit(const ExperimentConfig& cfg);

/// Range and consistency checks; throws ConfigError naming the field.
void validate(const ExperimentConfig& cfg);

MetricFamily make_family(const ExperimentConfig& cfg);
VectorField make_drift(const ExperimentConfig& cfg);
/// Builds a curve of the family's dimension on [0, T].
Curve make_curve(const CurveConfig& c, const ExperimentConfig& cfg);
WeightFunction make_weight(const ExperimentConfig& cfg);

Vec to_vec(const std::vector<double>& v);

}  // namespace omflow::config
