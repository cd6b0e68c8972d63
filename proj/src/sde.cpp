#include "omflow/sde.hpp"

#include "omflow/rng.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <thread>

namespace omflow {

int DiffusionSpec::steps() const {
  const double h = dt > 0.0 ? dt : T / 4000.0;
  return std::max(1, static_cast<int>(std::ceil(T / h - 1e-9)));
}

void DiffusionSpec::validate() const {
  if (!(T > 0.0)) throw ConfigError("diffusion horizon T must be positive");
  if (dt < 0.0) throw ConfigError("diffusion step dt must be positive");
  if (x0.size() != family.dim()) throw ConfigError("x0 dimension does not match the family");
  if (!z.value) throw ConfigError("diffusion drift is not set");
  if (T > family.t_end() - family.t_begin()) throw ConfigError("horizon exceeds the family's time span");
  family.require_inside(0.0, x0);
}

namespace {

// Euler-Maruyama for dX = (-1/2 g^{jk} Gamma^i_jk + Z) dt + g^{-1/2} dW with
// fixed-size vectors. Spatially constant families use precomputed tables of
// sqrt(dt) g^{-1/2} and g on the grid.
template <int N>
class Kernel {
 public:
  using V = Eigen::Matrix<double, N, 1>;
  using M = Eigen::Matrix<double, N, N>;

  explicit Kernel(const DiffusionSpec& spec)
      : spec_(spec), steps_(spec.steps()), dt_(spec.T / steps_), sqdt_(std::sqrt(dt_)) {
    const MetricFamily& fam = spec.family;
    lo_ = fam.domain().lo;
    hi_ = fam.domain().hi;
    if (fam.spatially_constant()) {
      sigma_.reserve(static_cast<std::size_t>(steps_));
      for (int k = 0; k < steps_; ++k) sigma_.push_back(M(sqdt_ * sqrt_inverse_metric(fam.g(time(k), spec.x0))));
    }
    if (fam.spatially_constant() && fam.quadratic_distance()) {
      metric_.reserve(static_cast<std::size_t>(steps_) + 1);
      for (int k = 0; k <= steps_; ++k) metric_.push_back(M(fam.g(time(k), spec.x0)));
    }
    if (spec.z.is_constant) {
      zdt_ = V(spec.z(0.0, spec.x0)) * dt_;
      constant_drift_ = true;
    }
  }

  int steps() const { return steps_; }
  double dt() const { return dt_; }
  double time(int k) const { return k == steps_ ? spec_.T : k * dt_; }

  // Advances x from grid time k to k + 1; false when the new point is outside the chart.
  bool step(int k, V& x, rng::NormalStream& normals) const {
    V xi;
    for (int i = 0; i < N; ++i) xi[i] = normals.next();
    if (!sigma_.empty()) {
      if (constant_drift_) {
        x += zdt_ + sigma_[k] * xi;
      } else {
        x += V(spec_.z(k * dt_, Vec(x))) * dt_ + sigma_[k] * xi;
      }
    } else {
      const double t = k * dt_;
      const Vec xv(x);
      const Vec drift = laplacian_drift(spec_.family, t, xv) + spec_.z(t, xv);
      x += V(drift) * dt_ + sqdt_ * (M(sqrt_inverse_metric(spec_.family.g(t, xv))) * xi);
    }
    if (!x.allFinite()) return false;
    for (int i = 0; i < N; ++i) {
      if (!(x[i] >= lo_[i] && x[i] <= hi_[i])) return false;
    }
    return true;
  }

  double distance(int k, const V& x, const V& phi) const {
    if (!metric_.empty()) {
      const V d = x - phi;
      return std::sqrt(d.dot(metric_[k] * d));
    }
    return spec_.family.distance(time(k), Vec(x), Vec(phi));
  }

 private:
  const DiffusionSpec& spec_;
  int steps_;
  double dt_;
  double sqdt_;
  V lo_, hi_;
  V zdt_ = V::Zero();
  bool constant_drift_ = false;
  std::vector<M> sigma_;
  std::vector<M> metric_;
};

int resolve_threads(int threads) {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// The bridge kill is skipped when its probability is below e^{-37.43} ~ 5e-17.
constexpr double kBridgeCutoff = 37.43;

template <int N>
SimulatedPath simulate_path_n(const DiffusionSpec& spec, std::uint64_t seed, std::uint64_t chain) {
  using V = typename Kernel<N>::V;
  const Kernel<N> kernel(spec);
  rng::NormalStream normals(seed, chain);
  SimulatedPath path;
  V x(spec.x0);
  path.t.push_back(0.0);
  path.x.push_back(spec.x0);
  for (int k = 0; k < kernel.steps(); ++k) {
    V next = x;
    if (!kernel.step(k, next, normals)) {
      path.exited_chart = true;
      break;
    }
    x = next;
    path.t.push_back(kernel.time(k + 1));
    path.x.push_back(Vec(x));
  }
  return path;
}

struct TubePartial {
  std::vector<std::uint64_t> hits;
  std::vector<Survivor> survivors;
  std::map<std::uint64_t, std::uint64_t> masks;
  std::uint64_t exits = 0;
  std::string error;
};

template <int N>
std::vector<TubePartial> run_tubes(const DiffusionSpec& spec, const std::vector<TubeTarget>& targets,
                                   std::size_t n_eps, const TubeOptions& opts) {
  using V = typename Kernel<N>::V;
  const Kernel<N> kernel(spec);
  const int steps = kernel.steps();
  const double dt = kernel.dt();
  const bool bridge = opts.bridge_correction;
  const std::size_t n_targets = targets.size();
  const std::size_t n_tubes = n_targets * n_eps;

  // Curve points and radii on the grid.
  std::vector<std::vector<V>> phi(n_targets);
  std::vector<std::vector<double>> radius(n_tubes);
  for (std::size_t a = 0; a < n_targets; ++a) {
    phi[a].reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) phi[a].push_back(V(targets[a].curve(kernel.time(k))));
    for (std::size_t e = 0; e < n_eps; ++e) {
      auto& r = radius[a * n_eps + e];
      r.reserve(static_cast<std::size_t>(steps) + 1);
      for (int k = 0; k <= steps; ++k) r.push_back(targets[a].epsilons[e] * targets[a].weight(kernel.time(k)));
    }
  }

  const std::uint64_t total = opts.n_paths;
  const int threads =
      static_cast<int>(std::min<std::uint64_t>(resolve_threads(opts.threads), std::max<std::uint64_t>(total, 1)));
  std::vector<TubePartial> partial(static_cast<std::size_t>(threads));

  auto worker = [&](int w) {
    TubePartial& out = partial[static_cast<std::size_t>(w)];
    out.hits.assign(n_tubes, 0);
    const std::uint64_t begin = total * static_cast<std::uint64_t>(w) / static_cast<std::uint64_t>(threads);
    const std::uint64_t end = total * static_cast<std::uint64_t>(w + 1) / static_cast<std::uint64_t>(threads);
    std::vector<double> margin(n_tubes), next_margin(n_tubes), dist(n_targets);
    try {
      for (std::uint64_t chain = begin; chain < end; ++chain) {
        rng::NormalStream normals(opts.seed, chain);
        V x(spec.x0);
        std::uint64_t alive = 0;
        for (std::size_t a = 0; a < n_targets; ++a) {
          const double d = kernel.distance(0, x, phi[a][0]);
          for (std::size_t e = 0; e < n_eps; ++e) {
            const std::size_t j = a * n_eps + e;
            margin[j] = radius[j][0] - d;
            if (margin[j] >= 0.0) alive |= 1ull << j;
          }
        }
        bool exited = false;
        for (int k = 0; k < steps && alive != 0; ++k) {
          if (!kernel.step(k, x, normals)) {
            exited = true;
            alive = 0;
            break;
          }
          for (std::size_t a = 0; a < n_targets; ++a) dist[a] = kernel.distance(k + 1, x, phi[a][k + 1]);
          // One bridge uniform per step, shared by all tubes, so the kill events
          // are nested across radii; drawn only when some tube needs it.
          double u = -1.0;
          for (std::size_t j = 0; j < n_tubes; ++j) {
            if (!(alive & (1ull << j))) continue;
            const double m1 = radius[j][k + 1] - dist[j / n_eps];
            bool keep = m1 >= 0.0;
            if (keep && bridge) {
              const double expo = 2.0 * margin[j] * m1 / dt;
              if (expo < kBridgeCutoff) {
                if (u < 0.0) u = rng::bridge_uniform(opts.seed, chain, static_cast<std::uint64_t>(k));
                if (u < std::exp(-expo)) keep = false;
              }
            }
            next_margin[j] = m1;
            if (!keep) alive &= ~(1ull << j);
          }
          std::swap(margin, next_margin);
        }
        if (exited) ++out.exits;
        if (alive != 0) {
          for (std::size_t j = 0; j < n_tubes; ++j)
            if (alive & (1ull << j)) ++out.hits[j];
          ++out.masks[alive];
          if (opts.collect_survivors) out.survivors.push_back(Survivor{chain, alive, Vec(x)});
        }
      }
    } catch (const std::exception& ex) {
      out.error = ex.what();
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  return partial;
}

}  // namespace

SimulatedPath simulate_path(const DiffusionSpec& spec, std::uint64_t seed, std::uint64_t chain) {
  spec.validate();
  switch (spec.family.dim()) {
    case 1: return simulate_path_n<1>(spec, seed, chain);
    case 2: return simulate_path_n<2>(spec, seed, chain);
    case 3: return simulate_path_n<3>(spec, seed, chain);
    default: return simulate_path_n<4>(spec, seed, chain);
  }
}

TubeEstimate make_estimate(double epsilon, std::uint64_t n_paths, std::uint64_t n_hits, std::uint64_t seed) {
  TubeEstimate e;
  e.epsilon = epsilon;
  e.n_paths = n_paths;
  e.n_hits = n_hits;
  e.seed = seed;
  if (n_paths == 0) return e;
  const double N = static_cast<double>(n_paths);
  e.p_hat = static_cast<double>(n_hits) / N;
  if (n_hits == 0) {
    e.ci_lo = 0.0;
    e.ci_hi = 1.0 - std::pow(0.05, 1.0 / N);
  } else if (n_hits == n_paths) {
    e.ci_lo = std::pow(0.05, 1.0 / N);
    e.ci_hi = 1.0;
  } else {
    const double half = 1.959963984540054 * std::sqrt(e.p_hat * (1.0 - e.p_hat) / N);
    e.ci_lo = std::max(0.0, e.p_hat - half);
    e.ci_hi = std::min(1.0, e.p_hat + half);
  }
  return e;
}

TubeRun tube_probabilities(const DiffusionSpec& spec, const std::vector<TubeTarget>& targets,
                           const TubeOptions& opts) {
  spec.validate();
  if (targets.empty()) throw ConfigError("tube estimation needs at least one target");
  const std::size_t n_eps = targets.front().epsilons.size();
  if (n_eps == 0) throw ConfigError("tube estimation needs at least one epsilon");
  for (const auto& tg : targets) {
    if (tg.epsilons.size() != n_eps) throw ConfigError("all tube targets must use the same number of epsilons");
    if (tg.curve.dim() != spec.family.dim()) throw ConfigError("tube curve dimension does not match the family");
    if (std::abs(tg.curve.T() - spec.T) > 1e-12 * std::max(1.0, spec.T)) {
      throw ConfigError("tube curve horizon differs from the diffusion horizon");
    }
    for (double e : tg.epsilons) {
      if (!(e > 0.0)) throw ConfigError("tube radius epsilon must be positive");
    }
    tg.weight.validate(spec.T);
  }
  const std::size_t n_tubes = targets.size() * n_eps;
  if (n_tubes > 64) throw ConfigError("at most 64 tubes per run");

  std::vector<TubePartial> partial;
  switch (spec.family.dim()) {
    case 1: partial = run_tubes<1>(spec, targets, n_eps, opts); break;
    case 2: partial = run_tubes<2>(spec, targets, n_eps, opts); break;
    case 3: partial = run_tubes<3>(spec, targets, n_eps, opts); break;
    default: partial = run_tubes<4>(spec, targets, n_eps, opts); break;
  }
  const std::size_t n_targets = targets.size();
  const std::uint64_t N = opts.n_paths;

  TubeRun run;
  std::vector<std::uint64_t> hits(n_tubes, 0);
  for (const auto& p : partial) {
    if (!p.error.empty()) throw Error("tube simulation failed: " + p.error);
    for (std::size_t j = 0; j < n_tubes; ++j) hits[j] += p.hits[j];
    run.chart_exits += p.exits;
    run.survivors.insert(run.survivors.end(), p.survivors.begin(), p.survivors.end());
    for (const auto& [mask, count] : p.masks) run.survivor_masks[mask] += count;
  }
  run.estimates.resize(n_targets);
  for (std::size_t a = 0; a < n_targets; ++a)
    for (std::size_t e = 0; e < n_eps; ++e)
      run.estimates[a].push_back(make_estimate(targets[a].epsilons[e], N, hits[a * n_eps + e], opts.seed));
  return run;
}

TubeEstimate tube_probability(const DiffusionSpec& spec, const Curve& curve, double epsilon,
                              const WeightFunction& weight, std::uint64_t n_paths, std::uint64_t seed, int threads) {
  TubeOptions opts;
  opts.n_paths = n_paths;
  opts.seed = seed;
  opts.threads = threads;
  const TubeRun run = tube_probabilities(spec, {TubeTarget{curve, weight, {epsilon}}}, opts);
  return run.estimates[0][0];
}

AsymptoticPrediction asymptotic_prediction(const MetricFamily& family, const VectorField& z, const Curve& curve,
                                           const WeightFunction& weight, double epsilon, int steps) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  weight.validate(curve.T());
  AsymptoticPrediction p;
  p.lambda1 = lambda1_dirichlet(family.dim());
  if (steps < 2 || steps % 2) throw ConfigError("Simpson quadrature needs an even number of intervals >= 2");
  const double h = curve.T() / steps;
  double sum = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double f = weight(k * h);
    sum += ((k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0)) / (f * f);
  }
  p.weight_integral = sum * h / 3.0;
  p.decay_exponent = p.lambda1 * p.weight_integral / (epsilon * epsilon);
  p.action = weighted_action(family, z, weight, curve, WeightedVariant::time_changed, steps);
  p.action_factor = std::exp(-p.action);
  return p;
}

double calibrate_constant(const std::vector<double>& epsilons, const std::vector<double>& p_hats, double lambda1,
                          double weight_integral, double action) {
  if (epsilons.size() != p_hats.size() || epsilons.size() < 2) {
    throw ConfigError("calibration needs matching epsilon and probability lists of length >= 2");
  }
  const std::size_t m = epsilons.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(p_hats[i] > 0.0)) throw DegenerateRatio("calibration needs positive probabilities");
    const double e2 = epsilons[i] * epsilons[i];
    const double y = std::log(p_hats[i]) + lambda1 * weight_integral / e2 + action;
    sx += e2;
    sy += y;
    sxx += e2 * e2;
    sxy += e2 * y;
  }
  const double md = static_cast<double>(m);
  const double denom = md * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw ConfigError("calibration needs distinct epsilons");
  const double slope = (md * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / md;
  return std::exp(intercept);
}

RatioReport ratio_experiment(const DiffusionSpec& spec, const Curve& curve_a, const Curve& curve_b, double epsilon,
                             std::uint64_t n_paths, std::uint64_t seed, int threads, int action_steps) {
  TubeOptions opts;
  opts.n_paths = n_paths;
  opts.seed = seed;
  opts.threads = threads;
  const WeightFunction unit = WeightFunction::unit();
  const TubeRun run = tube_probabilities(
      spec, {TubeTarget{curve_a, unit, {epsilon}}, TubeTarget{curve_b, unit, {epsilon}}}, opts);
  RatioReport rep;
  rep.a = run.estimates[0][0];
  rep.b = run.estimates[1][0];
  const auto joint = run.survivor_masks.find(0b11);
  rep.joint_hits = joint == run.survivor_masks.end() ? 0 : joint->second;
  rep.action_a = action(spec.family, spec.z, curve_a, action_steps);
  rep.action_b = action(spec.family, spec.z, curve_b, action_steps);
  rep.theory = std::exp(rep.action_b - rep.action_a);
  if (rep.b.n_hits == 0) {
    throw DegenerateRatio("ratio experiment: no path stayed in the tube around curve b");
  }
  const double N = static_cast<double>(n_paths);
  const double pa = rep.a.p_hat, pb = rep.b.p_hat;
  const double pab = static_cast<double>(rep.joint_hits) / N;
  rep.ratio = pa / pb;
  if (rep.a.n_hits == 0) {
    rep.ci_lo = 0.0;
    rep.ci_hi = rep.a.ci_hi / pb;
    return rep;
  }
  const double var = (1.0 - pa) / (N * pa) + (1.0 - pb) / (N * pb) - 2.0 * (pab - pa * pb) / (N * pa * pb);
  const double half = 1.959963984540054 * std::sqrt(std::max(0.0, var));
  rep.ci_lo = rep.ratio * std::exp(-half);
  rep.ci_hi = rep.ratio * std::exp(half);
  return rep;
}

}  // namespace omflow
