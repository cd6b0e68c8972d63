#include "omflow/cli.hpp"

#include "omflow/config.hpp"
#include "omflow/io.hpp"
#include "omflow/lagrangian.hpp"
#include "omflow/mpp.hpp"
#include "omflow/sde.hpp"
#include "omflow/transport.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace omflow::cli {

namespace {

using nlohmann::json;

constexpr int kSchemaVersion = 1;

double r12(double v) { return io::round12(v); }

json vec_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(r12(v[i]));
  return a;
}

json estimate_json(const TubeEstimate& e) {
  return {{"epsilon", r12(e.epsilon)}, {"n_paths", e.n_paths}, {"n_hits", e.n_hits}, {"p_hat", r12(e.p_hat)},
          {"ci_lo", r12(e.ci_lo)},     {"ci_hi", r12(e.ci_hi)},   {"seed", e.seed}};
}

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out;
  int threads = 0;
};

config::ExperimentConfig load_config(const Common& c) {
  std::ifstream in(c.config_path);
  if (!in) throw ConfigError("cannot open config file '" + c.config_path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  config::ExperimentConfig cfg = config::parse_with_overrides(ss.str(), c.overrides, c.config_path);
  if (!c.out.empty()) cfg.out = c.out;
  std::filesystem::create_directories(cfg.out);
  return cfg;
}

std::string out_path(const config::ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out) / name).string();
}

void write_json(const std::string& path, json doc) {
  doc["schema_version"] = kSchemaVersion;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

int cmd_om_eval(const Common& common) {
  const auto cfg = load_config(common);
  const MetricFamily family = config::make_family(cfg);
  const VectorField z = config::make_drift(cfg);
  const Curve curve = config::make_curve(cfg.curve, cfg);
  const WeightFunction w = config::make_weight(cfg);
  const bool weighted = !w.is_unit();
  if (weighted) w.validate(cfg.T);

  auto csv = open_csv(out_path(cfg, "om_eval.csv"));
  csv << "t,kinetic,div_term,scalar_term,trace_term,weight_term,total\n";
  for (int k = 0; k <= cfg.steps; ++k) {
    const double t = cfg.T * k / cfg.steps;
    const LagrangianSample s =
        weighted ? weighted_lagrangian(family, z, w, t, curve(t), curve.velocity(t), WeightedVariant::time_changed)
                 : om_lagrangian(family, z, t, curve(t), curve.velocity(t));
    csv << io::fmt12(t) << "," << io::fmt12(s.kinetic) << "," << io::fmt12(s.div_term) << ","
        << io::fmt12(s.scalar_term) << "," << io::fmt12(s.trace_term) << "," << io::fmt12(s.weight_term) << ","
        << io::fmt12(s.total) << "\n";
  }
  const double S = action(family, z, curve, cfg.steps);
  json doc = {{"command", "om-eval"}, {"family", family.name()}, {"T", r12(cfg.T)}, {"steps", cfg.steps},
              {"action", r12(S)},     {"action_factor", r12(std::exp(-S))}};
  if (weighted) {
    doc["weight"] = w.description;
    doc["weighted_action_time_changed"] =
        r12(weighted_action(family, z, w, curve, WeightedVariant::time_changed, cfg.steps));
    doc["weighted_action_printed"] = r12(weighted_action(family, z, w, curve, WeightedVariant::printed, cfg.steps));
  }
  write_json(out_path(cfg, "om_eval.json"), doc);
  std::cout << "action " << io::fmt12(S) << "\n";
  return kOk;
}

int cmd_mpp(const Common& common, bool oracle) {
  const auto cfg = load_config(common);
  const MetricFamily family = config::make_family(cfg);
  const VectorField z = config::make_drift(cfg);
  Vec x0, xT;
  if (!cfg.mpp_x0.empty() && !cfg.mpp_xT.empty()) {
    x0 = config::to_vec(cfg.mpp_x0);
    xT = config::to_vec(cfg.mpp_xT);
  } else {
    const Curve c = config::make_curve(cfg.curve, cfg);
    x0 = c(0.0);
    xT = c(cfg.T);
  }
  family.require_inside(0.0, x0);
  family.require_inside(cfg.T, xT);
  BVPOptions opts;
  opts.action_steps = cfg.steps;
  const BVPResult res = solve_mpp_bvp(family, z, x0, xT, cfg.T, opts);
  write_curve_csv(out_path(cfg, "mpp_curve.csv"), res.best.curve, cfg.steps);
  json doc = {{"command", "mpp"},
              {"family", family.name()},
              {"T", r12(cfg.T)},
              {"x0", vec_json(x0)},
              {"xT", vec_json(xT)},
              {"action", r12(res.best.action)},
              {"v0", vec_json(res.best.v0)},
              {"shots", res.best.shots},
              {"terminal_error", r12(res.best.terminal_error)},
              {"critical_paths_found", res.solutions.size()}};
  if (oracle) {
    DirectOptions dopts;
    dopts.action_steps = cfg.steps;
    const DirectResult direct = minimize_action_direct(family, z, x0, xT, cfg.T, cfg.mpp_knots, dopts);
    const double gap = l2_distance(res.best.curve, direct.curve);
    const double rel = std::abs(direct.action - res.best.action) / std::max(1.0, std::abs(res.best.action));
    doc["oracle"] = {{"knots", cfg.mpp_knots},
                     {"iterations", direct.iterations},
                     {"gradient_norm", r12(direct.gradient_norm)},
                     {"action", r12(direct.action)},
                     {"l2_gap", r12(gap)},
                     {"action_relative_gap", r12(rel)}};
    std::cout << "oracle l2_gap " << io::fmt12(gap) << "\n";
  }
  write_json(out_path(cfg, "mpp.json"), doc);
  std::cout << "action " << io::fmt12(res.best.action) << "\n";
  return kOk;
}

int cmd_smallball(const Common& common, bool ratio) {
  const auto cfg = load_config(common);
  const MetricFamily family = config::make_family(cfg);
  const VectorField z = config::make_drift(cfg);
  const Curve curve = config::make_curve(cfg.curve, cfg);
  DiffusionSpec spec{family, z, curve(0.0), cfg.T, cfg.dt};

  if (ratio) {
    if (cfg.curve_b.kind == "none") throw ConfigError("curve_b.kind: --ratio needs a second curve");
    const Curve curve_b = config::make_curve(cfg.curve_b, cfg);
    const RatioReport rep =
        ratio_experiment(spec, curve, curve_b, cfg.epsilon.front(), cfg.n_paths, cfg.seed, common.threads, cfg.steps);
    json doc = {{"command", "smallball"},
                {"mode", "ratio"},
                {"family", family.name()},
                {"a", estimate_json(rep.a)},
                {"b", estimate_json(rep.b)},
                {"joint_hits", rep.joint_hits},
                {"ratio", r12(rep.ratio)},
                {"ci_lo", r12(rep.ci_lo)},
                {"ci_hi", r12(rep.ci_hi)},
                {"action_a", r12(rep.action_a)},
                {"action_b", r12(rep.action_b)},
                {"theory", r12(rep.theory)}};
    write_json(out_path(cfg, "ratio.json"), doc);
    std::cout << "ratio " << io::fmt12(rep.ratio) << " [" << io::fmt12(rep.ci_lo) << ", " << io::fmt12(rep.ci_hi)
              << "] theory " << io::fmt12(rep.theory) << "\n";
    return kOk;
  }

  const WeightFunction w = config::make_weight(cfg);
  w.validate(cfg.T);
  TubeOptions opts;
  opts.n_paths = cfg.n_paths;
  opts.seed = cfg.seed;
  opts.threads = common.threads;
  const TubeRun run = tube_probabilities(spec, {TubeTarget{curve, w, cfg.epsilon}}, opts);

  auto csv = open_csv(out_path(cfg, "smallball.csv"));
  csv << "epsilon,p_hat,ci_lo,ci_hi,predicted_exponent,eps2_log_p\n";
  json rows = json::array();
  std::vector<double> eps, phat;
  AsymptoticPrediction pred;
  for (const TubeEstimate& e : run.estimates[0]) {
    pred = asymptotic_prediction(family, z, curve, w, e.epsilon, cfg.steps);
    const double e2 = e.n_hits > 0 ? e.epsilon * e.epsilon * std::log(e.p_hat) : -INFINITY;
    csv << io::fmt12(e.epsilon) << "," << io::fmt12(e.p_hat) << "," << io::fmt12(e.ci_lo) << ","
        << io::fmt12(e.ci_hi) << "," << io::fmt12(pred.log_prediction()) << ","
        << (e.n_hits > 0 ? io::fmt12(e2) : std::string("-inf")) << "\n";
    json row = estimate_json(e);
    row["prediction"] = {{"lambda1", r12(pred.lambda1)},
                         {"weight_integral", r12(pred.weight_integral)},
                         {"decay_exponent", r12(pred.decay_exponent)},
                         {"action", r12(pred.action)},
                         {"action_factor", r12(pred.action_factor)},
                         {"log_prediction", r12(pred.log_prediction())}};
    if (e.n_hits > 0) {
      row["eps2_log_p"] = r12(e2);
      eps.push_back(e.epsilon);
      phat.push_back(e.p_hat);
    }
    rows.push_back(row);
  }
  json doc = {{"command", "smallball"}, {"mode", "sweep"},         {"family", family.name()},
              {"T", r12(cfg.T)},        {"dt", r12(spec.T / spec.steps())}, {"chart_exits", run.chart_exits},
              {"estimates", rows}};
  if (eps.size() >= 2) {
    doc["constant_C_calibrated"] =
        r12(calibrate_constant(eps, phat, pred.lambda1, pred.weight_integral, pred.action));
  }
  if (family.dim() == 1) doc["constant_C_reference"] = r12(4.0 / M_PI);
  write_json(out_path(cfg, "smallball.json"), doc);
  for (const TubeEstimate& e : run.estimates[0]) {
    std::cout << "epsilon " << io::fmt12(e.epsilon) << " p_hat " << io::fmt12(e.p_hat) << "\n";
  }
  return kOk;
}

int cmd_lambda1(int n) {
  if (n < 1 || n > 10) throw ConfigError("n: must be in [1, 10], got " + std::to_string(n));
  std::cout << io::fmt12(lambda1_dirichlet(n)) << "\n";
  return kOk;
}

int cmd_cartan(const Common& common, double t, std::vector<double> point) {
  const auto cfg = load_config(common);
  const MetricFamily family = config::make_family(cfg);
  if (point.empty()) point.assign(static_cast<std::size_t>(family.dim()), 0.0);
  if (static_cast<int>(point.size()) != family.dim()) throw ConfigError("--point: expected family.n components");
  const CartanReport rep = cartan_expansion_check(family, t, config::to_vec(point));
  json radii = json::array(), rem = json::array();
  for (double r : rep.radii) radii.push_back(r12(r));
  for (double r : rep.remainder) rem.push_back(r12(r));
  json doc = {{"command", "cartan-check"},
              {"family", family.name()},
              {"t", r12(t)},
              {"point", vec_json(config::to_vec(point))},
              {"radii", radii},
              {"max_deviation", r12(rep.max_deviation)},
              {"remainder", rem},
              {"observed_order", r12(rep.observed_order)}};
  write_json(out_path(cfg, "cartan.json"), doc);
  std::cout << "max_deviation " << io::fmt12(rep.max_deviation) << " order " << io::fmt12(rep.observed_order)
            << "\n";
  return kOk;
}

int cmd_transport(const Common& common, int steps) {
  const auto cfg = load_config(common);
  const MetricFamily family = config::make_family(cfg);
  const Curve curve = config::make_curve(cfg.curve, cfg);
  const Mat frame0 = orthonormal_frame(family, 0.0, curve(0.0));
  const double coarse = parallel_transport(family, curve, frame0, steps).max_defect(family, curve);
  const double fine = parallel_transport(family, curve, frame0, 2 * steps).max_defect(family, curve);
  json doc = {{"command", "transport-check"}, {"family", family.name()},   {"steps", steps},
              {"max_defect", r12(coarse)},    {"max_defect_half_step", r12(fine)},
              {"reduction", r12(fine > 0.0 ? coarse / fine : INFINITY)}};
  write_json(out_path(cfg, "transport.json"), doc);
  std::cout << "max_defect " << io::fmt12(coarse) << "\n";
  return kOk;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UnsupportedDimension*>(&e)) return kConfig;
  if (dynamic_cast<const OutOfDomain*>(&e) || dynamic_cast<const NotPositiveDefinite*>(&e) ||
      dynamic_cast<const SingularMetric*>(&e) || dynamic_cast<const NonPositiveWeight*>(&e) ||
      dynamic_cast<const NotOrthonormal*>(&e)) {
    return kDomain;
  }
  if (dynamic_cast<const NoConvergence*>(&e) || dynamic_cast<const StepFailure*>(&e)) return kNoConvergence;
  if (dynamic_cast<const DegenerateRatio*>(&e)) return kDegenerate;
  return kInternal;
}

int run(int argc, char** argv) {
  CLI::App app{"Onsager-Machlup tools for diffusions under time-dependent metrics"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Monte Carlo worker threads (0: all cores)")->check(CLI::NonNegativeNumber);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", common.config_path, "Experiment config file")->required();
    sub->add_option("--set", common.overrides, "Override a config key (key=value)");
    sub->add_option("--out", common.out, "Output directory (overrides the 'out' key)");
  };

  auto* om = app.add_subcommand("om-eval", "Evaluate the Lagrangian along a curve and its action");
  add_common(om);
  bool oracle = false;
  auto* mpp = app.add_subcommand("mpp", "Solve for a most probable path between two points");
  add_common(mpp);
  mpp->add_flag("--oracle", oracle, "Cross-check with the direct action minimizer");
  bool ratio = false;
  auto* sb = app.add_subcommand("smallball", "Monte Carlo tube probabilities and the asymptotic prediction");
  add_common(sb);
  sb->add_flag("--ratio", ratio, "Tube ratio between curve and curve_b");
  int n = 0;
  auto* l1 = app.add_subcommand("lambda1", "First Dirichlet eigenvalue of -1/2 Laplacian on the unit ball");
  l1->add_option("n", n, "Dimension")->required();
  double t = 0.0;
  std::vector<double> point;
  auto* cartan = app.add_subcommand("cartan-check", "Quadratic term of the metric in normal coordinates");
  add_common(cartan);
  cartan->add_option("--t", t, "Time");
  cartan->add_option("--point", point, "Center point")->delimiter(',');
  int steps = 2000;
  auto* transport = app.add_subcommand("transport-check", "Orthonormality of the transported frame");
  add_common(transport);
  transport->add_option("--steps", steps, "RK4 steps")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  common.threads = threads;

  try {
    if (*om) return cmd_om_eval(common);
    if (*mpp) return cmd_mpp(common, oracle);
    if (*sb) return cmd_smallball(common, ratio);
    if (*l1) return cmd_lambda1(n);
    if (*cartan) return cmd_cartan(common, t, point);
    if (*transport) return cmd_transport(common, steps);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kInternal;
}

int run(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  storage.insert(storage.begin(), "omflow");
  for (auto& s : storage) argv.push_back(s.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace omflow::cli
