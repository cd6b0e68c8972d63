#include "omflow/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace omflow::config {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Doubles are written with 17 significant digits so emit -> parse is exact.
std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += num(v[i]);
  }
  return s;
}

double parse_double(const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const double d = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || !std::isfinite(d)) throw ConfigError("expected a finite number, got '" + t + "'");
  return d;
}

long long parse_integer(const std::string& v) {
  const std::string t = trim(v);
  char* end = nullptr;
  const long long i = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0') throw ConfigError("expected an integer, got '" + t + "'");
  return i;
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_double(cell));
  if (out.empty()) throw ConfigError("expected a comma-separated list of numbers");
  return out;
}

struct Field {
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
  // Emitted only when this returns true.
  std::function<bool(const ExperimentConfig&)> present = [](const ExperimentConfig&) { return true; };
};

std::vector<Field> curve_fields(const std::string& prefix, CurveConfig ExperimentConfig::*member) {
  std::vector<Field> f;
  f.push_back({prefix + ".kind", [member](ExperimentConfig& c, const std::string& v) { (c.*member).kind = trim(v); },
               [member](const ExperimentConfig& c) { return (c.*member).kind; }});
  f.push_back({prefix + ".x", [member](ExperimentConfig& c, const std::string& v) { (c.*member).x = parse_list(v); },
               [member](const ExperimentConfig& c) { return list((c.*member).x); },
               [member](const ExperimentConfig& c) { return !(c.*member).x.empty(); }});
  f.push_back({prefix + ".a", [member](ExperimentConfig& c, const std::string& v) { (c.*member).a = parse_list(v); },
               [member](const ExperimentConfig& c) { return list((c.*member).a); },
               [member](const ExperimentConfig& c) { return !(c.*member).a.empty(); }});
  f.push_back({prefix + ".b", [member](ExperimentConfig& c, const std::string& v) { (c.*member).b = parse_list(v); },
               [member](const ExperimentConfig& c) { return list((c.*member).b); },
               [member](const ExperimentConfig& c) { return !(c.*member).b.empty(); }});
  f.push_back({prefix + ".path", [member](ExperimentConfig& c, const std::string& v) { (c.*member).path = trim(v); },
               [member](const ExperimentConfig& c) { return (c.*member).path; },
               [member](const ExperimentConfig& c) { return !(c.*member).path.empty(); }});
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto has = [](auto pred) { return std::function<bool(const ExperimentConfig&)>(pred); };
    f.push_back({"family.name", [](ExperimentConfig& c, const std::string& v) { c.family.name = trim(v); },
                 [](const ExperimentConfig& c) { return c.family.name; }});
    f.push_back({"family.n", [](ExperimentConfig& c, const std::string& v) { c.family.n = int(parse_integer(v)); },
                 [](const ExperimentConfig& c) { return std::to_string(c.family.n); }});
    f.push_back({"family.half_width",
                 [](ExperimentConfig& c, const std::string& v) { c.family.half_width = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.family.half_width); }});
    f.push_back({"family.t_end", [](ExperimentConfig& c, const std::string& v) { c.family.t_end = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.family.t_end); }});
    f.push_back({"family.profile", [](ExperimentConfig& c, const std::string& v) { c.family.profile = trim(v); },
                 [](const ExperimentConfig& c) { return c.family.profile; }});
    f.push_back({"family.lambda", [](ExperimentConfig& c, const std::string& v) { c.family.lambda = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.family.lambda); }});
    f.push_back({"family.alpha", [](ExperimentConfig& c, const std::string& v) { c.family.alpha = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.family.alpha); }});
    f.push_back({"family.c0", [](ExperimentConfig& c, const std::string& v) { c.family.c0 = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.family.c0); }});
    f.push_back({"family.coeffs", [](ExperimentConfig& c, const std::string& v) { c.family.coeffs = parse_list(v); },
                 [](const ExperimentConfig& c) { return list(c.family.coeffs); },
                 has([](const ExperimentConfig& c) { return !c.family.coeffs.empty(); })});
    f.push_back({"family.rates", [](ExperimentConfig& c, const std::string& v) { c.family.rates = parse_list(v); },
                 [](const ExperimentConfig& c) { return list(c.family.rates); },
                 has([](const ExperimentConfig& c) { return !c.family.rates.empty(); })});
    f.push_back({"drift.kind", [](ExperimentConfig& c, const std::string& v) { c.drift.kind = trim(v); },
                 [](const ExperimentConfig& c) { return c.drift.kind; }});
    f.push_back({"drift.mu", [](ExperimentConfig& c, const std::string& v) { c.drift.mu = parse_list(v); },
                 [](const ExperimentConfig& c) { return list(c.drift.mu); },
                 has([](const ExperimentConfig& c) { return !c.drift.mu.empty(); })});
    f.push_back({"drift.matrix", [](ExperimentConfig& c, const std::string& v) { c.drift.matrix = parse_list(v); },
                 [](const ExperimentConfig& c) { return list(c.drift.matrix); },
                 has([](const ExperimentConfig& c) { return !c.drift.matrix.empty(); })});
    for (auto& x : curve_fields("curve", &ExperimentConfig::curve)) f.push_back(x);
    for (auto& x : curve_fields("curve_b", &ExperimentConfig::curve_b)) f.push_back(x);
    f.push_back({"weight.kind", [](ExperimentConfig& c, const std::string& v) { c.weight.kind = trim(v); },
                 [](const ExperimentConfig& c) { return c.weight.kind; }});
    f.push_back({"weight.rate", [](ExperimentConfig& c, const std::string& v) { c.weight.rate = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.weight.rate); }});
    f.push_back({"T", [](ExperimentConfig& c, const std::string& v) { c.T = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.T); }});
    f.push_back({"epsilon", [](ExperimentConfig& c, const std::string& v) { c.epsilon = parse_list(v); },
                 [](const ExperimentConfig& c) { return list(c.epsilon); }});
    f.push_back({"n_paths",
                 [](ExperimentConfig& c, const std::string& v) {
                   const long long n = parse_integer(v);
                   if (n < 1) throw ConfigError("n_paths must be at least 1");
                   c.n_paths = static_cast<std::uint64_t>(n);
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.n_paths); }});
    f.push_back({"seed",
                 [](ExperimentConfig& c, const std::string& v) {
                   const std::string t = trim(v);
                   char* end = nullptr;
                   const unsigned long long s = std::strtoull(t.c_str(), &end, 10);
                   if (t.empty() || *end != '\0' || t[0] == '-') throw ConfigError("seed must be a 64-bit unsigned integer");
                   c.seed = s;
                 },
                 [](const ExperimentConfig& c) { return std::to_string(c.seed); }});
    f.push_back({"dt", [](ExperimentConfig& c, const std::string& v) { c.dt = parse_double(v); },
                 [](const ExperimentConfig& c) { return num(c.dt); }});
    f.push_back({"steps", [](ExperimentConfig& c, const std::string& v) { c.steps = int(parse_integer(v)); },
                 [](const ExperimentConfig& c) { return std::to_string(c.steps); }});
    f.push_back({"mpp.x0", [](ExperimentConfig& c, const std::string& v) { c.mpp_x0 = parse_list(v); },
                 [](const ExperimentConfig& c) { return list(c.mpp_x0); },
                 has([](const ExperimentConfig& c) { return !c.mpp_x0.empty(); })});
    f.push_back({"mpp.xT", [](ExperimentConfig& c, const std::string& v) { c.mpp_xT = parse_list(v); },
                 [](const ExperimentConfig& c) { return list(c.mpp_xT); },
                 has([](const ExperimentConfig& c) { return !c.mpp_xT.empty(); })});
    f.push_back({"mpp.knots", [](ExperimentConfig& c, const std::string& v) { c.mpp_knots = int(parse_integer(v)); },
                 [](const ExperimentConfig& c) { return std::to_string(c.mpp_knots); }});
    f.push_back({"out", [](ExperimentConfig& c, const std::string& v) { c.out = trim(v); },
                 [](const ExperimentConfig& c) { return c.out; }});
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

struct Entry {
  std::string key;
  std::string value;
  std::string where;
};

void apply_entries(ExperimentConfig& cfg, const std::vector<Entry>& entries) {
  for (const auto& e : entries) {
    const Field* f = find_field(e.key);
    if (!f) throw ConfigError(e.where + ": unknown key '" + e.key + "'");
    try {
      f->set(cfg, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(e.where + ": " + e.key + ": " + err.what());
    }
  }
}

std::vector<Entry> split_lines(const std::string& text, const std::string& source) {
  std::vector<Entry> out;
  std::set<std::string> seen;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), where};
    if (e.key.empty()) throw ConfigError(where + ": missing key");
    if (e.value.empty()) throw ConfigError(where + ": " + e.key + ": missing value");
    if (!seen.insert(e.key).second) throw ConfigError(where + ": duplicate key '" + e.key + "'");
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

ExperimentConfig parse(const std::string& text, const std::string& source) {
  return parse_with_overrides(text, {}, source);
}

ExperimentConfig parse_with_overrides(const std::string& text, const std::vector<std::string>& overrides,
                                      const std::string& source) {
  std::vector<Entry> entries = split_lines(text, source);
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("--set " + o + ": expected key=value");
    entries.push_back({trim(o.substr(0, eq)), trim(o.substr(eq + 1)), "--set " + o});
  }
  ExperimentConfig cfg;
  apply_entries(cfg, entries);
  validate(cfg);
  return cfg;
}

ExperimentConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string emit(const ExperimentConfig& cfg) {
  std::string s;
  for (const auto& f : fields()) {
    if (!f.present(cfg)) continue;
    const std::string v = f.get(cfg);
    if (v.empty()) continue;
    s += f.key + " = " + v + "\n";
  }
  return s;
}

namespace {

void check_curve(const CurveConfig& c, const std::string& name, int n) {
  auto dim = [&](const std::vector<double>& v, const std::string& field) {
    if (static_cast<int>(v.size()) != n) {
      throw ConfigError(name + "." + field + ": expected " + std::to_string(n) + " components");
    }
  };
  if (c.kind == "none") return;
  if (c.kind == "constant") {
    dim(c.x, "x");
  } else if (c.kind == "line") {
    dim(c.a, "a");
    dim(c.b, "b");
  } else if (c.kind == "csv") {
    if (c.path.empty()) throw ConfigError(name + ".path: required for csv curves");
    std::ifstream probe(c.path);
    if (!probe) throw ConfigError(name + ".path: file '" + c.path + "' does not exist");
  } else {
    throw ConfigError(name + ".kind: expected constant, line or csv, got '" + c.kind + "'");
  }
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const auto& f = cfg.family;
  if (f.n < 1 || f.n > kMaxDim) throw ConfigError("family.n: must be in [1, " + std::to_string(kMaxDim) + "]");
  if (f.half_width < 0.0) throw ConfigError("family.half_width: must be non-negative");
  if (f.t_end < 0.0) throw ConfigError("family.t_end: must be non-negative");
  if (f.name == "sphere") {
    if (f.n != 2 && f.n != 3) throw ConfigError("family.n: the sphere family needs n = 2 or 3");
    if (!(f.c0 > 0.0)) throw ConfigError("family.c0: must be positive");
  } else if (f.name == "torus") {
    if (static_cast<int>(f.coeffs.size()) != f.n) throw ConfigError("family.coeffs: expected family.n entries");
    if (static_cast<int>(f.rates.size()) != f.n) throw ConfigError("family.rates: expected family.n entries");
    for (double a : f.coeffs) {
      if (!(a > 0.0)) throw ConfigError("family.coeffs: entries must be positive");
    }
  } else if (f.name == "conformal") {
    if (f.profile != "linear" && f.profile != "log") throw ConfigError("family.profile: expected linear or log");
  } else if (f.name != "euclidean") {
    throw ConfigError("family.name: expected euclidean, conformal, torus or sphere, got '" + f.name + "'");
  }
  if (cfg.drift.kind == "constant") {
    if (static_cast<int>(cfg.drift.mu.size()) != f.n) throw ConfigError("drift.mu: expected family.n entries");
  } else if (cfg.drift.kind == "linear") {
    if (static_cast<int>(cfg.drift.matrix.size()) != f.n * f.n) {
      throw ConfigError("drift.matrix: expected family.n^2 entries (row-major)");
    }
  } else if (cfg.drift.kind != "zero") {
    throw ConfigError("drift.kind: expected zero, constant or linear, got '" + cfg.drift.kind + "'");
  }
  check_curve(cfg.curve, "curve", f.n);
  if (cfg.curve.kind == "none") throw ConfigError("curve.kind: a curve is required");
  check_curve(cfg.curve_b, "curve_b", f.n);
  if (cfg.weight.kind != "unit" && cfg.weight.kind != "exponential") {
    throw ConfigError("weight.kind: expected unit or exponential, got '" + cfg.weight.kind + "'");
  }
  if (!(cfg.T > 0.0)) throw ConfigError("T: must be positive");
  if (f.t_end > 0.0 && f.t_end < cfg.T) throw ConfigError("family.t_end: must be at least T");
  if (cfg.epsilon.empty()) throw ConfigError("epsilon: at least one value is required");
  for (double e : cfg.epsilon) {
    if (!(e > 0.0)) throw ConfigError("epsilon: values must be positive");
  }
  if (cfg.n_paths < 1) throw ConfigError("n_paths: must be at least 1");
  if (cfg.dt < 0.0 || cfg.dt > cfg.T) throw ConfigError("dt: must be in [0, T] (0 selects T/4000)");
  if (cfg.steps < 2 || cfg.steps % 2 != 0) throw ConfigError("steps: must be even and at least 2");
  if (!cfg.mpp_x0.empty() && static_cast<int>(cfg.mpp_x0.size()) != f.n) {
    throw ConfigError("mpp.x0: expected family.n entries");
  }
  if (!cfg.mpp_xT.empty() && static_cast<int>(cfg.mpp_xT.size()) != f.n) {
    throw ConfigError("mpp.xT: expected family.n entries");
  }
  if (cfg.mpp_knots < 10) throw ConfigError("mpp.knots: must be at least 10");
  if (cfg.out.empty()) throw ConfigError("out: must not be empty");
}

Vec to_vec(const std::vector<double>& v) {
  Vec x(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<int>(i)] = v[i];
  return x;
}

MetricFamily make_family(const ExperimentConfig& cfg) {
  const auto& f = cfg.family;
  const double t_end = f.t_end > 0.0 ? f.t_end : cfg.T;
  const double hw = f.half_width > 0.0 ? f.half_width : (f.name == "sphere" ? 3.0 : 10.0);
  if (f.name == "euclidean") return families::euclidean(f.n, hw);
  if (f.name == "conformal") {
    const double r = f.lambda;
    if (f.profile == "linear") return families::conformal_linear(f.n, r, t_end, hw);
    if (!(1.0 + r * t_end > 0.0)) throw ConfigError("family.lambda: 1 + lambda t must stay positive up to t_end");
    return families::conformal(
        f.n, [r](double t) { return 0.5 * std::log(1.0 + r * t); },
        [r](double t) { return 0.5 * r / (1.0 + r * t); }, t_end, hw, "conformal");
  }
  if (f.name == "torus") return families::flat_torus(to_vec(f.coeffs), to_vec(f.rates), t_end);
  return families::ricci_sphere(f.n, f.alpha, f.c0, t_end, hw);
}

VectorField make_drift(const ExperimentConfig& cfg) {
  const int n = cfg.family.n;
  if (cfg.drift.kind == "constant") return VectorField::constant(to_vec(cfg.drift.mu));
  if (cfg.drift.kind == "linear") {
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = cfg.drift.matrix[static_cast<std::size_t>(i * n + j)];
    return VectorField::linear(a);
  }
  return VectorField::zero(n);
}

Curve make_curve(const CurveConfig& c, const ExperimentConfig& cfg) {
  if (c.kind == "constant") return Curve::constant(cfg.T, to_vec(c.x));
  if (c.kind == "line") return Curve::line(cfg.T, to_vec(c.a), to_vec(c.b));
  if (c.kind == "csv") {
    Curve curve = load_curve_csv(c.path);
    if (curve.dim() != cfg.family.n) throw ConfigError(c.path + ": curve dimension does not match family.n");
    if (std::abs(curve.T() - cfg.T) > 1e-9 * std::max(1.0, cfg.T)) {
      throw ConfigError(c.path + ": curve ends at t = " + num(curve.T()) + " but T = " + num(cfg.T));
    }
    return curve;
  }
  throw ConfigError("no curve configured");
}

WeightFunction make_weight(const ExperimentConfig& cfg) {
  if (cfg.weight.kind == "exponential") return WeightFunction::exponential(cfg.weight.rate);
  return WeightFunction::unit();
}

}  // namespace omflow::config
