#include "omflow/curve.hpp"

#include "omflow/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace omflow {

namespace {

using Poly = std::array<double, 6>;

// Cubic Hermite basis (value/slope at each end).
constexpr Poly kC00{1, 0, -3, 2, 0, 0};
constexpr Poly kC10{0, 1, -2, 1, 0, 0};
constexpr Poly kC01{0, 0, 3, -2, 0, 0};
constexpr Poly kC11{0, 0, -1, 1, 0, 0};

// Quintic Hermite basis (value/slope/curvature at each end).
constexpr Poly kQ0{1, 0, 0, -10, 15, -6};
constexpr Poly kQ1{0, 1, 0, -6, 8, -3};
constexpr Poly kQ2{0, 0, 0.5, -1.5, 1.5, -0.5};
constexpr Poly kQ3{0, 0, 0, 0.5, -1, 0.5};
constexpr Poly kQ4{0, 0, 0, -4, 7, -3};
constexpr Poly kQ5{0, 0, 0, 10, -15, 6};

double poly_eval(const Poly& c, double s, int deriv) {
  double r = 0.0;
  for (int p = 5; p >= deriv; --p) {
    double coef = c[p];
    for (int q = 0; q < deriv; ++q) coef *= (p - q);
    r = r * s + coef;
  }
  return r;
}

struct PiecewiseData {
  double T = 0.0;
  double h = 0.0;
  std::vector<Vec> y, m, a;

  // Evaluates the derivative of order `deriv` at time t.
  Vec eval(double t, int deriv) const {
    const int K = static_cast<int>(y.size()) - 1;
    int i = static_cast<int>(std::floor(t / h));
    i = std::clamp(i, 0, K - 1);
    const double s = t / h - i;
    const double scale = std::pow(h, -deriv);
    if (a.empty()) {
      Vec r = poly_eval(kC00, s, deriv) * y[i] + h * poly_eval(kC10, s, deriv) * m[i] +
              poly_eval(kC01, s, deriv) * y[i + 1] + h * poly_eval(kC11, s, deriv) * m[i + 1];
      return r * scale;
    }
    Vec r = poly_eval(kQ0, s, deriv) * y[i] + h * poly_eval(kQ1, s, deriv) * m[i] +
            h * h * poly_eval(kQ2, s, deriv) * a[i] + h * h * poly_eval(kQ3, s, deriv) * a[i + 1] +
            h * poly_eval(kQ4, s, deriv) * m[i + 1] + poly_eval(kQ5, s, deriv) * y[i + 1];
    return r * scale;
  }
};

Vec end_slope(const std::vector<Vec>& y, double h, bool at_start) {
  const int K = static_cast<int>(y.size()) - 1;
  auto Y = [&](int j) -> const Vec& { return at_start ? y[j] : y[K - j]; };
  Vec d;
  if (K >= 4) {
    d = (-25.0 * Y(0) + 48.0 * Y(1) - 36.0 * Y(2) + 16.0 * Y(3) - 3.0 * Y(4)) / (12.0 * h);
  } else if (K == 3) {
    d = (-11.0 * Y(0) + 18.0 * Y(1) - 9.0 * Y(2) + 2.0 * Y(3)) / (6.0 * h);
  } else if (K == 2) {
    d = (-3.0 * Y(0) + 4.0 * Y(1) - Y(2)) / (2.0 * h);
  } else {
    d = (Y(1) - Y(0)) / h;
  }
  return at_start ? d : Vec(-d);
}

void check_knots(double T, const std::vector<Vec>& knots) {
  if (!(T > 0.0)) throw ConfigError("curve horizon T must be positive");
  if (knots.size() < 2) throw ConfigError("a curve needs at least two knots");
  const auto n = knots.front().size();
  for (const auto& k : knots) {
    if (k.size() != n) throw ConfigError("curve knots have inconsistent dimensions");
    if (!k.allFinite()) throw ConfigError("curve knot is not finite");
  }
}

}  // namespace

Curve Curve::analytic(double T, PointFn phi, PointFn phi_dot, PointFn phi_ddot) {
  if (!(T > 0.0)) throw ConfigError("curve horizon T must be positive");
  if (!phi || !phi_dot) throw ConfigError("analytic curve needs phi and phi_dot");
  Curve c;
  c.T_ = T;
  c.dim_ = static_cast<int>(phi(0.0).size());
  c.kind_ = "analytic";
  c.phi_ = std::move(phi);
  c.phi_dot_ = std::move(phi_dot);
  c.phi_ddot_ = std::move(phi_ddot);
  return c;
}

Curve Curve::spline(double T, std::vector<Vec> knots) {
  check_knots(T, knots);
  const int K = static_cast<int>(knots.size()) - 1;
  const double h = T / K;
  std::vector<Vec> m(K + 1);
  m[0] = end_slope(knots, h, true);
  m[K] = end_slope(knots, h, false);
  if (K >= 2) {
    // Thomas algorithm for m_{i-1} + 4 m_i + m_{i+1} = 3 (y_{i+1} - y_{i-1}) / h.
    const int N = K - 1;
    std::vector<double> cp(N);
    std::vector<Vec> dp(N);
    for (int j = 0; j < N; ++j) {
      const int i = j + 1;
      Vec rhs = 3.0 * (knots[i + 1] - knots[i - 1]) / h;
      if (i == 1) rhs -= m[0];
      if (i == K - 1) rhs -= m[K];
      const double denom = 4.0 - (j > 0 ? cp[j - 1] : 0.0);
      cp[j] = 1.0 / denom;
      dp[j] = (rhs - (j > 0 ? dp[j - 1] : Vec::Zero(rhs.size()).eval())) / denom;
    }
    m[N] = dp[N - 1];
    for (int j = N - 2; j >= 0; --j) m[j + 1] = dp[j] - cp[j] * m[j + 2];
  }
  auto data = std::make_shared<PiecewiseData>();
  data->T = T;
  data->h = h;
  data->y = std::move(knots);
  data->m = std::move(m);
  Curve c;
  c.T_ = T;
  c.dim_ = static_cast<int>(data->y.front().size());
  c.kind_ = "spline";
  c.phi_ = [data](double t) { return data->eval(t, 0); };
  c.phi_dot_ = [data](double t) { return data->eval(t, 1); };
  c.phi_ddot_ = [data](double t) { return data->eval(t, 2); };
  return c;
}

Curve Curve::hermite(double T, std::vector<Vec> knots, std::vector<Vec> velocities,
                     std::vector<Vec> accelerations) {
  check_knots(T, knots);
  if (velocities.size() != knots.size()) throw ConfigError("hermite curve needs one velocity per knot");
  if (!accelerations.empty() && accelerations.size() != knots.size()) {
    throw ConfigError("hermite curve needs one acceleration per knot");
  }
  auto data = std::make_shared<PiecewiseData>();
  data->T = T;
  data->h = T / (static_cast<double>(knots.size()) - 1.0);
  data->y = std::move(knots);
  data->m = std::move(velocities);
  data->a = std::move(accelerations);
  Curve c;
  c.T_ = T;
  c.dim_ = static_cast<int>(data->y.front().size());
  c.kind_ = "hermite";
  c.phi_ = [data](double t) { return data->eval(t, 0); };
  c.phi_dot_ = [data](double t) { return data->eval(t, 1); };
  c.phi_ddot_ = [data](double t) { return data->eval(t, 2); };
  return c;
}

Curve Curve::constant(double T, const Vec& x) {
  const int n = static_cast<int>(x.size());
  Curve c = analytic(
      T, [x](double) { return x; }, [n](double) { return Vec::Zero(n).eval(); },
      [n](double) { return Vec::Zero(n).eval(); });
  c.kind_ = "constant";
  return c;
}

Curve Curve::line(double T, const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ConfigError("line endpoints have different dimensions");
  const int n = static_cast<int>(a.size());
  const Vec slope = (b - a) / T;
  Curve c = analytic(
      T, [a, slope](double t) { return Vec(a + t * slope); }, [slope](double) { return slope; },
      [n](double) { return Vec::Zero(n).eval(); });
  c.kind_ = "line";
  return c;
}

Vec Curve::acceleration(double t) const {
  if (phi_ddot_) return phi_ddot_(t);
  const double h = 1e-5 * std::max(1.0, T_);
  const double lo = std::max(0.0, t - h);
  const double hi = std::min(T_, t + h);
  return (phi_dot_(hi) - phi_dot_(lo)) / (hi - lo);
}

std::vector<Vec> Curve::sample(int steps) const {
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 0; k <= steps; ++k) out.push_back(phi_(T_ * k / steps));
  return out;
}

Curve load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open curve file '" + path + "'");
  std::string line;
  int line_no = 0;
  std::vector<double> times;
  std::vector<Vec> knots;
  int columns = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (columns < 0) {
      columns = static_cast<int>(cells.size());
      if (columns < 2 || columns - 1 > kMaxDim) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected header t,x_1..x_n with n <= " +
                          std::to_string(kMaxDim));
      }
      if (cells[0] != "t") {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": first header column must be 't'");
      }
      continue;
    }
    if (static_cast<int>(cells.size()) != columns) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                        " columns");
    }
    Vec x(columns - 1);
    for (int j = 0; j < columns; ++j) {
      char* end = nullptr;
      const double v = std::strtod(cells[j].c_str(), &end);
      if (end == cells[j].c_str() || !std::isfinite(v)) {
        throw ConfigError(path + ":" + std::to_string(line_no) + ": bad number '" + cells[j] + "'");
      }
      if (j == 0) {
        times.push_back(v);
      } else {
        x[j - 1] = v;
      }
    }
    knots.push_back(x);
  }
  if (knots.size() < 2) throw ConfigError(path + ": a curve needs at least two rows");
  if (std::abs(times.front()) > 1e-12) throw ConfigError(path + ": times must start at 0");
  const double T = times.back();
  const double h = T / (static_cast<double>(times.size()) - 1.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (std::abs(times[k] - h * static_cast<double>(k)) > 1e-9 * std::max(1.0, T)) {
      throw ConfigError(path + ": times must be uniformly spaced");
    }
  }
  return Curve::spline(T, std::move(knots));
}

void write_curve_csv(const std::string& path, const Curve& curve, int steps) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << "t";
  for (int i = 0; i < curve.dim(); ++i) out << ",x_" << (i + 1);
  out << "\n";
  for (int k = 0; k <= steps; ++k) {
    const double t = curve.T() * k / steps;
    const Vec x = curve(t);
    out << io::fmt12(t);
    for (int i = 0; i < x.size(); ++i) out << "," << io::fmt12(x[i]);
    out << "\n";
  }
}

double l2_distance(const Curve& a, const Curve& b, int steps) {
  if (steps % 2) ++steps;
  const double T = a.T();
  const double h = T / steps;
  double sum = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double t = k * h;
    const double w = (k == 0 || k == steps) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    sum += w * (a(t) - b(t)).squaredNorm();
  }
  return std::sqrt(sum * h / 3.0);
}

}  // namespace omflow
