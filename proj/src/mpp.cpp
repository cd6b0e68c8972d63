#include "omflow/mpp.hpp"

#include "omflow/lagrangian.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <tuple>

namespace omflow {

namespace {

// Potential part of H: 1/2 div Z - R/12 + 1/4 tr gdot.
double potential(const MetricFamily& family, const VectorField& z, double t, const Vec& x) {
  return 0.5 * divergence(family, z, t, x) - scalar_curvature(family, t, x) / 12.0 +
         0.25 * trace_gdot(family, t, x);
}

Vec gradient_fd(const std::function<double(const Vec&)>& fn, const Vec& x, double h) {
  Vec grad(x.size());
  for (int k = 0; k < x.size(); ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    grad[k] = (fn(xp) - fn(xm)) / (2.0 * h);
  }
  return grad;
}

double step_for(const MetricFamily& family, double h) { return h > 0.0 ? h : family.h_x(); }

}  // namespace

Vec el_acceleration(const MetricFamily& family, const VectorField& z, double t, const Vec& x, const Vec& v,
                    double h) {
  family.require_inside(t, x);
  const int n = family.dim();
  const Mat g = family.g(t, x);
  const Mat ginv = inverse_metric(g);
  const Vec zx = z(t, x);
  const Mat dz = z.dx(t, x);
  const Vec w = v - zx;

  Vec rhs = -family.dg_dt(t, x) * w - (dz.transpose() * (g * w));
  if (!family.spatially_constant()) {
    Mat dg_v = Mat::Zero(n, n);
    for (int m = 0; m < n; ++m) {
      const Mat dgm = family.dg_dx(t, x, m);
      dg_v += v[m] * dgm;
      rhs[m] += 0.5 * w.dot(dgm * w);
    }
    rhs -= dg_v * w;
  }
  rhs += gradient_fd([&](const Vec& y) { return potential(family, z, t, y); }, x, step_for(family, h));
  return z.dt(t, x) + dz * v + ginv * rhs;
}

ELResidualReport el_residual(const MetricFamily& family, const VectorField& z, const Curve& curve,
                             int grid_steps) {
  if (grid_steps < 1) throw ConfigError("el_residual needs at least one grid step");
  ELResidualReport rep;
  for (int k = 0; k <= grid_steps; ++k) {
    const double t = curve.T() * k / grid_steps;
    const Vec x = curve(t);
    const Vec v = curve.velocity(t);
    const Vec r = curve.acceleration(t) - el_acceleration(family, z, t, x, v);
    rep.t_grid.push_back(t);
    rep.residual.push_back(r);
    rep.max_norm = std::max(rep.max_norm, std::sqrt(std::max(0.0, r.dot(family.g(t, x) * r))));
  }
  return rep;
}

double ricci_flow_gradient_coefficient(double alpha) { return (1.0 - 3.0 * alpha) / 12.0; }

ELResidualReport ricci_flow_el_residual(const MetricFamily& family, double alpha, const Curve& curve,
                                        int grid_steps) {
  if (grid_steps < 1) throw ConfigError("el_residual needs at least one grid step");
  const int n = family.dim();
  const double coef = ricci_flow_gradient_coefficient(alpha);
  ELResidualReport rep;
  for (int k = 0; k <= grid_steps; ++k) {
    const double t = curve.T() * k / grid_steps;
    const Vec x = curve(t);
    const Vec v = curve.velocity(t);
    const CurvatureTensors c = curvature(family, t, x);
    const Mat g = family.g(t, x);
    const Mat ginv = inverse_metric(g);
    Vec r = curve.acceleration(t);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) r[i] += c.christoffel(i, j, l) * v[j] * v[l];
    r += alpha * ginv * (c.ricci * v);
    if (coef != 0.0) {
      r += coef * ginv *
           gradient_fd([&](const Vec& y) { return scalar_curvature(family, t, y); }, x, family.h_x());
    }
    rep.t_grid.push_back(t);
    rep.residual.push_back(r);
    rep.max_norm = std::max(rep.max_norm, std::sqrt(std::max(0.0, r.dot(g * r))));
  }
  return rep;
}

Curve integrate_el(const MetricFamily& family, const VectorField& z, const Vec& x0, const Vec& v0, double T,
                   int steps) {
  if (steps < 1) throw ConfigError("integrate_el needs at least one step");
  const double h = T / steps;
  std::vector<Vec> xs, vs, as;
  xs.reserve(static_cast<std::size_t>(steps) + 1);
  vs.reserve(static_cast<std::size_t>(steps) + 1);
  as.reserve(static_cast<std::size_t>(steps) + 1);
  Vec x = x0, v = v0;
  Vec a = el_acceleration(family, z, 0.0, x, v);
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    xs.push_back(x);
    vs.push_back(v);
    as.push_back(a);
    const Vec k1x = v, k1v = a;
    const Vec k2x = v + 0.5 * h * k1v;
    const Vec k2v = el_acceleration(family, z, t + 0.5 * h, x + 0.5 * h * k1x, k2x);
    const Vec k3x = v + 0.5 * h * k2v;
    const Vec k3v = el_acceleration(family, z, t + 0.5 * h, x + 0.5 * h * k2x, k3x);
    const Vec k4x = v + h * k3v;
    const Vec k4v = el_acceleration(family, z, t + h, x + h * k3x, k4x);
    x += (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!x.allFinite() || !v.allFinite()) throw StepFailure("Euler-Lagrange integration produced NaN");
    a = el_acceleration(family, z, (k + 1 == steps) ? T : (k + 1) * h, x, v);
  }
  xs.push_back(x);
  vs.push_back(v);
  as.push_back(a);
  return Curve::hermite(T, std::move(xs), std::move(vs), std::move(as));
}

namespace {

Vec terminal_point(const MetricFamily& family, const VectorField& z, const Vec& x0, const Vec& v0, double T,
                   int steps) {
  const double h = T / steps;
  Vec x = x0, v = v0;
  for (int k = 0; k < steps; ++k) {
    const double t = k * h;
    const Vec k1v = el_acceleration(family, z, t, x, v);
    const Vec k2x = v + 0.5 * h * k1v;
    const Vec k2v = el_acceleration(family, z, t + 0.5 * h, x + 0.5 * h * v, k2x);
    const Vec k3x = v + 0.5 * h * k2v;
    const Vec k3v = el_acceleration(family, z, t + 0.5 * h, x + 0.5 * h * k2x, k3x);
    const Vec k4x = v + h * k3v;
    const Vec k4v = el_acceleration(family, z, t + h, x + h * k3x, k4x);
    x += (h / 6.0) * (v + 2.0 * k2x + 2.0 * k3x + k4x);
    v += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!x.allFinite() || !v.allFinite()) throw StepFailure("Euler-Lagrange integration produced NaN");
  }
  family.require_inside(T, x);
  return x;
}

struct ShotOutcome {
  bool converged = false;
  Vec v0;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
  std::string failure;
};

ShotOutcome shoot(const MetricFamily& family, const VectorField& z, const Vec& x0, const Vec& xT, double T,
                  Vec v0, const BVPOptions& opts) {
  const int n = family.dim();
  ShotOutcome out;
  auto residual_at = [&](const Vec& v) -> std::pair<bool, Vec> {
    try {
      return {true, terminal_point(family, z, x0, v, T, opts.ode_steps) - xT};
    } catch (const OutOfDomain&) {
      return {false, Vec()};
    } catch (const StepFailure&) {
      return {false, Vec()};
    }
  };
  // A guess whose trajectory leaves the chart is shrunk toward the
  // zero-velocity start until it stays inside.
  auto [ok, F] = residual_at(v0);
  for (int shrink = 0; !ok && shrink < 30; ++shrink) {
    v0 *= 0.5;
    std::tie(ok, F) = residual_at(v0);
  }
  if (!ok) {
    out.failure = "initial guess leaves the chart";
    return out;
  }
  double res = F.norm();
  for (int it = 0; it < opts.max_iter; ++it) {
    out.iterations = it;
    if (res < opts.tol) break;
    Mat J(n, n);
    const double dv = 1e-7 * std::max(1.0, v0.norm());
    bool jac_ok = true;
    for (int k = 0; k < n; ++k) {
      Vec vp = v0;
      vp[k] += dv;
      auto [okp, Fp] = residual_at(vp);
      if (!okp) {
        jac_ok = false;
        break;
      }
      J.col(k) = (Fp - F) / dv;
    }
    if (!jac_ok) {
      out.failure = "Jacobian evaluation left the chart";
      break;
    }
    const Vec step = J.fullPivLu().solve(F);
    if (!step.allFinite()) {
      out.failure = "singular shooting Jacobian";
      break;
    }
    double lambda = 1.0;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Vec trial = v0 - lambda * step;
      auto [okt, Ft] = residual_at(trial);
      if (okt && Ft.norm() < res) {
        v0 = trial;
        F = Ft;
        res = Ft.norm();
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) {
      out.failure = "damped Newton step failed to reduce the terminal error";
      break;
    }
    out.iterations = it + 1;
  }
  out.v0 = v0;
  out.residual = res;
  out.converged = res < opts.tol;
  if (!out.converged && out.failure.empty()) out.failure = "maximum Newton iterations reached";
  return out;
}

}  // namespace

BVPResult solve_mpp_bvp(const MetricFamily& family, const VectorField& z, const Vec& x0, const Vec& xT, double T,
                        const BVPOptions& opts, const Curve* init) {
  const int n = family.dim();
  if (x0.size() != n || xT.size() != n) throw ConfigError("endpoint dimension does not match the family");
  if (!(T > 0.0)) throw ConfigError("horizon T must be positive");
  family.require_inside(0.0, x0);
  family.require_inside(T, xT);

  std::vector<Vec> guesses;
  if (init != nullptr) {
    guesses.push_back(init->velocity(0.0));
  } else {
    const Vec base = (xT - x0) / T;
    guesses.push_back(base);
    const double speed = base.norm();
    if (n == 1) {
      const double s = speed > 0.0 ? speed : 1.0;
      guesses.push_back(base + Vec::Constant(1, opts.perturbation * s));
      guesses.push_back(base - Vec::Constant(1, opts.perturbation * s));
    } else {
      Vec perp = Vec::Zero(n);
      if (speed > 0.0) {
        perp[0] = -base[1];
        perp[1] = base[0];
        if (perp.norm() == 0.0) perp[1] = speed;
        perp *= opts.perturbation * speed / perp.norm();
      } else {
        perp[1] = opts.perturbation;
      }
      guesses.push_back(base + perp);
      guesses.push_back(base - perp);
    }
  }

  BVPResult result;
  std::string failures;
  for (const Vec& guess : guesses) {
    const ShotOutcome shot = shoot(family, z, x0, xT, T, guess, opts);
    if (!shot.converged) {
      failures += (failures.empty() ? "" : "; ") + shot.failure;
      continue;
    }
    bool duplicate = false;
    for (const auto& s : result.solutions) {
      if ((s.v0 - shot.v0).norm() <= 1e-6 * (1.0 + shot.v0.norm())) duplicate = true;
    }
    if (duplicate) continue;
    BVPSolution sol;
    sol.v0 = shot.v0;
    sol.shots = shot.iterations;
    sol.curve = integrate_el(family, z, x0, shot.v0, T, opts.ode_steps);
    sol.terminal_error = (sol.curve(T) - xT).norm();
    sol.action = action(family, z, sol.curve, opts.action_steps);
    result.solutions.push_back(std::move(sol));
  }
  if (result.solutions.empty()) {
    throw NoConvergence("shooting did not converge from any initial guess (" + failures + ")");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.solutions.size(); ++i) {
    if (result.solutions[i].action < result.solutions[best].action) best = i;
  }
  result.best = result.solutions[best];
  return result;
}

namespace {

// Simpson's rule for H on the straight segment between consecutive knots.
double segment_action(const MetricFamily& family, const VectorField& z, double t0, double h, const Vec& a,
                      const Vec& b) {
  const Vec slope = (b - a) / h;
  const Vec mid = 0.5 * (a + b);
  return h / 6.0 *
         (om_lagrangian(family, z, t0, a, slope).total + 4.0 * om_lagrangian(family, z, t0 + 0.5 * h, mid, slope).total +
          om_lagrangian(family, z, t0 + h, b, slope).total);
}

double discrete_action(const MetricFamily& family, const VectorField& z, const std::vector<Vec>& knots, double h,
                       std::vector<double>* segs = nullptr) {
  const int K = static_cast<int>(knots.size()) - 1;
  double sum = 0.0;
  if (segs) segs->assign(K, 0.0);
  for (int j = 0; j < K; ++j) {
    const double s = segment_action(family, z, j * h, h, knots[j], knots[j + 1]);
    if (segs) (*segs)[j] = s;
    sum += s;
  }
  return sum;
}

}  // namespace

std::vector<Vec> discrete_action_gradient(const MetricFamily& family, const VectorField& z,
                                          const std::vector<Vec>& knots, double T, double fd_step) {
  const int K = static_cast<int>(knots.size()) - 1;
  const double h = T / K;
  const int n = static_cast<int>(knots.front().size());
  std::vector<Vec> grad(K - 1, Vec::Zero(n));
  std::vector<Vec> work = knots;
  for (int j = 1; j < K; ++j) {
    for (int c = 0; c < n; ++c) {
      const double orig = work[j][c];
      work[j][c] = orig + fd_step;
      const double ap = segment_action(family, z, (j - 1) * h, h, work[j - 1], work[j]) +
                        segment_action(family, z, j * h, h, work[j], work[j + 1]);
      work[j][c] = orig - fd_step;
      const double am = segment_action(family, z, (j - 1) * h, h, work[j - 1], work[j]) +
                        segment_action(family, z, j * h, h, work[j], work[j + 1]);
      work[j][c] = orig;
      grad[j - 1][c] = (ap - am) / (2.0 * fd_step);
    }
  }
  return grad;
}

DirectResult minimize_action_direct(const MetricFamily& family, const VectorField& z, const Vec& x0,
                                    const Vec& xT, double T, int K, const DirectOptions& opts) {
  if (K < 10) throw ConfigError("direct minimizer needs K >= 10 intervals");
  const int n = family.dim();
  if (x0.size() != n || xT.size() != n) throw ConfigError("endpoint dimension does not match the family");
  family.require_inside(0.0, x0);
  family.require_inside(T, xT);
  const double h = T / K;

  std::vector<Vec> knots(K + 1);
  for (int j = 0; j <= K; ++j) knots[j] = x0 + (static_cast<double>(j) / K) * (xT - x0);

  auto safe_action = [&](const std::vector<Vec>& ks) {
    try {
      return discrete_action(family, z, ks, h);
    } catch (const OutOfDomain&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  DirectResult res;
  double A = discrete_action(family, z, knots, h);
  double lambda = 1.0;
  int it = 0;
  double gnorm = 0.0;
  for (; it < opts.max_iter; ++it) {
    const std::vector<Vec> grad = discrete_action_gradient(family, z, knots, T, opts.fd_step);
    double g2 = 0.0;
    for (const auto& gv : grad) g2 += gv.squaredNorm();
    gnorm = std::sqrt(g2);
    if (gnorm < opts.grad_tol) break;

    // Precondition with the kinetic Hessian: a tridiagonal Laplacian weighted
    // by the mean metric scale on each segment.
    std::vector<double> w(K);
    for (int j = 0; j < K; ++j) {
      const double tm = (j + 0.5) * h;
      w[j] = family.g(tm, 0.5 * (knots[j] + knots[j + 1])).trace() / n / h;
    }
    const int N = K - 1;
    std::vector<double> cp(N);
    std::vector<Vec> dp(N);
    for (int i = 0; i < N; ++i) {
      const double diag = w[i] + w[i + 1];
      const double sub = i > 0 ? -w[i] : 0.0;
      const double denom = diag - (i > 0 ? sub * cp[i - 1] : 0.0);
      cp[i] = -w[i + 1] / denom;
      dp[i] = (grad[i] - (i > 0 ? Vec(sub * dp[i - 1]) : Vec::Zero(n).eval())) / denom;
    }
    std::vector<Vec> dir(N);
    dir[N - 1] = dp[N - 1];
    for (int i = N - 2; i >= 0; --i) dir[i] = dp[i] - cp[i] * dir[i + 1];

    lambda = std::min(1.0, 2.0 * lambda);
    bool improved = false;
    std::vector<Vec> trial = knots;
    for (int halving = 0; halving < 40; ++halving) {
      for (int i = 0; i < N; ++i) trial[i + 1] = knots[i + 1] - lambda * dir[i];
      const double At = safe_action(trial);
      if (At < A) {
        knots = trial;
        A = At;
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) break;
  }
  if (gnorm >= opts.grad_tol && it >= opts.max_iter) {
    std::ostringstream os;
    os << "direct minimizer reached " << opts.max_iter << " iterations (gradient norm " << gnorm << ")";
    throw NoConvergence(os.str());
  }
  res.iterations = it;
  res.gradient_norm = gnorm;
  res.discrete_action = A;
  res.knots = knots;
  res.curve = Curve::spline(T, knots);
  res.action = action(family, z, res.curve, opts.action_steps);
  return res;
}

}  // namespace omflow
