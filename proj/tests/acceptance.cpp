// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "omflow/lagrangian.hpp"
#include "omflow/mpp.hpp"
#include "omflow/sde.hpp"
#include "omflow/transport.hpp"

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace omflow;

namespace {

int failures = 0;

void report(int k, bool ok, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", k, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[1024];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

double exact_tube(double eps, double T) {
  double s = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double m = 2 * k + 1;
    s += 4.0 / M_PI * (k % 2 ? -1.0 : 1.0) / m * std::exp(-m * m * M_PI * M_PI * T / (8 * eps * eps));
  }
  return s;
}

struct NamedFamily {
  MetricFamily family;
  // Curves and endpoints are drawn in center + scale [-1, 1]^2.
  double center;
  double scale;
};

std::vector<NamedFamily> builtin_families() {
  return {{families::euclidean(2), 0.0, 1.0},
          {families::conformal_linear(2, 0.8, 1.0), 0.0, 1.0},
          {families::flat_torus(v2(1.0, 2.0), v2(0.4, -0.3), 1.0), M_PI, 0.5},
          {families::ricci_sphere(2, -2.0, 1.0, 0.4), 0.0, 0.4}};
}

std::vector<Curve> random_curves(double T, double center, double scale, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Curve> out;
  for (int c = 0; c < 5; ++c) {
    Vec a(2), b(2), w(2);
    for (int i = 0; i < 2; ++i) {
      a[i] = center + 0.5 * scale * u(rng);
      b[i] = 0.5 * scale * u(rng);
      w[i] = 1.0 + 2.0 * std::abs(u(rng));
    }
    out.push_back(Curve::analytic(
        T, [=](double t) { return Vec(a + (b.array() * (w.array() * t).sin()).matrix()); },
        [=](double t) { return Vec((b.array() * w.array() * (w.array() * t).cos()).matrix()); }));
  }
  return out;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0, worst_ratio = 1e300, fine_ratio = 1e300;
  for (const auto& [family, center, scale] : builtin_families()) {
    const double T = std::min(1.0, family.t_end());
    for (const Curve& c : random_curves(T, center, scale, 11)) {
      const Mat f0 = orthonormal_frame(family, 0.0, c(0.0));
      const double d2000 = parallel_transport(family, c, f0, 2000).max_defect(family, c);
      worst = std::max(worst, d2000);
      const double d4000 = parallel_transport(family, c, f0, 4000).max_defect(family, c);
      if (d4000 > 0) fine_ratio = std::min(fine_ratio, d2000 / d4000);
      // Halving at step sizes where the truncation error is above roundoff.
      const double d1 = parallel_transport(family, c, f0, 25).max_defect(family, c);
      const double d2 = parallel_transport(family, c, f0, 50).max_defect(family, c);
      if (d1 > 1e-12) worst_ratio = std::min(worst_ratio, d1 / d2);
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst < 1e-8 && worst_ratio >= 8.0 && secs < 10.0,
         fmt("transport defect max %.3g at T/2000 (< 1e-8); min shrink %.1fx at T/25 -> T/50 (>= 8); "
             "at T/2000 -> T/4000 the defect is roundoff (min ratio %.2g); %.1f s (< 10 s)",
             worst, worst_ratio, fine_ratio, secs));
}

void criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = families::ricci_sphere(2, 0.0, 1.0, 1.0);
  const CartanReport rep = cartan_expansion_check(s, 0.0, v2(0.3, 0.1));
  const double secs = seconds_since(t0);
  report(2, rep.max_deviation < 1e-4 && rep.observed_order >= 3.0 && secs < 30.0,
         fmt("quadratic coefficient deviation %.3g at radius 1e-2 (< 1e-4); remainder order %.2f (>= 3); %.1f s",
             rep.max_deviation, rep.observed_order, secs));
}

void criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = families::ricci_sphere(2, 0.0, 1.0, 1.0);
  double trace = 0.0, gauss = 0.0;
  for (const Vec& center : {v2(0.3, 0.1), v2(-0.5, 0.7), v2(0.0, 0.0)}) {
    const auto ncf = normal_frame(s, 0.0, center, orthonormal_frame(s, 0.0, center));
    for (int k = 0; k < 8; ++k) {
      const double phi = 2 * M_PI * k / 8;
      const auto rep = hara_identities(ncf, 1e-2 * v2(std::cos(phi), std::sin(phi)));
      trace = std::max(trace, rep.trace_identity);
      gauss = std::max(gauss, rep.gauss_lemma);
    }
  }
  const double secs = seconds_since(t0);
  report(3, trace < 1e-6 && gauss < 1e-6 && secs < 30.0,
         fmt("trace identity %.3g, Gauss lemma %.3g at radius 1e-2 (< 1e-6); %.1f s", trace, gauss, secs));
}

void criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto s = families::ricci_sphere(2, -2.0, 1.0, 0.2);
  const auto z0 = VectorField::zero(2);
  const double a = action(s, z0, Curve::constant(0.2, v2(0.3, 0.1)), 1000);
  const double expected = 7.0 / 12.0 * std::log(0.6);

  bool bit_equal = true;
  const auto z = VectorField::linear(Mat::Identity(2, 2));
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int k = 0; k < 50; ++k) {
    const double t = 0.2 * (u(rng) + 0.5);
    const Vec x = v2(u(rng), u(rng)), v = v2(4 * u(rng), 4 * u(rng));
    const auto h = om_lagrangian(s, z, t, x, v);
    const auto tc = weighted_lagrangian(s, z, WeightFunction::unit(), t, x, v, WeightedVariant::time_changed);
    bit_equal = bit_equal && tc.kinetic == h.kinetic && tc.div_term == h.div_term &&
                tc.scalar_term == h.scalar_term && tc.trace_term == h.trace_term && tc.total == h.total;
  }
  const double secs = seconds_since(t0);
  report(4, std::abs(a - expected) < 1e-8 && bit_equal && secs < 1.0,
         fmt("action %.12f vs (7/12) ln 0.6 = %.12f (diff %.2g, < 1e-8); f = 1 time-changed H~ == H term by "
             "term: %s; %.2f s",
             a, expected, std::abs(a - expected), bit_equal ? "yes" : "no", secs));
}

// Great circle x_2 = 0 of the sphere c(t) = c0 + alpha t with angular speed k / c(t).
Curve great_circle(double alpha, double c0, double T, double theta0, double k) {
  auto c = [=](double t) { return c0 + alpha * t; };
  auto theta = [=](double t) { return theta0 + k / alpha * std::log(c(t) / c0); };
  auto theta_dot = [=](double t) { return k / c(t); };
  auto theta_ddot = [=](double t) { return -k * alpha / (c(t) * c(t)); };
  return Curve::analytic(
      T, [=](double t) { return v2(std::tan(theta(t) / 2), 0.0); },
      [=](double t) {
        const double h = theta(t) / 2, sec2 = 1 / (std::cos(h) * std::cos(h));
        return v2(0.5 * sec2 * theta_dot(t), 0.0);
      },
      [=](double t) {
        const double h = theta(t) / 2, sec2 = 1 / (std::cos(h) * std::cos(h));
        const double td = theta_dot(t);
        return v2(0.5 * sec2 * std::tan(h) * td * td + 0.5 * sec2 * theta_ddot(t), 0.0);
      });
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  double l2 = 0.0, rel = 0.0;
  int converged = 0, total = 0;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& [family, center, scale] : builtin_families()) {
    const double T = std::min(1.0, family.t_end());
    const auto z = VectorField::zero(2);
    for (int p = 0; p < 5; ++p) {
      const Vec x0 = v2(center + scale * u(rng), center + scale * u(rng));
      const Vec xT = v2(center + scale * u(rng), center + scale * u(rng));
      ++total;
      try {
        const auto bvp = solve_mpp_bvp(family, z, x0, xT, T);
        const auto direct = minimize_action_direct(family, z, x0, xT, T, 200);
        l2 = std::max(l2, l2_distance(bvp.best.curve, direct.curve));
        rel = std::max(rel, std::abs(direct.action - bvp.best.action) / std::abs(bvp.best.action));
        ++converged;
      } catch (const std::exception& e) {
        std::printf("  %s %d: %s\n", family.name().c_str(), p, e.what());
      }
    }
  }
  const double alpha = -2.0;
  const auto s = families::ricci_sphere(2, alpha, 1.0, 0.4);
  const double residual = ricci_flow_el_residual(s, alpha, great_circle(alpha, 1.0, 0.4, 0.2, 0.6)).max_norm;
  const double coeff = ricci_flow_gradient_coefficient(1.0 / 3.0);
  const double secs = seconds_since(t0);
  report(5,
         converged == total && l2 < 1e-3 && rel < 1e-5 && residual < 1e-6 && coeff == 0.0 && secs < 300.0,
         fmt("%d/%d BVP/direct pairs solved; max L2 gap %.3g (< 1e-3), max relative action gap %.3g (< 1e-5); "
             "great-circle EL residual %.3g (< 1e-6); (1 - 3 alpha)/12 at alpha = 1/3: %g; %.1f s",
             converged, total, l2, rel, residual, coeff, secs));
}

void criterion6() {
  const auto t0 = std::chrono::steady_clock::now();
  const double l1 = lambda1_dirichlet(1), l2 = lambda1_dirichlet(2), l3 = lambda1_dirichlet(3);
  const double e1 = std::abs(l1 - M_PI * M_PI / 8), e2 = std::abs(l2 - 2.8915929815),
               e3 = std::abs(l3 - M_PI * M_PI / 2);
  const double secs = seconds_since(t0);
  report(6, e1 < 1e-10 && e2 < 1e-8 && e3 < 1e-10 && secs < 1.0,
         fmt("lambda1(1) = %.12f (err %.2g), lambda1(2) = %.12f (err %.2g), lambda1(3) = %.12f (err %.2g); %.3f s",
             l1, e1, l2, e2, l3, e3, secs));
}

// Hit counts collected by criteria 7 to 9, compared across thread counts by criterion 10.
struct MonteCarloRun {
  std::vector<std::uint64_t> hits;
  std::vector<std::string> lines;
  int ok = 0;
};

const std::uint64_t kPaths = 1000000;

MonteCarloRun monte_carlo(int threads, bool print) {
  MonteCarloRun run;
  auto emit = [&](int k, bool ok, const std::string& s) {
    if (print) report(k, ok, s);
  };

  // Criteria 7 and 9: one simulation of 1-D BM, tubes of radius 0.6, 0.5, 0.4.
  const auto t7 = std::chrono::steady_clock::now();
  const std::vector<double> eps{0.6, 0.5, 0.4};
  DiffusionSpec bm{families::euclidean(1), VectorField::zero(1), v1(0), 1.0, 2.5e-4};
  TubeOptions opts;
  opts.n_paths = kPaths;
  opts.seed = 20240611;
  opts.threads = threads;
  const auto sweep = tube_probabilities(bm, {TubeTarget{Curve::constant(1.0, v1(0)), WeightFunction::unit(), eps}},
                                        opts).estimates[0];
  const double secs7 = seconds_since(t7);
  for (const auto& e : sweep) run.hits.push_back(e.n_hits);

  const TubeEstimate& half = sweep[1];
  const double exact = exact_tube(0.5, 1.0);
  const double rel7 = std::abs(half.p_hat - exact) / exact;
  const double rel_quoted = std::abs(half.p_hat - 0.00926) / 0.00926;
  emit(7, rel7 < 0.05 && half.ci_lo <= exact && exact <= half.ci_hi && secs7 < 300.0,
       fmt("p_hat %.6g [%.6g, %.6g] vs series %.7g: %.2f%% off (< 5%%), series inside CI: %s; "
           "vs quoted 9.26e-3: %.2f%% off; %.1f s for all three radii",
           half.p_hat, half.ci_lo, half.ci_hi, exact, 100 * rel7, half.ci_lo <= exact && exact <= half.ci_hi ? "yes" : "no",
           100 * rel_quoted, secs7));

  // Criterion 8: drifted BM, mu = 1, T = 0.25, eps = 0.3, curves mu t and 0.
  const auto t8 = std::chrono::steady_clock::now();
  const double mu = 1.0, T8 = 0.25, eps8 = 0.3;
  DiffusionSpec drifted{families::euclidean(1), VectorField::constant(v1(mu)), v1(0), T8, 0.0};
  const Curve line = Curve::line(T8, v1(0), v1(mu * T8));
  const Curve zero = Curve::constant(T8, v1(0));
  const auto ratio = ratio_experiment(drifted, line, zero, eps8, kPaths, 88, threads);
  run.hits.push_back(ratio.a.n_hits);
  run.hits.push_back(ratio.b.n_hits);
  run.hits.push_back(ratio.joint_hits);

  // Girsanov oracle on an independent driftless run: P_a = P[tube of B around 0],
  // P_b = E[exp(mu B_T - mu^2 T / 2); tube of B around 0].
  DiffusionSpec plain{families::euclidean(1), VectorField::zero(1), v1(0), T8, 0.0};
  TubeOptions oo;
  oo.n_paths = kPaths;
  oo.seed = 89;
  oo.threads = threads;
  oo.collect_survivors = true;
  const auto orun = tube_probabilities(plain, {TubeTarget{zero, WeightFunction::unit(), {eps8}}}, oo);
  double s_w = 0.0, s_w2 = 0.0;
  for (const auto& sv : orun.survivors) {
    const double w = std::exp(mu * sv.x_T[0] - 0.5 * mu * mu * T8);
    s_w += w;
    s_w2 += w * w;
  }
  const double N = static_cast<double>(kPaths);
  const double A = orun.estimates[0][0].n_hits / N, B = s_w / N;
  const double oracle = A / B;
  const double var_a = A * (1 - A), var_b = s_w2 / N - B * B, cov = B - A * B;
  const double se_oracle = oracle * std::sqrt((var_a / (A * A) + var_b / (B * B) - 2 * cov / (A * B)) / N);
  const double se_mc = (ratio.ci_hi - ratio.ci_lo) / (2 * 1.959963984540054);
  const double half_width = 1.959963984540054 * std::hypot(se_oracle, se_mc);
  run.hits.push_back(orun.estimates[0][0].n_hits);
  const double secs8 = seconds_since(t8);
  emit(8, std::abs(ratio.ratio - oracle) <= half_width && secs8 < 300.0,
       fmt("MC ratio %.6g [%.6g, %.6g]; Girsanov oracle %.6g (se %.3g); |difference| %.3g within the joint "
           "delta-method 95%% half-width %.3g; asymptotic exp(E_b - E_a) = %.6g; %.1f s",
           ratio.ratio, ratio.ci_lo, ratio.ci_hi, oracle, se_oracle, std::abs(ratio.ratio - oracle), half_width,
           ratio.theory, secs8));

  // Criterion 9: the trend and the weighted / time-changed pair.
  const auto t9 = std::chrono::steady_clock::now();
  std::string trend;
  bool ok9 = true;
  double prev = 1e300;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double e2 = eps[i] * eps[i];
    const double mc = e2 * std::log(sweep[i].p_hat), ex = e2 * std::log(exact_tube(eps[i], 1.0));
    const double rel = std::abs(mc - ex) / std::abs(ex);
    ok9 = ok9 && rel < 0.15 && mc < prev;
    prev = mc;
    trend += fmt("eps %.1f: %.4f vs %.4f (%.1f%%); ", eps[i], mc, ex, 100 * rel);
  }
  const double S = (1 - std::exp(-2.0)) / 2;
  const auto conf = families::conformal(
      1, [](double s) { return 0.5 * std::log(1 - 2 * s); }, [](double s) { return -1.0 / (1 - 2 * s); }, S);
  DiffusionSpec tc{conf, VectorField::zero(1), v1(0), S, S / 4000};
  const auto w = tube_probability(bm, Curve::constant(1.0, v1(0)), 0.5, WeightFunction::exponential(1.0), kPaths,
                                  9001, threads);
  const auto c = tube_probability(tc, Curve::constant(S, v1(0)), 0.5, WeightFunction::unit(), kPaths, 9002, threads);
  run.hits.push_back(w.n_hits);
  run.hits.push_back(c.n_hits);
  const bool overlap = w.ci_lo <= c.ci_hi && c.ci_lo <= w.ci_hi;
  const double secs9 = seconds_since(t9) + secs7;
  emit(9, ok9 && overlap && secs9 < 900.0,
       fmt("eps^2 log p: %sdecreasing and within 15%%: %s; weighted f = e^t p %.5g [%.5g, %.5g] vs time-changed "
           "p %.5g [%.5g, %.5g], overlap: %s; %.1f s",
           trend.c_str(), ok9 ? "yes" : "no", w.p_hat, w.ci_lo, w.ci_hi, c.p_hat, c.ci_lo, c.ci_hi,
           overlap ? "yes" : "no", secs9));
  return run;
}

}  // namespace

int main() {
  std::printf("acceptance: 1-D Monte Carlo with %llu paths per tube\n", static_cast<unsigned long long>(kPaths));
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  const auto first = monte_carlo(1, true);
  const auto t10 = std::chrono::steady_clock::now();
  const auto second = monte_carlo(3, false);
  std::string counts;
  for (std::size_t i = 0; i < first.hits.size(); ++i)
    counts += fmt("%s%llu", i ? "," : "", static_cast<unsigned long long>(first.hits[i]));
  report(10, first.hits == second.hits,
         fmt("hit counts of criteria 7-9 at 1 and 3 threads %s: [%s]; rerun %.1f s",
             first.hits == second.hits ? "identical" : "DIFFER", counts.c_str(), seconds_since(t10)));
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
