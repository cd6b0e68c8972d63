#include "doctest.h"

#include "omflow/lagrangian.hpp"
#include "omflow/mpp.hpp"

#include <cmath>

using namespace omflow;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

// Great circle x_2 = 0 of the sphere family c(t) = c0 + alpha t (n = 2),
// run with angular speed k / c(t), so that nabla phi' = -(alpha / c) phi'.
Curve great_circle(double alpha, double c0, double T, double theta0, double k) {
  auto c = [=](double t) { return c0 + alpha * t; };
  auto theta = [=](double t) { return theta0 + k / alpha * std::log(c(t) / c0); };
  auto theta_dot = [=](double t) { return k / c(t); };
  auto theta_ddot = [=](double t) { return -k * alpha / (c(t) * c(t)); };
  return Curve::analytic(
      T, [=](double t) { return v2(std::tan(theta(t) / 2), 0.0); },
      [=](double t) {
        const double u = theta(t) / 2, sec2 = 1 / (std::cos(u) * std::cos(u));
        return v2(0.5 * sec2 * theta_dot(t), 0.0);
      },
      [=](double t) {
        const double u = theta(t) / 2, sec2 = 1 / (std::cos(u) * std::cos(u));
        const double td = theta_dot(t);
        return v2(0.5 * sec2 * std::tan(u) * td * td + 0.5 * sec2 * theta_ddot(t), 0.0);
      });
}

}  // namespace

TEST_CASE("EL residual examples") {
  const auto e = families::euclidean(2);
  const auto z = VectorField::zero(2);
  CHECK(el_residual(e, z, Curve::line(1.0, v2(1, 2), v2(-1, 0.5))).max_norm < 1e-12);

  const Curve para = Curve::analytic(
      1.0, [](double t) { return v2(t * t, 0); }, [](double t) { return v2(2 * t, 0); },
      [](double) { return v2(2, 0); });
  const auto rep = el_residual(e, z, para);
  for (const Vec& r : rep.residual) CHECK((r - v2(2, 0)).norm() < 1e-12);

  const double alpha = -2.0;
  const auto s = families::ricci_sphere(2, alpha, 1.0, 0.4);
  const Curve gc = great_circle(alpha, 1.0, 0.4, -0.3, 0.8);
  CHECK(ricci_flow_el_residual(s, alpha, gc).max_norm < 1e-6);
  CHECK(el_residual(s, z, gc).max_norm < 1e-6);
}

TEST_CASE("the grad R coefficient vanishes at alpha = 1/3") {
  CHECK(ricci_flow_gradient_coefficient(1.0 / 3.0) == 0.0);
  CHECK(ricci_flow_gradient_coefficient(-2.0) == doctest::Approx(7.0 / 12.0));
  // Pure transport equation nabla phi' + 1/3 Ric# phi' = 0 on the expanding sphere.
  const double alpha = 1.0 / 3.0;
  const auto s = families::ricci_sphere(2, alpha, 1.0, 1.0);
  CHECK(ricci_flow_el_residual(s, alpha, great_circle(alpha, 1.0, 1.0, 0.2, 0.6)).max_norm < 1e-6);
}

TEST_CASE("EL residual converges at second order for a spline of an exact solution") {
  const double alpha = -2.0;
  const auto s = families::ricci_sphere(2, alpha, 1.0, 0.4);
  const Curve gc = great_circle(alpha, 1.0, 0.4, -0.3, 0.8);
  auto residual = [&](int K) {
    std::vector<Vec> knots;
    for (int k = 0; k <= K; ++k) knots.push_back(gc(0.4 * k / K));
    // Interior points only: the clamped end slopes are lower order.
    const auto rep = el_residual(s, VectorField::zero(2), Curve::spline(0.4, knots), 200);
    double m = 0.0;
    for (std::size_t i = 20; i + 20 < rep.residual.size(); ++i) m = std::max(m, rep.residual[i].norm());
    return m;
  };
  CHECK(residual(100) / residual(200) >= 3.5);
}

TEST_CASE("BVP on Euclidean families") {
  const auto e = families::euclidean(2);
  const auto r = solve_mpp_bvp(e, VectorField::zero(2), v2(0, 0), v2(1, 2), 1.0);
  CHECK(r.best.terminal_error < 1e-8);
  CHECK(l2_distance(r.best.curve, Curve::line(1.0, v2(0, 0), v2(1, 2))) < 1e-10);
  CHECK(r.best.action == doctest::Approx(2.5).epsilon(1e-10));

  const Vec mu = v2(0.5, -1.0);
  const auto rm = solve_mpp_bvp(e, VectorField::constant(mu), v2(0, 0), v2(1, 2), 2.0);
  CHECK(l2_distance(rm.best.curve, Curve::line(2.0, v2(0, 0), v2(1, 2))) < 1e-10);
  CHECK(rm.best.action == doctest::Approx(0.5 * (mu - v2(0.5, 1.0)).squaredNorm() * 2.0).epsilon(1e-10));

  CHECK_THROWS_AS(solve_mpp_bvp(e, VectorField::zero(2), v2(0, 0), v2(11, 0), 1.0), OutOfDomain);
}

TEST_CASE("direct minimizer") {
  const auto e = families::euclidean(2);
  const auto d = minimize_action_direct(e, VectorField::zero(2), v2(0, 0), v2(1, 2), 1.0, 20);
  double off = 0.0;
  for (const Vec& k : d.knots) off = std::max(off, std::abs(2 * k[0] - k[1]));
  CHECK(off < 1e-5);
  CHECK_THROWS_AS(minimize_action_direct(e, VectorField::zero(2), v2(0, 0), v2(1, 2), 1.0, 5), ConfigError);

  const auto s = families::ricci_sphere(2, -2.0, 1.0, 0.4);
  const auto z = VectorField::zero(2);
  const Vec a = v2(-0.3, 0.1), b = v2(0.4, 0.3);
  const auto ds = minimize_action_direct(s, z, a, b, 0.4, 40);
  CHECK(ds.action <= action(s, z, Curve::line(0.4, a, b)) + 1e-12);

  // The minimizer's EL residual shrinks as the knots are refined.
  auto interior = [&](const DirectResult& r) {
    const auto rep = el_residual(s, z, r.curve, 200);
    double m = 0.0;
    for (std::size_t i = 20; i + 20 < rep.residual.size(); ++i) m = std::max(m, rep.residual[i].norm());
    return m;
  };
  const auto d20 = minimize_action_direct(s, z, a, b, 0.4, 20);
  CHECK(interior(d20) / interior(ds) >= 2.0);
}

TEST_CASE("BVP and direct minimizer agree on the shrinking sphere") {
  const auto s = families::ricci_sphere(2, -2.0, 1.0, 0.4);
  const auto z = VectorField::zero(2);
  const Vec a = v2(-0.9, 0.05), b = v2(0.95, 0.0);
  const auto bvp = solve_mpp_bvp(s, z, a, b, 0.4);
  CHECK(bvp.best.terminal_error < 1e-8);
  const auto direct = minimize_action_direct(s, z, a, b, 0.4, 200);
  CHECK(l2_distance(bvp.best.curve, direct.curve) < 1e-3);
  CHECK(std::abs(direct.action - bvp.best.action) / std::abs(bvp.best.action) < 1e-5);
  for (const auto& sol : bvp.solutions) CHECK(sol.action >= bvp.best.action);

  // First-order optimality of the BVP solution for the discrete objective. The
  // gradient is a consistency error of the piecewise-linear discretization and
  // falls like h^2.5; it is below 1e-5 from about 800 intervals on.
  auto gradient_norm = [&](int K) {
    std::vector<Vec> knots;
    for (int k = 0; k <= K; ++k) knots.push_back(bvp.best.curve(0.4 * k / K));
    double g2 = 0.0;
    for (const Vec& g : discrete_action_gradient(s, z, knots, 0.4)) g2 += g.squaredNorm();
    return std::sqrt(g2);
  };
  CHECK(gradient_norm(200) / gradient_norm(400) >= 4.0);
  CHECK(gradient_norm(1000) < 1e-5);
}

TEST_CASE("BVP with drift matches the direct minimizer") {
  const auto c = families::conformal_linear(2, 0.5, 1.0);
  Mat a(2, 2);
  a << -0.5, 1.0, -1.0, -0.2;
  const auto z = VectorField::linear(a);
  const Vec x0 = v2(0.2, -0.4), xT = v2(-0.6, 0.5);
  const auto bvp = solve_mpp_bvp(c, z, x0, xT, 1.0);
  const auto direct = minimize_action_direct(c, z, x0, xT, 1.0, 200);
  CHECK(l2_distance(bvp.best.curve, direct.curve) < 1e-3);
  CHECK(std::abs(direct.action - bvp.best.action) / std::max(1.0, std::abs(bvp.best.action)) < 1e-5);
}
