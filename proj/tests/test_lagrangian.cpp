#include "doctest.h"

#include "omflow/lagrangian.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <random>

using namespace omflow;

namespace {

Vec v2(double a, double b) {
  Vec x(2);
  x << a, b;
  return x;
}

void check_sum(const LagrangianSample& s) {
  CHECK(s.total == doctest::Approx(s.kinetic + s.div_term + s.scalar_term + s.trace_term + s.weight_term)
                       .epsilon(1e-14));
  CHECK(s.kinetic >= 0.0);
}

const double kSphereAction = 7.0 / 12.0 * std::log(0.6);

}  // namespace

TEST_CASE("om_lagrangian examples") {
  const auto e = families::euclidean(2);
  const auto s0 = om_lagrangian(e, VectorField::zero(2), 0.3, v2(1, 1), v2(0, 0));
  CHECK(s0.total == 0.0);
  check_sum(s0);

  const auto unit = families::ricci_sphere(2, 0.0, 1.0, 1.0);
  const auto s1 = om_lagrangian(unit, VectorField::zero(2), 0.0, v2(0.4, 0.2), v2(0, 0));
  CHECK(s1.total == doctest::Approx(-1.0 / 6.0).epsilon(1e-10));
  CHECK(s1.trace_term == 0.0);
  check_sum(s1);

  const auto shrinking = families::ricci_sphere(2, -2.0, 1.0, 0.4);
  const auto s2 = om_lagrangian(shrinking, VectorField::zero(2), 0.0, v2(0.4, 0.2), v2(0, 0));
  CHECK(s2.total == doctest::Approx(-7.0 / 6.0).epsilon(1e-10));
  CHECK(s2.scalar_term == doctest::Approx(-1.0 / 6.0).epsilon(1e-10));
  CHECK(s2.trace_term == doctest::Approx(-1.0).epsilon(1e-12));
  check_sum(s2);

  // Kinetic and divergence terms.
  Mat a(2, 2);
  a << 1, 2, -1, 3;
  const auto s3 = om_lagrangian(e, VectorField::linear(a), 0.0, v2(1, 0), v2(0.5, 0.5));
  CHECK(s3.kinetic == doctest::Approx(0.5 * (Vec(a * v2(1, 0)) - v2(0.5, 0.5)).squaredNorm()));
  CHECK(s3.div_term == doctest::Approx(2.0));
  check_sum(s3);
}

TEST_CASE("static metrics reproduce the classical functional") {
  const auto unit = families::ricci_sphere(2, 0.0, 1.0, 1.0);
  const auto z = VectorField::linear(Mat::Identity(2, 2));
  const auto s = om_lagrangian(unit, z, 0.0, v2(0.2, 0.3), v2(0.1, -0.4));
  CHECK(s.trace_term == 0.0);
  const Mat g = unit.g(0.0, v2(0.2, 0.3));
  const Vec w = v2(0.2, 0.3) - v2(0.1, -0.4);
  CHECK(s.kinetic == doctest::Approx(0.5 * w.dot(g * w)).epsilon(1e-14));
  CHECK(s.scalar_term == doctest::Approx(-2.0 / 12.0).epsilon(1e-9));
}

TEST_CASE("rotation invariance on Euclidean families") {
  const auto e = families::euclidean(2);
  Mat a(2, 2);
  a << 0.3, -1.2, 0.8, 0.5;
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 10; ++i) {
    const Mat r = Eigen::Rotation2Dd(3.0 * u(rng)).toRotationMatrix();
    const Vec x = v2(u(rng), u(rng)), v = v2(u(rng), u(rng));
    const auto h = om_lagrangian(e, VectorField::linear(a), 0.0, x, v);
    const auto hr = om_lagrangian(e, VectorField::linear(r * a * r.transpose()), 0.0, r * x, r * v);
    CHECK(hr.total == doctest::Approx(h.total).epsilon(1e-13));
  }
}

TEST_CASE("action examples and quadrature convergence") {
  const auto e = families::euclidean(3);
  CHECK(action(e, VectorField::zero(3), Curve::constant(1.0, Vec::Zero(3))) == 0.0);
  const double mu = 1.7;
  Vec b = Vec::Zero(3);
  b[0] = mu;
  CHECK(action(e, VectorField::zero(3), Curve::line(1.0, Vec::Zero(3), b)) ==
        doctest::Approx(0.5 * mu * mu).epsilon(1e-14));

  const auto shrinking = families::ricci_sphere(2, -2.0, 1.0, 0.2);
  const Curve c = Curve::constant(0.2, v2(0.3, 0.1));
  CHECK(std::abs(action(shrinking, VectorField::zero(2), c, 1000) - kSphereAction) < 1e-8);
  const double e10 = std::abs(action(shrinking, VectorField::zero(2), c, 10) - kSphereAction);
  const double e20 = std::abs(action(shrinking, VectorField::zero(2), c, 20) - kSphereAction);
  CHECK(e10 / e20 >= 15.0);
  CHECK_THROWS_AS(action(shrinking, VectorField::zero(2), c, 7), ConfigError);
}

TEST_CASE("time change") {
  const auto id = time_change(WeightFunction::unit(), 2.0);
  CHECK(id.S == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(id.delta(0.7) == doctest::Approx(0.7).epsilon(1e-14));

  const auto tc = time_change(WeightFunction::exponential(1.0), 1.0);
  CHECK(tc.S == doctest::Approx((1 - std::exp(-2.0)) / 2).epsilon(1e-13));
  for (double t : {0.1, 0.5, 0.9}) {
    CHECK(tc.delta_inv(t) == doctest::Approx((1 - std::exp(-2 * t)) / 2).epsilon(1e-13));
  }
  for (double u : {0.05, 0.2, 0.4}) CHECK(tc.delta(u) == doctest::Approx(-0.5 * std::log(1 - 2 * u)).epsilon(1e-10));
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> ut(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double t = ut(rng);
    worst = std::max(worst, std::abs(tc.delta(tc.delta_inv(t)) - t));
  }
  CHECK(worst < 1e-10);

  WeightFunction bad;
  bad.f = [](double t) { return 1.0 - t; };
  bad.f_prime = [](double) { return -1.0; };
  bad.f_min = 1e-3;
  CHECK_THROWS_AS(time_change(bad, 1.0), NonPositiveWeight);
}

TEST_CASE("weighted Lagrangian variants") {
  const auto shrinking = families::ricci_sphere(2, -2.0, 1.0, 0.4);
  const auto z = VectorField::linear(Mat::Identity(2, 2));
  const Vec x = v2(0.3, 0.1), v = v2(-0.2, 0.5);
  const auto unit = WeightFunction::unit();

  // f = 1: the time-changed variant is H, term by term and bit for bit.
  const auto h = om_lagrangian(shrinking, z, 0.1, x, v);
  const auto tc = weighted_lagrangian(shrinking, z, unit, 0.1, x, v, WeightedVariant::time_changed);
  CHECK(tc.kinetic == h.kinetic);
  CHECK(tc.div_term == h.div_term);
  CHECK(tc.scalar_term == h.scalar_term);
  CHECK(tc.trace_term == h.trace_term);
  CHECK(tc.total == h.total);

  // f = 1: the printed variant doubles the kinetic term and says so.
  const auto pr = weighted_lagrangian(shrinking, z, unit, 0.1, x, v, WeightedVariant::printed);
  CHECK(pr.kinetic == doctest::Approx(2.0 * h.kinetic).epsilon(1e-14));
  CHECK(pr.total != doctest::Approx(h.total));
  CHECK(!pr.note.empty());

  // Printed last term for f = e^t, n = 1: -1/2 e^{-2t}.
  const auto e1 = families::euclidean(1);
  const auto w = WeightFunction::exponential(1.0);
  const Vec zero1 = Vec::Zero(1);
  for (double t : {0.0, 0.4, 1.0}) {
    const auto p = weighted_lagrangian(e1, VectorField::zero(1), w, t, zero1, zero1, WeightedVariant::printed);
    CHECK(p.weight_term == doctest::Approx(-0.5 * std::exp(-2 * t)).epsilon(1e-14));
  }

  // Derived variant on the same data. With h = f^-2 g and ds = f^-2 dt the only
  // surviving term is 1/4 tr(h^-1 dh/ds) = -n f f' / 2 per unit of s, which is
  // -n f' / (2 f) = -1/2 per unit of t. The printed last term integrates to
  // -(1 - e^{-2}) / 4 instead.
  const Curve c = Curve::constant(1.0, zero1);
  CHECK(weighted_action(e1, VectorField::zero(1), w, c, WeightedVariant::time_changed) ==
        doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(weighted_action(e1, VectorField::zero(1), w, c, WeightedVariant::printed) ==
        doctest::Approx(-(1 - std::exp(-2.0)) / 4).epsilon(1e-10));
  CHECK_THROWS_AS(WeightFunction::exponential(-1.0).validate(100.0), NonPositiveWeight);
}

TEST_CASE("time-changed family") {
  const auto e = families::euclidean(2, 10.0, 1.0);
  const auto w = WeightFunction::exponential(1.0);
  const auto f = time_changed_family(e, w);
  const Vec x = v2(0.1, 0.2);
  CHECK((f.g(0.5, x) - std::exp(-1.0) * Mat::Identity(2, 2)).norm() < 1e-14);
  // d/ds (f^-2 g) = f^2 d/dt (f^-2 g) = gdot - 2 (f'/f) g = -2 I.
  CHECK((f.dg_dt(0.5, x) + 2.0 * Mat::Identity(2, 2)).norm() < 1e-12);
}
