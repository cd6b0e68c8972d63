#include "doctest.h"

#include "omflow/curve.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace omflow;

namespace {

Vec circle(double t) {
  Vec x(2);
  x << std::cos(t), std::sin(2 * t);
  return x;
}

Vec circle_dot(double t) {
  Vec x(2);
  x << -std::sin(t), 2 * std::cos(2 * t);
  return x;
}

double max_velocity_error(int K) {
  std::vector<Vec> knots;
  for (int k = 0; k <= K; ++k) knots.push_back(circle(2.0 * k / K));
  const Curve c = Curve::spline(2.0, knots);
  double err = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double t = 2.0 * i / 400;
    err = std::max(err, (c.velocity(t) - circle_dot(t)).norm());
  }
  return err;
}

}  // namespace

TEST_CASE("analytic, constant and line curves") {
  Vec a(2), b(2);
  a << 1, 2;
  b << 3, -2;
  const Curve line = Curve::line(2.0, a, b);
  CHECK((line(1.0) - Vec((a + b) / 2)).norm() < 1e-15);
  CHECK((line.velocity(0.3) - Vec((b - a) / 2)).norm() < 1e-15);
  CHECK(line.acceleration(0.7).norm() < 1e-12);
  const Curve c = Curve::constant(1.0, a);
  CHECK(c.velocity(0.5).norm() == 0.0);
  const Curve an = Curve::analytic(1.0, circle, circle_dot);
  CHECK(an.acceleration(0.4)[0] == doctest::Approx(-std::cos(0.4)).epsilon(1e-6));
}

TEST_CASE("spline interpolates knots and its velocity converges at second order or better") {
  std::vector<Vec> knots;
  for (int k = 0; k <= 20; ++k) knots.push_back(circle(2.0 * k / 20));
  const Curve c = Curve::spline(2.0, knots);
  for (int k = 0; k <= 20; ++k) CHECK((c(2.0 * k / 20) - knots[k]).norm() < 1e-14);
  const double e1 = max_velocity_error(20), e2 = max_velocity_error(40);
  CHECK(e1 / e2 > 3.5);
}

TEST_CASE("quintic Hermite reproduces a quintic polynomial") {
  auto p = [](double t) { return std::pow(t, 5) - 2 * t * t; };
  auto dp = [](double t) { return 5 * std::pow(t, 4) - 4 * t; };
  auto ddp = [](double t) { return 20 * std::pow(t, 3) - 4; };
  std::vector<Vec> x, v, a;
  for (int k = 0; k <= 4; ++k) {
    const double t = k / 4.0;
    x.push_back(Vec::Constant(1, p(t)));
    v.push_back(Vec::Constant(1, dp(t)));
    a.push_back(Vec::Constant(1, ddp(t)));
  }
  const Curve h = Curve::hermite(1.0, x, v, a);
  for (double t : {0.05, 0.33, 0.61, 0.97}) {
    CHECK(h(t)[0] == doctest::Approx(p(t)).epsilon(1e-12));
    CHECK(h.velocity(t)[0] == doctest::Approx(dp(t)).epsilon(1e-11));
  }
}

TEST_CASE("curve CSV round trip and diagnostics") {
  const Curve an = Curve::analytic(2.0, circle, circle_dot);
  const std::string path = "curve_roundtrip.csv";
  write_curve_csv(path, an, 200);
  const Curve back = load_curve_csv(path);
  CHECK(back.T() == doctest::Approx(2.0));
  CHECK(back.dim() == 2);
  CHECK(l2_distance(an, back) < 1e-6);
  std::remove(path.c_str());

  {
    std::ofstream bad("curve_bad.csv");
    bad << "t,x_1\n0,1\n0.5,oops\n";
  }
  try {
    load_curve_csv("curve_bad.csv");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("curve_bad.csv:3") != std::string::npos);
  }
  std::remove("curve_bad.csv");
  CHECK_THROWS_AS(load_curve_csv("does_not_exist.csv"), ConfigError);
}
