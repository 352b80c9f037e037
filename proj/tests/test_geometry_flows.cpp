#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bq/flows.hpp"
#include "bq/geometry.hpp"

using namespace bq;

TEST_CASE("partition for the (1, 3) region") {
  const auto p = build_partition({1.0, 3.0});
  CHECK(p.h1 == doctest::Approx(1.25));
  CHECK(p.h2 == doctest::Approx(2.75));
  CHECK(p.strip_count == 17);
  CHECK(p.strip_width == doctest::Approx(8 * M_PI / 51).epsilon(1e-15));
  CHECK(p.reference.lo == doctest::Approx(1.25 + 8 * M_PI / 51));
  // strips cover the circle
  for (int j = 0; j < 1000; ++j) {
    const double x = kTwoPi * (j + 0.5) / 1000;
    bool covered = false;
    for (const auto& s : p.strips) covered = covered || s.contains(x);
    CHECK(covered);
  }
  CHECK(TimeGrid(p.strip_count).unit == doctest::Approx(1.0 / 53));
}

TEST_CASE("thin regions are rejected") {
  CHECK_THROWS_AS(build_partition({1.0, 1.001}), std::invalid_argument);
  CHECK_THROWS_AS(build_partition({2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("smoothstep and cutoffs") {
  CHECK(smoothstep(0.5, 7) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(smoothstep(0.25, 7) + smoothstep(0.75, 7) == doctest::Approx(1.0).epsilon(1e-15));
  const Cutoffs c(build_partition({1.0, 3.0}));
  const auto r = verify_cutoffs(c);
  CHECK(r.partition_of_unity_error < 1e-12);
  CHECK(r.plateau_violation == 0.0);
  CHECK(r.chi_support_violation == 0.0);
  CHECK(r.bump_support_violation == 0.0);
  CHECK(r.bump_integral_error < 1e-12);
  // derivative of the bump by central differences
  const double x = 1.9, h = 1e-5;
  CHECK(c.bump_d1(x) == doctest::Approx((c.bump(x + h) - c.bump(x - h)) / (2 * h)).epsilon(1e-8));
  CHECK(c.bump_d2(x) == doctest::Approx((c.bump_d1(x + h) - c.bump_d1(x - h)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("time grid windows") {
  const TimeGrid g(17);
  CHECK(g.ta(1) == doctest::Approx(2.0 / 53));
  CHECK(g.tb(1) == doctest::Approx(3.0 / 53));
  CHECK(g.window_of(2.5 / 53) == 1);
  CHECK(g.window_of(1.5 / 53) == 0);
  CHECK(window_phase(g, 2.25 / 53) == doctest::Approx(0.25));
  CHECK(g.window_of(0.999) == 0);
}

TEST_CASE("bump profile") {
  const BumpProfile b(4);
  CHECK(b.value(0.5) == doctest::Approx(630.0 / 256.0));
  CHECK(b.integral(1.0) == 1.0);
  CHECK(b.integral(0.5) == doctest::Approx(0.5).epsilon(1e-14));
  const double s = 0.3, h = 1e-6;
  CHECK(b.derivative(s, 1) == doctest::Approx((b.value(s + h) - b.value(s - h)) / (2 * h)).epsilon(1e-7));
  CHECK(b.value(s) == doctest::Approx((b.integral(s + h) - b.integral(s - h)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("convection strategy visits every strip") {
  const auto p = build_partition({1.0, 3.0});
  const TimeGrid g(p.strip_count);
  const ConvectionStrategy c(p, g);
  CHECK(c.displacement(1.0) == 0.0);
  CHECK(c.displacement(0.0) == 0.0);
  for (int k = 1; k <= p.strip_count; ++k) {
    const double mid = 0.5 * (g.ta(k) + g.tb(k));
    CHECK(std::abs(c.displacement(g.ta(k)) - c.shift(k)) < 1e-12);
    CHECK(c.displacement(mid) == c.shift(k));
    CHECK(c.velocity(mid) == 0.0);
    const double centre = 0.5 * (p.strips[k - 1].lo + p.strips[k - 1].hi);
    const auto y = flow_vertical(c, {0.3, centre}, 0.0, mid);
    CHECK(p.reference.contains(y.x2));
  }
  // D' = velocity
  const double t = g.tc(3) + 0.4 * g.unit, h = 1e-7;
  CHECK(c.velocity(t) == doctest::Approx((c.displacement(t + h) - c.displacement(t - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("generating field flow round trip") {
  const GeneratingField f{3.0};
  const TorusPoint x{0.4, 5.1};
  const auto y = flow_generating(f, x, 0.0, 1.0, 256);
  const auto z = flow_generating(f, y, 1.0, 0.0, 256);
  auto diff = [](double a, double b) { return std::abs(std::remainder(a - b, kTwoPi)); };
  CHECK(diff(z.x1, x.x1) < 1e-10);
  CHECK(diff(z.x2, x.x2) < 1e-10);
  const auto r = build_generating(f);
  CHECK(r.min_gram_singular_value > 0.0);
}
