#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>

#include "bq/spectral.hpp"
#include "support.hpp"

using namespace bq;
using bq::testing::max_coeff_diff;
using bq::testing::max_grid_diff;
using bq::testing::random_field;

TEST_CASE("grid round trip") {
  std::mt19937_64 rng(1);
  for (int n : {8, 32, 64}) {
    const auto f = random_field(n, n / 2 - 1, rng, false);
    const auto g = SpectralField::from_grid(n, f.to_grid());
    CHECK(max_coeff_diff(f, g) < 1e-14);
  }
}

TEST_CASE("sobolev norms of single modes") {
  const auto s = SpectralField::from_function(32, [](double x1, double) { return std::sin(x1); });
  CHECK(sobolev_norm(s, 0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(sobolev_norm(s, 1) == doctest::Approx(1.0).epsilon(1e-14));
  // weight of (1, 2) at m = 2: 1 + 1 + 1 + 4 + 4 + 16
  CHECK(sobolev_weight(1, 2, 2) == 27.0);
  const auto c = SpectralField::from_function(32, [](double x1, double x2) { return std::cos(x1 + 2 * x2); });
  CHECK(sobolev_norm(c, 2) == doctest::Approx(std::sqrt(27.0 / 2.0)).epsilon(1e-13));
}

TEST_CASE("derivatives of trigonometric fields") {
  const int n = 32;
  const auto f = SpectralField::from_function(n, [](double x1, double x2) { return std::cos(3 * x1) * std::sin(x2); });
  const auto fx = SpectralField::from_function(n, [](double x1, double x2) { return -3 * std::sin(3 * x1) * std::sin(x2); });
  const auto fy = SpectralField::from_function(n, [](double x1, double x2) { return std::cos(3 * x1) * std::cos(x2); });
  CHECK(max_grid_diff(d1(f), fx) < 1e-13);
  CHECK(max_grid_diff(d2(f), fy) < 1e-13);
  CHECK(max_grid_diff(laplacian(f), -10.0 * f) < 1e-12);
  CHECK(max_grid_diff(d1(x1_antiderivative(f)), f) < 1e-13);
}

TEST_CASE("curl and inverse curl are inverse on mean-free fields") {
  std::mt19937_64 rng(2);
  for (int n : {16, 32}) {
    const auto z = random_field(n, n / 2 - 1, rng);
    CHECK(max_coeff_diff(curl(inverse_curl(z, {0.3, -0.2})), z) < 1e-14);
    const auto u = inverse_curl(z, {0.3, -0.2});
    CHECK(u.mean[0] == 0.3);
    CHECK(std::abs(d1(u.u1()).coeff(0, 0) + d2(u.u2()).coeff(0, 0)) < 1e-15);
  }
  // sin x1 has stream function sin x1 and velocity (0, -cos x1).
  const auto z = SpectralField::from_function(16, [](double x1, double) { return std::sin(x1); });
  const auto u2 = SpectralField::from_function(16, [](double x1, double) { return -std::cos(x1); });
  CHECK(max_grid_diff(inverse_curl(z).u2(), u2) < 1e-14);
}

TEST_CASE("dealiased product matches truncated convolution") {
  std::mt19937_64 rng(3);
  const int n = 32;
  const int kc = dealias_cutoff(n);
  const auto f = random_field(n, kc, rng, false);
  const auto g = random_field(n, kc, rng, false);
  // direct convolution on signed wavenumbers
  std::map<std::pair<int, int>, Complex> conv;
  for (int a2 = -kc; a2 <= kc; ++a2)
    for (int a1 = -kc; a1 <= kc; ++a1)
      for (int b2 = -kc; b2 <= kc; ++b2)
        for (int b1 = -kc; b1 <= kc; ++b1) conv[{a1 + b1, a2 + b2}] += f.coeff(a1, a2) * g.coeff(b1, b2);
  const auto p = dealiased_product(f, g);
  double err = 0.0;
  for (int k2 = -kc; k2 <= kc; ++k2)
    for (int k1 = -kc; k1 <= kc; ++k1) err = std::max(err, std::abs(p.coeff(k1, k2) - conv[{k1, k2}]));
  CHECK(err < 1e-13);
  CHECK(std::abs(p.coeff(kc + 1, 0)) == 0.0);
}

TEST_CASE("evaluation reproduces grid and analytic values") {
  std::mt19937_64 rng(4);
  const int n = 16;
  const auto f = random_field(n, 5, rng, false);
  const auto grid = f.to_grid();
  const auto x = grid_coordinates(n);
  std::vector<TorusPoint> pts;
  for (int j2 = 0; j2 < n; ++j2)
    for (int j1 = 0; j1 < n; ++j1) pts.push_back({x[j1], x[j2]});
  const auto v = evaluate(f, pts);
  double err = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(v[i] - grid[i]));
  CHECK(err < 1e-13);
  const auto h = SpectralField::from_function(n, [](double a, double b) { return std::sin(a + 2 * b); });
  const TorusPoint q{0.123, 4.56};
  CHECK(evaluate(h, std::span(&q, 1))[0] == doctest::Approx(std::sin(0.123 + 2 * 4.56)).epsilon(1e-13));
}

TEST_CASE("vertical shift group law") {
  std::mt19937_64 rng(5);
  const int n = 32;
  const auto f = random_field(n, 12, rng, false);
  CHECK(max_coeff_diff(shift_vertical(f, 0.0), f) == 0.0);
  CHECK(max_coeff_diff(shift_vertical(f, kTwoPi), f) < 1e-13);
  CHECK(max_coeff_diff(shift_vertical(shift_vertical(f, 0.7), -1.9), shift_vertical(f, -1.2)) < 1e-13);
  const TorusPoint q{1.0, 2.0};
  const TorusPoint qs{1.0, 2.0 + 0.37};
  CHECK(evaluate(shift_vertical(f, 0.37), std::span(&q, 1))[0] ==
        doctest::Approx(evaluate(f, std::span(&qs, 1))[0]).epsilon(1e-12));
}

TEST_CASE("velocity constant at m = 2") {
  CHECK(velocity_norm_constant(32, 2) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-14));
}

TEST_CASE("snapshot round trip") {
  std::mt19937_64 rng(6);
  const auto f = random_field(16, 7, rng, false);
  const std::string path = "snapshot_roundtrip.txt";
  write_snapshot(path, f, 2);
  int m = 0;
  const auto g = read_snapshot(path, &m);
  CHECK(m == 2);
  CHECK(max_coeff_diff(f, g) < 1e-15);
  std::remove(path.c_str());
}
