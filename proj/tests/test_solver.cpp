#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bq/solver.hpp"
#include "support.hpp"

using namespace bq;
using bq::testing::max_coeff_diff;

namespace {

double rel_diff(const SpectralField& a, const SpectralField& b) {
  return sobolev_norm(a - b, 0) / sobolev_norm(b, 0);
}

}  // namespace

TEST_CASE("viscous decay of a shear mode") {
  const int n = 32;
  const Physics phys{0.05, 0.02};
  SolverState s{SpectralField::from_function(n, [](double, double y) { return std::cos(y); }), SpectralField(n), 0.0};
  StepOptions opt;
  opt.dt_max = 1e-3;
  const auto r = solve(s, 1.0, phys, {}, opt);
  const auto exact = SpectralField::from_function(n, [&](double, double y) { return std::exp(-0.05) * std::cos(y); });
  CHECK(rel_diff(r.final_state.vorticity, exact) < 1e-8);
}

TEST_CASE("buoyancy-driven vertical shear") {
  const int n = 32;
  const double nu = 0.05, tau = 0.02;
  SolverState s{SpectralField(n), SpectralField::from_function(n, [](double x, double) { return std::sin(2 * x); }), 0.0};
  StepOptions opt;
  opt.dt_max = 1e-3;
  const auto r = solve(s, 1.0, {nu, tau}, {}, opt);
  const double amp = 2.0 * (std::exp(-4 * tau) - std::exp(-4 * nu)) / (4 * nu - 4 * tau);
  const auto w = SpectralField::from_function(n, [&](double x, double) { return amp * std::cos(2 * x); });
  const auto th = SpectralField::from_function(n, [&](double x, double) { return std::exp(-4 * tau) * std::sin(2 * x); });
  CHECK(rel_diff(r.final_state.vorticity, w) < 1e-8);
  CHECK(rel_diff(r.final_state.temperature, th) < 1e-8);
}

TEST_CASE("mean temperature follows the source mean") {
  const int n = 16;
  std::mt19937_64 rng(9);
  SolverState s{bq::testing::random_field(n, 3, rng), bq::testing::random_field(n, 3, rng, false), 0.0};
  const double m0 = s.temperature.mean();
  Forcing f;
  f.temperature_source = [n](double t) {
    SpectralField h(n);
    h.coeff(0, 0) = 0.5 + t;
    return h;
  };
  f.mean_velocity = [](double t) { return std::array<double, 2>{0.3, std::sin(t)}; };
  const auto r = solve(s, 0.5, {0.01, 0.01}, f);
  CHECK(std::abs(r.final_state.temperature.mean() - (m0 + 0.25 + 0.125)) < 1e-10);
  CHECK(r.final_state.vorticity.is_mean_free());
}

TEST_CASE("record times act as breakpoints") {
  const int n = 16;
  std::mt19937_64 rng(10);
  SolverState s{bq::testing::random_field(n, 4, rng), bq::testing::random_field(n, 4, rng), 0.0};
  const Physics phys{0.01, 0.01};
  const auto whole = solve(s, 0.2, phys, {}, {}, {0.1});
  const auto first = solve(s, 0.1, phys, {});
  const auto second = solve(first.final_state, 0.2, phys, {});
  REQUIRE(whole.samples.size() == 1);
  CHECK(whole.samples[0].time == 0.1);
  CHECK(max_coeff_diff(whole.final_state.vorticity, second.final_state.vorticity) < 1e-9);
  CHECK(max_coeff_diff(whole.final_state.temperature, second.final_state.temperature) < 1e-9);
}

TEST_CASE("cfl step for a fluid at rest") {
  SolverState s{SpectralField(16), SpectralField(16), 0.0};
  StepOptions opt;
  opt.dt_max = 0.05;
  CHECK(cfl_dt(s, {}, opt) == 0.05);
  Forcing f;
  f.mean_velocity = [](double) { return std::array<double, 2>{0.0, 100.0}; };
  CHECK(cfl_dt(s, f, opt) == doctest::Approx(0.4 * kTwoPi / 16 / 100.0).epsilon(1e-6));
}

TEST_CASE("blow-up is reported") {
  const int n = 16;
  SolverState s{SpectralField(n), SpectralField(n), 0.0};
  Forcing f;
  f.temperature_source = [n](double) { return SpectralField::from_function(n, [](double x, double) { return 1e6 * std::sin(x); }); };
  StepOptions opt;
  opt.blowup_threshold = 10.0;
  CHECK_THROWS_AS(solve(s, 0.1, {0.01, 0.01}, f, opt), SolverBlowUp);
}
