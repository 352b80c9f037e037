#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bq/steering.hpp"
#include "support.hpp"

using namespace bq;

namespace {

constexpr int kN = 32;

const SteeringContext& shared_context() {
  static const SteeringContext ctx([] {
    SteeringContextOptions o;
    o.n = kN;
    o.samples = 256;
    return o;
  }());
  return ctx;
}

SpectralField field(double (*f)(double, double)) { return SpectralField::from_function(kN, f); }

}  // namespace

TEST_CASE("xi solves d1 xi = diff away from k1 = 0") {
  const auto sin1 = field([](double a, double) { return std::sin(a); });
  const auto cos1 = field([](double a, double) { return std::cos(a); });
  const auto sin2 = field([](double, double b) { return std::sin(b); });
  const SpectralField zero(kN);
  const auto a = choose_xi(sin1, zero, 2);
  CHECK(bq::testing::max_grid_diff(a.xi, -1.0 * cos1) < 1e-13);
  CHECK(a.residual < 1e-13);
  const auto b = choose_xi(sin2, zero, 2);
  CHECK(sobolev_norm(b.xi, 2) < 1e-13);
  CHECK(b.residual == doctest::Approx(sobolev_norm(sin2, 1)).epsilon(1e-12));
}

TEST_CASE("vorticity step approaches w0 - d1 xi") {
  const auto xi = field([](double a, double) { return std::cos(a); });
  const SolverState start{SpectralField(kN), SpectralField(kN), 0.0};
  double prev = 1e300;
  for (double delta : {0.2, 0.1, 0.05}) {
    const auto r = vorticity_step(start, xi, delta, Physics{}, 2);
    REQUIRE_FALSE(r.failed);
    MESSAGE("delta ", delta, " error ", r.w_error);
    CHECK(r.w_error < prev);
    prev = r.w_error;
  }
}

TEST_CASE("scaled run reproduces the linear endpoint") {
  // Tiny data: the nonlinear coupling, of relative size eps, drops out.
  const auto& ctx = shared_context();
  const double eps = 1e-9, delta = 0.1;
  const SolverState start{eps * field([](double a, double b) { return 0.3 * std::sin(a + b); }),
                          eps * field([](double a, double b) { return 0.5 * std::cos(a + b); }), 0.0};
  const auto theta1 = eps * field([](double a, double b) { return std::sin(a) + 0.3 * std::cos(a + b); });
  const auto r = temperature_step(ctx, start, theta1, delta, Physics{0.0, 0.0});
  REQUIRE_FALSE(r.failed);
  const SpectralField predicted = start.temperature + (1.0 / delta) * r.plan->theta_end;
  const double rel = sobolev_norm(r.final_state.temperature - predicted, 2) / sobolev_norm(r.plan->theta_end, 2) * delta;
  MESSAGE("relative mismatch ", rel);
  CHECK(rel < 1e-6);
}

TEST_CASE("temperature step improves as delta shrinks") {
  const auto& ctx = shared_context();
  const SolverState start{field([](double a, double b) { return 0.3 * std::sin(a + b); }),
                          field([](double a, double b) { return 0.5 * std::cos(a + b); }), 0.0};
  const auto theta1 = field([](double a, double b) { return std::sin(a) + 0.3 * std::cos(a + b); });
  SweepSpec spec;
  spec.experiment = "temperature_step";
  spec.deltas = {0.1, 0.05};
  spec.start = start;
  spec.theta_target = theta1;
  const auto t = sweep_delta(ctx, spec);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1].discrepancy < t.rows[0].discrepancy);
}

TEST_CASE("scaled control keeps the change of variables") {
  SweepSpec spec;
  spec.experiment = "scaled_control";
  spec.deltas = {0.2, 0.05};
  spec.start = {SpectralField(kN), field([](double a, double) { return std::cos(a); }), 0.0};
  spec.theta_target = field([](double a, double b) { return std::sin(a) * std::cos(b); });
  const auto t = sweep_delta(shared_context(), spec);
  for (const auto& r : t.rows) CHECK(r.discrepancy < 1e-12);
}

TEST_CASE("stage durations respect the thirds rule") {
  CHECK(StageDurations{0.33, 0.01, 0.1, 0.01}.valid());
  CHECK_FALSE(StageDurations{0.3, 0.01, 0.1, 0.01}.valid());
  CHECK_FALSE(StageDurations{0.33, 0.0, 0.1, 0.01}.valid());
}

TEST_CASE("steered plan emits localized and reconstructible controls") {
  const auto& ctx = shared_context();
  SteeringProblem pr;
  pr.horizon = 0.5;
  pr.w0 = SpectralField(kN);
  pr.theta0 = field([](double a, double b) { return 0.3 * std::sin(a + b); });
  pr.w_target = field([](double a, double) { return 0.5 * std::sin(a); });
  pr.theta_target = field([](double a, double) { return 0.2 * std::cos(a); });
  const StageDurations d{0.33, 0.001, 0.1, 0.001};
  const double t0 = pr.horizon - d.total;
  const std::vector<double> probes{t0 + 0.0004, t0 + 0.05, t0 + d.energize + d.drift + 0.0007};
  auto [plan, res] = steer_once(ctx, pr, d, pr.w_target, pr.theta_target, probes);
  REQUIRE_FALSE(res.failed);
  CHECK(std::isfinite(res.total));
  CHECK(res.samples.size() == probes.size());

  for (int option : {1, 2}) {
    const auto emitted = emit_velocity_form(ctx, plan, option, pr.phys, res.samples);
    for (const auto& e : emitted) CHECK(e.outside <= 1e-12);
  }
  std::vector<double> times = plan.active_times();
  std::vector<double> some;
  for (std::size_t k = 0; k < times.size(); k += 997) some.push_back(times[k]);
  some.push_back(0.05);
  some.push_back(t0 + 0.05);
  CHECK(reconstruction_error(ctx, plan, some) <= 1e-10);

  // Outside the controlled stages every schedule is exactly zero.
  for (double t : {0.0, 0.1, t0 - 1e-9, t0 + 0.05, pr.horizon}) {
    CHECK(plan.gamma(t) == 0.0);
    CHECK(plan.aleph(t) == 0.0);
    for (double g : plan.gamma_l(t)) CHECK(g == 0.0);
  }
}
