#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bq/linear_control.hpp"
#include "support.hpp"

using namespace bq;

namespace {

const TransportedModes& shared_modes() {
  static const TransportedModes modes(32, GeneratingField{20.0}, ControlClock{256});
  return modes;
}

double source(TorusPoint x, double s) { return (1.0 + s) * std::sin(x.x1 + 2 * x.x2) + std::cos(s) * std::cos(2 * x.x1); }

}  // namespace

TEST_CASE("transport along the generating flow matches a characteristics oracle") {
  const auto& modes = shared_modes();
  const auto z = transport_generating(modes, source);
  // Oracle: backward RK4 from each grid point with Simpson accumulation.
  const int n = modes.n();
  const auto x = grid_coordinates(n);
  const GeneratingField& g = modes.field();
  const int steps = 4000;
  const double h = -1.0 / steps;
  std::vector<double> oracle(static_cast<std::size_t>(n) * n);
  for (int j2 = 0; j2 < n; ++j2)
    for (int j1 = 0; j1 < n; ++j1) {
      double y1 = x[j1], y2 = x[j2], acc = source({y1, y2}, 1.0);
      for (int k = 0; k < steps; ++k) {
        const double t = 1.0 + k * h;
        const double mid = t + 0.5 * h;
        const auto a = g.velocity({y1, y2}, t);
        const auto b = g.velocity({y1 + 0.5 * h * a[0], y2 + 0.5 * h * a[1]}, mid);
        const auto c = g.velocity({y1 + 0.5 * h * b[0], y2 + 0.5 * h * b[1]}, mid);
        const auto d = g.velocity({y1 + h * c[0], y2 + h * c[1]}, t + h);
        y1 += h / 6.0 * (a[0] + 2 * b[0] + 2 * c[0] + d[0]);
        y2 += h / 6.0 * (a[1] + 2 * b[1] + 2 * c[1] + d[1]);
        acc += (k + 1 == steps ? 1.0 : ((k + 1) % 2 ? 4.0 : 2.0)) * source({y1, y2}, t + h);
      }
      oracle[static_cast<std::size_t>(j2) * n + j1] = acc / (3.0 * steps);
    }
  const auto o = SpectralField::from_grid(n, oracle);
  CHECK(sobolev_norm(z - o, 0) / sobolev_norm(o, 0) < 1e-4);
}

TEST_CASE("vertical transport leaves x1-profiles unchanged") {
  const auto p = build_partition({1.0, 3.0});
  const ConvectionStrategy c(p, TimeGrid(p.strip_count));
  const auto h = SpectralField::from_function(32, [](double a, double) { return std::sin(a) + 0.3 * std::cos(3 * a); });
  const auto z = transport_vertical(c, [&](double) { return h; }, ControlClock{512});
  CHECK(bq::testing::max_coeff_diff(z, h) < 1e-14);
  const auto zero = transport_vertical(c, [](double) { return SpectralField(32); }, ControlClock{64});
  CHECK(sobolev_norm(zero, 0) == 0.0);
}

TEST_CASE("synthesis of the zero target is zero") {
  TransportSynthesizer syn(shared_modes(), SynthesisOptions{});
  const auto r = syn.fit(SpectralField(32));
  CHECK(r.control.alpha.norm() == 0.0);
  CHECK_THROWS_AS(syn.fit(SpectralField::from_function(32, [](double, double) { return 1.0; })), std::invalid_argument);
}

TEST_CASE("identity drift recovers H0 coefficients") {
  const TransportedModes still(16, GeneratingField{0.0}, ControlClock{64});
  SynthesisOptions opt;
  opt.bins = 8;
  opt.k_cut = 7;
  TransportSynthesizer syn(still, opt);
  const auto z = SpectralField::from_function(16, [](double a, double b) {
    return 0.7 * std::sin(a) - 0.2 * std::cos(a) + 0.4 * std::cos(a + b) + 0.3 * std::sin(2 * b);
  });
  const auto r = syn.fit(z, 0);
  const double expected[4] = {0.7, -0.2, 0.0, 0.4};
  for (int b = 0; b < 8; ++b)
    for (int j = 0; j < 4; ++j) CHECK(r.control.alpha(b, j) == doctest::Approx(expected[j]).epsilon(1e-6));
  CHECK(r.residual_l2 == doctest::Approx(0.3 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("nested bins never increase the unregularized residual") {
  std::mt19937_64 rng(21);
  const auto z = bq::testing::random_field(32, 2, rng);
  double previous = INFINITY;
  for (int bins : {4, 8, 16, 32}) {
    SynthesisOptions opt;
    opt.bins = bins;
    opt.ridge = 0.0;
    opt.k_cut = 15;
    const double r = TransportSynthesizer(shared_modes(), opt).fit(z, 0).residual_l2;
    CHECK(r <= previous * (1.0 + 1e-9));
    previous = r;
  }
}

TEST_CASE("taper window") {
  const Taper t{0.1};
  CHECK(t.value(0.0) == 0.0);
  CHECK(t.value(1.0) == 0.0);
  CHECK(t.value(0.5) == 1.0);
  CHECK(t.value(0.1) == 1.0);
  const double s = 0.04, h = 1e-7;
  CHECK(t.derivative(s) == doctest::Approx((t.value(s + h) - t.value(s - h)) / (2 * h)).epsilon(1e-6));
  CHECK(t.derivative(1 - s) == doctest::Approx((t.value(1 - s + h) - t.value(1 - s - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("coupled assembly invariants") {
  const auto& modes = shared_modes();
  const auto p = build_partition({1.0, 3.0});
  const ConvectionStrategy c(p, TimeGrid(p.strip_count));
  AssemblyOptions opt;
  opt.temperature.k_cut = 15;
  opt.vorticity.k_cut = 15;
  const CoupledAssembler asmb(modes, opt);

  const auto zero = asmb.assemble(SpectralField(32), SpectralField(32));
  for (const auto& a : zero.alpha)
    for (double v : a) CHECK(v == 0.0);

  const auto theta1 = SpectralField::from_function(32, [](double a, double b) { return std::sin(a + b) + 0.3 * std::cos(a); });
  const auto v1 = SpectralField::from_function(32, [](double a, double b) { return 0.5 * std::cos(a) - 0.2 * std::sin(2 * a + b); });
  const auto g = asmb.assemble(v1, theta1);

  CHECK(sobolev_norm(g.theta_tilde_end, 0) <= 1e-3 * g.tilde_profile_norm);
  double average = 0.0;
  for (const auto& f : g.combined) average += f.mean();
  CHECK(std::abs(average) < 1e-10);
  // the tilde part never creates horizontal line means in v
  const auto lm = g.v_tilde_end - remove_line_means(g.v_tilde_end);
  CHECK(sobolev_norm(lm, 0) < 1e-6);
  CHECK(g.theta_residual < 0.05);

  // change of flow: vertical transport of g_hat equals generating transport of g_bar
  const auto gh = transport_vertical(
      c,
      [&](double s) {
        const int i = std::min(static_cast<int>(s * g.clock.samples), g.clock.samples - 1);
        SpectralField f(32);
        for (int j = 0; j < 4; ++j) f.axpy(g.alpha[i][j], modes.family(i)[j]);
        return shift_vertical(f, -c.displacement(s));
      },
      g.clock);
  CHECK(sobolev_norm(gh - g.theta_hat_end, 0) <= 1e-3 * sobolev_norm(g.theta_hat_end, 0));
}

TEST_CASE("taper perturbation shrinks with the width") {
  const auto& modes = shared_modes();
  const auto v1 = SpectralField::from_function(32, [](double a, double b) { return std::sin(a) + 0.4 * std::cos(a + b); });
  double previous = INFINITY;
  for (double w : {0.2, 0.1, 0.05}) {
    AssemblyOptions opt;
    opt.temperature.k_cut = 15;
    opt.vorticity.k_cut = 15;
    opt.taper_width = w;
    const auto g = CoupledAssembler(modes, opt).assemble(v1, SpectralField(32));
    CHECK(g.taper_perturbation < previous);
    previous = g.taper_perturbation;
  }
}
