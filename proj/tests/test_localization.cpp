#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "bq/localization.hpp"
#include "support.hpp"

using namespace bq;

namespace {

const TransportedModes& shared_modes() {
  static const TransportedModes modes(32, GeneratingField{20.0}, ControlClock{256});
  return modes;
}

const LocalizationSetup& shared_setup() {
  static const LocalizationSetup setup(ControlRegion{1.0, 3.0});
  return setup;
}

std::shared_ptr<const NonlocalControl> shared_control() {
  static const auto g = [] {
    const CoupledAssembler assembler(shared_modes(), AssemblyOptions{});
    const int n = 32;
    const auto theta1 = SpectralField::from_function(n, [](double a, double b) { return std::sin(a) + 0.4 * std::cos(a + b); });
    const auto v1 = SpectralField::from_function(n, [](double a, double b) { return std::cos(a) - 0.3 * std::sin(a + b); });
    return std::make_shared<const NonlocalControl>(assembler.assemble(v1, theta1));
  }();
  return g;
}

}  // namespace

TEST_CASE("hitting weight on the plateau of the first strip") {
  const auto& s = shared_setup();
  const auto h = hitting_data(s.partition, s.strategy, s.cutoffs, 256);
  const auto x = grid_coordinates(256);
  const double w = s.partition.strip_width;
  int checked = 0;
  for (int j = 0; j < 256; ++j) {
    if (x[j] < 0.3 * w || x[j] > 0.7 * w) continue;
    CHECK(h[j].visits == 1);
    CHECK(h[j].window[0] == 1);
    CHECK(std::abs(h[j].e - 50.0 / 53.0) < 1e-14);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("hitting weight agrees with the sum over all windows") {
  const auto& s = shared_setup();
  const int n = 512;
  const auto h = hitting_data(s.partition, s.strategy, s.cutoffs, n);
  const auto x = grid_coordinates(n);
  int overlaps = 0;
  for (int j = 0; j < n; ++j) {
    double e = 0.0, total = 0.0;
    for (int k = 1; k <= s.partition.strip_count; ++k) {
      const double a = s.cutoffs.chi(x[j] + s.strategy.shift(k));
      e += a * (1.0 - s.grid.tb(k));
      total += a;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(std::abs(h[j].e - e) < 1e-12);
    if (h[j].visits == 1) CHECK(h[j].weight[0] == doctest::Approx(1.0).epsilon(1e-12));
    if (h[j].visits == 2) ++overlaps;
  }
  CHECK(overlaps > 0);
}

TEST_CASE("weighted derivative commutes with the x2-only weight") {
  const auto& s = shared_setup();
  std::mt19937_64 rng(3);
  const auto theta = bq::testing::random_field(64, 4, rng);
  const auto e = hitting_weight_grid(hitting_data(s.partition, s.strategy, s.cutoffs, 64));
  auto lhs = d1(theta).to_grid();
  auto prod = theta.to_grid();
  for (std::size_t p = 0; p < lhs.size(); ++p) {
    lhs[p] *= e[p];
    prod[p] *= e[p];
  }
  const auto rhs = d1(SpectralField::from_grid(64, prod));
  CHECK(bq::testing::max_grid_diff(SpectralField::from_grid(64, lhs), rhs) < 1e-12);
}

TEST_CASE("localized control identities") {
  const auto& s = shared_setup();
  const LocalizedControl c(shared_control(), s);
  const auto e = hitting_weight_grid(hitting_data(s.partition, s.strategy, s.cutoffs, 32));
  const auto id = check_identities(c, e);
  MESSAGE("theta ", id.theta, " v ", id.v, " endpoint ", id.endpoint, " mean ", id.max_mean, " total ",
          c.total_mean());
  CHECK(id.theta <= 1e-3);
  CHECK(id.v <= 1e-3);
  CHECK(id.endpoint <= 1e-6);
  CHECK(id.support <= 1e-12);
  CHECK(id.max_mean <= 1e-10);
}

TEST_CASE("schedules vanish outside the windows") {
  const LocalizedControl c(shared_control(), shared_setup());
  for (int m = 0; m < c.cell_count(); m += 7) {
    const auto g = c.gamma(m);
    if (c.window_of_cell(m)) continue;
    for (int l = 2; l < 14; ++l) CHECK(g[l] == 0.0);
    const auto f = c.localized_part(m);
    for (double v : f) CHECK(v == 0.0);
  }
}

TEST_CASE("control reconstructs from schedules and actuators") {
  const auto& s = shared_setup();
  const LocalizedControl c(shared_control(), s);
  const ZetaLibrary zeta(shared_modes(), s);
  CHECK(ZetaLibrary::names().size() == 14);
  for (int m : {3 * 256 - 100, 2 * 256 + 5, 5 * 256 + 200, 50 * 256 + 255, 52 * 256 + 3}) {
    const double t = c.cell_time(m);
    const auto g = c.gamma(m);
    const auto z = zeta.sample_all(t);
    const auto eta = c.grid(m);
    std::vector<double> sum(eta.size(), 0.0);
    double scale = 0.0;
    for (int l = 0; l < 14; ++l)
      for (std::size_t p = 0; p < sum.size(); ++p) sum[p] += g[l] * z[l][p];
    double err = 0.0;
    for (std::size_t p = 0; p < sum.size(); ++p) {
      err = std::max(err, std::abs(sum[p] - eta[p]));
      scale = std::max(scale, std::abs(eta[p]));
    }
    CHECK(err <= 1e-10 * std::max(1.0, scale));
  }
}

TEST_CASE("localized plan reaches low-mode targets") {
  const auto& s = shared_setup();
  const CoupledAssembler assembler(shared_modes(), AssemblyOptions{});
  const auto e = hitting_weight_grid(hitting_data(s.partition, s.strategy, s.cutoffs, 32));
  SUBCASE("temperature with its free vorticity") {
    const auto theta1 = SpectralField::from_function(32, [](double a, double) { return std::sin(a); });
    auto v1 = d1(theta1).to_grid();
    for (std::size_t p = 0; p < v1.size(); ++p) v1[p] *= e[p];
    const auto plan = localized_plan(SpectralField::from_grid(32, v1), theta1, assembler, s);
    CHECK(plan.theta_error < 0.01);
    CHECK(plan.v_error < 0.01);
  }
  SUBCASE("vorticity alone") {
    const auto v1 = SpectralField::from_function(32, [](double a, double b) { return 0.5 * std::cos(a + b); });
    const auto plan = localized_plan(v1, SpectralField(32), assembler, s);
    CHECK(plan.v_error < 0.05);
    CHECK(sobolev_norm(plan.theta_end, 2) < 0.05 * sobolev_norm(v1, 1));
  }
}
