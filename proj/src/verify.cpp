#include "bq/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <random>
#include <sstream>

namespace bq {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

SpectralField random_field(int n, int kmax, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField f(n);
  for (int k2 = 0; k2 <= kmax; ++k2)
    for (int k1 = -kmax; k1 <= kmax; ++k1) {
      if (k2 == 0 && k1 <= 0) continue;
      f.set_mode(k1, k2, Complex(g(rng), g(rng)) / double(1 + k1 * k1 + k2 * k2));
    }
  return f;
}

double max_abs_grid(const SpectralField& f) {
  double m = 0.0;
  for (double v : f.to_grid()) m = std::max(m, std::abs(v));
  return m;
}

double rel(const SpectralField& a, const SpectralField& b) { return sobolev_norm(a - b, 0) / sobolev_norm(b, 0); }

SpectralField fn(int n, double (*f)(double, double)) { return SpectralField::from_function(n, f); }

const SteeringContext& reference_context() {
  static const SteeringContext ctx(SteeringContextOptions{});
  return ctx;
}

const SteeringContext& small_context() {
  static const SteeringContext ctx([] {
    SteeringContextOptions o;
    o.n = 32;
    o.samples = 256;
    return o;
  }());
  return ctx;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

CheckResult check_spectral_identities() {
  const auto t0 = Clock::now();
  CheckResult r{1, "spectral identities", false, "", 0.0};
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  double worst_curl = 0.0, worst_mean = 0.0;
  for (int n : {32, 64, 128})
    for (int k = 0; k < 100; ++k) {
      const auto z = random_field(n, std::min(10, n / 3 - 1), rng);
      const std::array<double, 2> a{amp(rng), amp(rng)};
      const auto u = inverse_curl(z, a);
      worst_curl = std::max(worst_curl, max_abs_grid(curl(u) - z) / max_abs_grid(z));
      worst_mean = std::max({worst_mean, std::abs(u.u1().mean() - a[0]), std::abs(u.u2().mean() - a[1])});
    }
  r.seconds = seconds_since(t0);
  r.passed = worst_curl <= 1e-12 && worst_mean <= 1e-12 && r.seconds <= 10.0;
  r.detail = "curl " + fmt("%.2e", worst_curl) + " mean " + fmt("%.2e", worst_mean);
  return r;
}

CheckResult check_solver_exactness() {
  const auto t0 = Clock::now();
  CheckResult r{2, "solver exactness", false, "", 0.0};
  const int n = 32;
  const Physics phys{0.01, 0.01};
  StepOptions opt;
  opt.dt_max = 1e-3;
  const SpectralField zero(n);
  const auto w = solve({fn(n, [](double, double y) { return std::cos(y); }), zero, 0.0}, 1.0, phys, {}, opt);
  const auto w_exact = SpectralField::from_function(n, [&](double, double y) { return std::exp(-phys.viscosity) * std::cos(y); });
  const double ew = rel(w.final_state.vorticity, w_exact);
  const auto th = solve({zero, fn(n, [](double, double y) { return std::sin(y); }), 0.0}, 1.0, phys, {}, opt);
  const auto th_exact =
      SpectralField::from_function(n, [&](double, double y) { return std::exp(-phys.diffusivity) * std::sin(y); });
  const double et = rel(th.final_state.temperature, th_exact);
  // Mean temperature grows by the integral of the source mean.
  std::mt19937_64 rng(7);
  SolverState s{random_field(n, 3, rng), random_field(n, 3, rng), 0.0};
  s.temperature.coeff(0, 0) = 0.4;
  Forcing f;
  f.temperature_source = [n](double t) {
    SpectralField h = SpectralField::from_function(n, [](double a, double b) { return std::sin(a - b); });
    h.coeff(0, 0) = 0.5 + t;
    return h;
  };
  const auto m = solve(s, 1.0, phys, f, opt);
  const double em = std::abs(m.final_state.temperature.mean() - (0.4 + 1.0));
  r.seconds = seconds_since(t0);
  r.passed = ew <= 1e-8 && et <= 1e-8 && em <= 1e-10;
  r.detail = "vorticity " + fmt("%.2e", ew) + " temperature " + fmt("%.2e", et) + " mean " + fmt("%.2e", em);
  return r;
}

CheckResult check_geometry() {
  const auto t0 = Clock::now();
  CheckResult r{3, "geometry", false, "", 0.0};
  const auto p = build_partition({1.0, 3.0});
  const Cutoffs c(p);
  const double w = p.strip_width, step = 0.75 * w;
  // mu(x) + mu(x - 3w/4) = 1 on the overlap x in [3w/4, w].
  double pou = 0.0;
  for (int j = 0; j < 10000; ++j) {
    const double x = step + 0.25 * w * (j + 0.5) / 10000.0;
    pou = std::max(pou, std::abs(c.mu(x) + c.mu(x - step) - 1.0));
  }
  const TimeGrid g(p.strip_count);
  r.seconds = seconds_since(t0);
  r.passed = pou <= 1e-12 && p.strip_count == 17 && std::abs(g.unit - 1.0 / 53.0) < 1e-15;
  r.detail = "partition of unity " + fmt("%.2e", pou) + " K " + std::to_string(p.strip_count) + " T_delta 1/" +
             fmt("%.6g", 1.0 / g.unit);
  return r;
}

CheckResult check_flows() {
  const auto t0 = Clock::now();
  CheckResult r{4, "flow properties", false, "", 0.0};
  const auto p = build_partition({1.0, 3.0});
  const TimeGrid g(p.strip_count);
  const ConvectionStrategy c(p, g);
  bool ok = c.displacement(1.0) == 0.0;
  std::string why = ok ? "" : " D(1) != 0";
  int misses = 0;
  for (int k = 1; k <= p.strip_count; ++k) {
    for (int j = 0; j <= 16; ++j) {
      const double t = g.ta(k) + (g.tb(k) - g.ta(k)) * j / 16.0;
      if (c.displacement(t) != c.shift(k) && j > 0 && j < 16) ++misses;
    }
    const double mid = 0.5 * (g.ta(k) + g.tb(k));
    const auto& strip = p.strips[k - 1];
    for (int j = 1; j < 16; ++j) {
      const double x2 = strip.lo + (strip.hi - strip.lo) * j / 16.0;
      const auto y = flow_vertical(c, {0.7, x2}, 0.0, mid);
      if (!p.reference.contains(y.x2)) ++misses;
    }
  }
  if (misses) {
    ok = false;
    why += " window misses " + std::to_string(misses);
  }
  const GeneratingField f{20.0};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, kTwoPi);
  double trip = 0.0;
  for (int j = 0; j < 64; ++j) {
    const TorusPoint x{u(rng), u(rng)};
    const auto y = flow_generating(f, x, 0.0, 1.0, 256);
    const auto z = flow_generating(f, y, 1.0, 0.0, 256);
    trip = std::max({trip, std::abs(std::remainder(z.x1 - x.x1, kTwoPi)), std::abs(std::remainder(z.x2 - x.x2, kTwoPi))});
  }
  r.seconds = seconds_since(t0);
  r.passed = ok && trip <= 1e-10;
  r.detail = "round trip " + fmt("%.2e", trip) + why;
  return r;
}

CheckResult check_synthesis() {
  const auto t0 = Clock::now();
  CheckResult r{5, "transport synthesis", false, "", 0.0};
  const auto& modes = reference_context().modes();
  const TransportSynthesizer syn(modes, SynthesisOptions{});
  std::mt19937_64 rng(55);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const auto rep = syn.fit(random_field(modes.n(), 2, rng), 0);
    worst = std::max(worst, rep.residual_l2 / rep.target_l2);
  }
  const auto z = random_field(modes.n(), 2, rng);
  double previous = INFINITY;
  bool nested = true;
  for (int bins : {8, 16, 32, 64}) {
    SynthesisOptions o;
    o.bins = bins;
    o.ridge = 0.0;
    const double res = TransportSynthesizer(modes, o).fit(z, 0).residual_l2;
    nested = nested && res <= previous * (1.0 + 1e-9);
    previous = res;
  }
  // Characteristics oracle for transport along the generating flow.
  const TransportedModes small(32, GeneratingField{20.0}, ControlClock{256});
  auto source = [](TorusPoint x, double s) { return (1.0 + s) * std::sin(x.x1 + 2 * x.x2) + std::cos(s) * std::cos(2 * x.x1); };
  const auto zt = transport_generating(small, source);
  const auto x = grid_coordinates(32);
  const int steps = 4000;
  const double h = -1.0 / steps;
  std::vector<double> oracle(32 * 32);
  for (int j2 = 0; j2 < 32; ++j2)
    for (int j1 = 0; j1 < 32; ++j1) {
      double y1 = x[j1], y2 = x[j2], acc = source({y1, y2}, 1.0);
      for (int k = 0; k < steps; ++k) {
        const double t = 1.0 + k * h, mid = t + 0.5 * h;
        const auto a = small.field().velocity({y1, y2}, t);
        const auto b = small.field().velocity({y1 + 0.5 * h * a[0], y2 + 0.5 * h * a[1]}, mid);
        const auto c = small.field().velocity({y1 + 0.5 * h * b[0], y2 + 0.5 * h * b[1]}, mid);
        const auto d = small.field().velocity({y1 + h * c[0], y2 + h * c[1]}, t + h);
        y1 += h / 6.0 * (a[0] + 2 * b[0] + 2 * c[0] + d[0]);
        y2 += h / 6.0 * (a[1] + 2 * b[1] + 2 * c[1] + d[1]);
        acc += (k + 1 == steps ? 1.0 : ((k + 1) % 2 ? 4.0 : 2.0)) * source({y1, y2}, t + h);
      }
      oracle[static_cast<std::size_t>(j2) * 32 + j1] = acc / (3.0 * steps);
    }
  const double oracle_err = rel(zt, SpectralField::from_grid(32, oracle));
  r.seconds = seconds_since(t0);
  r.passed = worst <= 0.05 && nested && oracle_err <= 1e-4;
  r.detail = "worst residual " + fmt("%.3f", worst) + (nested ? " nested ok" : " nested violated") + " oracle " +
             fmt("%.2e", oracle_err);
  return r;
}

CheckResult check_localization_identities() {
  const auto t0 = Clock::now();
  CheckResult r{6, "localization identities", false, "", 0.0};
  const auto& ctx = reference_context();
  const int n = ctx.n();
  const auto theta1 = fn(n, [](double a, double b) { return std::sin(a) + 0.4 * std::cos(a + b); });
  const auto v1 = fn(n, [](double a, double b) { return std::cos(a) - 0.3 * std::sin(a + b); });
  const auto g = std::make_shared<const NonlocalControl>(ctx.assembler().assemble(v1, theta1, ctx.m()));
  const LocalizedControl c(g, ctx.setup());
  const auto& s = ctx.setup();
  const auto id = check_identities(c, hitting_weight_grid(hitting_data(s.partition, s.strategy, s.cutoffs, n)));
  r.seconds = seconds_since(t0);
  r.passed = id.theta <= 1e-3 && id.v <= 1e-3 && id.support <= 1e-12 && id.max_mean <= 1e-10 && r.seconds <= 300.0;
  r.detail = "theta " + fmt("%.2e", id.theta) + " V " + fmt("%.2e", id.v) + " support " + fmt("%.1e", id.support) +
             " mean " + fmt("%.1e", id.max_mean);
  return r;
}

CheckResult check_temperature_trend() {
  const auto t0 = Clock::now();
  CheckResult r{7, "temperature step trend", false, "", 0.0};
  const auto& ctx = reference_context();
  const int n = ctx.n();
  SweepSpec spec;
  spec.experiment = "temperature_step";
  spec.start = {fn(n, [](double a, double b) { return 0.3 * std::sin(a + b); }),
                fn(n, [](double a, double b) { return 0.5 * std::cos(a + b); }), 0.0};
  spec.theta_target = fn(n, [](double a, double b) { return std::sin(a) + 0.3 * std::cos(a + b); });
  spec.phys = {0.01, 0.01};
  const auto t = sweep_delta(ctx, spec);
  bool decreasing = true;
  std::string rows;
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    if (t.rows[k].failed || (k && !(t.rows[k].discrepancy < t.rows[k - 1].discrepancy))) decreasing = false;
    rows += (k ? " " : "") + fmt("%.4g", t.rows[k].discrepancy);
  }
  const bool halved = t.rows.back().discrepancy <= 0.5 * t.rows.front().discrepancy;
  r.seconds = seconds_since(t0);
  r.passed = decreasing && halved && r.seconds <= 900.0;
  r.detail = "discrepancy " + rows + " slope " + fmt("%.2f", t.slope);
  return r;
}

CheckResult check_vorticity_trend() {
  const auto t0 = Clock::now();
  CheckResult r{8, "vorticity step trend", false, "", 0.0};
  const int n = 64, m = 2;
  const SpectralField zero(n);
  const auto xi = fn(n, [](double a, double) { return std::cos(a); });
  const double limit_norm = sobolev_norm(fn(n, [](double a, double) { return std::sin(a); }), m - 1);
  const std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  bool decreasing = true;
  double previous = INFINITY;
  std::string rows;
  for (double d : deltas) {
    const auto s = vorticity_step({zero, zero, 0.0}, xi, d, {0.01, 0.01}, m);
    if (s.failed || !(s.w_error < previous)) decreasing = false;
    previous = s.w_error;
    rows += (rows.empty() ? "" : " ") + fmt("%.3g", s.w_error);
  }
  // Three bounded forcings of amplitude 0.25 at the smallest delta.
  std::vector<Forcing> forcings(3);
  forcings[0].vorticity_source = [n](double) { return 0.25 * fn(n, [](double a, double b) { return std::sin(a + b); }); };
  forcings[1].temperature_source = [n](double t) {
    return (0.25 * std::cos(3 * t)) * fn(n, [](double a, double b) { return std::cos(2 * a - b); });
  };
  forcings[2].vorticity_source = [n](double t) { return (0.25 * std::sin(5 * t)) * fn(n, [](double, double b) { return std::cos(b); }); };
  forcings[2].temperature_source = [n](double) { return 0.25 * fn(n, [](double a, double) { return std::sin(2 * a); }); };
  double lo = INFINITY, hi = 0.0;
  for (const auto& f : forcings) {
    const auto s = vorticity_step({zero, zero, 0.0}, xi, deltas.back(), {0.01, 0.01}, m, f);
    lo = std::min(lo, s.w_error);
    hi = std::max(hi, s.failed ? INFINITY : s.w_error);
  }
  const double spread = (hi - lo) / limit_norm;
  r.seconds = seconds_since(t0);
  r.passed = decreasing && spread <= 0.1;
  r.detail = "error " + rows + " spread " + fmt("%.4f", spread);
  return r;
}

CheckResult check_steering() {
  const auto t0 = Clock::now();
  CheckResult r{9, "end-to-end steering", false, "", 0.0};
  const auto& ctx = reference_context();
  const RunConfig cfg = config_from_json(nlohmann::json::object());
  const auto problem = cfg.problem();
  const auto [plan, res] = plan_and_steer(ctx, problem, cfg.ladder);
  const double wt = sobolev_norm(problem.w_target, ctx.m() - 1);
  const bool residual_ok = res.target_xi_residual < 0.01 * wt;
  const double ratio = res.total / res.baseline;
  r.seconds = seconds_since(t0);
  r.passed = !res.failed && residual_ok && ratio <= 0.2 && r.seconds <= 1800.0;
  r.detail = "final " + fmt("%.4g", res.total) + " baseline " + fmt("%.4g", res.baseline) + " ratio " +
             fmt("%.3f", ratio) + " xi residual " + fmt("%.1e", res.target_xi_residual) + " aimed " + fmt("%.1e", res.xi_residual) +
             (res.velocity_error <= res.velocity_bound * (1 + 1e-12) ? " reduction ok" : " reduction violated");
  return r;
}

CheckResult check_structure() {
  const auto t0 = Clock::now();
  CheckResult r{10, "control structure", false, "", 0.0};
  const auto& ctx = small_context();
  const int n = ctx.n();
  SteeringProblem pr;
  pr.horizon = 0.5;
  pr.w0 = SpectralField(n);
  pr.theta0 = fn(n, [](double a, double b) { return 0.3 * std::sin(a + b); });
  pr.w_target = fn(n, [](double a, double) { return 0.5 * std::sin(a); });
  pr.theta_target = fn(n, [](double a, double) { return 0.2 * std::cos(a); });
  const StageDurations d{0.33, 0.001, 0.1, 0.001};
  const auto dir = std::filesystem::temp_directory_path() / "bq_structure_check";
  std::filesystem::create_directories(dir);
  std::string bytes[2];
  SteeringPlan plan;
  for (int k = 0; k < 2; ++k) {
    auto out = steer_once(ctx, pr, d, pr.w_target, pr.theta_target);
    plan = out.first;
    const auto path = (dir / ("schedule_" + std::to_string(k) + ".csv")).string();
    write_schedule_csv(path, plan, pr.horizon);
    bytes[k] = file_bytes(path);
  }
  const bool reproducible = !bytes[0].empty() && bytes[0] == bytes[1];
  const auto times = plan.active_times();
  std::vector<double> probe;
  for (std::size_t k = 0; k < times.size(); k += 61) probe.push_back(times[k]);
  const double recon = reconstruction_error(ctx, plan, probe);
  // Window actuators are zero on every transit cell; all schedules vanish off the stages.
  int leaks = 0;
  for (const auto* c : {plan.energize.get(), plan.calm.get()}) {
    const auto& lc = c->control();
    for (int m = 0; m < lc.cell_count(); ++m) {
      if (lc.window_of_cell(m)) continue;
      const auto g = lc.gamma(m);
      for (int l = 2; l < 14; ++l) leaks += g[l] != 0.0;
    }
  }
  for (int k = 0; k <= 200; ++k) {
    const double t = pr.horizon * k / 200.0;
    const bool active = (t >= plan.energize->start() && t <= plan.energize->end()) ||
                        (t >= plan.calm->start() && t <= plan.calm->end());
    if (active) continue;
    leaks += plan.gamma(t) != 0.0;
    leaks += plan.gamma_bar(t) != 0.0;
    for (double g : plan.gamma_l(t)) leaks += g != 0.0;
  }
  std::filesystem::remove_all(dir);
  r.seconds = seconds_since(t0);
  r.passed = recon <= 1e-10 && leaks == 0 && reproducible;
  r.detail = "reconstruction " + fmt("%.2e", recon) + " leaks " + std::to_string(leaks) +
             (reproducible ? " reproducible" : " not reproducible");
  return r;
}

std::vector<int> all_checks() { return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}; }

CheckResult run_check(int id) {
  switch (id) {
    case 1: return check_spectral_identities();
    case 2: return check_solver_exactness();
    case 3: return check_geometry();
    case 4: return check_flows();
    case 5: return check_synthesis();
    case 6: return check_localization_identities();
    case 7: return check_temperature_trend();
    case 8: return check_vorticity_trend();
    case 9: return check_steering();
    case 10: return check_structure();
  }
  throw std::invalid_argument("unknown check " + std::to_string(id));
}

}  // namespace bq
