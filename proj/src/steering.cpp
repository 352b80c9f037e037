#include "bq/steering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace bq {

SteeringContext::SteeringContext(const SteeringContextOptions& opt)
    : opt_(opt), setup_(opt.region, opt.partition, opt.bump_half_order) {
  modes_ = std::make_unique<TransportedModes>(opt.n, GeneratingField{opt.flow_amplitude}, ControlClock{opt.samples},
                                              opt.flow_substeps);
  assembler_ = std::make_unique<CoupledAssembler>(*modes_, opt.assembly);
}

ScaledControl::ScaledControl(std::shared_ptr<const LocalizedControl> c, double delta, double start)
    : c_(std::move(c)), delta_(delta), start_(start) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("scaling needs delta in (0, 1]");
}

double ScaledControl::phase(double t) const {
  if (t < start_ || t > end()) return 0.0;
  return std::clamp((t - start_) / delta_, 0.0, 1.0);
}

SpectralField ScaledControl::source(int m) const { return (1.0 / (delta_ * delta_)) * c_->field(m); }

std::array<double, 14> ScaledControl::gamma(double t) const {
  std::array<double, 14> out{};
  if (t < start_ || t >= end()) return out;
  out = c_->gamma(c_->cell_at(phase(t)));
  for (double& g : out) g /= delta_ * delta_;
  return out;
}

double ScaledControl::mean_velocity(double t, int order) const {
  if (t <= start_ || t >= end()) return 0.0;
  const auto& strategy = c_->setup().strategy;
  const double s = (t - start_) / delta_;
  const double scale = std::pow(delta_, -(order + 1));
  return scale * (order == 0 ? strategy.velocity(s) : strategy.velocity_derivative(s, order));
}

SolverState run_scaled(const SolverState& initial, const ScaledControl& c, const Physics& phys, const Forcing& ext,
                       const StepOptions& opt, const std::vector<double>& record_times,
                       std::vector<TrajectorySample>* samples, int* steps, int max_cells_per_step) {
  if (std::abs(initial.time - c.start()) > 1e-12 * std::max(1.0, std::abs(c.start())))
    throw std::invalid_argument("scaled control starts at a different time");
  // Integrate in the frame moving with the uniform drift, x' = x - Y(t) e2.
  // The drift then drops out and the control is sampled exactly at x' + Y e2.
  // Y vanishes at both ends, so the frames agree there.
  const auto& ctrl = c.control();
  const auto& strategy = ctrl.setup().strategy;
  auto frame = [&](double t) { return strategy.displacement(std::clamp((t - c.start()) / c.delta(), 0.0, 1.0)); };
  SolverState s = initial;
  s.time = c.start();
  SpectralField current;
  Forcing f;
  if (ext.vorticity_source)
    f.vorticity_source = [&](double t) { return shift_vertical(ext.vorticity_source(t), frame(t)); };
  f.temperature_source = [&](double t) {
    SpectralField h = current;
    if (ext.temperature_source) h += shift_vertical(ext.temperature_source(t), frame(t));
    return h;
  };

  const double cell = c.delta() * ctrl.cell_width();
  const double scale = 1.0 / (c.delta() * c.delta());
  const std::size_t nn = static_cast<std::size_t>(ctrl.n()) * ctrl.n();
  std::vector<double> records;
  for (double t : record_times)
    if (t >= c.start() && t <= c.end()) records.push_back(t);
  std::sort(records.begin(), records.end());
  std::size_t next = 0;
  auto record = [&](bool last) {
    while (next < records.size() && (last || records[next] <= s.time)) {
      const double y = frame(s.time);
      if (samples)
        samples->push_back({s.time, shift_vertical(s.vorticity, -y), shift_vertical(s.temperature, -y)});
      ++next;
    }
  };
  record(false);
  int count = 0;
  for (int m0 = 0; m0 < c.cell_count();) {
    int k = static_cast<int>(std::floor(cfl_dt(s, f, opt) / cell));
    k = std::clamp(k, 1, max_cells_per_step);
    k = std::min(k, c.cell_count() - m0);
    // Do not step across a record time.
    while (k > 1 && next < records.size() && c.cell_begin(m0 + k - 1) >= records[next]) --k;
    std::vector<double> avg(nn, 0.0);
    for (int m = m0; m < m0 + k; ++m) {
      const auto g = ctrl.grid(m, strategy.displacement(ctrl.cell_time(m)));
      for (std::size_t p = 0; p < nn; ++p) avg[p] += g[p];
    }
    current = SpectralField::from_grid(ctrl.n(), avg);
    current *= scale / k;
    const double t_end = m0 + k == c.cell_count() ? c.end() : c.cell_begin(m0 + k);
    s = step(s, t_end - s.time, phys, f);
    s.time = t_end;
    check_finite(s, opt.blowup_threshold);
    ++count;
    m0 += k;
    record(false);
  }
  record(true);
  if (steps) *steps = count;
  return s;
}

namespace {

double relative_or_absolute(double err, double scale) { return scale > 0 ? err / scale : err; }

void fill_errors(StepResult& r, const SpectralField& w_ref, const SpectralField& theta_ref, int m) {
  r.w_error = sobolev_norm(r.final_state.vorticity - w_ref, m - 1);
  r.theta_error = sobolev_norm(r.final_state.temperature - theta_ref, m);
  r.discrepancy = r.w_error + r.theta_error;
}

}  // namespace

StepResult temperature_step(const SteeringContext& ctx, const SolverState& start, const SpectralField& theta1,
                            double delta, const Physics& phys, const Forcing& ext, const StepOptions& opt,
                            const std::vector<double>& record_times, std::vector<TrajectorySample>* samples) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("temperature step needs delta in (0, 1)");
  const int m = ctx.m();
  const double rho = delta;
  // The free linear run carries w0 to w0 + rho d1 theta0 and returns rho theta0.
  SpectralField v1 = -rho * d1(start.temperature);
  SpectralField th1 = rho * (theta1 - start.temperature);
  v1.remove_mean();
  th1.remove_mean();
  auto plan = std::make_shared<LocalizedPlan>(localized_plan(v1, th1, ctx.assembler(), ctx.setup(), m));
  StepResult r;
  r.plan = plan;
  const ScaledControl sc(plan->control, delta, start.time);
  try {
    r.final_state = run_scaled(start, sc, phys, ext, opt, record_times, samples, &r.steps);
  } catch (const SolverBlowUp& e) {
    r.failed = true;
    r.failure = e.what();
    r.discrepancy = std::numeric_limits<double>::infinity();
    return r;
  }
  fill_errors(r, start.vorticity, theta1, m);
  return r;
}

XiChoice choose_xi(const SpectralField& w_tilde0, const SpectralField& w_target, int m) {
  if (!w_tilde0.is_mean_free(1e-12) || !w_target.is_mean_free(1e-12))
    throw std::invalid_argument("vorticities must be mean-free");
  const SpectralField diff = w_tilde0 - w_target;
  XiChoice out;
  out.xi = x1_antiderivative(diff);
  out.residual = sobolev_norm(diff - d1(out.xi), m - 1);
  return out;
}

StepResult vorticity_step(const SolverState& start, const SpectralField& xi, double delta, const Physics& phys, int m,
                          const Forcing& ext, const StepOptions& opt, const std::vector<double>& record_times,
                          std::vector<TrajectorySample>* samples) {
  if (!xi.is_mean_free(1e-12)) throw std::invalid_argument("xi must be mean-free");
  if (!(delta > 0.0)) throw std::invalid_argument("vorticity step needs delta > 0");
  SolverState s = start;
  s.temperature.axpy(-1.0 / delta, xi);
  Forcing f = ext;
  f.mean_velocity = nullptr;
  StepResult r;
  try {
    auto res = solve(s, start.time + delta, phys, f, opt, record_times);
    r.final_state = res.final_state;
    r.steps = res.steps;
    if (samples) samples->insert(samples->end(), res.samples.begin(), res.samples.end());
  } catch (const SolverBlowUp& e) {
    r.failed = true;
    r.failure = e.what();
    r.discrepancy = std::numeric_limits<double>::infinity();
    return r;
  }
  r.w_error = sobolev_norm(r.final_state.vorticity - (start.vorticity - d1(xi)), m - 1);
  r.theta_error = sobolev_norm(r.final_state.temperature - s.temperature, m);
  r.discrepancy = r.w_error;
  return r;
}

bool StageDurations::valid() const {
  const double third = total / 3.0;
  return total > 0.0 && energize > 0.0 && drift > 0.0 && calm > 0.0 && energize < third && drift < third &&
         calm < third;
}

double SteeringPlan::gamma(double t) const {
  double g = 0.0;
  for (const auto* c : {energize.get(), calm.get()})
    if (c && t >= c->start() && t <= c->end()) g = c->phase(t);
  return g;
}

std::array<double, 14> SteeringPlan::gamma_l(double t) const {
  for (const auto* c : {energize.get(), calm.get()})
    if (c && t >= c->start() && t < c->end()) return c->gamma(t);
  return {};
}

double SteeringPlan::aleph(double t, int order) const {
  double a = 0.0;
  for (const auto* c : {energize.get(), calm.get()})
    if (c) a += c->mean_velocity(t, order);
  return a;
}

std::vector<double> SteeringPlan::active_times() const {
  std::vector<double> out;
  for (const auto* c : {energize.get(), calm.get()}) {
    if (!c) continue;
    for (int m = 0; m < c->cell_count(); ++m) out.push_back(c->start() + c->delta() * c->control().cell_time(m));
  }
  return out;
}

double steering_error(const SolverState& s, const SpectralField& w_target, const SpectralField& theta_target, int m,
                      double* w_error, double* theta_error) {
  const double we = sobolev_norm(s.vorticity - w_target, m - 1);
  const double te = sobolev_norm(s.temperature - theta_target, m);
  if (w_error) *w_error = we;
  if (theta_error) *theta_error = te;
  return we + te;
}

namespace {

std::vector<double> within(const std::vector<double>& times, double lo, double hi, bool include_lo) {
  std::vector<double> out;
  for (double t : times)
    if ((include_lo ? t >= lo : t > lo) && t <= hi) out.push_back(t);
  return out;
}

Forcing without_mean(const Forcing& f) {
  Forcing out = f;
  out.mean_velocity = nullptr;
  return out;
}

}  // namespace

std::pair<SteeringPlan, SteeringResult> steer_once(const SteeringContext& ctx, const SteeringProblem& problem,
                                                   const StageDurations& d, const SpectralField& w_aim,
                                                   const SpectralField& theta_aim,
                                                   const std::vector<double>& record_times) {
  if (!d.valid()) throw std::invalid_argument("stage durations violate delta_i < delta_0 / 3");
  if (d.total > problem.horizon) throw std::invalid_argument("stage durations exceed the horizon");
  const int m = ctx.m();
  const Physics& phys = problem.phys;
  const Forcing ext = without_mean(problem.ext);
  SteeringPlan plan;
  plan.durations = d;
  SteeringResult res;
  auto fail = [&](const std::string& why) {
    res.failed = true;
    res.total = std::numeric_limits<double>::infinity();
    res.ladder.push_back({d, 0, 0.0, 0.0, res.total, plan.xi_residual, true, why});
    return std::make_pair(plan, res);
  };
  const double t0 = problem.horizon - d.total;
  const double t1 = t0 + d.energize, t2 = t1 + d.drift, t3 = t2 + d.calm;
  try {
    // Stage 0: controls off.
    auto free0 = solve({problem.w0, problem.theta0, 0.0}, t0, phys, ext, {}, within(record_times, 0.0, t0, true));
    res.samples = std::move(free0.samples);
    const SolverState tilde = free0.final_state;

    // Energize: raise the temperature to theta~0 - xi / delta_2.
    const auto xi = choose_xi(tilde.vorticity, w_aim, m);
    plan.xi = xi.xi;
    plan.xi_residual = xi.residual;
    res.target_xi_residual = choose_xi(tilde.vorticity, problem.w_target, m).residual;
    SpectralField energized = tilde.temperature;
    energized.axpy(-1.0 / d.drift, xi.xi);
    auto e = temperature_step(ctx, tilde, energized, d.energize, phys, ext, {}, within(record_times, t0, t1, false),
                              &res.samples);
    if (e.failed) return fail("energize: " + e.failure);
    plan.energize = std::make_shared<ScaledControl>(e.plan->control, d.energize, t0);

    // Drift: the buoyancy of the energized profile turns the vorticity.
    auto drift = solve(e.final_state, t2, phys, ext, {}, within(record_times, t1, t2, false));
    res.samples.insert(res.samples.end(), drift.samples.begin(), drift.samples.end());

    // Calm: bring the temperature to its target.
    auto c = temperature_step(ctx, drift.final_state, theta_aim, d.calm, phys, ext, {},
                              within(record_times, t2, t3, false), &res.samples);
    if (c.failed) return fail("calm: " + c.failure);
    plan.calm = std::make_shared<ScaledControl>(c.plan->control, d.calm, t2);

    auto tail = solve(c.final_state, problem.horizon, phys, ext, {}, within(record_times, t3, problem.horizon, false));
    res.samples.insert(res.samples.end(), tail.samples.begin(), tail.samples.end());
    res.final_state = tail.final_state;
  } catch (const SolverBlowUp& ex) {
    return fail(ex.what());
  }
  res.total = steering_error(res.final_state, problem.w_target, problem.theta_target, m, &res.w_error,
                             &res.theta_error);
  res.xi_residual = plan.xi_residual;
  // Velocity form of the error; the mean velocity vanishes at the horizon.
  const auto u = inverse_curl(res.final_state.vorticity);
  const auto ut = inverse_curl(problem.w_target);
  res.velocity_error = sobolev_norm(VelocityField{u.stream - ut.stream, {0.0, 0.0}}, m) + res.theta_error;
  res.velocity_bound = velocity_norm_constant(ctx.n(), m) * res.w_error + res.theta_error;
  res.ladder.push_back({d, 0, res.w_error, res.theta_error, res.total, plan.xi_residual, false, ""});
  return {plan, res};
}

std::pair<SteeringPlan, SteeringResult> plan_and_steer(const SteeringContext& ctx, const SteeringProblem& problem,
                                                       const LadderOptions& ladder,
                                                       const std::vector<double>& record_times) {
  const int m = ctx.m();
  const auto free = solve({problem.w0, problem.theta0, 0.0}, problem.horizon, problem.phys, without_mean(problem.ext));
  const double baseline = steering_error(free.final_state, problem.w_target, problem.theta_target, m);

  std::vector<LadderRow> rows;
  double best_total = std::numeric_limits<double>::infinity();
  StageDurations best_d;
  SpectralField best_w, best_theta;
  for (double drift : ladder.drift)
    for (double ratio : ladder.inner_ratio) {
      const StageDurations d{ladder.total_factor * drift, ratio * drift, drift, ratio * drift};
      if (!d.valid() || d.total > problem.horizon) {
        rows.push_back({d, 0, 0, 0, std::numeric_limits<double>::infinity(), 0, true, "durations rejected"});
        continue;
      }
      SpectralField w_aim = problem.w_target, theta_aim = problem.theta_target;
      for (int it = 0; it <= ladder.retarget_iterations; ++it) {
        auto [plan, res] = steer_once(ctx, problem, d, w_aim, theta_aim);
        LadderRow row = res.ladder.front();
        row.iteration = it;
        rows.push_back(row);
        if (res.failed) break;
        if (res.total < best_total) {
          best_total = res.total;
          best_d = d;
          best_w = w_aim;
          best_theta = theta_aim;
        }
        w_aim += problem.w_target - res.final_state.vorticity;
        theta_aim += problem.theta_target - res.final_state.temperature;
        w_aim.remove_mean();
      }
    }
  if (!std::isfinite(best_total)) {
    SteeringResult res;
    res.failed = true;
    res.baseline = baseline;
    res.total = best_total;
    res.ladder = rows;
    return {SteeringPlan{}, res};
  }
  auto [plan, res] = steer_once(ctx, problem, best_d, best_w, best_theta, record_times);
  res.baseline = baseline;
  res.ladder = rows;
  res.failed = !(res.total < baseline);
  return {plan, res};
}

std::vector<EmittedControl> emit_velocity_form(const SteeringContext& ctx, const SteeringPlan& plan, int option,
                                               const Physics& phys, const std::vector<TrajectorySample>& trajectory) {
  if (option != 1 && option != 2) throw std::invalid_argument("option must be 1 or 2");
  if (option == 1 && trajectory.empty()) throw std::invalid_argument("option 1 needs the trajectory");
  const int n = ctx.n();
  const auto& cut = ctx.setup().cutoffs;
  const auto& region = ctx.setup().partition.region;
  const auto x = grid_coordinates(n);
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<double> b(nn), b1(nn), b2(nn);
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) {
      const std::size_t p = static_cast<std::size_t>(i2) * n + i1;
      b[p] = cut.bump(x[i2]);
      b1[p] = cut.bump_d1(x[i2]);
      b2[p] = cut.bump_d2(x[i2]);
    }
  const Interval inside{region.a, region.b};
  std::vector<EmittedControl> out;
  for (const auto& smp : trajectory) {
    const double t = smp.time;
    std::vector<double> modes(nn, 0.0);
    for (const auto* c : {plan.energize.get(), plan.calm.get()})
      if (c && t >= c->start() && t < c->end()) modes = c->source(c->control().cell_at(c->phase(t))).to_grid();
    const double a = plan.aleph(t), a1 = plan.aleph(t, 1), a2 = plan.aleph(t, 2);
    EmittedControl e;
    e.time = t;
    std::vector<double> eta = modes, eta_bar(nn, 0.0);
    if (option == 1) {
      const auto u2 = inverse_curl(smp.vorticity, {0.0, a}).u2().to_grid();
      for (std::size_t p = 0; p < nn; ++p)
        eta[p] += b[p] * a2 - phys.diffusivity * b2[p] * a1 + u2[p] * b1[p] * a1;
    } else {
      for (std::size_t p = 0; p < nn; ++p) eta_bar[p] = a1 * b[p];
    }
    for (std::size_t p = 0; p < nn; ++p)
      if (!inside.contains(x[p / n])) e.outside = std::max({e.outside, std::abs(eta[p]), std::abs(eta_bar[p])});
    e.temperature = SpectralField::from_grid(n, eta);
    e.velocity = SpectralField::from_grid(n, eta_bar);
    out.push_back(std::move(e));
  }
  return out;
}

double reconstruction_error(const SteeringContext& ctx, const SteeringPlan& plan, const std::vector<double>& times) {
  const ZetaLibrary zeta(ctx.modes(), ctx.setup());
  double worst = 0.0;
  for (double t : times) {
    const ScaledControl* active = nullptr;
    for (const auto* c : {plan.energize.get(), plan.calm.get()})
      if (c && t >= c->start() && t < c->end()) active = c;
    const auto g = plan.gamma_l(t);
    if (!active) {
      for (double v : g) worst = std::max(worst, std::abs(v));
      continue;
    }
    const auto z = zeta.sample_all(plan.gamma(t));
    const auto ref = active->source(active->control().cell_at(active->phase(t))).to_grid();
    double err = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < ref.size(); ++p) {
      double s = 0.0;
      for (int l = 0; l < 14; ++l) s += g[l] * z[l][p];
      err = std::max(err, std::abs(s - ref[p]));
      scale = std::max(scale, std::abs(ref[p]));
    }
    worst = std::max(worst, relative_or_absolute(err, std::max(1.0, scale)));
  }
  return worst;
}

SweepTable sweep_delta(const SteeringContext& ctx, const SweepSpec& spec) {
  SweepTable t;
  t.experiment = spec.experiment;
  for (double delta : spec.deltas) {
    SweepRow row;
    row.delta = delta;
    if (spec.experiment == "temperature_step") {
      const auto r = temperature_step(ctx, spec.start, spec.theta_target, delta, spec.phys, spec.ext);
      row.discrepancy = r.discrepancy;
      row.w_error = r.w_error;
      row.theta_error = r.theta_error;
      row.failed = r.failed;
    } else if (spec.experiment == "vorticity_step") {
      const auto r = vorticity_step(spec.start, spec.xi, delta, spec.phys, ctx.m(), spec.ext);
      row.discrepancy = r.discrepancy;
      row.w_error = r.w_error;
      row.theta_error = r.theta_error;
      row.failed = r.failed;
    } else if (spec.experiment == "scaled_control") {
      // Change of variables: int_0^delta |H| dt = delta^-1 int_0^1 |eta| ds.
      SpectralField v1 = -delta * d1(spec.start.temperature);
      SpectralField th1 = delta * (spec.theta_target - spec.start.temperature);
      v1.remove_mean();
      th1.remove_mean();
      const auto plan = localized_plan(v1, th1, ctx.assembler(), ctx.setup(), ctx.m());
      const ScaledControl sc(plan.control, delta, 0.0);
      double lhs = 0.0, rhs = 0.0;
      const double w = plan.control->cell_width();
      for (int m = 0; m < sc.cell_count(); ++m) {
        const double eta = sobolev_norm(plan.control->field(m), 0);
        lhs += delta * w * sobolev_norm(sc.source(m), 0);
        rhs += w * eta;
      }
      rhs /= delta;
      row.discrepancy = std::abs(lhs - rhs) / (rhs > 0 ? rhs : 1.0);
    } else {
      throw std::invalid_argument("unknown sweep experiment " + spec.experiment);
    }
    t.rows.push_back(row);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (const auto& r : t.rows)
    if (!r.failed && r.discrepancy > 0 && std::isfinite(r.discrepancy)) {
      const double lx = std::log(r.delta), ly = std::log(r.discrepancy);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++k;
    }
  if (k >= 2) t.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  return t;
}

void write_schedule_csv(const std::string& path, const SteeringPlan& plan, double horizon, int background_samples) {
  std::vector<double> times = plan.active_times();
  for (int k = 0; k <= background_samples; ++k) times.push_back(horizon * k / background_samples);
  std::sort(times.begin(), times.end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(12);
  out << "t,gamma_bar,gamma";
  for (int l = 1; l <= 14; ++l) out << ",gamma_" << l;
  out << '\n';
  for (double t : times) {
    out << t << ',' << plan.gamma_bar(t) << ',' << plan.gamma(t);
    for (double g : plan.gamma_l(t)) out << ',' << g;
    out << '\n';
  }
}

void write_ladder_csv(const std::string& path, const std::vector<LadderRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(10);
  out << "delta_0,delta_1,delta_2,delta_3,iteration,w_error,theta_error,total,xi_residual,failed,failure\n";
  for (const auto& r : rows)
    out << r.durations.total << ',' << r.durations.energize << ',' << r.durations.drift << ',' << r.durations.calm
        << ',' << r.iteration << ',' << r.w_error << ',' << r.theta_error << ',' << r.total << ',' << r.xi_residual
        << ',' << (r.failed ? 1 : 0) << ",\"" << r.failure << "\"\n";
}

void write_sweep_csv(const std::string& path, const SweepTable& t) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(10);
  out << "experiment,delta,discrepancy,w_error,theta_error,failed\n";
  for (const auto& r : t.rows)
    out << t.experiment << ',' << r.delta << ',' << r.discrepancy << ',' << r.w_error << ',' << r.theta_error << ','
        << (r.failed ? 1 : 0) << '\n';
  out << "# slope," << t.slope << '\n';
}

}  // namespace bq
