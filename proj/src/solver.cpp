#include "bq/solver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bq {

std::array<double, 2> Forcing::mean_at(double t) const {
  return mean_velocity ? mean_velocity(t) : std::array<double, 2>{0.0, 0.0};
}

SampledSeries::SampledSeries(std::vector<double> times, std::vector<SpectralField> samples)
    : times_(std::move(times)), samples_(std::move(samples)) {
  if (times_.empty() || times_.size() != samples_.size())
    throw std::invalid_argument("sampled series needs matching non-empty times and samples");
  if (!std::is_sorted(times_.begin(), times_.end())) throw std::invalid_argument("sample times must be sorted");
}

SpectralField SampledSeries::operator()(double t) const {
  if (t <= times_.front()) return samples_.front();
  if (t >= times_.back()) return samples_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  const double a = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  SpectralField out = samples_[i - 1];
  out *= 1.0 - a;
  out.axpy(a, samples_[i]);
  return out;
}

namespace {

struct Rhs {
  SpectralField w;
  SpectralField theta;
};

std::vector<double> truncated_grid(const SpectralField& f) { return truncate_two_thirds(f).to_grid(); }

SpectralField advection(const std::vector<double>& u1, const std::vector<double>& u2, const SpectralField& f) {
  const auto fx = truncated_grid(d1(f));
  const auto fy = truncated_grid(d2(f));
  std::vector<double> g(u1.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = u1[i] * fx[i] + u2[i] * fy[i];
  return truncate_two_thirds(SpectralField::from_grid(f.n(), g));
}

Rhs nonlinear(const SpectralField& w, const SpectralField& theta, double t, const Forcing& f) {
  const VelocityField vel = inverse_curl(w, f.mean_at(t));
  const auto u1 = truncated_grid(vel.u1());
  const auto u2 = truncated_grid(vel.u2());
  Rhs r{-advection(u1, u2, w), -advection(u1, u2, theta)};
  r.w += d1(theta);
  if (f.vorticity_source) r.w += f.vorticity_source(t);
  if (f.temperature_source) r.theta += f.temperature_source(t);
  r.w.remove_mean();
  return r;
}

void apply_decay(SpectralField& f, double coeff, double h) {
  const int n = f.n();
  auto c = f.data();
  for (int i2 = 0; i2 < n; ++i2) {
    const int k2 = wavenumber(i2, n);
    for (int i1 = 0; i1 < n; ++i1) {
      const int k1 = wavenumber(i1, n);
      c[static_cast<std::size_t>(i2) * n + i1] *= std::exp(-coeff * (k1 * k1 + k2 * k2) * h);
    }
  }
}

}  // namespace

void check_finite(const SolverState& s, double threshold) {
  for (const auto* f : {&s.vorticity, &s.temperature})
    for (const auto& c : f->data())
      if (!std::isfinite(c.real()) || !std::isfinite(c.imag()) || std::abs(c) > threshold)
        throw SolverBlowUp("solution blew up at t = " + std::to_string(s.time));
}

double max_speed(const SpectralField& vorticity, std::array<double, 2> mean) {
  const VelocityField vel = inverse_curl(vorticity, {0.0, 0.0});
  const auto u1 = vel.u1().to_grid();
  const auto u2 = vel.u2().to_grid();
  double m = 0.0;
  for (std::size_t i = 0; i < u1.size(); ++i) m = std::max(m, std::hypot(u1[i], u2[i]));
  return m + std::hypot(mean[0], mean[1]);
}

double cfl_dt(const SolverState& s, const Forcing& f, const StepOptions& opt) {
  const double h = kTwoPi / s.vorticity.n();
  const double fluct = max_speed(s.vorticity, {0.0, 0.0});
  auto dt_for = [&](double t) {
    const auto a = f.mean_at(t);
    return std::min(opt.dt_max, opt.cfl * h / (fluct + std::hypot(a[0], a[1]) + opt.speed_floor));
  };
  double dt = dt_for(s.time);
  // The mean velocity can vary quickly; check it over the candidate step.
  for (int pass = 0; pass < 3; ++pass)
    dt = std::min({dt, dt_for(s.time + 0.5 * dt), dt_for(s.time + dt)});
  return dt;
}

SolverState step(const SolverState& s, double dt, const Physics& phys, const Forcing& f) {
  auto decayed = [&](Rhs r, double h) {
    apply_decay(r.w, phys.viscosity, h);
    apply_decay(r.theta, phys.diffusivity, h);
    return r;
  };
  auto euler = [&](const Rhs& u, double t) {
    Rhs n = nonlinear(u.w, u.theta, t, f);
    Rhs out = u;
    out.w.axpy(dt, n.w);
    out.theta.axpy(dt, n.theta);
    return out;
  };
  auto combine = [](double a, const Rhs& x, double b, const Rhs& y) {
    Rhs out{a * x.w, a * x.theta};
    out.w.axpy(b, y.w);
    out.theta.axpy(b, y.theta);
    return out;
  };

  const Rhs u0{s.vorticity, s.temperature};
  const Rhs u1 = decayed(euler(u0, s.time), dt);
  const Rhs u2 = combine(0.75, decayed(u0, 0.5 * dt), 0.25, decayed(euler(u1, s.time + dt), -0.5 * dt));
  const Rhs u3 = combine(1.0 / 3.0, decayed(u0, dt), 2.0 / 3.0, decayed(euler(u2, s.time + 0.5 * dt), 0.5 * dt));

  SolverState out{u3.w, u3.theta, s.time + dt};
  out.vorticity.remove_mean();
  return out;
}

SolveResult solve(const SolverState& initial, double t_end, const Physics& phys, const Forcing& f,
                  const StepOptions& opt, const std::vector<double>& record_times) {
  std::vector<double> breaks;
  for (double t : record_times)
    if (t >= initial.time && t <= t_end) breaks.push_back(t);
  std::sort(breaks.begin(), breaks.end());
  breaks.push_back(t_end);

  const double eps = 1e-13 * std::max(1.0, std::abs(t_end));
  SolveResult r;
  r.final_state = initial;
  SolverState& s = r.final_state;
  std::vector<double> records;
  for (double t : record_times)
    if (t >= initial.time - eps && t <= t_end + eps) records.push_back(t);
  std::sort(records.begin(), records.end());
  std::size_t next = 0, next_record = 0;
  auto advance_marks = [&] {
    while (next_record < records.size() && records[next_record] <= s.time + eps) {
      r.samples.push_back({s.time, s.vorticity, s.temperature});
      ++next_record;
    }
    while (next + 1 < breaks.size() && breaks[next] <= s.time + eps) ++next;
  };
  advance_marks();
  while (t_end - s.time > eps) {
    double dt = cfl_dt(s, f, opt);
    const double target = breaks[next];
    if (s.time + dt > target - eps) dt = target - s.time;
    s = step(s, dt, phys, f);
    if (std::abs(s.time - target) <= eps) s.time = target;
    ++r.steps;
    check_finite(s, opt.blowup_threshold);
    advance_marks();
  }
  s.time = t_end;
  return r;
}

void write_trajectory_csv(const std::string& path, const std::vector<TrajectorySample>& samples, int m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(12);
  out << "t,norm_w_0,norm_w_m,norm_theta_0,norm_theta_m,mean_theta\n";
  for (const auto& smp : samples)
    out << smp.time << ',' << sobolev_norm(smp.vorticity, 0) << ',' << sobolev_norm(smp.vorticity, m) << ','
        << sobolev_norm(smp.temperature, 0) << ',' << sobolev_norm(smp.temperature, m) << ','
        << smp.temperature.mean() << '\n';
}

}  // namespace bq
