#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bq/localization.hpp"
#include "bq/solver.hpp"

namespace bq {

// Heavy objects shared by every step at one resolution.
struct SteeringContextOptions {
  int n = 64;
  int m = 2;
  ControlRegion region{};
  PartitionOptions partition{};
  int bump_half_order = 4;
  double flow_amplitude = 20.0;
  int flow_substeps = 2;
  int samples = 512;
  AssemblyOptions assembly{};
};

class SteeringContext {
 public:
  explicit SteeringContext(const SteeringContextOptions& opt);
  SteeringContext(const SteeringContext&) = delete;
  SteeringContext& operator=(const SteeringContext&) = delete;

  const SteeringContextOptions& options() const { return opt_; }
  int n() const { return opt_.n; }
  int m() const { return opt_.m; }
  const LocalizationSetup& setup() const { return setup_; }
  const TransportedModes& modes() const { return *modes_; }
  const CoupledAssembler& assembler() const { return *assembler_; }

 private:
  SteeringContextOptions opt_;
  LocalizationSetup setup_;
  std::unique_ptr<TransportedModes> modes_;
  std::unique_ptr<CoupledAssembler> assembler_;
};

// Localized control compressed into [start, start + delta]:
// H(t) = delta^-2 eta((t - start) / delta), mean velocity delta^-1 ybar(.).
class ScaledControl {
 public:
  ScaledControl(std::shared_ptr<const LocalizedControl> c, double delta, double start);

  double delta() const { return delta_; }
  double start() const { return start_; }
  double end() const { return start_ + delta_; }
  const LocalizedControl& control() const { return *c_; }

  int cell_count() const { return c_->cell_count(); }
  double cell_begin(int m) const { return start_ + delta_ * m * c_->cell_width(); }
  // Unit-time phase gamma(t); zero outside [start, end].
  double phase(double t) const;
  SpectralField source(int m) const;
  std::array<double, 14> gamma(double t) const;
  // Vertical mean velocity and its time derivatives, zero outside the window.
  double mean_velocity(double t, int order = 0) const;

 private:
  std::shared_ptr<const LocalizedControl> c_;
  double delta_, start_;
};

// Advances through the control cells in the frame moving with the drift. A
// step spans whole cells and uses their average source, so the time integral
// of the control is exact. States are recorded at the first cell edge at or
// after each requested time.
SolverState run_scaled(const SolverState& initial, const ScaledControl& c, const Physics& phys, const Forcing& ext,
                       const StepOptions& opt = {}, const std::vector<double>& record_times = {},
                       std::vector<TrajectorySample>* samples = nullptr, int* steps = nullptr,
                       int max_cells_per_step = 32);

struct StepResult {
  SolverState final_state;
  double w_error = 0.0;      // H^(m-1)
  double theta_error = 0.0;  // H^m
  double discrepancy = 0.0;
  bool failed = false;
  std::string failure;
  int steps = 0;
  std::shared_ptr<const LocalizedPlan> plan;
};

// Small-time temperature control: from (w0, theta0) at time w0.time towards
// (w0, theta1) in time delta. Forcing is given in absolute time.
StepResult temperature_step(const SteeringContext& ctx, const SolverState& start, const SpectralField& theta1,
                            double delta, const Physics& phys, const Forcing& ext = {}, const StepOptions& opt = {},
                            const std::vector<double>& record_times = {},
                            std::vector<TrajectorySample>* samples = nullptr);

struct XiChoice {
  SpectralField xi;
  double residual = 0.0;  // H^(m-1) norm of the k1 = 0 part
};

XiChoice choose_xi(const SpectralField& w_tilde0, const SpectralField& w_target, int m);

// Free run from (w0, theta0 - xi / delta) over [t, t + delta]; error against w0 - d1 xi.
StepResult vorticity_step(const SolverState& start, const SpectralField& xi, double delta, const Physics& phys,
                          int m, const Forcing& ext = {}, const StepOptions& opt = {},
                          const std::vector<double>& record_times = {},
                          std::vector<TrajectorySample>* samples = nullptr);

struct SteeringProblem {
  Physics phys{};
  double horizon = 1.0;
  SpectralField w0, w_target, theta0, theta_target;
  Forcing ext{};  // vorticity and temperature sources only
};

struct StageDurations {
  double total = 0.0;     // delta_0
  double energize = 0.0;  // delta_1
  double drift = 0.0;     // delta_2
  double calm = 0.0;      // delta_3
  bool valid() const;
};

struct LadderOptions {
  std::vector<double> drift{0.1, 0.05};
  std::vector<double> inner_ratio{1e-3};
  double total_factor = 3.3;  // delta_0 = factor * delta_2
  int retarget_iterations = 1;
};

struct SteeringPlan {
  StageDurations durations;
  SpectralField xi;
  double xi_residual = 0.0;
  std::shared_ptr<const ScaledControl> energize, calm;

  double gamma(double t) const;
  std::array<double, 14> gamma_l(double t) const;
  double aleph(double t, int order = 0) const;
  double gamma_bar(double t) const { return aleph(t, 1); }
  // Times at which the schedules are nonzero: midpoints of the active cells.
  std::vector<double> active_times() const;
};

struct LadderRow {
  StageDurations durations;
  int iteration = 0;
  double w_error = 0.0, theta_error = 0.0, total = 0.0;
  double xi_residual = 0.0;
  bool failed = false;
  std::string failure;
};

struct SteeringResult {
  SolverState final_state;
  double w_error = 0.0;
  double theta_error = 0.0;
  double total = 0.0;
  double baseline = 0.0;
  double xi_residual = 0.0;       // of the selected plan, against its aimed vorticity
  double target_xi_residual = 0.0;  // k1 = 0 part of w~0 - w_T, what no plan can reach
  double velocity_error = 0.0;    // |u(T) - u_T|_m + |theta(T) - theta_T|_m
  double velocity_bound = 0.0;    // C0 |w(T) - w_T|_(m-1) + |theta(T) - theta_T|_m
  bool failed = false;
  std::vector<LadderRow> ladder;
  std::vector<TrajectorySample> samples;
};

// One pass of the staged plan for fixed durations and effective targets.
std::pair<SteeringPlan, SteeringResult> steer_once(const SteeringContext& ctx, const SteeringProblem& problem,
                                                   const StageDurations& d, const SpectralField& w_aim,
                                                   const SpectralField& theta_aim,
                                                   const std::vector<double>& record_times = {});

// Ladder search over stage durations with best-of selection. Each point may
// re-aim the targets by the observed final error.
std::pair<SteeringPlan, SteeringResult> plan_and_steer(const SteeringContext& ctx, const SteeringProblem& problem,
                                                       const LadderOptions& ladder,
                                                       const std::vector<double>& record_times = {});

double steering_error(const SolverState& s, const SpectralField& w_target, const SpectralField& theta_target, int m,
                      double* w_error = nullptr, double* theta_error = nullptr);

// Physical controls of the velocity-temperature form.
struct EmittedControl {
  double time = 0.0;
  SpectralField temperature;  // eta
  SpectralField velocity;     // eta_bar for the second velocity component (option 2)
  double outside = 0.0;       // max |eta|, |eta_bar| outside the control region
};

std::vector<EmittedControl> emit_velocity_form(const SteeringContext& ctx, const SteeringPlan& plan, int option,
                                               const Physics& phys, const std::vector<TrajectorySample>& trajectory);

// Max relative mismatch between scaled sources and sum gamma_l zeta_l at the
// given times.
double reconstruction_error(const SteeringContext& ctx, const SteeringPlan& plan, const std::vector<double>& times);

struct SweepRow {
  double delta = 0.0;
  double discrepancy = 0.0;
  double w_error = 0.0;
  double theta_error = 0.0;
  bool failed = false;
};

struct SweepTable {
  std::string experiment;
  std::vector<SweepRow> rows;
  double slope = 0.0;  // log-log fit of discrepancy against delta
};

struct SweepSpec {
  std::string experiment;  // temperature_step, vorticity_step, scaled_control
  std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  SolverState start;
  SpectralField theta_target;  // temperature_step
  SpectralField xi;            // vorticity_step
  Physics phys{};
  Forcing ext{};
};

SweepTable sweep_delta(const SteeringContext& ctx, const SweepSpec& spec);

void write_schedule_csv(const std::string& path, const SteeringPlan& plan, double horizon, int background_samples = 1000);
void write_ladder_csv(const std::string& path, const std::vector<LadderRow>& rows);
void write_sweep_csv(const std::string& path, const SweepTable& t);

}  // namespace bq
