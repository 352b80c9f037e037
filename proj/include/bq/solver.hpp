#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bq/spectral.hpp"

namespace bq {

struct Physics {
  double viscosity = 0.01;
  double diffusivity = 0.01;
};

struct SolverState {
  SpectralField vorticity;
  SpectralField temperature;
  double time = 0.0;
};

// Right-hand sides h1 (vorticity), h2 (temperature) and the mean velocity A(t).
// Unset members mean zero.
struct Forcing {
  std::function<SpectralField(double)> vorticity_source;
  std::function<SpectralField(double)> temperature_source;
  std::function<std::array<double, 2>(double)> mean_velocity;

  std::array<double, 2> mean_at(double t) const;
};

// Piecewise-linear interpolation of sampled fields; constant outside the range.
class SampledSeries {
 public:
  SampledSeries(std::vector<double> times, std::vector<SpectralField> samples);
  SpectralField operator()(double t) const;

 private:
  std::vector<double> times_;
  std::vector<SpectralField> samples_;
};

struct StepOptions {
  double cfl = 0.4;
  double dt_max = 1e-2;
  double speed_floor = 1e-8;
  double blowup_threshold = 1e8;
};

class SolverBlowUp : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws SolverBlowUp on non-finite or oversized coefficients.
void check_finite(const SolverState& s, double threshold);

double max_speed(const SpectralField& vorticity, std::array<double, 2> mean);
double cfl_dt(const SolverState& s, const Forcing& f, const StepOptions& opt);

// One integrating-factor SSP-RK3 step of size dt.
SolverState step(const SolverState& s, double dt, const Physics& phys, const Forcing& f);

struct TrajectorySample {
  double time;
  SpectralField vorticity;
  SpectralField temperature;
};

struct SolveResult {
  SolverState final_state;
  std::vector<TrajectorySample> samples;  // at the requested record times
  int steps = 0;
};

// Integrates to t_end; record times are hit exactly and act as step breakpoints.
SolveResult solve(const SolverState& initial, double t_end, const Physics& phys, const Forcing& f,
                  const StepOptions& opt = {}, const std::vector<double>& record_times = {});

void write_trajectory_csv(const std::string& path, const std::vector<TrajectorySample>& samples, int m);

}  // namespace bq
