#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "bq/flows.hpp"
#include "bq/geometry.hpp"
#include "bq/linear_control.hpp"

namespace bq {

// Visits of the reference strip for one height x2.
struct HittingPoint {
  int visits = 0;                 // 1 or 2
  std::array<int, 2> window{};    // 1-based window indices, increasing
  std::array<double, 2> weight{};  // chi at the visit, sums to 1
  double e = 0.0;                 // correction weight E
};

std::vector<HittingPoint> hitting_data(const Partition& p, const ConvectionStrategy& c, const Cutoffs& cut, int n);
// E on the grid, constant along x1.
std::vector<double> hitting_weight_grid(const std::vector<HittingPoint>& h);

// Common geometry of one localization: partition, strategy, cutoffs.
struct LocalizationSetup {
  Partition partition;
  TimeGrid grid;
  ConvectionStrategy strategy;
  Cutoffs cutoffs;

  explicit LocalizationSetup(const ControlRegion& region, const PartitionOptions& opt = {}, int bump_half_order = 4);
};

// Control localized in the strip, sampled at the midpoints of cells of width
// T_delta / S covering [0, 1]. Window cells reuse the non-local clock cells.
class LocalizedControl {
 public:
  LocalizedControl(std::shared_ptr<const NonlocalControl> g, const LocalizationSetup& setup);

  int cell_count() const { return cells_; }
  int samples_per_window() const { return samples_; }
  double cell_width() const { return width_; }
  double cell_time(int m) const { return (m + 0.5) * width_; }
  int cell_at(double t) const;
  // Window (1-based) of a cell and its index inside the window, or 0.
  int window_of_cell(int m, int* sample = nullptr) const;

  // eta(x + d e2, t_m) on the grid.
  std::vector<double> grid(int m, double d = 0.0) const;
  // f(x + d e2, t_m), the localized part before the average correction.
  std::vector<double> localized_part(int m, double d = 0.0) const;
  // eta(., t_m) as a spectral field; equals the transform of grid(m).
  SpectralField field(int m) const;

  // Coefficients over the 14 actuators at a cell.
  std::array<double, 14> gamma(int m) const;
  double running_mean(int m) const { return mean_[m]; }
  double accumulated_mean(int m) const { return accumulated_[m]; }
  double total_mean() const { return total_; }

  const LocalizationSetup& setup() const { return setup_; }
  const NonlocalControl& nonlocal() const { return *g_; }
  int n() const { return n_; }

 private:
  std::shared_ptr<const NonlocalControl> g_;
  LocalizationSetup setup_;
  int n_ = 0;
  int samples_ = 0;
  int cells_ = 0;
  double width_ = 0.0;
  double bump_mean_ = 0.0, bump_d1_mean_ = 0.0;
  std::vector<double> chi_, bump_, bump_d1_;  // along x2
  SpectralField bump_field_, bump_d1_field_;
  std::vector<double> mean_, accumulated_, ybar_;
  double total_ = 0.0;
};

// zeta_1 = bump, zeta_2 = bump', zeta_{3+l} = chi * (mode family l) moved by Y.
class ZetaLibrary {
 public:
  ZetaLibrary(const TransportedModes& modes, const LocalizationSetup& setup);

  static constexpr int count = 14;
  // zeta_l(x + d e2, t) on the grid at time t, l in 0..13.
  std::vector<double> sample(int l, double t, double d = 0.0) const;
  // All 14 at once for a window cell; reuses one family evaluation.
  std::array<std::vector<double>, 14> sample_all(double t, double d = 0.0) const;
  static std::vector<std::string> names();

 private:
  const TransportedModes& modes_;
  LocalizationSetup setup_;
};

struct LocalizedPlan {
  std::shared_ptr<const NonlocalControl> nonlocal;
  std::shared_ptr<const LocalizedControl> control;
  std::vector<double> e_grid;
  SpectralField theta_end;   // Theta(., 1) of the localized linear system
  SpectralField v_end;       // V(., 1)
  double theta_error = 0.0;  // relative to the target, H^m
  double v_error = 0.0;      // relative, H^(m-1)
  double max_abs_mean = 0.0;  // max over cells of the grid mean of eta
};

struct SharpIdentities {
  double theta = 0.0;       // |theta^#(1) - theta(1)| / |theta(1)|
  double v = 0.0;           // |V^#(1) - E d1 theta(1) - T v(1)| / |...|
  double endpoint = 0.0;    // |Theta(1) - theta^#(1)| / |theta^#(1)|
  double support = 0.0;     // max |eta| outside the strip
  double max_mean = 0.0;    // max |grid mean of eta|
};

// theta, V of d_t + ybar.grad driven by the localized part (sharp) or by eta.
std::array<SpectralField, 2> vertical_endpoint(const LocalizedControl& c, bool corrected);
SharpIdentities check_identities(const LocalizedControl& c, const std::vector<double>& e_grid);

// Localized control steering the linear inviscid system from zero to
// (v1, theta1): the non-local targets are ((v1 - E d1 theta1) / T, theta1).
LocalizedPlan localized_plan(const SpectralField& v1, const SpectralField& theta1, const CoupledAssembler& assembler,
                             const LocalizationSetup& setup, int m = 2);

void write_schedule_csv(const std::string& path, const LocalizedControl& c, double time_offset = 0.0,
                        double time_scale = 1.0);

}  // namespace bq
