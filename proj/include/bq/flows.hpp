#pragma once

#include <array>
#include <vector>

#include "bq/geometry.hpp"
#include "bq/spectral.hpp"

namespace bq {

// Window layout on [0, 1]: t_c^0 = dt, then for strip k (1-based)
// t_a = (3k - 1) dt, t_b = 3k dt, t_c = (3k + 1) dt, with dt = 1 / (3K + 2).
struct TimeGrid {
  int strip_count = 0;
  double unit = 0.0;

  explicit TimeGrid(int k = 1);
  double ta(int k) const { return (3 * k - 1) * unit; }
  double tb(int k) const { return 3 * k * unit; }
  double tc(int k) const { return (3 * k + 1) * unit; }
  // 1-based window index containing t in [t_a, t_b), or 0.
  int window_of(double t) const;
};

// sigma(t) = (t - t_a^k) / unit on window k, zero elsewhere.
double window_phase(const TimeGrid& grid, double t);

// Normalized bump s^q (1 - s)^q on [0, 1], its antiderivative and derivatives.
class BumpProfile {
 public:
  explicit BumpProfile(int half_order = 4);
  double value(double s) const;
  double integral(double s) const;  // 0 at s <= 0, 1 at s >= 1
  double derivative(double s, int order) const;

 private:
  int q_;
  std::vector<double> coeffs_;  // polynomial coefficients in s
};

// Piecewise vertical convection: shift onto the reference strip, pause on the
// window, shift back. D(t) is the running displacement.
class ConvectionStrategy {
 public:
  ConvectionStrategy(const Partition& p, const TimeGrid& grid, int bump_half_order = 4);

  double velocity(double t) const;                     // vertical component
  double velocity_derivative(double t, int order) const;  // closed form
  double displacement(double t) const;                 // integral from 0 to t
  double shift(int k) const { return shifts_.at(k - 1); }  // 1-based

  const TimeGrid& grid() const { return grid_; }

 private:
  // Locates t in segment k with local phase in [0, 3).
  bool locate(double t, int& k, double& local) const;

  TimeGrid grid_;
  BumpProfile bump_;
  std::vector<double> shifts_;
};

// Y(x, s, t) = x + (D(t) - D(s)) e2 mod 2 pi.
TorusPoint flow_vertical(const ConvectionStrategy& c, TorusPoint x, double s, double t);

// Time profiles psi_l(t) = amplitude * (1 - t) * int_0^t cos(2 pi l r) dr.
struct GeneratingField {
  double amplitude = 1.0;

  std::array<double, 4> profiles(double t) const;
  std::array<double, 2> velocity(TorusPoint x, double t) const;
};

struct GeneratingReport {
  double min_gram_singular_value = 0.0;  // over random subintervals of length >= 1/4
  double max_speed = 0.0;
};

// Time Gram conditioning of (1, phi_1..phi_4) on random subintervals.
GeneratingReport build_generating(const GeneratingField& g, int trials = 64, unsigned seed = 7);

// RK4 flow map of the generating field: X(t) with X(s) = x.
TorusPoint flow_generating(const GeneratingField& g, TorusPoint x, double s, double t, int substeps = 256);

// The H0 basis sin x1, cos x1, sin(x1 + x2), cos(x1 + x2) and gradients.
double h0_mode(int j, TorusPoint x);
std::array<double, 2> h0_gradient(int j, TorusPoint x);

}  // namespace bq
