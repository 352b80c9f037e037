#pragma once

#include <vector>

namespace bq {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const;  // periodic, open
};

// Horizontal strip 𝕋 x (a, b) containing the control region.
struct ControlRegion {
  double a = 1.0;
  double b = 3.0;
};

struct Partition {
  ControlRegion region;
  double h1 = 0.0;  // inset lower edge
  double h2 = 0.0;  // inset upper edge
  int strip_count = 0;
  double strip_width = 0.0;
  std::vector<Interval> strips;  // strips[i] = (3 i w / 4, 3 i w / 4 + w)
  Interval reference;            // (h1 + w, h1 + 2 w)

  // Shift in (-pi, pi] carrying strip i onto the reference strip.
  double strip_shift(int i) const;
};

struct PartitionOptions {
  double inset_fraction = 0.125;
  int max_strips = 512;
  int smoothstep_degree = 7;
};

Partition build_partition(const ControlRegion& region, const PartitionOptions& opt = {});

// Smoothstep polynomial of odd degree p on [0, 1], 0 below and 1 above.
double smoothstep(double u, int degree);

double wrap_angle(double x);  // into [0, 2 pi)

class Cutoffs {
 public:
  Cutoffs() = default;
  Cutoffs(const Partition& p, int smoothstep_degree = 7);

  // Profile supported in (0, w), equal to 1 on [w/4, 3w/4].
  double mu(double s) const;
  // mu composed with x2 - h1 - w, so supported in the reference strip.
  double chi(double x2) const;
  // Normalized bump on (h1, h2) with unit mean over the torus, and derivatives.
  double bump(double x2) const;
  double bump_d1(double x2) const;
  double bump_d2(double x2) const;

  const Partition& partition() const { return p_; }

 private:
  Partition p_;
  int degree_ = 7;
};

struct CutoffReport {
  double partition_of_unity_error = 0.0;
  double chi_support_violation = 0.0;
  double plateau_violation = 0.0;
  double bump_integral_error = 0.0;
  double bump_support_violation = 0.0;
  bool ok(double tol) const;
};

CutoffReport verify_cutoffs(const Cutoffs& c, int samples = 10000);

}  // namespace bq
