#include "bq/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bq/spectral.hpp"

namespace bq {

namespace {

constexpr double kPi = kTwoPi / 2.0;

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// 630 s^4 (1-s)^4 and its first two derivatives, on [0, 1].
double bump_poly(double s, int order) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  const double t = 1.0 - s;
  switch (order) {
    case 0:
      return 630.0 * s * s * s * s * t * t * t * t;
    case 1:
      return 630.0 * 4.0 * s * s * s * t * t * t * (t - s);
    default:
      return 630.0 * 4.0 * s * s * t * t * (3.0 * t * t - 8.0 * s * t + 3.0 * s * s);
  }
}

}  // namespace

double wrap_angle(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

bool Interval::contains(double x) const {
  const double d = wrap_angle(x - lo);
  return d > 0.0 && d < hi - lo;
}

double Partition::strip_shift(int i) const {
  double c = wrap_angle(reference.lo - strips.at(i).lo);
  if (c > kPi) c -= kTwoPi;
  return c;
}

Partition build_partition(const ControlRegion& region, const PartitionOptions& opt) {
  if (!(region.a < region.b) || region.b - region.a > kTwoPi)
    throw std::invalid_argument("control region needs a < b and b - a <= 2 pi");
  Partition p;
  p.region = region;
  const double len = region.b - region.a;
  p.h1 = region.a + opt.inset_fraction * len;
  p.h2 = region.b - opt.inset_fraction * len;
  const double bound = (p.h2 - p.h1) / 3.0;
  int k = static_cast<int>(std::floor(8.0 * kPi / (3.0 * bound)));
  while (8.0 * kPi / (3.0 * k) >= bound) ++k;
  while (k > 1 && 8.0 * kPi / (3.0 * (k - 1)) < bound) --k;
  if (k > opt.max_strips)
    throw std::invalid_argument("control region too thin: needs " + std::to_string(k) + " strips");
  p.strip_count = k;
  p.strip_width = 8.0 * kPi / (3.0 * k);
  for (int i = 0; i < k; ++i) {
    const double lo = 0.75 * i * p.strip_width;
    p.strips.push_back({lo, lo + p.strip_width});
  }
  p.reference = {p.h1 + p.strip_width, p.h1 + 2.0 * p.strip_width};
  return p;
}

double smoothstep(double u, int degree) {
  if (degree < 1 || degree % 2 == 0) throw std::invalid_argument("smoothstep degree must be odd");
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const int q = (degree - 1) / 2;
  double s = 0.0;
  double pw = 1.0;
  for (int k = 0; k <= q; ++k) {
    s += binomial(q + k, k) * binomial(2 * q + 1, q - k) * pw;
    pw *= -u;
  }
  return s * std::pow(u, q + 1);
}

Cutoffs::Cutoffs(const Partition& p, int smoothstep_degree) : p_(p), degree_(smoothstep_degree) {
  smoothstep(0.5, degree_);
}

double Cutoffs::mu(double s) const {
  const double w = p_.strip_width;
  const double q = 0.25 * w;
  if (s <= 0.0 || s >= w) return 0.0;
  if (s < q) return smoothstep(s / q, degree_);
  if (s <= 3.0 * q) return 1.0;
  return 1.0 - smoothstep((s - 3.0 * q) / q, degree_);
}

double Cutoffs::chi(double x2) const { return mu(wrap_angle(x2 - p_.h1 - p_.strip_width)); }

double Cutoffs::bump(double x2) const {
  const double len = p_.h2 - p_.h1;
  return kTwoPi / len * bump_poly(wrap_angle(x2 - p_.h1) / len, 0);
}

double Cutoffs::bump_d1(double x2) const {
  const double len = p_.h2 - p_.h1;
  return kTwoPi / (len * len) * bump_poly(wrap_angle(x2 - p_.h1) / len, 1);
}

double Cutoffs::bump_d2(double x2) const {
  const double len = p_.h2 - p_.h1;
  return kTwoPi / (len * len * len) * bump_poly(wrap_angle(x2 - p_.h1) / len, 2);
}

bool CutoffReport::ok(double tol) const {
  return partition_of_unity_error <= tol && chi_support_violation <= tol && plateau_violation <= tol &&
         bump_support_violation <= tol && bump_integral_error <= 1e-9;
}

CutoffReport verify_cutoffs(const Cutoffs& c, int samples) {
  CutoffReport r;
  const auto& p = c.partition();
  const double w = p.strip_width;
  for (int j = 0; j < samples; ++j) {
    const double s = (j + 0.5) / samples;
    const double x = 0.75 * w * s;
    r.partition_of_unity_error = std::max(r.partition_of_unity_error, std::abs(c.mu(x) + c.mu(x + 0.75 * w) - 1.0));
    const double y = 0.25 * w + 0.5 * w * s;
    r.plateau_violation = std::max(r.plateau_violation, std::abs(c.mu(y) - 1.0));
    const double x2 = kTwoPi * s;
    if (!p.reference.contains(x2)) r.chi_support_violation = std::max(r.chi_support_violation, std::abs(c.chi(x2)));
    if (!Interval{p.h1, p.h2}.contains(x2))
      r.bump_support_violation = std::max(r.bump_support_violation, std::abs(c.bump(x2)));
  }
  // Gauss-Legendre on (h1, h2) is exact for the degree-8 bump.
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
  const double mid = 0.5 * (p.h1 + p.h2), half = 0.5 * (p.h2 - p.h1);
  double integral = 0.0;
  for (int i = 0; i < 5; ++i) integral += gw[i] * half * c.bump(mid + half * gx[i]);
  r.bump_integral_error = std::abs(integral / kTwoPi - 1.0);
  return r;
}

}  // namespace bq
