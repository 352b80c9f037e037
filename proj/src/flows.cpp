#include "bq/flows.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace bq {

TimeGrid::TimeGrid(int k) : strip_count(k), unit(1.0 / (3 * k + 2)) {
  if (k < 1) throw std::invalid_argument("time grid needs at least one strip");
}

int TimeGrid::window_of(double t) const {
  const int k = static_cast<int>(std::floor((t / unit + 1.0) / 3.0));
  if (k < 1 || k > strip_count) return 0;
  return (t >= ta(k) && t < tb(k)) ? k : 0;
}

double window_phase(const TimeGrid& grid, double t) {
  const int k = grid.window_of(t);
  return k == 0 ? 0.0 : (t - grid.ta(k)) / grid.unit;
}

BumpProfile::BumpProfile(int half_order) : q_(half_order), coeffs_(2 * half_order + 1, 0.0) {
  if (q_ < 1) throw std::invalid_argument("bump order must be positive");
  // 1 / Beta(q + 1, q + 1) = (2q + 1)! / (q!)^2
  double norm = 1.0;
  for (int i = 1; i <= 2 * q_ + 1; ++i) norm *= i;
  for (int i = 1; i <= q_; ++i) norm /= double(i) * i;
  double binom = 1.0;
  for (int j = 0; j <= q_; ++j) {
    coeffs_[q_ + j] = norm * binom * (j % 2 ? -1.0 : 1.0);
    binom = binom * (q_ - j) / (j + 1);
  }
}

double BumpProfile::value(double s) const { return derivative(s, 0); }

double BumpProfile::integral(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  double r = 0.0;
  for (int p = static_cast<int>(coeffs_.size()) - 1; p >= 0; --p) r = r * s + coeffs_[p] / (p + 1);
  return r * s;
}

double BumpProfile::derivative(double s, int order) const {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  double r = 0.0;
  for (int p = static_cast<int>(coeffs_.size()) - 1; p >= order; --p) {
    double f = 1.0;
    for (int i = 0; i < order; ++i) f *= p - i;
    r = r * s + coeffs_[p] * f;
  }
  return r;
}

ConvectionStrategy::ConvectionStrategy(const Partition& p, const TimeGrid& grid, int bump_half_order)
    : grid_(grid), bump_(bump_half_order) {
  if (grid.strip_count != p.strip_count) throw std::invalid_argument("time grid and partition disagree on K");
  for (int i = 0; i < p.strip_count; ++i) shifts_.push_back(p.strip_shift(i));
}

bool ConvectionStrategy::locate(double t, int& k, double& local) const {
  const double u = grid_.unit;
  if (t < u || t >= grid_.tc(grid_.strip_count)) return false;
  k = std::clamp(static_cast<int>(std::floor((t / u + 2.0) / 3.0)), 1, grid_.strip_count);
  local = (t - (3 * k - 2) * u) / u;
  if (local < 0.0) {
    --k;
    local += 3.0;
  } else if (local >= 3.0 && k < grid_.strip_count) {
    ++k;
    local -= 3.0;
  }
  return k >= 1;
}

double ConvectionStrategy::velocity(double t) const { return velocity_derivative(t, 0); }

double ConvectionStrategy::velocity_derivative(double t, int order) const {
  int k;
  double s;
  if (!locate(t, k, s)) return 0.0;
  const double scale = shifts_[k - 1] / std::pow(grid_.unit, order + 1);
  if (s < 1.0) return scale * bump_.derivative(s, order);
  if (s < 2.0) return 0.0;
  return -scale * bump_.derivative(s - 2.0, order);
}

double ConvectionStrategy::displacement(double t) const {
  int k;
  double s;
  if (!locate(t, k, s)) return 0.0;
  const double c = shifts_[k - 1];
  if (s < 1.0) return c * bump_.integral(s);
  if (s < 2.0) return c;
  if (s >= 3.0) return 0.0;
  return c * (1.0 - bump_.integral(s - 2.0));
}

TorusPoint flow_vertical(const ConvectionStrategy& c, TorusPoint x, double s, double t) {
  return {x.x1, wrap_angle(x.x2 + c.displacement(t) - c.displacement(s))};
}

std::array<double, 4> GeneratingField::profiles(double t) const {
  std::array<double, 4> p{};
  for (int l = 1; l <= 4; ++l) {
    const double w = kTwoPi * l;
    p[l - 1] = amplitude * (1.0 - t) * std::sin(w * t) / w;
  }
  return p;
}

std::array<double, 2> GeneratingField::velocity(TorusPoint x, double t) const {
  const auto p = profiles(t);
  const double sa = std::sin(x.x1 + x.x2), ca = std::cos(x.x1 + x.x2);
  const double diag = p[0] * sa + p[1] * ca;
  return {diag, p[2] * std::sin(x.x1) + p[3] * std::cos(x.x1) - diag};
}

GeneratingReport build_generating(const GeneratingField& g, int trials, unsigned seed) {
  GeneratingReport r;
  r.min_gram_singular_value = 1e300;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  static const double gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                               0.9061798459386640};
  static const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                               0.2369268850561891};
  for (int trial = 0; trial < trials; ++trial) {
    double lo = uni(rng), hi = uni(rng);
    if (lo > hi) std::swap(lo, hi);
    if (hi - lo < 0.25) hi = std::min(1.0, lo + 0.25), lo = hi - 0.25;
    Eigen::Matrix<double, 5, 5> gram = Eigen::Matrix<double, 5, 5>::Zero();
    const int panels = 32;
    const double h = (hi - lo) / panels;
    for (int pn = 0; pn < panels; ++pn)
      for (int q = 0; q < 5; ++q) {
        const double t = lo + h * (pn + 0.5 + 0.5 * gx[q]);
        Eigen::Matrix<double, 5, 1> v;
        v(0) = 1.0;
        for (int l = 1; l <= 4; ++l) v(l) = std::cos(kTwoPi * l * t);
        gram += (0.5 * h * gw[q] / (hi - lo)) * v * v.transpose();
      }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 5, 5>> es(gram);
    r.min_gram_singular_value = std::min(r.min_gram_singular_value, es.eigenvalues()(0));
  }
  for (int i = 0; i <= 200; ++i) {
    const auto p = g.profiles(i / 200.0);
    r.max_speed = std::max(r.max_speed, 2.0 * (std::abs(p[0]) + std::abs(p[1])) + std::abs(p[2]) + std::abs(p[3]));
  }
  return r;
}

TorusPoint flow_generating(const GeneratingField& g, TorusPoint x, double s, double t, int substeps) {
  const double h = (t - s) / substeps;
  double y1 = x.x1, y2 = x.x2, tau = s;
  for (int i = 0; i < substeps; ++i) {
    const auto k1 = g.velocity({y1, y2}, tau);
    const auto k2 = g.velocity({y1 + 0.5 * h * k1[0], y2 + 0.5 * h * k1[1]}, tau + 0.5 * h);
    const auto k3 = g.velocity({y1 + 0.5 * h * k2[0], y2 + 0.5 * h * k2[1]}, tau + 0.5 * h);
    const auto k4 = g.velocity({y1 + h * k3[0], y2 + h * k3[1]}, tau + h);
    y1 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
    y2 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
    tau = s + (i + 1) * h;
  }
  return {wrap_angle(y1), wrap_angle(y2)};
}

double h0_mode(int j, TorusPoint x) {
  switch (j) {
    case 0: return std::sin(x.x1);
    case 1: return std::cos(x.x1);
    case 2: return std::sin(x.x1 + x.x2);
    case 3: return std::cos(x.x1 + x.x2);
    default: throw std::out_of_range("H0 index");
  }
}

std::array<double, 2> h0_gradient(int j, TorusPoint x) {
  switch (j) {
    case 0: return {std::cos(x.x1), 0.0};
    case 1: return {-std::sin(x.x1), 0.0};
    case 2: return {std::cos(x.x1 + x.x2), std::cos(x.x1 + x.x2)};
    case 3: return {-std::sin(x.x1 + x.x2), -std::sin(x.x1 + x.x2)};
    default: throw std::out_of_range("H0 index");
  }
}

}  // namespace bq
