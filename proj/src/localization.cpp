#include "bq/localization.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace bq {

std::vector<HittingPoint> hitting_data(const Partition& p, const ConvectionStrategy& c, const Cutoffs& cut, int n) {
  const auto x = grid_coordinates(n);
  const TimeGrid& grid = c.grid();
  std::vector<HittingPoint> out(n);
  for (int j = 0; j < n; ++j) {
    auto& h = out[j];
    for (int k = 1; k <= p.strip_count; ++k) {
      if (!p.strips[k - 1].contains(x[j])) continue;
      if (h.visits == 2) throw std::logic_error("a height lies in more than two strips");
      h.window[h.visits] = k;
      h.weight[h.visits] = cut.chi(x[j] + c.shift(k));
      ++h.visits;
    }
    if (h.visits == 0) throw std::logic_error("a height lies in no strip");
    const double first = h.weight[0];
    const double tb_first = grid.tb(h.window[0]);
    const double tb_last = grid.tb(h.window[h.visits - 1]);
    h.e = first * (tb_last - tb_first) + (1.0 - tb_last);
  }
  return out;
}

std::vector<double> hitting_weight_grid(const std::vector<HittingPoint>& h) {
  const std::size_t n = h.size();
  std::vector<double> g(n * n);
  for (std::size_t i2 = 0; i2 < n; ++i2)
    for (std::size_t i1 = 0; i1 < n; ++i1) g[i2 * n + i1] = h[i2].e;
  return g;
}

LocalizationSetup::LocalizationSetup(const ControlRegion& region, const PartitionOptions& opt, int bump_half_order)
    : partition(build_partition(region, opt)),
      grid(partition.strip_count),
      strategy(partition, grid, bump_half_order),
      cutoffs(partition, opt.smoothstep_degree) {}

LocalizedControl::LocalizedControl(std::shared_ptr<const NonlocalControl> g, const LocalizationSetup& setup)
    : g_(std::move(g)), setup_(setup) {
  if (!g_ || g_->combined.empty()) throw std::invalid_argument("empty non-local control");
  n_ = g_->combined.front().n();
  samples_ = g_->clock.samples;
  cells_ = (3 * setup_.grid.strip_count + 2) * samples_;
  width_ = setup_.grid.unit / samples_;
  const auto x = grid_coordinates(n_);
  chi_.resize(n_);
  bump_.resize(n_);
  bump_d1_.resize(n_);
  for (int j = 0; j < n_; ++j) {
    chi_[j] = setup_.cutoffs.chi(x[j]);
    bump_[j] = setup_.cutoffs.bump(x[j]);
    bump_d1_[j] = setup_.cutoffs.bump_d1(x[j]);
    bump_mean_ += bump_[j] / n_;
    bump_d1_mean_ += bump_d1_[j] / n_;
  }
  std::vector<double> b(static_cast<std::size_t>(n_) * n_), b1(b.size());
  for (int i2 = 0; i2 < n_; ++i2)
    for (int i1 = 0; i1 < n_; ++i1) {
      b[static_cast<std::size_t>(i2) * n_ + i1] = bump_[i2];
      b1[static_cast<std::size_t>(i2) * n_ + i1] = bump_d1_[i2];
    }
  bump_field_ = SpectralField::from_grid(n_, b);
  bump_d1_field_ = SpectralField::from_grid(n_, b1);
  mean_.assign(cells_, 0.0);
  accumulated_.assign(cells_, 0.0);
  ybar_.resize(cells_);
  double running = 0.0;
  for (int m = 0; m < cells_; ++m) {
    ybar_[m] = setup_.strategy.velocity(cell_time(m));
    if (window_of_cell(m)) {
      const auto f = localized_part(m);
      double s = 0.0;
      for (double v : f) s += v;
      mean_[m] = s / f.size();
    }
    accumulated_[m] = running + 0.5 * width_ * mean_[m];
    running += width_ * mean_[m];
  }
  total_ = running;
}

int LocalizedControl::cell_at(double t) const {
  return std::clamp(static_cast<int>(std::floor(t / width_)), 0, cells_ - 1);
}

int LocalizedControl::window_of_cell(int m, int* sample) const {
  const int slot = m / samples_;  // cells of one T_delta slot
  if (slot % 3 != 2) return 0;
  if (sample) *sample = m % samples_;
  return (slot + 1) / 3;
}

std::vector<double> LocalizedControl::localized_part(int m, double d) const {
  const std::size_t nn = static_cast<std::size_t>(n_) * n_;
  int i = 0;
  const int k = window_of_cell(m, &i);
  if (!k) return std::vector<double>(nn, 0.0);
  auto g = shift_vertical(g_->combined[i], d - setup_.strategy.shift(k)).to_grid();
  const auto x = grid_coordinates(n_);
  const double scale = 1.0 / setup_.grid.unit;
  for (int i2 = 0; i2 < n_; ++i2) {
    const double w = scale * (d == 0.0 ? chi_[i2] : setup_.cutoffs.chi(x[i2] + d));
    for (int i1 = 0; i1 < n_; ++i1) g[static_cast<std::size_t>(i2) * n_ + i1] *= w;
  }
  return g;
}

std::array<double, 14> LocalizedControl::gamma(int m) const {
  std::array<double, 14> out{};
  const double corr2 = -ybar_[m] * accumulated_[m];
  out[0] = -(mean_[m] + corr2 * bump_d1_mean_) / bump_mean_;
  out[1] = corr2;
  int i = 0;
  if (window_of_cell(m, &i))
    for (int l = 0; l < 12; ++l) out[2 + l] = g_->alpha[i][l] / setup_.grid.unit;
  return out;
}

std::vector<double> LocalizedControl::grid(int m, double d) const {
  auto g = localized_part(m, d);
  const auto gm = gamma(m);
  if (gm[0] == 0.0 && gm[1] == 0.0) return g;
  const auto x = grid_coordinates(n_);
  for (int i2 = 0; i2 < n_; ++i2) {
    double b, b1;
    if (d == 0.0) {
      b = bump_[i2];
      b1 = bump_d1_[i2];
    } else {
      b = setup_.cutoffs.bump(x[i2] + d);
      b1 = setup_.cutoffs.bump_d1(x[i2] + d);
    }
    const double add = gm[0] * b + gm[1] * b1;
    for (int i1 = 0; i1 < n_; ++i1) g[static_cast<std::size_t>(i2) * n_ + i1] += add;
  }
  return g;
}

SpectralField LocalizedControl::field(int m) const {
  SpectralField out = window_of_cell(m) ? SpectralField::from_grid(n_, localized_part(m)) : SpectralField(n_);
  const auto gm = gamma(m);
  out.axpy(gm[0], bump_field_);
  out.axpy(gm[1], bump_d1_field_);
  return out;
}

ZetaLibrary::ZetaLibrary(const TransportedModes& modes, const LocalizationSetup& setup)
    : modes_(modes), setup_(setup) {}

std::vector<std::string> ZetaLibrary::names() {
  std::vector<std::string> out{"bump", "bump_d1"};
  for (int j = 0; j < 4; ++j) out.push_back("chi_mode_" + std::to_string(j));
  for (int j = 0; j < 4; ++j) out.push_back("chi_antiderivative_mean_" + std::to_string(j));
  for (int j = 0; j < 4; ++j) out.push_back("chi_antiderivative_rate_" + std::to_string(j));
  return out;
}

std::array<std::vector<double>, 14> ZetaLibrary::sample_all(double t, double d) const {
  const int n = modes_.n();
  const auto x = grid_coordinates(n);
  std::array<std::vector<double>, 14> out;
  out[0].resize(static_cast<std::size_t>(n) * n);
  out[1].resize(out[0].size());
  for (int i2 = 0; i2 < n; ++i2) {
    const double b = setup_.cutoffs.bump(x[i2] + d), b1 = setup_.cutoffs.bump_d1(x[i2] + d);
    for (int i1 = 0; i1 < n; ++i1) {
      out[0][static_cast<std::size_t>(i2) * n + i1] = b;
      out[1][static_cast<std::size_t>(i2) * n + i1] = b1;
    }
  }
  const int samples = modes_.clock().samples;
  const double sigma = window_phase(setup_.grid, t);
  const int i = std::clamp(static_cast<int>(std::floor(sigma * samples)), 0, samples - 1);
  const auto fam = modes_.family(i);
  const double shift = d - setup_.strategy.displacement(t);
  for (int l = 0; l < 12; ++l) {
    out[2 + l] = shift_vertical(fam[l], shift).to_grid();
    for (int i2 = 0; i2 < n; ++i2) {
      const double c = setup_.cutoffs.chi(x[i2] + d);
      for (int i1 = 0; i1 < n; ++i1) out[2 + l][static_cast<std::size_t>(i2) * n + i1] *= c;
    }
  }
  return out;
}

std::vector<double> ZetaLibrary::sample(int l, double t, double d) const {
  if (l < 0 || l >= count) throw std::out_of_range("actuator index");
  return std::move(sample_all(t, d)[l]);
}

std::array<SpectralField, 2> vertical_endpoint(const LocalizedControl& c, bool corrected) {
  const int n = c.n();
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<double> theta(nn, 0.0), weighted(nn, 0.0);
  const auto& strategy = c.setup().strategy;
  const double d_end = strategy.displacement(1.0);
  const double dt = c.cell_width();
  for (int m = 0; m < c.cell_count(); ++m) {
    if (!corrected && !c.window_of_cell(m)) continue;
    const double t = c.cell_time(m);
    const double d = strategy.displacement(t) - d_end;
    const auto g = corrected ? c.grid(m, d) : c.localized_part(m, d);
    const double w = dt * (1.0 - t);
    for (std::size_t p = 0; p < nn; ++p) {
      theta[p] += dt * g[p];
      weighted[p] += w * g[p];
    }
  }
  return {SpectralField::from_grid(n, theta), d1(SpectralField::from_grid(n, weighted))};
}

namespace {

SpectralField weight_product(const std::vector<double>& e, const SpectralField& f) {
  auto g = f.to_grid();
  for (std::size_t p = 0; p < g.size(); ++p) g[p] *= e[p];
  return SpectralField::from_grid(f.n(), g);
}

double relative(const SpectralField& a, const SpectralField& b, int m) {
  const double nb = sobolev_norm(b, m);
  return sobolev_norm(a - b, m) / (nb > 0 ? nb : 1.0);
}

}  // namespace

SharpIdentities check_identities(const LocalizedControl& c, const std::vector<double>& e_grid) {
  SharpIdentities out;
  const auto& g = c.nonlocal();
  const auto sharp = vertical_endpoint(c, false);
  const auto full = vertical_endpoint(c, true);
  out.theta = relative(sharp[0], g.theta_end, 2);
  SpectralField v_expected = weight_product(e_grid, d1(g.theta_end));
  v_expected.axpy(c.setup().grid.unit, g.v_end);
  out.v = relative(sharp[1], v_expected, 1);
  out.endpoint = relative(full[0], sharp[0], 2);
  const auto x = grid_coordinates(c.n());
  const auto& p = c.setup().partition;
  const Interval inner{p.h1, p.h2};
  for (int m = 0; m < c.cell_count(); ++m) {
    const auto eta = c.grid(m);
    double s = 0.0;
    for (std::size_t q = 0; q < eta.size(); ++q) {
      s += eta[q];
      if (!inner.contains(x[q / c.n()])) out.support = std::max(out.support, std::abs(eta[q]));
    }
    out.max_mean = std::max(out.max_mean, std::abs(s / eta.size()));
  }
  return out;
}

LocalizedPlan localized_plan(const SpectralField& v1, const SpectralField& theta1, const CoupledAssembler& assembler,
                             const LocalizationSetup& setup, int m) {
  const int n = theta1.n();
  LocalizedPlan out;
  out.e_grid = hitting_weight_grid(hitting_data(setup.partition, setup.strategy, setup.cutoffs, n));
  SpectralField v_target = v1 - weight_product(out.e_grid, d1(theta1));
  v_target *= 1.0 / setup.grid.unit;
  v_target.remove_mean();
  out.nonlocal = std::make_shared<NonlocalControl>(assembler.assemble(v_target, theta1, m));
  out.control = std::make_shared<LocalizedControl>(out.nonlocal, setup);
  auto [theta, v] = vertical_endpoint(*out.control, true);
  out.theta_end = theta;
  out.v_end = v;
  out.theta_error = relative(theta, theta1, m);
  out.v_error = relative(v, v1, m - 1);
  return out;
}

void write_schedule_csv(const std::string& path, const LocalizedControl& c, double time_offset, double time_scale) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(12);
  out << "t";
  for (int l = 1; l <= 14; ++l) out << ",alpha_" << l;
  out << '\n';
  for (int m = 0; m < c.cell_count(); ++m) {
    out << time_offset + time_scale * c.cell_time(m);
    for (double a : c.gamma(m)) out << ',' << a;
    out << '\n';
  }
}

}  // namespace bq
