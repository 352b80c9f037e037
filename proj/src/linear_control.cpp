#include "bq/linear_control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bq/geometry.hpp"

namespace bq {

TransportedModes::TransportedModes(int n, const GeneratingField& field, const ControlClock& clock, int substeps)
    : n_(n), field_(field), clock_(clock) {
  const int half_nodes = 2 * clock.samples + 1;
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  feet_.assign(static_cast<std::size_t>(half_nodes) * nn * 2, 0.0);
  const auto x = grid_coordinates(n);
  const double h = -1.0 / (2.0 * clock.samples * substeps);
  auto vel = [&](double a, double b, double t) { return field_.velocity({a, b}, t); };
  for (std::size_t p = 0; p < nn; ++p) {
    double y1 = x[p % n], y2 = x[p / n];
    for (int k = half_nodes - 1; k >= 0; --k) {
      const std::size_t at = (static_cast<std::size_t>(k) * nn + p) * 2;
      feet_[at] = y1;
      feet_[at + 1] = y2;
      if (k == 0) break;
      for (int step = 0; step < substeps; ++step) {
        const double t = k / (2.0 * clock.samples) + step * h;
        const auto k1 = vel(y1, y2, t);
        const auto k2 = vel(y1 + 0.5 * h * k1[0], y2 + 0.5 * h * k1[1], t + 0.5 * h);
        const auto k3 = vel(y1 + 0.5 * h * k2[0], y2 + 0.5 * h * k2[1], t + 0.5 * h);
        const auto k4 = vel(y1 + h * k3[0], y2 + h * k3[1], t + h);
        y1 += h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        y2 += h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
      }
    }
  }
}

TorusPoint TransportedModes::foot(int half_node, std::size_t point) const {
  const std::size_t at = (static_cast<std::size_t>(half_node) * n_ * n_ + point) * 2;
  return {feet_[at], feet_[at + 1]};
}

std::vector<double> TransportedModes::base_grid(int half_node, int j) const {
  std::vector<double> g(static_cast<std::size_t>(n_) * n_);
  for (std::size_t p = 0; p < g.size(); ++p) g[p] = h0_mode(j, foot(half_node, p));
  return g;
}

std::array<SpectralField, 12> TransportedModes::family(int sample) const {
  std::array<SpectralField, 12> f;
  const double inv_width = clock_.samples;
  for (int j = 0; j < 4; ++j) {
    f[j] = SpectralField::from_grid(n_, base_grid(2 * sample + 1, j));
    f[j].remove_mean();
    const auto lo = x1_antiderivative(SpectralField::from_grid(n_, base_grid(2 * sample, j)));
    const auto hi = x1_antiderivative(SpectralField::from_grid(n_, base_grid(2 * sample + 2, j)));
    f[4 + j] = 0.5 * (lo + hi);
    f[8 + j] = inv_width * (hi - lo);
  }
  return f;
}

SpectralField transport_vertical(const ConvectionStrategy& c, const std::function<SpectralField(double)>& source,
                                 const ControlClock& clock) {
  SpectralField out;
  const double d_end = c.displacement(1.0);
  for (int i = 0; i < clock.samples; ++i) {
    const double s = clock.node(i);
    auto term = shift_vertical(source(s), c.displacement(s) - d_end);
    if (out.empty()) out = SpectralField(term.n());
    out.axpy(clock.weight(), term);
  }
  return out;
}

SpectralField transport_generating(const TransportedModes& modes,
                                   const std::function<double(TorusPoint, double)>& source) {
  const int n = modes.n();
  const auto& clock = modes.clock();
  std::vector<double> g(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < clock.samples; ++i) {
    const double s = clock.node(i);
    for (std::size_t p = 0; p < g.size(); ++p) g[p] += clock.weight() * source(modes.node_foot(i, p), s);
  }
  return SpectralField::from_grid(n, g);
}

namespace {

double basis_value(TimeBasis basis, int bins, int b, double s) {
  if (basis == TimeBasis::PiecewiseConstant)
    return std::min(static_cast<int>(std::floor(s * bins)), bins - 1) == b ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - std::abs(s * bins - (b + 1)));
}

int basis_count(TimeBasis basis, int bins) { return basis == TimeBasis::PiecewiseConstant ? bins : bins - 1; }

}  // namespace

std::array<double, 4> H0Control::value(double s) const {
  std::array<double, 4> v{};
  if (basis == TimeBasis::PiecewiseConstant) {
    const int b = std::clamp(static_cast<int>(std::floor(s * bins)), 0, bins - 1);
    for (int j = 0; j < 4; ++j) v[j] = alpha(b, j);
    return v;
  }
  const double u = std::clamp(s, 0.0, 1.0) * bins;
  const int lo = std::min(static_cast<int>(std::floor(u)), bins - 1);
  const double frac = u - lo;
  for (int j = 0; j < 4; ++j) {
    const double left = lo >= 1 ? alpha(lo - 1, j) : 0.0;
    const double right = lo <= bins - 2 ? alpha(lo, j) : 0.0;
    v[j] = (1.0 - frac) * left + frac * right;
  }
  return v;
}

std::array<double, 4> H0Control::derivative(double s) const {
  std::array<double, 4> v{};
  if (basis == TimeBasis::PiecewiseConstant) return v;
  const int lo = std::clamp(static_cast<int>(std::floor(s * bins)), 0, bins - 1);
  for (int j = 0; j < 4; ++j) {
    const double left = lo >= 1 ? alpha(lo - 1, j) : 0.0;
    const double right = lo <= bins - 2 ? alpha(lo, j) : 0.0;
    v[j] = bins * (right - left);
  }
  return v;
}

TransportSynthesizer::TransportSynthesizer(const TransportedModes& modes, const SynthesisOptions& opt)
    : modes_(modes), opt_(opt) {
  if (opt.bins < 1 || (opt.basis == TimeBasis::Hat && opt.bins < 2)) throw std::invalid_argument("bad bin count");
  if (opt.ridge < 0.0) throw std::invalid_argument("ridge must be non-negative");
  const int n = modes.n();
  const auto& clock = modes.clock();
  const int nb = basis_count(opt.basis, opt.bins);
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<std::vector<double>> grids(static_cast<std::size_t>(nb) * 4, std::vector<double>(nn, 0.0));
  for (int i = 0; i < clock.samples; ++i) {
    const double s = clock.node(i);
    std::array<std::vector<double>, 4> base;
    for (int j = 0; j < 4; ++j) base[j] = modes.base_grid(2 * i + 1, j);
    for (int b = 0; b < nb; ++b) {
      const double phi = basis_value(opt.basis, opt.bins, b, s);
      if (phi == 0.0) continue;
      for (int j = 0; j < 4; ++j) {
        auto& g = grids[static_cast<std::size_t>(b) * 4 + j];
        const double wgt = phi * clock.weight();
        for (std::size_t p = 0; p < nn; ++p) g[p] += wgt * base[j][p];
      }
    }
  }
  for (auto& g : grids) {
    columns_.push_back(SpectralField::from_grid(n, g));
    columns_.back().remove_mean();
  }

  const int kc = std::min(opt.k_cut, n / 2 - 1);
  for (int k2 = 0; k2 <= kc; ++k2)
    for (int k1 = -kc; k1 <= kc; ++k1) {
      if (k2 == 0 && k1 <= 0) continue;
      if (k1 * k1 + k2 * k2 > opt.k_cut * opt.k_cut) continue;
      if (opt.ignore_line_means && k1 == 0) continue;
      row_modes_.push_back({k1, k2});
      row_weights_.push_back(std::sqrt(2.0 * sobolev_weight(k1, k2, opt.fit_norm)));
    }
  Eigen::MatrixXd a(2 * row_modes_.size(), columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) a.col(static_cast<Eigen::Index>(c)) = rows_of(columns_[c]);
  svd_.compute(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

Eigen::VectorXd TransportSynthesizer::rows_of(const SpectralField& f) const {
  Eigen::VectorXd r(2 * row_modes_.size());
  for (std::size_t i = 0; i < row_modes_.size(); ++i) {
    const Complex c = f.coeff(row_modes_[i][0], row_modes_[i][1]);
    r(2 * i) = row_weights_[i] * c.real();
    r(2 * i + 1) = row_weights_[i] * c.imag();
  }
  return r;
}

double TransportSynthesizer::condition() const {
  const auto& s = svd_.singularValues();
  if (s.size() == 0 || s(s.size() - 1) <= 0.0) return INFINITY;
  return s(0) / s(s.size() - 1);
}

SpectralField TransportSynthesizer::endpoint(const H0Control& c) const {
  SpectralField z(modes_.n());
  for (int b = 0; b < c.alpha.rows(); ++b)
    for (int j = 0; j < 4; ++j) z.axpy(c.alpha(b, j), columns_[static_cast<std::size_t>(b) * 4 + j]);
  return z;
}

SynthesisReport TransportSynthesizer::fit(const SpectralField& target, int report_norm) const {
  if (!target.is_mean_free(1e-12)) throw std::invalid_argument("synthesis target must be mean-free");
  if (target.n() != modes_.n()) throw std::invalid_argument("target grid differs from mode grid");
  const Eigen::VectorXd rhs = rows_of(target);
  const auto& s = svd_.singularValues();
  const Eigen::VectorXd proj = svd_.matrixU().transpose() * rhs;
  Eigen::VectorXd scaled(s.size());
  const double floor = s.size() ? s(0) * 1e-14 : 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (opt_.ridge > 0.0)
      scaled(i) = s(i) * proj(i) / (s(i) * s(i) + opt_.ridge);
    else
      scaled(i) = s(i) > floor ? proj(i) / s(i) : 0.0;
  }
  const Eigen::VectorXd x = svd_.matrixV() * scaled;

  SynthesisReport r;
  r.control.basis = opt_.basis;
  r.control.bins = opt_.bins;
  const int nb = basis_count(opt_.basis, opt_.bins);
  r.control.alpha.resize(nb, 4);
  for (int b = 0; b < nb; ++b)
    for (int j = 0; j < 4; ++j) r.control.alpha(b, j) = x(b * 4 + j);
  r.endpoint = endpoint(r.control);
  SpectralField diff = r.endpoint - target;
  SpectralField reference = target;
  if (opt_.ignore_line_means) {
    diff = remove_line_means(diff);
    reference = remove_line_means(reference);
  }
  r.residual_l2 = sobolev_norm(diff, 0);
  r.residual_hm = sobolev_norm(diff, report_norm);
  r.target_l2 = sobolev_norm(reference, 0);
  r.target_hm = sobolev_norm(reference, report_norm);
  r.condition = condition();
  return r;
}

double Taper::value(double s) const {
  if (width <= 0.0) return 1.0;
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return smoothstep(std::min(s, 1.0 - s) / width, 3);
}

double Taper::derivative(double s) const {
  if (width <= 0.0 || s <= 0.0 || s >= 1.0) return 0.0;
  const double d = std::min(s, 1.0 - s);
  if (d >= width) return 0.0;
  const double u = d / width;
  const double slope = 6.0 * u * (1.0 - u) / width;
  return s < 0.5 ? slope : -slope;
}

std::array<SpectralField, 2> moving_frame_endpoint(const std::vector<SpectralField>& combined,
                                                   const ControlClock& clock) {
  const int n = combined.front().n();
  SpectralField theta(n), accum(n);
  for (int i = 0; i < clock.samples; ++i) {
    theta.axpy(clock.weight(), combined[i]);
    accum.axpy(clock.weight() * (1.0 - clock.node(i)), combined[i]);
  }
  return {theta, d1(accum)};
}

SpectralField NonlocalControl::field(const ConvectionStrategy& c, int sample) const {
  return shift_vertical(combined.at(sample), -c.displacement(clock.node(sample)));
}

CoupledAssembler::CoupledAssembler(const TransportedModes& modes, const AssemblyOptions& opt)
    : modes_(modes), opt_(opt), temperature_(modes, opt.temperature), vorticity_(modes, opt.vorticity) {
  if (opt.vorticity.basis != TimeBasis::Hat)
    throw std::invalid_argument("vorticity profile needs the hat basis for a classical derivative");
}

NonlocalControl CoupledAssembler::assemble(const SpectralField& v1, const SpectralField& theta1, int m) const {
  if (!v1.is_mean_free(1e-12) || !theta1.is_mean_free(1e-12))
    throw std::invalid_argument("coupled targets must be mean-free");
  const int n = modes_.n();
  const auto& clock = modes_.clock();
  const std::size_t nn = static_cast<std::size_t>(n) * n;

  // Step 1: temperature alone.
  const auto step1 = temperature_.fit(theta1, m);
  std::vector<SpectralField> hat_profile;
  hat_profile.reserve(clock.samples);
  for (int i = 0; i < clock.samples; ++i) {
    const auto c = step1.control.value(clock.node(i));
    std::vector<double> g(nn, 0.0);
    for (int j = 0; j < 4; ++j) {
      const auto base = modes_.base_grid(2 * i + 1, j);
      for (std::size_t p = 0; p < nn; ++p) g[p] += c[j] * base[p];
    }
    hat_profile.push_back(SpectralField::from_grid(n, g));
    hat_profile.back().remove_mean();
  }
  NonlocalControl out;
  out.clock = clock;
  auto [theta_hat, v_hat] = moving_frame_endpoint(hat_profile, clock);
  out.theta_hat_end = theta_hat;
  out.v_hat_end = v_hat;

  // Step 2: vorticity correction through an x1-antiderivative profile.
  const auto step2 = vorticity_.fit(v1 - v_hat, m - 1);
  const Taper taper{opt_.taper_width};
  out.alpha.resize(clock.samples);
  out.combined.resize(clock.samples);
  std::vector<SpectralField> tilde(clock.samples);
  SpectralField tapered_a(n);
  double p_norm2 = 0.0;
  // Edge values of the tapered profile; differences over a cell telescope.
  auto edge_profile = [&](int e) {
    const double s = static_cast<double>(e) / clock.samples;
    const auto q = step2.control.value(s);
    std::array<double, 4> r{};
    for (int j = 0; j < 4; ++j) r[j] = taper.value(s) * q[j];
    return r;
  };
  for (int i = 0; i < clock.samples; ++i) {
    const double s = clock.node(i);
    const auto c = step1.control.value(s);
    const auto lo = edge_profile(i), hi = edge_profile(i + 1);
    const auto q_mid = step2.control.value(s);
    const auto fam = modes_.family(i);
    auto& a = out.alpha[i];
    for (int j = 0; j < 4; ++j) {
      a[j] = c[j];
      a[4 + j] = clock.samples * (hi[j] - lo[j]);
      a[8 + j] = 0.5 * (hi[j] + lo[j]);
    }
    SpectralField g_tilde(n), profile(n);
    for (int j = 0; j < 4; ++j) {
      g_tilde.axpy(a[4 + j], fam[4 + j]);
      g_tilde.axpy(a[8 + j], fam[8 + j]);
      const double qt = taper.value(s) * q_mid[j];
      profile.axpy(qt, remove_line_means(fam[j]));
      tapered_a.axpy(clock.weight() * qt, fam[j]);
    }
    p_norm2 += clock.weight() * std::pow(sobolev_norm(profile, 0), 2);
    tilde[i] = g_tilde;
    out.combined[i] = hat_profile[i] + g_tilde;
  }
  out.tilde_profile_norm = std::sqrt(p_norm2);
  auto [theta_tilde, v_tilde] = moving_frame_endpoint(tilde, clock);
  out.theta_tilde_end = theta_tilde;
  out.v_tilde_end = v_tilde;
  out.theta_end = theta_hat + theta_tilde;
  out.v_end = v_hat + v_tilde;
  const SpectralField untapered = remove_line_means(step2.endpoint);
  out.taper_perturbation = sobolev_norm(remove_line_means(tapered_a) - untapered, m - 1);

  const double tn = sobolev_norm(theta1, m), vn = sobolev_norm(v1, m - 1);
  out.theta_residual = sobolev_norm(out.theta_end - theta1, m) / (tn > 0 ? tn : 1.0);
  out.v_residual = sobolev_norm(out.v_end - v1, m - 1) / (vn > 0 ? vn : 1.0);
  return out;
}

void write_synthesis_report(const std::string& path, const std::vector<std::pair<std::string, SynthesisReport>>& rows,
                            const SynthesisOptions& opt) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(10);
  out << "target_id,M,lambda,residual_l2,residual_Hm,cond_estimate\n";
  for (const auto& [id, r] : rows)
    out << id << ',' << opt.bins << ',' << opt.ridge << ',' << r.residual_l2 << ',' << r.residual_hm << ','
        << r.condition << '\n';
}

void write_coefficients_csv(const std::string& path, const NonlocalControl& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(12);
  out << "t";
  for (int l = 1; l <= 12; ++l) out << ",alpha_" << l;
  out << '\n';
  for (int i = 0; i < g.clock.samples; ++i) {
    out << g.clock.node(i);
    for (double a : g.alpha[i]) out << ',' << a;
    out << '\n';
  }
}

}  // namespace bq
