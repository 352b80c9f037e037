#include "bq/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace bq {

namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

// Plans are created once per grid size and executed on caller arrays.
const PlanPair& plans_for(int n) {
  static std::mutex mutex;
  static std::map<int, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  auto* buf_in = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
  auto* buf_out = fftw_alloc_complex(static_cast<std::size_t>(n) * n);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  PlanPair p;
  p.forward = fftw_plan_dft_2d(n, n, buf_in, buf_out, FFTW_FORWARD, flags);
  p.backward = fftw_plan_dft_2d(n, n, buf_in, buf_out, FFTW_BACKWARD, flags);
  fftw_free(buf_in);
  fftw_free(buf_out);
  return cache.emplace(n, p).first->second;
}

void check_same_grid(const SpectralField& a, const SpectralField& b) {
  if (a.n() != b.n()) throw std::invalid_argument("grid size mismatch");
}

}  // namespace

SpectralField::SpectralField(int n) : n_(n), c_(static_cast<std::size_t>(n) * n) {
  if (n < 4 || n % 2 != 0) throw std::invalid_argument("grid size must be even and >= 4");
}

SpectralField SpectralField::from_grid(int n, std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("grid sample count does not match n*n");
  SpectralField f(n);
  forward_fft(n, values, f.c_);
  return f;
}

SpectralField SpectralField::from_function(int n, const std::function<double(double, double)>& f) {
  const auto x = grid_coordinates(n);
  std::vector<double> g(static_cast<std::size_t>(n) * n);
  for (int j2 = 0; j2 < n; ++j2)
    for (int j1 = 0; j1 < n; ++j1) g[static_cast<std::size_t>(j2) * n + j1] = f(x[j1], x[j2]);
  return from_grid(n, g);
}

std::vector<double> SpectralField::to_grid() const {
  std::vector<double> g(static_cast<std::size_t>(n_) * n_);
  inverse_fft(n_, c_, g);
  return g;
}

void SpectralField::set_mode(int k1, int k2, Complex c) {
  coeff(k1, k2) = c;
  coeff(-k1, -k2) = std::conj(c);
  if (index(k1, k2) == index(-k1, -k2)) coeff(k1, k2) = c.real();
}

bool SpectralField::is_mean_free(double tol) const { return std::abs(mean()) <= tol; }

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  check_same_grid(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  check_same_grid(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  for (auto& v : c_) v *= s;
  return *this;
}

void SpectralField::axpy(double s, const SpectralField& o) {
  check_same_grid(*this, o);
  for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += s * o.c_[i];
}

void forward_fft(int n, std::span<const double> grid, std::span<Complex> coeffs) {
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<Complex> in(grid.begin(), grid.end());
  fftw_execute_dft(plans_for(n).forward, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(coeffs.data()));
  const double scale = 1.0 / static_cast<double>(nn);
  for (std::size_t i = 0; i < nn; ++i) coeffs[i] *= scale;
}

void inverse_fft(int n, std::span<const Complex> coeffs, std::span<double> grid) {
  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<Complex> in(coeffs.begin(), coeffs.end());
  std::vector<Complex> out(nn);
  fftw_execute_dft(plans_for(n).backward, reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  for (std::size_t i = 0; i < nn; ++i) grid[i] = out[i].real();
}

std::vector<double> grid_coordinates(int n) {
  std::vector<double> x(n);
  for (int j = 0; j < n; ++j) x[j] = kTwoPi * j / n;
  return x;
}

namespace {

// Applies mult(k1, k2) to every coefficient.
template <class F>
SpectralField apply_multiplier(const SpectralField& f, F mult) {
  const int n = f.n();
  SpectralField out(n);
  auto src = f.data();
  auto dst = out.data();
  for (int i2 = 0; i2 < n; ++i2) {
    const int k2 = wavenumber(i2, n);
    for (int i1 = 0; i1 < n; ++i1) {
      const std::size_t idx = static_cast<std::size_t>(i2) * n + i1;
      dst[idx] = src[idx] * mult(wavenumber(i1, n), k2);
    }
  }
  return out;
}

}  // namespace

SpectralField d1(const SpectralField& f) {
  const int nyq = f.n() / 2;
  return apply_multiplier(f, [nyq](int k1, int) {
    return k1 == nyq ? Complex(0.0) : Complex(0.0, k1);
  });
}

SpectralField d2(const SpectralField& f) {
  const int nyq = f.n() / 2;
  return apply_multiplier(f, [nyq](int, int k2) {
    return k2 == nyq ? Complex(0.0) : Complex(0.0, k2);
  });
}

SpectralField laplacian(const SpectralField& f) {
  return apply_multiplier(f, [](int k1, int k2) { return Complex(-double(k1 * k1 + k2 * k2)); });
}

SpectralField inverse_laplacian(const SpectralField& f) {
  return apply_multiplier(f, [](int k1, int k2) {
    const int k2sum = k1 * k1 + k2 * k2;
    return k2sum == 0 ? Complex(0.0) : Complex(-1.0 / k2sum);
  });
}

SpectralField x1_antiderivative(const SpectralField& f) {
  const int nyq = f.n() / 2;
  return apply_multiplier(f, [nyq](int k1, int) {
    return (k1 == 0 || k1 == nyq) ? Complex(0.0) : Complex(0.0, -1.0 / k1);
  });
}

SpectralField remove_line_means(const SpectralField& f) {
  return apply_multiplier(f, [](int k1, int) { return Complex(k1 == 0 ? 0.0 : 1.0); });
}

SpectralField VelocityField::u1() const {
  SpectralField u = d2(stream);
  u.coeff(0, 0) += mean[0];
  return u;
}

SpectralField VelocityField::u2() const {
  SpectralField u = -d1(stream);
  u.coeff(0, 0) += mean[1];
  return u;
}

SpectralField curl(const VelocityField& u) {
  // d1 u2 - d2 u1 = -Lap(psi)
  SpectralField w = -laplacian(u.stream);
  const int n = w.n();
  for (int i = 0; i < n; ++i) {
    w.coeff(n / 2, i) = 0.0;
    w.coeff(i, n / 2) = 0.0;
  }
  w.remove_mean();
  return w;
}

VelocityField inverse_curl(const SpectralField& vorticity, std::array<double, 2> mean) {
  VelocityField u;
  u.stream = -inverse_laplacian(vorticity);
  u.mean = mean;
  return u;
}

double sobolev_weight(int k1, int k2, int m) {
  const double a = static_cast<double>(k1) * k1;
  const double b = static_cast<double>(k2) * k2;
  double w = 0.0;
  double pa = 1.0;
  for (int a1 = 0; a1 <= m; ++a1) {
    double pb = 1.0;
    for (int a2 = 0; a2 <= m - a1; ++a2) {
      w += pa * pb;
      pb *= b;
    }
    pa *= a;
  }
  return w;
}

double sobolev_norm(const SpectralField& f, int m) {
  if (m < 0) throw std::invalid_argument("Sobolev index must be non-negative");
  const int n = f.n();
  auto c = f.data();
  double s = 0.0;
  for (int i2 = 0; i2 < n; ++i2) {
    const int k2 = wavenumber(i2, n);
    for (int i1 = 0; i1 < n; ++i1)
      s += sobolev_weight(wavenumber(i1, n), k2, m) * std::norm(c[static_cast<std::size_t>(i2) * n + i1]);
  }
  return std::sqrt(s);
}

double sobolev_norm(const VelocityField& u, int m) {
  const double a = sobolev_norm(u.u1(), m);
  const double b = sobolev_norm(u.u2(), m);
  return std::sqrt(a * a + b * b);
}

double l2_inner(const SpectralField& f, const SpectralField& g) {
  check_same_grid(f, g);
  double s = 0.0;
  auto a = f.data();
  auto b = g.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] * std::conj(b[i])).real();
  return s;
}

int dealias_cutoff(int n) { return n / 3; }

SpectralField truncate_two_thirds(const SpectralField& f) {
  const int kc = dealias_cutoff(f.n());
  return apply_multiplier(f, [kc](int k1, int k2) {
    return Complex(std::abs(k1) <= kc && std::abs(k2) <= kc ? 1.0 : 0.0);
  });
}

SpectralField dealiased_product(const SpectralField& f, const SpectralField& g) {
  check_same_grid(f, g);
  const int n = f.n();
  auto a = truncate_two_thirds(f).to_grid();
  const auto b = truncate_two_thirds(g).to_grid();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
  return truncate_two_thirds(SpectralField::from_grid(n, a));
}

std::vector<double> evaluate(const SpectralField& f, std::span<const TorusPoint> points) {
  const int n = f.n();
  const int nyq = n / 2;
  auto c = f.data();
  std::vector<double> out(points.size());
  std::vector<Complex> e1(n), e2(n);
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (int i = 0; i < n; ++i) {
      const int k = wavenumber(i, n);
      if (k == nyq) {
        e1[i] = std::cos(k * points[p].x1);
        e2[i] = std::cos(k * points[p].x2);
      } else {
        e1[i] = std::polar(1.0, k * points[p].x1);
        e2[i] = std::polar(1.0, k * points[p].x2);
      }
    }
    double s = 0.0;
    for (int i2 = 0; i2 < n; ++i2) {
      Complex row = 0.0;
      const Complex* cr = &c[static_cast<std::size_t>(i2) * n];
      for (int i1 = 0; i1 < n; ++i1) row += cr[i1] * e1[i1];
      s += (row * e2[i2]).real();
    }
    out[p] = s;
  }
  return out;
}

SpectralField shift_vertical(const SpectralField& f, double d) {
  if (d == 0.0) return f;
  const int n = f.n();
  SpectralField out(n);
  auto src = f.data();
  auto dst = out.data();
  for (int i2 = 0; i2 < n; ++i2) {
    const int k2 = wavenumber(i2, n);
    if (k2 == n / 2) continue;
    const Complex phase = std::polar(1.0, k2 * d);
    for (int i1 = 0; i1 < n; ++i1) {
      const std::size_t idx = static_cast<std::size_t>(i2) * n + i1;
      dst[idx] = src[idx] * phase;
    }
  }
  return out;
}

double velocity_norm_constant(int n, int m) {
  if (m < 1) throw std::invalid_argument("velocity constant needs m >= 1");
  double c2 = 1.0;
  for (int i2 = 0; i2 < n; ++i2)
    for (int i1 = 0; i1 < n; ++i1) {
      const int k1 = wavenumber(i1, n), k2 = wavenumber(i2, n);
      if (k1 == 0 && k2 == 0) continue;
      const double ksq = double(k1) * k1 + double(k2) * k2;
      c2 = std::max(c2, sobolev_weight(k1, k2, m) / (ksq * sobolev_weight(k1, k2, m - 1)));
    }
  return std::sqrt(c2);
}

void write_snapshot(const std::string& path, const SpectralField& f, int m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(17);
  out << f.n() << ' ' << m << '\n';
  const auto g = f.to_grid();
  const int n = f.n();
  for (int j2 = 0; j2 < n; ++j2) {
    for (int j1 = 0; j1 < n; ++j1) out << (j1 ? " " : "") << g[static_cast<std::size_t>(j2) * n + j1];
    out << '\n';
  }
}

SpectralField read_snapshot(const std::string& path, int* m) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  int n = 0, mm = 0;
  in >> n >> mm;
  if (!in || n < 4) throw std::runtime_error("bad snapshot header in " + path);
  std::vector<double> g(static_cast<std::size_t>(n) * n);
  for (auto& v : g)
    if (!(in >> v)) throw std::runtime_error("truncated snapshot " + path);
  if (m) *m = mm;
  return SpectralField::from_grid(n, g);
}

}  // namespace bq
