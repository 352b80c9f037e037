#pragma once

#include <array>
#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bq {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct TorusPoint {
  double x1 = 0.0;
  double x2 = 0.0;
};

// Signed wavenumber for FFT index i on an n-point grid.
inline int wavenumber(int i, int n) { return i <= n / 2 ? i : i - n; }

// Fourier coefficients c_k of f = sum c_k exp(i k.x) on an n x n grid.
// Storage is row-major with row = k2 index, column = k1 index.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int n);

  static SpectralField from_grid(int n, std::span<const double> values);
  static SpectralField from_function(int n, const std::function<double(double, double)>& f);

  std::vector<double> to_grid() const;

  int n() const { return n_; }
  bool empty() const { return n_ == 0; }

  Complex coeff(int k1, int k2) const { return c_[index(k1, k2)]; }
  Complex& coeff(int k1, int k2) { return c_[index(k1, k2)]; }
  // Sets c_k and its conjugate partner so the field stays real.
  void set_mode(int k1, int k2, Complex c);

  std::span<Complex> data() { return c_; }
  std::span<const Complex> data() const { return c_; }

  double mean() const { return c_.empty() ? 0.0 : c_[0].real(); }
  bool is_mean_free(double tol = 1e-14) const;
  void remove_mean() {
    if (!c_.empty()) c_[0] = 0.0;
  }

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
  // this += s * o
  void axpy(double s, const SpectralField& o);

  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }
  friend SpectralField operator*(SpectralField a, double s) { return a *= s; }
  friend SpectralField operator-(SpectralField a) { return a *= -1.0; }

 private:
  std::size_t index(int k1, int k2) const {
    const int i1 = (k1 % n_ + n_) % n_;
    const int i2 = (k2 % n_ + n_) % n_;
    return static_cast<std::size_t>(i2) * n_ + i1;
  }

  int n_ = 0;
  std::vector<Complex> c_;
};

// u = grad-perp(psi) + mean with grad-perp = (d2, -d1).
struct VelocityField {
  SpectralField stream;
  std::array<double, 2> mean{0.0, 0.0};

  SpectralField u1() const;
  SpectralField u2() const;
};

// Grid transforms. Forward transform is normalized by 1/n^2.
void forward_fft(int n, std::span<const double> grid, std::span<Complex> coeffs);
void inverse_fft(int n, std::span<const Complex> coeffs, std::span<double> grid);

std::vector<double> grid_coordinates(int n);

SpectralField d1(const SpectralField& f);
SpectralField d2(const SpectralField& f);
SpectralField laplacian(const SpectralField& f);
// Mean-free solution of Lap(p) = f; the mean of f is ignored.
SpectralField inverse_laplacian(const SpectralField& f);
// Antiderivative in x1: divides by i k1, zero on the k1 = 0 column.
SpectralField x1_antiderivative(const SpectralField& f);
// Removes the x1-average of every horizontal line.
SpectralField remove_line_means(const SpectralField& f);

SpectralField curl(const VelocityField& u);
VelocityField inverse_curl(const SpectralField& vorticity, std::array<double, 2> mean = {0.0, 0.0});

double sobolev_weight(int k1, int k2, int m);
double sobolev_norm(const SpectralField& f, int m);
double sobolev_norm(const VelocityField& u, int m);
double l2_inner(const SpectralField& f, const SpectralField& g);

int dealias_cutoff(int n);
SpectralField truncate_two_thirds(const SpectralField& f);
SpectralField dealiased_product(const SpectralField& f, const SpectralField& g);

// Real trigonometric interpolant at arbitrary points.
std::vector<double> evaluate(const SpectralField& f, std::span<const TorusPoint> points);

// Returns g with g(x) = f(x + d e2). The k2 = n/2 row is dropped unless d == 0.
SpectralField shift_vertical(const SpectralField& f, double d);

// Sharp grid constant in ||Upsilon(z, A)||_m <= C (||z||_{m-1} + |A|).
double velocity_norm_constant(int n, int m);

void write_snapshot(const std::string& path, const SpectralField& f, int m);
SpectralField read_snapshot(const std::string& path, int* m = nullptr);

}  // namespace bq
