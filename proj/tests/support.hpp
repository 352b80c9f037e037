#pragma once

#include <random>

#include "bq/spectral.hpp"

namespace bq::testing {

// Real field with random coefficients on |k1|, |k2| <= kmax, mean-free if asked.
inline SpectralField random_field(int n, int kmax, std::mt19937_64& rng, bool mean_free = true) {
  std::normal_distribution<double> g(0.0, 1.0);
  SpectralField f(n);
  for (int k2 = 0; k2 <= kmax; ++k2)
    for (int k1 = -kmax; k1 <= kmax; ++k1) {
      if (k2 == 0 && k1 < 0) continue;
      if (k1 == 0 && k2 == 0) {
        if (!mean_free) f.set_mode(0, 0, g(rng));
        continue;
      }
      f.set_mode(k1, k2, Complex(g(rng), g(rng)) / double(1 + k1 * k1 + k2 * k2));
    }
  return f;
}

inline double max_grid_diff(const SpectralField& a, const SpectralField& b) {
  const auto ga = a.to_grid();
  const auto gb = b.to_grid();
  double m = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) m = std::max(m, std::abs(ga[i] - gb[i]));
  return m;
}

inline double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace bq::testing
