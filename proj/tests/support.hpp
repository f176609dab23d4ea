#pragma once

#include <cmath>
#include <random>

#include "tvsemi/smoother.hpp"

namespace tvsemi::testing {

inline Matrix<double> gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng, double mean = 0.0) {
  std::normal_distribution<double> nd(mean, 1.0);
  Matrix<double> m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = nd(rng);
  return m;
}

/// y = x1 beta1 + sum_k x2_k beta2_k(i/n) + noise_scale * N(0,1).
template <typename Beta2>
Dataset<double> make_dataset(Index n, const Vector<double>& beta1, Index p2, Beta2 beta2, double noise_scale,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset<double> d;
  d.x1 = gaussian_matrix(n, beta1.size(), rng);
  d.x2 = gaussian_matrix(n, p2, rng, 1.0);
  std::normal_distribution<double> nd;
  d.y = d.x1 * beta1;
  for (Index i = 0; i < n; ++i) {
    const double u = static_cast<double>(i + 1) / static_cast<double>(n);
    const Vector<double> b2 = beta2(u);
    d.y(i) += d.x2.row(i).dot(b2) + noise_scale * nd(rng);
  }
  return d;
}

inline Vector<double> vec(std::initializer_list<double> v) {
  Vector<double> out(static_cast<Index>(v.size()));
  Index k = 0;
  for (double x : v) out(k++) = x;
  return out;
}

}  // namespace tvsemi::testing
