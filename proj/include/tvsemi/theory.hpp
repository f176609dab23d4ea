#pragma once

#include <cstdint>

#include "tvsemi/linalg.hpp"
#include "tvsemi/simulate.hpp"

namespace tvsemi {

/// Population matrices of a simulated design, integrated over u in [0, 1].
struct AsymptoticMatrices {
  Matrix<double> sigma1;      // int E[x1~ x1~']
  Matrix<double> sigma2;      // int long-run cov of x1~ e
  Matrix<double> sigma_star;  // int E[x1~* x1~*' / sigma^2]
  Matrix<double> s_zw;        // averaging estimator, unit weights
  Matrix<double> s_zw_opt;    // averaging estimator, weights 1/sigma
  Index hac_lag = 50;

  /// Sigma1^-1 Sigma2 Sigma1^-1.
  Matrix<double> sandwich() const;
  /// (Sigma*)^-1.
  Matrix<double> efficient_bound() const;
};

struct TheoryOptions {
  Index mc_paths = 500;
  Index grid_size = 51;
  Index path_length = 512;
  Index burn_in = kStationaryBurnIn;
  Index lag = 50;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

/// Monte Carlo evaluation of the defining expectations on the frozen-u
/// stationary processes, trapezoid-integrated over an equispaced u grid.
/// Paths share innovations across grid points. Results do not depend on the
/// worker count.
AsymptoticMatrices theoretical_matrices(const DgpSpec& spec, const TheoryOptions& opts);

}  // namespace tvsemi
