#include "tvsemi/theory.hpp"

#include <algorithm>
#include <vector>

#include "tvsemi/error.hpp"
#include "tvsemi/parallel.hpp"
#include "tvsemi/rng.hpp"

namespace tvsemi {

namespace {

constexpr Index kChunk = 16;

/// Raw moment sums for one grid point, flattened p x p blocks:
/// [E xx' | E xx'/sigma^2 | Gamma_0 .. Gamma_L].
struct MomentSums {
  std::vector<double> data;
  Index p = 0;
  Index lag = 0;

  MomentSums(Index p_, Index lag_) : data(static_cast<std::size_t>((lag_ + 3) * p_ * p_), 0.0), p(p_), lag(lag_) {}

  double* block(Index k) { return data.data() + k * p * p; }
  const double* block(Index k) const { return data.data() + k * p * p; }
  Matrix<double> matrix(Index k) const { return Eigen::Map<const Matrix<double>>(block(k), p, p); }
};

Matrix<double> trapezoid(const std::vector<Matrix<double>>& f) {
  const auto m = f.size();
  const double h = 1.0 / static_cast<double>(m - 1);
  Matrix<double> s = Matrix<double>::Zero(f.front().rows(), f.front().cols());
  for (std::size_t k = 0; k < m; ++k) s += ((k == 0 || k + 1 == m) ? h / 2.0 : h) * f[k];
  return symmetrized(s);
}

}  // namespace

Matrix<double> AsymptoticMatrices::sandwich() const {
  const Matrix<double> inv = inverse_spd(sigma1, ErrorCode::SingularDesign, "Sigma1");
  return symmetrized(Matrix<double>(inv * sigma2 * inv));
}

Matrix<double> AsymptoticMatrices::efficient_bound() const {
  return inverse_spd(sigma_star, ErrorCode::SingularDesign, "Sigma*");
}

AsymptoticMatrices theoretical_matrices(const DgpSpec& spec, const TheoryOptions& opts) {
  spec.validate();
  if (opts.mc_paths < 1 || opts.grid_size < 2 || opts.path_length <= opts.lag || opts.lag < 0) {
    fail(ErrorCode::InvalidArgument, "invalid Monte Carlo sizes for theoretical matrices");
  }
  const Index grid = opts.grid_size;
  std::vector<double> us(static_cast<std::size_t>(grid));
  for (Index g = 0; g < grid; ++g) {
    const double u = static_cast<double>(g) / static_cast<double>(grid - 1);
    us[static_cast<std::size_t>(g)] = u;
    if (spectral_radius(spec, u) > 1.0 - kStabilityMargin) {
      fail(ErrorCode::StabilityViolation, "unstable at u = " + std::to_string(u));
    }
    if (!(spec.sigma(u) > 0.0)) fail(ErrorCode::NonPositiveVariance, "noise scale must be positive");
  }

  const Index p = spec.p();
  const Index p1 = spec.p1();
  const Index p2 = spec.p2();
  const Index q = spec.q();
  const Index L = opts.lag;
  const Index T = opts.path_length;
  const auto order = sim_detail::stable_first_order(spec);
  const Index chunks = (opts.mc_paths + kChunk - 1) / kChunk;
  const std::int64_t t_start = -(opts.burn_in - 1);

  std::vector<std::vector<MomentSums>> partial(static_cast<std::size_t>(chunks));
  parallel_for(static_cast<std::size_t>(chunks), opts.workers, [&](std::size_t c) {
    std::vector<MomentSums> acc(static_cast<std::size_t>(grid), MomentSums(p, L));
    Matrix<double> v(p, T);  // x_t e_t, stable-first order
    Vector<double> xs(p), x(p);
    const Index first = static_cast<Index>(c) * kChunk;
    const Index last = std::min(opts.mc_paths, first + kChunk);
    for (Index path = first; path < last; ++path) {
      const auto tape = sim_detail::make_tape(spec, subkey(opts.seed, static_cast<std::uint64_t>(path)),
                                              t_start, T);
      for (Index g = 0; g < grid; ++g) {
        const double u = us[static_cast<std::size_t>(g)];
        const double sigma = spec.sigma(u);
        const double w = 1.0 / (sigma * sigma);
        std::vector<double> y(static_cast<std::size_t>(T - t_start + 1 + q), 0.0);
        const auto slot = [&](std::int64_t t) { return static_cast<std::size_t>(t - t_start + q); };
        const Vector<double> coef = spec.coefficients(u);
        auto& m = acc[static_cast<std::size_t>(g)];
        double* mxx = m.block(0);
        double* mww = m.block(1);
        for (std::int64_t t = t_start; t <= T; ++t) {
          for (Index k = 0; k < spec.d(); ++k) xs(q + k) = sim_detail::covariate_value(spec, k, tape, t, u);
          for (Index j = 0; j < q; ++j) xs(j) = y[slot(t - 1 - j)];
          const double e = sigma * tape.noise(tape.index(t));
          y[slot(t)] = coef.dot(xs) + e;
          if (t < 1) continue;
          for (Index k = 0; k < p; ++k) x(k) = xs(order[static_cast<std::size_t>(k)]);
          const Index col = static_cast<Index>(t - 1);
          v.col(col) = e * x;
          for (Index b = 0; b < p; ++b) {
            for (Index a = 0; a < p; ++a) {
              mxx[b * p + a] += x(a) * x(b);
              mww[b * p + a] += w * x(a) * x(b);
            }
          }
          const Index maxlag = std::min<Index>(L, col);
          for (Index l = 0; l <= maxlag; ++l) {
            double* gl = m.block(2 + l);
            const double* vt = v.col(col).data();
            const double* vs = v.col(col - l).data();
            for (Index b = 0; b < p; ++b) {
              for (Index a = 0; a < p; ++a) gl[b * p + a] += vs[a] * vt[b];
            }
          }
        }
      }
    }
    partial[c] = std::move(acc);
  });

  std::vector<MomentSums> total(static_cast<std::size_t>(grid), MomentSums(p, L));
  for (const auto& chunk : partial) {
    for (Index g = 0; g < grid; ++g) {
      auto& dst = total[static_cast<std::size_t>(g)].data;
      const auto& src = chunk[static_cast<std::size_t>(g)].data;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }

  std::vector<Matrix<double>> s1(static_cast<std::size_t>(grid)), s2(s1), ss(s1), zw(s1), zwo(s1);
  const double paths = static_cast<double>(opts.mc_paths);
  for (Index g = 0; g < grid; ++g) {
    const auto& m = total[static_cast<std::size_t>(g)];
    const Matrix<double> mxx = symmetrized(Matrix<double>(m.matrix(0) / (paths * T)));
    const Matrix<double> mww = symmetrized(Matrix<double>(m.matrix(1) / (paths * T)));
    Matrix<double> lr = m.matrix(2) / (paths * T);
    for (Index l = 1; l <= L; ++l) {
      const Matrix<double> gl = m.matrix(2 + l) / (paths * static_cast<double>(T - l));
      lr += (1.0 - static_cast<double>(l) / static_cast<double>(L + 1)) * (gl + gl.transpose());
    }
    lr = symmetrized(lr);

    const auto projector = [&](const Matrix<double>& mom) {
      Matrix<double> t = Matrix<double>::Zero(p1, p);
      t.leftCols(p1).setIdentity();
      if (p2 > 0) {
        const Matrix<double> q2 = solve_spd(mom.bottomRightCorner(p2, p2), mom.bottomLeftCorner(p2, p1),
                                            ErrorCode::SingularDesign, "E[x2 x2']");
        t.rightCols(p2) = -q2.transpose();
      }
      return t;
    };
    const Matrix<double> proj = projector(mxx);
    const Matrix<double> proj_w = projector(mww);
    const auto sg = static_cast<std::size_t>(g);
    s1[sg] = proj * mxx * proj.transpose();
    s2[sg] = proj * lr * proj.transpose();
    ss[sg] = proj_w * mww * proj_w.transpose();
    const Matrix<double> a = solve_spd(mxx, Matrix<double>::Identity(p, p).leftCols(p1),
                                       ErrorCode::SingularDesign, "E[x x']");
    zw[sg] = a.transpose() * lr * a;
    const Matrix<double> aw = solve_spd(mww, Matrix<double>::Identity(p, p).leftCols(p1),
                                        ErrorCode::SingularDesign, "E[x x' / sigma^2]");
    zwo[sg] = aw.topRows(p1);
  }

  AsymptoticMatrices out;
  out.sigma1 = trapezoid(s1);
  out.sigma2 = trapezoid(s2);
  out.sigma_star = trapezoid(ss);
  out.s_zw = trapezoid(zw);
  out.s_zw_opt = trapezoid(zwo);
  out.hac_lag = L;
  return out;
}

}  // namespace tvsemi
