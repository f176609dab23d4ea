#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "tvsemi/kernel.hpp"
#include "tvsemi/linalg.hpp"
#include "tvsemi/smoother.hpp"

namespace tvsemi {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  /// Closed containment, widened by `tol` on both sides.
  bool contains(double v, double tol = 0.0) const { return lower - tol <= v && v <= upper + tol; }
};

/// Standard normal quantile. Acklam's rational approximation followed by one
/// Halley step against erfc; accurate to ~1e-15 in the central region.
inline double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::InvalidArgument, "quantile level must be in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

/// floor(n^(1/3)) computed in integers.
inline Index default_hac_lag(Index n) {
  Index l = static_cast<Index>(std::cbrt(static_cast<double>(n)));
  while ((l + 1) * (l + 1) * (l + 1) <= n) ++l;
  while (l > 0 && l * l * l > n) --l;
  return l;
}

/// (1/n) sum_i x1_hat_i x1_hat_i'.
template <typename Scalar>
Matrix<Scalar> estimate_sigma1(const Residualized<Scalar>& res) {
  const Index n = res.x1_hat.rows();
  if (n < res.x1_hat.cols()) fail(ErrorCode::InsufficientData, "fewer rows than stable regressors");
  Matrix<Scalar> s = res.x1_hat.transpose() * res.x1_hat / Scalar(n);
  return symmetrized(s);
}

/// Bartlett lag-window long-run covariance of the rows of u_hat:
/// G0 + sum_{l=1}^{L} (1 - l/(L+1)) (G_l + G_l'), G_l = (1/n) sum_i u_i u_{i+l}'.
template <typename Scalar>
Matrix<Scalar> estimate_sigma2_hac(const Matrix<Scalar>& u_hat, std::optional<Index> lag = {}) {
  const Index n = u_hat.rows();
  const Index L = lag ? *lag : default_hac_lag(n);
  if (L < 0) fail(ErrorCode::InvalidArgument, "negative HAC lag");
  if (2 * L >= n) fail(ErrorCode::LagTooLarge, "HAC lag must be below n/2");
  Matrix<Scalar> s = u_hat.transpose() * u_hat / Scalar(n);
  for (Index l = 1; l <= L; ++l) {
    const Matrix<Scalar> g =
        u_hat.topRows(n - l).transpose() * u_hat.bottomRows(n - l) / Scalar(n);
    const Scalar taper = Scalar(1) - Scalar(l) / Scalar(L + 1);
    s += taper * (g + g.transpose());
  }
  return symmetrized(s);
}

/// Per-coordinate normal intervals beta_k +- z sqrt(cov_kk).
template <typename Scalar>
std::vector<Interval> normal_intervals(const Vector<Scalar>& beta, const Matrix<Scalar>& cov,
                                       double level) {
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::InvalidArgument, "level must be in (0, 1)");
  const double z = normal_quantile((1.0 + level) / 2.0);
  std::vector<Interval> out;
  out.reserve(static_cast<std::size_t>(beta.size()));
  for (Index k = 0; k < beta.size(); ++k) {
    const double half = z * std::sqrt(std::max(0.0, static_cast<double>(cov(k, k))));
    const double center = static_cast<double>(beta(k));
    out.push_back({center - half, center + half});
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> sandwich(const Matrix<Scalar>& sigma1, const Matrix<Scalar>& sigma2) {
  const Matrix<Scalar> inv = inverse_spd(sigma1, ErrorCode::SingularDesign, "Sigma1");
  return symmetrized(inv * sigma2 * inv);
}

/// beta1_k +- z_{(1+level)/2} sqrt([S1^-1 S2 S1^-1]_kk / n).
template <typename Scalar>
std::vector<Interval> sandwich_ci(const Matrix<Scalar>& sigma1, const Matrix<Scalar>& sigma2,
                                  const Vector<Scalar>& beta1, Index n, double level) {
  const Matrix<Scalar> cov = sandwich(sigma1, sigma2) / Scalar(n);
  return normal_intervals(beta1, cov, level);
}

/// (1/n) sum_i x1*_i x1*_i' / sigma2_i.
template <typename Scalar>
Matrix<Scalar> estimate_sigma_star(const Residualized<Scalar>& res_star,
                                   const std::type_identity_t<Vector<Scalar>>& sigma2_path) {
  const Index n = res_star.x1_hat.rows();
  if (sigma2_path.size() != n) fail(ErrorCode::DimensionMismatch, "sigma path length differs from n");
  if ((sigma2_path.array() <= Scalar(0)).any()) {
    fail(ErrorCode::NonPositiveVariance, "variance path must be positive");
  }
  const Vector<Scalar> inv = sigma2_path.cwiseInverse();
  Matrix<Scalar> s = res_star.x1_hat.transpose() * inv.asDiagonal() * res_star.x1_hat / Scalar(n);
  return symmetrized(s);
}

/// A <= B in the Loewner order, i.e. the smallest eigenvalue of B - A is >= -tol.
template <typename Scalar>
bool loewner_leq(const Matrix<Scalar>& a, const Matrix<Scalar>& b, Scalar tol) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    fail(ErrorCode::DimensionMismatch, "Loewner comparison needs square matrices of equal size");
  }
  return min_eigenvalue(Matrix<Scalar>(b - a)) >= -tol;
}

template <typename Scalar>
struct IntegralInequality {
  bool holds = false;
  /// Smallest eigenvalue of rhs - lhs.
  Scalar gap = Scalar(0);
  /// Spectral norm of rhs - lhs; zero only when both sides agree.
  Scalar deviation = Scalar(0);
  Matrix<Scalar> lhs;  // (int Sigma)^-1
  Matrix<Scalar> rhs;  // int Sigma^-1
};

/// Trapezoid comparison of (int_0^1 Sigma(u) du)^-1 against int_0^1 Sigma(u)^-1 du
/// on an equispaced grid u_k = k / (m - 1).
template <typename Scalar>
IntegralInequality<Scalar> check_integral_inverse_inequality(const std::vector<Matrix<Scalar>>& path,
                                                             Scalar tol = Scalar(1e-10)) {
  const std::size_t m = path.size();
  if (m < 2) fail(ErrorCode::InvalidArgument, "need at least two grid points");
  const Index d = path.front().rows();
  Matrix<Scalar> integral = Matrix<Scalar>::Zero(d, d);
  Matrix<Scalar> inv_integral = Matrix<Scalar>::Zero(d, d);
  const Scalar h = Scalar(1) / Scalar(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    const auto& s = path[k];
    if (s.rows() != d || s.cols() != d) fail(ErrorCode::DimensionMismatch, "path matrices differ in size");
    if ((s - s.transpose()).norm() > Scalar(1e-10) * (Scalar(1) + s.norm()) || !(min_eigenvalue(s) > Scalar(0))) {
      fail(ErrorCode::NonPdInput, "path entry " + std::to_string(k) + " is not symmetric PD");
    }
    const Scalar wk = (k == 0 || k + 1 == m) ? h / Scalar(2) : h;
    integral += wk * s;
    inv_integral += wk * inverse_spd(s, ErrorCode::NonPdInput, "path entry");
  }
  IntegralInequality<Scalar> out;
  out.lhs = inverse_spd(integral, ErrorCode::NonPdInput, "integrated path");
  out.rhs = symmetrized(inv_integral);
  const Matrix<Scalar> diff = out.rhs - out.lhs;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(diff), Eigen::EigenvaluesOnly);
  out.gap = es.eigenvalues()(0);
  out.deviation = es.eigenvalues().cwiseAbs().maxCoeff();
  out.holds = out.gap >= -tol;
  return out;
}

/// Plug-in variance of the averaging estimator:
/// (1/n) sum_i A S1_i^-1 S2_i S1_i^-1 A' with S1_i = sum_j k_ij x_j x_j' and
/// S2_i = sum_j k_ij x_j x_j' e_j^2, e_j = y_j - x_j' beta(j/n).
template <typename Scalar>
Matrix<Scalar> estimate_s_zw(const Dataset<Scalar>& d, const Matrix<Scalar>& local_coef,
                             const SmootherOptions& opts) {
  const Index n = d.n();
  const Index p = d.p();
  const Index p1 = d.p1();
  const Matrix<Scalar> x = d.full_regressor();
  if (local_coef.rows() != n || local_coef.cols() != p) {
    fail(ErrorCode::DimensionMismatch, "local coefficient path has the wrong shape");
  }
  const Vector<Scalar> e = d.y - (x.array() * local_coef.array()).rowwise().sum().matrix();
  const Scalar ridge = Scalar(opts.ridge_for(n));
  Matrix<Scalar> total = Matrix<Scalar>::Zero(p1, p1);
  for (Index i = 0; i < n; ++i) {
    const auto w = weights_band<Scalar>(i, n, opts.bandwidth, opts.kernel);
    Matrix<Scalar> s1 = Matrix<Scalar>::Zero(p, p);
    Matrix<Scalar> s2 = Matrix<Scalar>::Zero(p, p);
    for (Index k = 0; k < w.size(); ++k) {
      const Index j = w.first + k;
      const auto xj = x.row(j).transpose();
      s1.template selfadjointView<Eigen::Lower>().rankUpdate(xj, w.weight(k));
      s2.template selfadjointView<Eigen::Lower>().rankUpdate(xj, w.weight(k) * e(j) * e(j));
    }
    s1 = s1.template selfadjointView<Eigen::Lower>();
    s2 = s2.template selfadjointView<Eigen::Lower>();
    s1.diagonal().array() += ridge;
    const Matrix<Scalar> a = solve_spd(s1, Matrix<Scalar>::Identity(p, p).leftCols(p1),
                                       ErrorCode::SingularSmoother, "local Gram matrix");
    total += a.transpose() * s2 * a;
  }
  return symmetrized(Matrix<Scalar>(total / Scalar(n)));
}

}  // namespace tvsemi
