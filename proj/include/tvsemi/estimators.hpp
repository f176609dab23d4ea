#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "tvsemi/asymptotics.hpp"
#include "tvsemi/kernel.hpp"
#include "tvsemi/linalg.hpp"
#include "tvsemi/smoother.hpp"

namespace tvsemi {

enum class Beta1Method { PartialNW, PartialLL, Weighted, Optimal, Average };

inline std::string_view method_name(Beta1Method m) {
  switch (m) {
    case Beta1Method::PartialNW: return "partial-nw";
    case Beta1Method::PartialLL: return "partial-ll";
    case Beta1Method::Weighted: return "weighted";
    case Beta1Method::Optimal: return "optimal";
    case Beta1Method::Average: return "average";
  }
  return "unknown";
}

inline Beta1Method parse_method(std::string_view name) {
  for (auto m : {Beta1Method::PartialNW, Beta1Method::PartialLL, Beta1Method::Weighted,
                 Beta1Method::Optimal, Beta1Method::Average}) {
    if (method_name(m) == name) return m;
  }
  fail(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

/// How the beta2 path is formed from a beta1 estimate.
enum class Beta2Mode {
  PlugIn,       // q1_i - q2_i beta1
  LocalRefit,   // local least squares of y - x1' beta1 on x2
};

struct FitOptions {
  KernelSpec kernel;
  double bandwidth = 0.2;
  std::optional<double> ridge;
  double level = 0.95;
  std::optional<Index> hac_lag;

  SmootherOptions smoother(SmoothMethod method = SmoothMethod::NadarayaWatson) const {
    return {kernel, bandwidth, method, ridge};
  }
};

struct FitDiagnostics {
  double design_condition = 1.0;
  double smoother_condition = 1.0;
  Index n = 0;
  Index hac_lag = 0;
};

template <typename Scalar>
struct Beta1Fit {
  Vector<Scalar> beta1;
  /// Asymptotic covariance of sqrt(n) (beta1_hat - beta1).
  Matrix<Scalar> avar;
  /// avar / n, the covariance used for the intervals.
  Matrix<Scalar> cov;
  std::vector<Interval> ci;
  double level = 0.95;
  Beta1Method method = Beta1Method::PartialNW;
  double b_used = 0.0;
  FitDiagnostics diagnostics;
};

namespace detail {

template <typename Scalar>
void check_fit_inputs(const Dataset<Scalar>& d) {
  d.validate();
  if (d.p1() < 1) fail(ErrorCode::InvalidArgument, "need at least one stable regressor");
  if (d.n() < 4 * d.p()) {
    fail(ErrorCode::InsufficientData,
         "n = " + std::to_string(d.n()) + " is below 4 p = " + std::to_string(4 * d.p()));
  }
}

/// Rejects a residualized design that has lost (numerically) all variation in
/// some direction relative to the raw stable regressors.
template <typename Scalar>
void check_design(const Matrix<Scalar>& gram, const Matrix<Scalar>& raw_gram) {
  if (!(min_eigenvalue(gram) > Scalar(1e-10) * max_eigenvalue(raw_gram))) {
    fail(ErrorCode::SingularDesign, "stable regressors are explained by the time-varying ones");
  }
}

template <typename Scalar>
Beta1Fit<Scalar> finish_sandwich(const Residualized<Scalar>& res, const Matrix<Scalar>& x1, const FitOptions& opts,
                                 Beta1Method method, double smoother_condition) {
  const Index n = res.y_hat.size();
  const Matrix<Scalar> gram = symmetrized(Matrix<Scalar>(res.x1_hat.transpose() * res.x1_hat));
  check_design(gram, Matrix<Scalar>(x1.transpose() * x1));
  Beta1Fit<Scalar> fit;
  Scalar cond(1);
  fit.beta1 = solve_spd(gram, res.x1_hat.transpose() * res.y_hat, ErrorCode::SingularDesign,
                        "residualized design", &cond);
  const Vector<Scalar> e = res.y_hat - res.x1_hat * fit.beta1;
  const Matrix<Scalar> u = res.x1_hat.array().colwise() * e.array();
  const Index lag = opts.hac_lag ? *opts.hac_lag : default_hac_lag(n);
  const Matrix<Scalar> sigma1 = estimate_sigma1(res);
  const Matrix<Scalar> sigma2 = estimate_sigma2_hac(u, lag);
  fit.avar = sandwich(sigma1, sigma2);
  fit.cov = fit.avar / Scalar(n);
  fit.level = opts.level;
  fit.ci = normal_intervals(fit.beta1, fit.cov, opts.level);
  fit.method = method;
  fit.b_used = opts.bandwidth;
  fit.diagnostics = {static_cast<double>(cond), smoother_condition, n, lag};
  return fit;
}

}  // namespace detail

/// Partial-regression estimate of the stable coefficients with the
/// Bartlett-HAC sandwich covariance.
template <typename Scalar>
Beta1Fit<Scalar> fit_beta1(const Dataset<Scalar>& d, const FitOptions& opts,
                           SmoothMethod method = SmoothMethod::NadarayaWatson) {
  detail::check_fit_inputs(d);
  Residualized<Scalar> res{d.y, d.x1};
  double smoother_cond = 1.0;
  if (d.p2() > 0) {
    const auto pc = partial_coeffs(d, opts.smoother(method));
    smoother_cond = pc.max_condition;
    res = residualize(d, pc);
  }
  const auto kind =
      method == SmoothMethod::LocalLinear ? Beta1Method::PartialLL : Beta1Method::PartialNW;
  return detail::finish_sandwich(res, d.x1, opts, kind, smoother_cond);
}

/// beta2(i/n) for every row given a stable-coefficient estimate (n x p2).
template <typename Scalar>
Matrix<Scalar> fit_beta2_path(const Dataset<Scalar>& d, const FitOptions& opts,
                              const std::type_identity_t<Vector<Scalar>>& beta1,
                              SmoothMethod method = SmoothMethod::NadarayaWatson,
                              Beta2Mode mode = Beta2Mode::PlugIn) {
  d.validate();
  if (beta1.size() != d.p1()) fail(ErrorCode::DimensionMismatch, "beta1 has the wrong length");
  const Index n = d.n();
  Matrix<Scalar> path(n, d.p2());
  if (d.p2() == 0) return path;
  if (mode == Beta2Mode::PlugIn) {
    const auto pc = partial_coeffs(d, opts.smoother(method));
    for (Index i = 0; i < n; ++i) {
      path.row(i) = (pc.q1.row(i).transpose() - pc.q2[static_cast<std::size_t>(i)] * beta1).transpose();
    }
    return path;
  }
  const Matrix<Scalar> partial_response = d.y - d.x1 * beta1;
  const auto sopts = opts.smoother(method);
  for (Index i = 0; i < n; ++i) {
    path.row(i) = local_regression(i, d.x2, partial_response, Vector<Scalar>(), sopts).transpose();
  }
  return path;
}

/// Nadaraya-Watson estimate of the full coefficient vector (x1', x2')' at
/// every i/n; returns an n x p matrix.
template <typename Scalar>
Matrix<Scalar> fit_full_np(const Dataset<Scalar>& d, const FitOptions& opts) {
  d.validate();
  const Matrix<Scalar> x = d.full_regressor();
  const Matrix<Scalar> y = d.y;
  const auto sopts = opts.smoother();
  Matrix<Scalar> path(d.n(), d.p());
  for (Index i = 0; i < d.n(); ++i) {
    path.row(i) = local_regression(i, x, y, Vector<Scalar>(), sopts).transpose();
  }
  return path;
}

/// Relative floor applied to the variance path.
inline constexpr double kVarianceFloor = 1e-6;

/// sigma2(i/n) = sum_j k_ij (y_j - x_j' beta_hat(i/n))^2 from a full local fit,
/// floored at 1e-6 * median (and at 1e-12 * mean(y^2) so an exactly
/// noiseless sample still yields a positive path).
template <typename Scalar>
Vector<Scalar> estimate_sigma2_path(const Dataset<Scalar>& d, const FitOptions& opts,
                                    const Matrix<Scalar>& full_path) {
  const Index n = d.n();
  const Matrix<Scalar> x = d.full_regressor();
  if (full_path.rows() != n || full_path.cols() != d.p()) {
    fail(ErrorCode::DimensionMismatch, "full coefficient path has the wrong shape");
  }
  Vector<Scalar> s2(n);
  for (Index i = 0; i < n; ++i) {
    const auto w = weights_band<Scalar>(i, n, opts.bandwidth, opts.kernel);
    const Vector<Scalar> r = d.y.segment(w.first, w.size()) -
                             x.middleRows(w.first, w.size()) * full_path.row(i).transpose();
    s2(i) = w.weight.dot(r.cwiseAbs2());
  }
  std::vector<Scalar> sorted(s2.data(), s2.data() + n);
  std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
  Scalar median = sorted[static_cast<std::size_t>(n / 2)];
  if (n % 2 == 0) {
    const Scalar below = *std::max_element(sorted.begin(), sorted.begin() + n / 2);
    median = (median + below) / Scalar(2);
  }
  const Scalar floor = std::max({Scalar(kVarianceFloor) * median,
                                 Scalar(1e-12) * d.y.squaredNorm() / Scalar(n),
                                 std::numeric_limits<Scalar>::min()});
  return s2.cwiseMax(floor);
}

template <typename Scalar>
Vector<Scalar> estimate_sigma2_path(const Dataset<Scalar>& d, const FitOptions& opts) {
  return estimate_sigma2_path(d, opts, fit_full_np(d, opts));
}

/// Two-stage variance-weighted estimator. `sigma2_override`, when non-empty,
/// replaces the estimated variance path.
template <typename Scalar>
Beta1Fit<Scalar> fit_beta1_optimal(const Dataset<Scalar>& d, const FitOptions& opts,
                                   const std::type_identity_t<Vector<Scalar>>& sigma2_override = Vector<Scalar>()) {
  detail::check_fit_inputs(d);
  Vector<Scalar> s2;
  if (sigma2_override.size() > 0) {
    if (sigma2_override.size() != d.n()) {
      fail(ErrorCode::DimensionMismatch, "variance override length differs from n");
    }
    for (Index i = 0; i < d.n(); ++i) {
      if (!(sigma2_override(i) > Scalar(0)) || !std::isfinite(static_cast<double>(sigma2_override(i)))) {
        fail(ErrorCode::NonPositiveVariance, "variance override must be positive");
      }
    }
    s2 = sigma2_override;
  } else {
    s2 = estimate_sigma2_path(d, opts);
  }
  const Vector<Scalar> w = s2.cwiseInverse();

  Residualized<Scalar> res{d.y, d.x1};
  double smoother_cond = 1.0;
  if (d.p2() > 0) {
    const auto pc = partial_coeffs(d, opts.smoother(), w);
    smoother_cond = pc.max_condition;
    res = residualize(d, pc);
  }
  const Index n = d.n();
  const Matrix<Scalar> wx = res.x1_hat.array().colwise() * w.array();
  const Matrix<Scalar> gram = symmetrized(Matrix<Scalar>(wx.transpose() * res.x1_hat));
  detail::check_design(gram, Matrix<Scalar>(d.x1.transpose() * w.asDiagonal() * d.x1));
  Beta1Fit<Scalar> fit;
  Scalar cond(1);
  fit.beta1 = solve_spd(gram, wx.transpose() * res.y_hat, ErrorCode::SingularDesign,
                        "weighted residualized design", &cond);
  const Matrix<Scalar> sigma_star = estimate_sigma_star(res, s2);
  fit.avar = inverse_spd(sigma_star, ErrorCode::SingularDesign, "Sigma*");
  fit.cov = fit.avar / Scalar(n);
  fit.level = opts.level;
  fit.ci = normal_intervals(fit.beta1, fit.cov, opts.level);
  fit.method = Beta1Method::Optimal;
  fit.b_used = opts.bandwidth;
  fit.diagnostics = {static_cast<double>(cond), smoother_cond, n, 0};
  return fit;
}

/// fit_beta1 on the rescaled model (p_i y_i, p_i x1_i, p_i x2_i).
template <typename Scalar>
Beta1Fit<Scalar> fit_beta1_weighted(const Dataset<Scalar>& d, const FitOptions& opts,
                                    const std::type_identity_t<Vector<Scalar>>& p_weights,
                                    SmoothMethod method = SmoothMethod::NadarayaWatson) {
  d.validate();
  if (p_weights.size() != d.n()) fail(ErrorCode::DimensionMismatch, "weight vector length differs from n");
  for (Index i = 0; i < d.n(); ++i) {
    if (!(p_weights(i) > Scalar(0)) || !std::isfinite(static_cast<double>(p_weights(i)))) {
      fail(ErrorCode::NonPositiveWeight, "regression weights must be positive and finite");
    }
  }
  Dataset<Scalar> scaled{d.y.cwiseProduct(p_weights), d.x1.array().colwise() * p_weights.array(),
                         d.x2.array().colwise() * p_weights.array()};
  auto fit = fit_beta1(scaled, opts, method);
  fit.method = Beta1Method::Weighted;
  return fit;
}

/// Averaging baseline: mean over the grid i/n of the stable coordinates of the
/// full local fit, with the plug-in averaging-sandwich covariance.
template <typename Scalar>
Beta1Fit<Scalar> fit_beta1_average(const Dataset<Scalar>& d, const FitOptions& opts) {
  detail::check_fit_inputs(d);
  const Matrix<Scalar> full = fit_full_np(d, opts);
  Beta1Fit<Scalar> fit;
  fit.beta1 = full.leftCols(d.p1()).colwise().mean().transpose();
  fit.avar = estimate_s_zw(d, full, opts.smoother());
  fit.cov = fit.avar / Scalar(d.n());
  fit.level = opts.level;
  fit.ci = normal_intervals(fit.beta1, fit.cov, opts.level);
  fit.method = Beta1Method::Average;
  fit.b_used = opts.bandwidth;
  fit.diagnostics.n = d.n();
  return fit;
}

}  // namespace tvsemi
