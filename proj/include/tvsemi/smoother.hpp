#pragma once

#include <algorithm>
#include <optional>
#include <type_traits>
#include <vector>

#include "tvsemi/kernel.hpp"
#include "tvsemi/linalg.hpp"

namespace tvsemi {

/// Response y, stable regressors x1 (n x p1) and time-varying regressors
/// x2 (n x p2). Rows are in time order.
template <typename Scalar>
struct Dataset {
  Vector<Scalar> y;
  Matrix<Scalar> x1;
  Matrix<Scalar> x2;

  Index n() const { return y.size(); }
  Index p1() const { return x1.cols(); }
  Index p2() const { return x2.cols(); }
  Index p() const { return p1() + p2(); }

  /// Full regressor (x1', x2')' per row.
  Matrix<Scalar> full_regressor() const {
    Matrix<Scalar> x(n(), p());
    x << x1, x2;
    return x;
  }

  void validate() const {
    if (n() < 1) fail(ErrorCode::InsufficientData, "dataset is empty");
    if (x1.rows() != n() || x2.rows() != n()) {
      fail(ErrorCode::DimensionMismatch, "y, x1 and x2 must have the same number of rows");
    }
    if (!y.allFinite() || !x1.allFinite() || !x2.allFinite()) {
      fail(ErrorCode::InvalidArgument, "dataset contains non-finite entries");
    }
  }
};

enum class SmoothMethod { NadarayaWatson, LocalLinear };

struct SmootherOptions {
  KernelSpec kernel;
  double bandwidth = 0.2;
  SmoothMethod method = SmoothMethod::NadarayaWatson;
  /// Ridge added to the local Gram matrix; defaults to 1/n.
  std::optional<double> ridge;

  double ridge_for(Index n) const { return ridge ? *ridge : 1.0 / static_cast<double>(n); }
};

template <typename Scalar>
struct Moments {
  Vector<Scalar> s1;  // sum_j k_ij w_j x2_j y_j
  Matrix<Scalar> s2;  // sum_j k_ij w_j x2_j x1_j'
  Matrix<Scalar> s3;  // sum_j k_ij w_j x2_j x2_j'
};

template <typename Scalar>
struct PartialCoeffs {
  Matrix<Scalar> q1;               // row i holds q1_i'
  std::vector<Matrix<Scalar>> q2;  // p2 x p1 per row
  SmoothMethod method = SmoothMethod::NadarayaWatson;
  double max_condition = 1.0;
};

template <typename Scalar>
struct Residualized {
  Vector<Scalar> y_hat;
  Matrix<Scalar> x1_hat;
};

namespace detail {

template <typename Scalar>
void check_weights(const Vector<Scalar>& weights, Index n) {
  if (weights.size() == 0) return;
  if (weights.size() != n) fail(ErrorCode::DimensionMismatch, "weight vector length differs from n");
  for (Index j = 0; j < n; ++j) {
    if (!(weights(j) > Scalar(0)) || !std::isfinite(static_cast<double>(weights(j)))) {
      fail(ErrorCode::NonPositiveWeight, "smoothing weights must be positive and finite");
    }
  }
}

}  // namespace detail

/// Local weighted least squares of each column of `response` on `regressor`
/// around row i. Nadaraya-Watson solves (sum k w x x' + ridge I) c = sum k w x r';
/// local linear solves the 2p block system and keeps the first p rows.
/// An empty `weights` vector means unit weights.
template <typename Scalar>
Matrix<Scalar> local_regression(Index i, const Matrix<Scalar>& regressor,
                                const Matrix<Scalar>& response, const Vector<Scalar>& weights,
                                const SmootherOptions& opts, double* cond = nullptr) {
  const Index n = regressor.rows();
  const Index p = regressor.cols();
  const Index m = response.cols();
  const auto w = weights_band<Scalar>(i, n, opts.bandwidth, opts.kernel);
  const bool weighted = weights.size() > 0;
  const Scalar ridge = Scalar(opts.ridge_for(n));
  const bool linear = opts.method == SmoothMethod::LocalLinear;
  const Index dim = linear ? 2 * p : p;

  Matrix<Scalar> gram = Matrix<Scalar>::Zero(dim, dim);
  Matrix<Scalar> rhs = Matrix<Scalar>::Zero(dim, m);
  Vector<Scalar> z(dim);
  for (Index k = 0; k < w.size(); ++k) {
    const Index j = w.first + k;
    Scalar kw = w.weight(k);
    if (weighted) kw *= weights(j);
    if (kw == Scalar(0)) continue;
    z.head(p) = regressor.row(j).transpose();
    if (linear) z.tail(p) = w.offset(k) * regressor.row(j).transpose();
    gram.template selfadjointView<Eigen::Lower>().rankUpdate(z, kw);
    rhs.noalias() += (kw * z) * response.row(j);
  }
  gram = gram.template selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge;

  Scalar c(1);
  Matrix<Scalar> coef = solve_spd(gram, rhs, ErrorCode::SingularSmoother, "local Gram matrix", &c);
  if (cond) *cond = static_cast<double>(c);
  return coef.topRows(p);
}

/// Kernel moments around row i, optionally weighted by w_j.
template <typename Scalar>
Moments<Scalar> moment_smooth(const Dataset<Scalar>& d, double b, KernelSpec spec, Index i,
                              const std::type_identity_t<Vector<Scalar>>& weights = Vector<Scalar>()) {
  detail::check_weights(weights, d.n());
  const auto w = weights_band<Scalar>(i, d.n(), b, spec);
  Moments<Scalar> out{Vector<Scalar>::Zero(d.p2()), Matrix<Scalar>::Zero(d.p2(), d.p1()),
                      Matrix<Scalar>::Zero(d.p2(), d.p2())};
  for (Index k = 0; k < w.size(); ++k) {
    const Index j = w.first + k;
    Scalar kw = w.weight(k);
    if (weights.size() > 0) kw *= weights(j);
    const auto x2j = d.x2.row(j).transpose();
    out.s1 += kw * d.y(j) * x2j;
    out.s2 += kw * x2j * d.x1.row(j);
    out.s3 += kw * x2j * x2j.transpose();
  }
  return out;
}

/// Ridge-regularized ratios q1_i = s3^-1 s1 and q2_i = s3^-1 s2 (or their
/// local-linear counterparts) for every row.
template <typename Scalar>
PartialCoeffs<Scalar> partial_coeffs(const Dataset<Scalar>& d, const SmootherOptions& opts,
                                     const std::type_identity_t<Vector<Scalar>>& weights = Vector<Scalar>()) {
  d.validate();
  detail::check_weights(weights, d.n());
  if (d.p2() < 1) fail(ErrorCode::InvalidArgument, "partial coefficients need p2 >= 1");
  const Index n = d.n();
  Matrix<Scalar> response(n, 1 + d.p1());
  response << d.y, d.x1;

  PartialCoeffs<Scalar> pc;
  pc.method = opts.method;
  pc.q1.resize(n, d.p2());
  pc.q2.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double cond = 1.0;
    const Matrix<Scalar> coef = local_regression(i, d.x2, response, weights, opts, &cond);
    pc.max_condition = std::max(pc.max_condition, cond);
    pc.q1.row(i) = coef.col(0).transpose();
    pc.q2[static_cast<std::size_t>(i)] = coef.rightCols(d.p1());
  }
  return pc;
}

/// y_hat_i = y_i - x2_i' q1_i and x1_hat_i = x1_i - q2_i' x2_i.
template <typename Scalar>
Residualized<Scalar> residualize(const Dataset<Scalar>& d, const PartialCoeffs<Scalar>& pc) {
  Residualized<Scalar> r{d.y, d.x1};
  if (d.p2() == 0) return r;
  if (pc.q1.rows() != d.n() || pc.q1.cols() != d.p2() ||
      static_cast<Index>(pc.q2.size()) != d.n()) {
    fail(ErrorCode::DimensionMismatch, "partial coefficients do not match the dataset");
  }
  for (Index i = 0; i < d.n(); ++i) {
    const auto x2i = d.x2.row(i);
    r.y_hat(i) -= x2i.dot(pc.q1.row(i));
    r.x1_hat.row(i).noalias() -= x2i * pc.q2[static_cast<std::size_t>(i)];
  }
  return r;
}

}  // namespace tvsemi
