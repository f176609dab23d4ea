#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <string>

#include "tvsemi/error.hpp"

namespace tvsemi {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Condition-number ceiling used by every guarded solve.
inline constexpr double kConditionLimit = 1e12;

template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& a) {
  return (a + a.transpose()) / typename Derived::Scalar(2);
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

template <typename Derived>
typename Derived::Scalar max_eigenvalue(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() == 0) return Scalar(0);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(a.rows() - 1);
}

/// Spectral condition number of a symmetric matrix; infinity when the
/// smallest eigenvalue is not positive.
template <typename Derived>
typename Derived::Scalar condition_number(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() == 0) return Scalar(1);
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(a), Eigen::EigenvaluesOnly);
  const Scalar lo = es.eigenvalues()(0);
  const Scalar hi = es.eigenvalues()(a.rows() - 1);
  if (!(lo > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return hi / lo;
}

/// Symmetric positive-definite solve through an eigendecomposition. Throws
/// `code` when the matrix is not PD or its condition number exceeds
/// kConditionLimit. Writes the condition number to `cond` when non-null.
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> solve_spd(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& rhs,
                                            ErrorCode code, const char* what,
                                            typename DerivedA::Scalar* cond = nullptr) {
  using Scalar = typename DerivedA::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(symmetrized(a));
  const auto& ev = es.eigenvalues();
  const Index k = ev.size();
  const Scalar lo = ev(0);
  const Scalar hi = ev(k - 1);
  const Scalar c = lo > Scalar(0) ? hi / lo : std::numeric_limits<Scalar>::infinity();
  if (cond) *cond = c;
  using std::isfinite;
  if (!(lo > Scalar(0)) || !isfinite(c) || c > Scalar(kConditionLimit)) {
    fail(code, std::string(what) + " is numerically singular (condition number " +
                   std::to_string(static_cast<double>(c)) + ")");
  }
  const auto& v = es.eigenvectors();
  return v * (ev.cwiseInverse().asDiagonal() * (v.transpose() * rhs));
}

template <typename Derived>
Matrix<typename Derived::Scalar> inverse_spd(const Eigen::MatrixBase<Derived>& a, ErrorCode code,
                                             const char* what) {
  using Scalar = typename Derived::Scalar;
  return symmetrized(solve_spd(a, Matrix<Scalar>::Identity(a.rows(), a.rows()), code, what));
}

}  // namespace tvsemi
