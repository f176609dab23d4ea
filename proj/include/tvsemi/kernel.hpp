#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "tvsemi/error.hpp"
#include "tvsemi/linalg.hpp"

namespace tvsemi {

enum class KernelKind { Epanechnikov, Triangular, Quartic };

struct KernelSpec {
  KernelKind kind = KernelKind::Epanechnikov;
};

inline std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::Epanechnikov: return "epanechnikov";
    case KernelKind::Triangular: return "triangular";
    case KernelKind::Quartic: return "quartic";
  }
  return "unknown";
}

inline KernelSpec parse_kernel(std::string_view name) {
  if (name == "epanechnikov") return {KernelKind::Epanechnikov};
  if (name == "triangular") return {KernelKind::Triangular};
  if (name == "quartic") return {KernelKind::Quartic};
  fail(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

/// Density on [-1, 1], zero outside.
template <typename Scalar>
Scalar eval_kernel(KernelSpec spec, Scalar u) {
  using std::abs;
  const Scalar a = abs(u);
  if (a > Scalar(1)) return Scalar(0);
  switch (spec.kind) {
    case KernelKind::Epanechnikov: return Scalar(0.75) * (Scalar(1) - u * u);
    case KernelKind::Triangular: return Scalar(1) - a;
    case KernelKind::Quartic: {
      const Scalar w = Scalar(1) - u * u;
      return Scalar(15) / Scalar(16) * w * w;
    }
  }
  return Scalar(0);
}

/// Upper bound on |K(u) - K(v)| / |u - v| over the real line.
inline double lipschitz_constant(KernelSpec spec) {
  switch (spec.kind) {
    case KernelKind::Epanechnikov: return 1.5;
    case KernelKind::Triangular: return 1.0;
    case KernelKind::Quartic: return 15.0 / (6.0 * std::sqrt(3.0));
  }
  return 0.0;
}

/// Either a fixed bandwidth or the rate rule b = c * n^(-exponent).
struct BandwidthSpec {
  std::optional<double> fixed;
  double c = 1.0;
  double exponent = 1.0 / 3.0;

  static BandwidthSpec explicit_value(double b) {
    BandwidthSpec s;
    s.fixed = b;
    return s;
  }

  static BandwidthSpec rule(double c, double exponent) {
    BandwidthSpec s;
    s.c = c;
    s.exponent = exponent;
    return s;
  }

  /// Resolved bandwidth for a sample of size n; throws InvalidArgument unless
  /// 0 < b <= 0.5 and n * b >= 2.
  double resolve(Index n) const {
    double b;
    if (fixed) {
      b = *fixed;
    } else {
      if (!(c > 0.0) || !(exponent > 0.25 && exponent < 0.5)) {
        fail(ErrorCode::InvalidArgument,
             "bandwidth rule needs c > 0 and exponent in (1/4, 1/2)");
      }
      b = c * std::pow(static_cast<double>(n), -exponent);
    }
    if (!(b > 0.0 && b <= 0.5)) {
      fail(ErrorCode::InvalidArgument,
           "bandwidth " + std::to_string(b) + " outside (0, 0.5]");
    }
    if (static_cast<double>(n) * b < 2.0) {
      fail(ErrorCode::InvalidArgument, "n * b = " + std::to_string(n * b) + " is below 2");
    }
    return b;
  }
};

/// Nonzero band of one row of the smoothing weights: weight(k) is k_{i, first + k}.
template <typename Scalar>
struct KernelWindow {
  Index first = 0;
  Vector<Scalar> weight;
  /// (j - i) / (n b) for each entry of the band.
  Vector<Scalar> offset;

  Index size() const { return weight.size(); }
};

/// Row i (0-based) of the boundary-normalized weights k_{i,j}, restricted to
/// |i - j| <= n b.
template <typename Scalar>
KernelWindow<Scalar> weights_band(Index i, Index n, double b, KernelSpec spec) {
  if (n < 1 || i < 0 || i >= n) fail(ErrorCode::InvalidArgument, "row index out of range");
  const double h = static_cast<double>(n) * b;
  const Index reach = static_cast<Index>(std::floor(h));
  const Index lo = std::max<Index>(0, i - reach);
  const Index hi = std::min<Index>(n - 1, i + reach);
  KernelWindow<Scalar> w;
  w.first = lo;
  w.weight.resize(hi - lo + 1);
  w.offset.resize(hi - lo + 1);
  const Scalar scale = Scalar(n) * Scalar(b);
  Scalar total(0);
  for (Index j = lo; j <= hi; ++j) {
    const Scalar t = Scalar(j - i) / scale;
    const Scalar k = eval_kernel(spec, t);
    w.offset(j - lo) = t;
    w.weight(j - lo) = k;
    total += k;
  }
  if (!(total > Scalar(0))) {
    fail(ErrorCode::DegenerateWeights, "kernel weights sum to zero at row " + std::to_string(i));
  }
  w.weight /= total;
  return w;
}

/// Dense version of weights_band: all n entries of row i.
template <typename Scalar>
Vector<Scalar> weights_row(Index i, Index n, double b, KernelSpec spec) {
  const auto w = weights_band<Scalar>(i, n, b, spec);
  Vector<Scalar> row = Vector<Scalar>::Zero(n);
  row.segment(w.first, w.size()) = w.weight;
  return row;
}

template <typename Scalar>
struct LocalLinearBlocks {
  Matrix<Scalar> s0, s1, s2;
};

/// S_l = sum_j k_{i,j} x2_j x2_j' ((j - i) / (n b))^l for l = 0, 1, 2.
template <typename Scalar>
LocalLinearBlocks<Scalar> local_linear_blocks(Index i, double b, KernelSpec spec,
                                              const Matrix<Scalar>& x2) {
  const Index n = x2.rows();
  const Index p2 = x2.cols();
  const auto w = weights_band<Scalar>(i, n, b, spec);
  LocalLinearBlocks<Scalar> out{Matrix<Scalar>::Zero(p2, p2), Matrix<Scalar>::Zero(p2, p2),
                                Matrix<Scalar>::Zero(p2, p2)};
  for (Index k = 0; k < w.size(); ++k) {
    const auto xj = x2.row(w.first + k).transpose();
    const Matrix<Scalar> outer = w.weight(k) * xj * xj.transpose();
    const Scalar t = w.offset(k);
    out.s0 += outer;
    out.s1 += t * outer;
    out.s2 += t * t * outer;
  }
  return out;
}

}  // namespace tvsemi
