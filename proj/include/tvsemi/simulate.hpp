#pragma once

#include <cstdint>
#include <vector>

#include "tvsemi/linalg.hpp"
#include "tvsemi/smoother.hpp"

namespace tvsemi {

/// Coefficient curve on [0, 1] given by a named preset:
/// constant(a), linear(a, b) = a + b u, sine(a, b, freq) = a + b sin(2 pi freq u).
struct CoefFunction {
  enum class Kind { Constant, Linear, Sine };
  Kind kind = Kind::Constant;
  double a = 0.0;
  double b = 0.0;
  double freq = 1.0;

  static CoefFunction constant(double c) { return {Kind::Constant, c, 0.0, 1.0}; }
  static CoefFunction linear(double a, double b) { return {Kind::Linear, a, b, 1.0}; }
  static CoefFunction sine(double a, double b, double freq) { return {Kind::Sine, a, b, freq}; }

  double operator()(double u) const;
  bool is_constant() const { return kind == Kind::Constant || b == 0.0; }
};

/// One covariate coordinate: either an intercept (z = 1) or the linear process
/// z_i = scale(u) sum_{k=0}^{100} w_k eta_{i-k} with w_k = ma[k] when `ma` is
/// given and ar_decay^k otherwise.
struct CovariateSpec {
  bool intercept = false;
  CoefFunction scale = CoefFunction::constant(1.0);
  std::vector<double> ma;
  double ar_decay = 0.0;
  bool time_varying = true;
};

enum class NoiseDist { Gaussian, StudentT, Uniform };

struct DgpSpec {
  std::vector<CoefFunction> ar;     // a_1 .. a_q
  std::vector<CoefFunction> gamma;  // one per covariate
  std::vector<CovariateSpec> covariates;
  CoefFunction sigma = CoefFunction::constant(1.0);
  NoiseDist noise = NoiseDist::Gaussian;
  double df = 5.0;
  /// Length q + d over (a_1..a_q, gamma_1..gamma_d); true marks a constant coefficient.
  std::vector<bool> stable_mask;

  Index q() const { return static_cast<Index>(ar.size()); }
  Index d() const { return static_cast<Index>(covariates.size()); }
  Index p() const { return q() + d(); }
  Index p1() const;
  Index p2() const { return p() - p1(); }

  /// Full coefficient vector (a(u)', gamma(u)')' in simulation order.
  Vector<double> coefficients(double u) const;
  /// Stable coordinates (constant values).
  Vector<double> beta1() const;
  /// Varying coordinates at u.
  Vector<double> beta2(double u) const;
  /// Throws InvalidArgument on inconsistent sizes, non-constant stable
  /// coordinates, an empty stable set or a negative noise scale.
  void validate() const;
};

struct StabilityReport {
  bool ok = true;
  double worst_u = 0.0;
  double worst_radius = 0.0;
  std::vector<double> offending_u;
};

inline constexpr double kStabilityMargin = 1e-3;
inline constexpr Index kTvarBurnIn = 500;
inline constexpr Index kStationaryBurnIn = 512;
inline constexpr Index kMaTruncation = 100;

/// Companion-matrix spectral radius of the AR part at u.
double spectral_radius(const DgpSpec& spec, double u);

/// Requires spectral radius <= 1 - 1e-3 on an equispaced grid of grid_size points.
StabilityReport validate_stability(const DgpSpec& spec, Index grid_size = 101);

struct SimOutput {
  Dataset<double> dataset;
  Vector<double> beta1;
  Matrix<double> beta2;  // n x p2, row i at (i+1)/n
  Vector<double> errors;
  std::uint64_t seed = 0;
};

/// Locally stationary recursion y_i = sum_j a_j(i/n) y_{i-j} + z_i' gamma(i/n) + e_i.
SimOutput simulate_tvar(const DgpSpec& spec, Index n, std::uint64_t seed);

/// Frozen-u recursion sharing the innovation streams of simulate_tvar.
SimOutput simulate_stationary_approx(const DgpSpec& spec, double u, Index n, std::uint64_t seed);

/// n x d covariate matrix; time_varying = false freezes every scale at u = 0.
Matrix<double> simulate_covariates(const DgpSpec& spec, Index n, std::uint64_t seed,
                                   bool time_varying);

/// max_{1<=i<=n} |y_i - y_i(i/n)| with shared innovations.
double coupling_deviation(const DgpSpec& spec, Index n, std::uint64_t seed);

/// sigma(i/n) for i = 1..n.
Vector<double> sigma_path(const DgpSpec& spec, Index n);

namespace sim_detail {

/// Innovations for time indices t0 .. t0 + len - 1: standardized noise f(xi_t)
/// and the scale-free MA part of every covariate.
struct InnovationTape {
  std::int64_t t0 = 0;
  Vector<double> noise;
  Matrix<double> ma;  // len x d

  Index index(std::int64_t t) const { return static_cast<Index>(t - t0); }
};

InnovationTape make_tape(const DgpSpec& spec, std::uint64_t seed, std::int64_t t0, std::int64_t t1);

/// Covariate k at time t with coefficients frozen at u.
double covariate_value(const DgpSpec& spec, Index k, const InnovationTape& tape, std::int64_t t,
                       double u, bool allow_time_varying = true);

/// Column order of x1 then x2 inside the simulation-order regressor.
std::vector<Index> stable_first_order(const DgpSpec& spec);

}  // namespace sim_detail

}  // namespace tvsemi
