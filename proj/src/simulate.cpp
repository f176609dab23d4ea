#include "tvsemi/simulate.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tvsemi/error.hpp"
#include "tvsemi/rng.hpp"

namespace tvsemi {

namespace {

constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kCovariateStreamBase = 100;

double draw_noise(const DgpSpec& spec, const CounterRng& rng, std::int64_t t) {
  auto eng = rng.at(kNoiseStream, t);
  switch (spec.noise) {
    case NoiseDist::Gaussian: return std::normal_distribution<double>(0.0, 1.0)(eng);
    case NoiseDist::StudentT:
      return std::student_t_distribution<double>(spec.df)(eng) * std::sqrt((spec.df - 2.0) / spec.df);
    case NoiseDist::Uniform:
      return std::uniform_real_distribution<double>(-std::sqrt(3.0), std::sqrt(3.0))(eng);
  }
  return 0.0;
}

std::vector<double> ma_weights(const CovariateSpec& c) {
  std::vector<double> w;
  if (!c.ma.empty()) {
    const auto m = std::min<std::size_t>(c.ma.size(), kMaTruncation + 1);
    w.assign(c.ma.begin(), c.ma.begin() + static_cast<std::ptrdiff_t>(m));
  } else {
    double v = 1.0;
    for (Index k = 0; k <= kMaTruncation; ++k) {
      w.push_back(v);
      v *= c.ar_decay;
    }
  }
  return w;
}

/// y_t for t in [t_start - q, t_end]; zero state before t_start. `u_at(t)` is the
/// rescaled time whose coefficients drive step t.
template <typename UFn>
std::vector<double> run_path(const DgpSpec& spec, const sim_detail::InnovationTape& tape,
                             std::int64_t t_start, std::int64_t t_end, UFn u_at) {
  const Index q = spec.q();
  const Index d = spec.d();
  std::vector<double> y(static_cast<std::size_t>(t_end - t_start + 1 + q), 0.0);
  const auto slot = [&](std::int64_t t) { return static_cast<std::size_t>(t - t_start + q); };
  Vector<double> coef = spec.coefficients(u_at(t_start));
  double sigma = spec.sigma(u_at(t_start));
  double cached_u = u_at(t_start);
  for (std::int64_t t = t_start; t <= t_end; ++t) {
    const double u = u_at(t);
    if (u != cached_u) {
      coef = spec.coefficients(u);
      sigma = spec.sigma(u);
      cached_u = u;
    }
    double v = 0.0;
    for (Index j = 0; j < q; ++j) v += coef(j) * y[slot(t - 1 - j)];
    for (Index k = 0; k < d; ++k) v += sim_detail::covariate_value(spec, k, tape, t, u) * coef(q + k);
    v += sigma * tape.noise(tape.index(t));
    y[slot(t)] = v;
  }
  return y;
}

/// Builds rows 1..n from a path computed over [t_start - q, n].
template <typename UFn>
SimOutput assemble(const DgpSpec& spec, const sim_detail::InnovationTape& tape,
                   const std::vector<double>& y, std::int64_t t_start, Index n, UFn u_at,
                   std::uint64_t seed) {
  const Index q = spec.q();
  const Index d = spec.d();
  const auto order = sim_detail::stable_first_order(spec);
  const Index p1 = spec.p1();
  const Index p2 = spec.p2();
  const auto slot = [&](std::int64_t t) { return static_cast<std::size_t>(t - t_start + q); };

  SimOutput out;
  out.seed = seed;
  out.dataset.y.resize(n);
  out.dataset.x1.resize(n, p1);
  out.dataset.x2.resize(n, p2);
  out.errors.resize(n);
  out.beta1 = spec.beta1();
  out.beta2.resize(n, p2);
  Vector<double> x(spec.p());
  for (Index i = 1; i <= n; ++i) {
    const double u = u_at(i);
    for (Index j = 0; j < q; ++j) x(j) = y[slot(i - 1 - j)];
    for (Index k = 0; k < d; ++k) {
      x(q + k) = sim_detail::covariate_value(spec, k, tape, i, u);
    }
    for (Index c = 0; c < p1; ++c) out.dataset.x1(i - 1, c) = x(order[static_cast<std::size_t>(c)]);
    for (Index c = 0; c < p2; ++c) out.dataset.x2(i - 1, c) = x(order[static_cast<std::size_t>(p1 + c)]);
    out.dataset.y(i - 1) = y[slot(i)];
    out.errors(i - 1) = spec.sigma(u) * tape.noise(tape.index(i));
    out.beta2.row(i - 1) = spec.beta2(u).transpose();
  }
  return out;
}

void require_stable(const DgpSpec& spec) {
  spec.validate();
  const auto report = validate_stability(spec);
  if (!report.ok) {
    fail(ErrorCode::StabilityViolation, "companion spectral radius " +
                                            std::to_string(report.worst_radius) + " at u = " +
                                            std::to_string(report.worst_u));
  }
}

}  // namespace

double CoefFunction::operator()(double u) const {
  switch (kind) {
    case Kind::Constant: return a;
    case Kind::Linear: return a + b * u;
    case Kind::Sine: return a + b * std::sin(2.0 * M_PI * freq * u);
  }
  return a;
}

Index DgpSpec::p1() const {
  return static_cast<Index>(std::count(stable_mask.begin(), stable_mask.end(), true));
}

Vector<double> DgpSpec::coefficients(double u) const {
  Vector<double> c(p());
  for (Index j = 0; j < q(); ++j) c(j) = ar[static_cast<std::size_t>(j)](u);
  for (Index k = 0; k < d(); ++k) c(q() + k) = gamma[static_cast<std::size_t>(k)](u);
  return c;
}

Vector<double> DgpSpec::beta1() const {
  const auto order = sim_detail::stable_first_order(*this);
  const Vector<double> c = coefficients(0.0);
  Vector<double> b(p1());
  for (Index k = 0; k < p1(); ++k) b(k) = c(order[static_cast<std::size_t>(k)]);
  return b;
}

Vector<double> DgpSpec::beta2(double u) const {
  const auto order = sim_detail::stable_first_order(*this);
  const Vector<double> c = coefficients(u);
  Vector<double> b(p2());
  for (Index k = 0; k < p2(); ++k) b(k) = c(order[static_cast<std::size_t>(p1() + k)]);
  return b;
}

void DgpSpec::validate() const {
  if (gamma.size() != covariates.size()) {
    fail(ErrorCode::InvalidArgument, "gamma and covariates must have the same length");
  }
  if (static_cast<Index>(stable_mask.size()) != p()) {
    fail(ErrorCode::InvalidArgument, "stable_mask must have q + d entries");
  }
  if (p1() < 1) fail(ErrorCode::InvalidArgument, "at least one coefficient must be stable");
  for (Index k = 0; k < p(); ++k) {
    if (!stable_mask[static_cast<std::size_t>(k)]) continue;
    const auto& f = k < q() ? ar[static_cast<std::size_t>(k)] : gamma[static_cast<std::size_t>(k - q())];
    if (!f.is_constant()) {
      fail(ErrorCode::InvalidArgument, "stable coordinate " + std::to_string(k) + " is not constant");
    }
  }
  for (const auto& c : covariates) {
    if (!c.intercept && c.ma.empty() && !(std::abs(c.ar_decay) < 1.0)) {
      fail(ErrorCode::InvalidArgument, "covariate decay must be below 1 in absolute value");
    }
  }
  if (noise == NoiseDist::StudentT && !(df > 2.0)) {
    fail(ErrorCode::InvalidArgument, "Student-t noise needs df > 2");
  }
  for (int k = 0; k <= 100; ++k) {
    if (!(sigma(k / 100.0) >= 0.0)) fail(ErrorCode::InvalidArgument, "noise scale must be non-negative");
  }
}

double spectral_radius(const DgpSpec& spec, double u) {
  const Index q = spec.q();
  if (q == 0) return 0.0;
  Matrix<double> companion = Matrix<double>::Zero(q, q);
  for (Index j = 0; j < q; ++j) companion(0, j) = spec.ar[static_cast<std::size_t>(j)](u);
  for (Index j = 1; j < q; ++j) companion(j, j - 1) = 1.0;
  Eigen::EigenSolver<Matrix<double>> es(companion, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

StabilityReport validate_stability(const DgpSpec& spec, Index grid_size) {
  if (grid_size < 21) fail(ErrorCode::InvalidArgument, "stability grid needs at least 21 points");
  StabilityReport report;
  for (Index k = 0; k < grid_size; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(grid_size - 1);
    const double r = spectral_radius(spec, u);
    if (r > report.worst_radius || k == 0) {
      report.worst_radius = r;
      report.worst_u = u;
    }
    if (r > 1.0 - kStabilityMargin) {
      report.ok = false;
      report.offending_u.push_back(u);
    }
  }
  return report;
}

SimOutput simulate_tvar(const DgpSpec& spec, Index n, std::uint64_t seed) {
  require_stable(spec);
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be positive");
  const std::int64_t t_start = -(kTvarBurnIn - 1);
  const auto tape = sim_detail::make_tape(spec, seed, t_start, n);
  const double nn = static_cast<double>(n);
  const auto u_at = [nn](std::int64_t t) { return t <= 0 ? 0.0 : static_cast<double>(t) / nn; };
  const auto y = run_path(spec, tape, t_start, n, u_at);
  return assemble(spec, tape, y, t_start, n, u_at, seed);
}

SimOutput simulate_stationary_approx(const DgpSpec& spec, double u, Index n, std::uint64_t seed) {
  spec.validate();
  if (!(u >= 0.0 && u <= 1.0)) fail(ErrorCode::InvalidArgument, "u must lie in [0, 1]");
  if (spectral_radius(spec, u) > 1.0 - kStabilityMargin) {
    fail(ErrorCode::StabilityViolation, "unstable at u = " + std::to_string(u));
  }
  if (n < 1) fail(ErrorCode::InvalidArgument, "n must be positive");
  const std::int64_t t_start = -(kStationaryBurnIn - 1);
  const auto tape = sim_detail::make_tape(spec, seed, t_start, n);
  const auto u_at = [u](std::int64_t) { return u; };
  const auto y = run_path(spec, tape, t_start, n, u_at);
  return assemble(spec, tape, y, t_start, n, u_at, seed);
}

Matrix<double> simulate_covariates(const DgpSpec& spec, Index n, std::uint64_t seed, bool time_varying) {
  spec.validate();
  const auto tape = sim_detail::make_tape(spec, seed, 1, n);
  Matrix<double> z(n, spec.d());
  for (Index i = 1; i <= n; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n);
    for (Index k = 0; k < spec.d(); ++k) {
      z(i - 1, k) = sim_detail::covariate_value(spec, k, tape, i, u, time_varying);
    }
  }
  return z;
}

double coupling_deviation(const DgpSpec& spec, Index n, std::uint64_t seed) {
  require_stable(spec);
  const std::int64_t tv_start = -(kTvarBurnIn - 1);
  const std::int64_t st_start = -(kStationaryBurnIn - 1);
  const auto tape = sim_detail::make_tape(spec, seed, std::min(tv_start, st_start), n);
  const double nn = static_cast<double>(n);
  const auto y = run_path(spec, tape, tv_start, n, [nn](std::int64_t t) {
    return t <= 0 ? 0.0 : static_cast<double>(t) / nn;
  });
  const Index q = spec.q();
  double worst = 0.0;
  for (Index i = 1; i <= n; ++i) {
    const double u = static_cast<double>(i) / nn;
    const auto ys = run_path(spec, tape, st_start, i, [u](std::int64_t) { return u; });
    const double yi = y[static_cast<std::size_t>(i - tv_start + q)];
    const double ysi = ys[static_cast<std::size_t>(i - st_start + q)];
    worst = std::max(worst, std::abs(yi - ysi));
  }
  return worst;
}

Vector<double> sigma_path(const DgpSpec& spec, Index n) {
  Vector<double> s(n);
  for (Index i = 1; i <= n; ++i) s(i - 1) = spec.sigma(static_cast<double>(i) / static_cast<double>(n));
  return s;
}

namespace sim_detail {

InnovationTape make_tape(const DgpSpec& spec, std::uint64_t seed, std::int64_t t0, std::int64_t t1) {
  const CounterRng rng(seed);
  InnovationTape tape;
  tape.t0 = t0;
  const Index len = static_cast<Index>(t1 - t0 + 1);
  tape.noise.resize(len);
  for (std::int64_t t = t0; t <= t1; ++t) tape.noise(tape.index(t)) = draw_noise(spec, rng, t);
  tape.ma = Matrix<double>::Zero(len, spec.d());
  for (Index k = 0; k < spec.d(); ++k) {
    const auto& c = spec.covariates[static_cast<std::size_t>(k)];
    if (c.intercept) continue;
    const auto w = ma_weights(c);
    const auto lags = static_cast<std::int64_t>(w.size()) - 1;
    std::vector<double> eta(static_cast<std::size_t>(len + lags));
    for (std::int64_t t = t0 - lags; t <= t1; ++t) {
      auto eng = rng.at(kCovariateStreamBase + static_cast<std::uint64_t>(k), t);
      eta[static_cast<std::size_t>(t - t0 + lags)] = std::normal_distribution<double>(0.0, 1.0)(eng);
    }
    for (std::int64_t t = t0; t <= t1; ++t) {
      double v = 0.0;
      for (std::int64_t l = 0; l <= lags; ++l) {
        v += w[static_cast<std::size_t>(l)] * eta[static_cast<std::size_t>(t - l - t0 + lags)];
      }
      tape.ma(tape.index(t), k) = v;
    }
  }
  return tape;
}

double covariate_value(const DgpSpec& spec, Index k, const InnovationTape& tape, std::int64_t t,
                       double u, bool allow_time_varying) {
  const auto& c = spec.covariates[static_cast<std::size_t>(k)];
  if (c.intercept) return 1.0;
  const double s = (allow_time_varying && c.time_varying) ? c.scale(u) : c.scale(0.0);
  return s * tape.ma(tape.index(t), k);
}

std::vector<Index> stable_first_order(const DgpSpec& spec) {
  std::vector<Index> order;
  for (Index k = 0; k < spec.p(); ++k) {
    if (spec.stable_mask[static_cast<std::size_t>(k)]) order.push_back(k);
  }
  for (Index k = 0; k < spec.p(); ++k) {
    if (!spec.stable_mask[static_cast<std::size_t>(k)]) order.push_back(k);
  }
  return order;
}

}  // namespace sim_detail

}  // namespace tvsemi
