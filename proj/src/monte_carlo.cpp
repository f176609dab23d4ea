#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "tvsemi/error.hpp"
#include "tvsemi/harness.hpp"
#include "tvsemi/parallel.hpp"
#include "tvsemi/rng.hpp"

namespace tvsemi {

namespace {

constexpr std::uint64_t kTheoryStream = 0x7468656f7279ULL;

struct Draw {
  bool ok = false;
  Vector<double> error;  // beta1_hat - beta1
  std::vector<bool> covered;
  double runtime = 0.0;
};

struct Replication {
  std::vector<Draw> draws;  // one per estimator
};

FitOptions options_for(const ExperimentConfig& cfg, Index n) {
  FitOptions o;
  o.kernel = cfg.kernel;
  o.bandwidth = cfg.bandwidth.resolve(n);
  o.ridge = cfg.ridge;
  o.level = cfg.level;
  return o;
}

/// Known-variance weights 1/sigma(i/n) for the weighted estimator; unit
/// weights when the noise scale vanishes somewhere.
Vector<double> oracle_weights(const DgpSpec& spec, Index n) {
  const Vector<double> s = sigma_path(spec, n);
  if ((s.array() > 0.0).all()) return s.cwiseInverse();
  return Vector<double>::Ones(n);
}

Replication run_replication(const ExperimentConfig& cfg, Index n, std::uint64_t rep) {
  Replication out;
  out.draws.resize(cfg.estimators.size());
  const std::uint64_t seed = subkey(subkey(cfg.seed, rep), static_cast<std::uint64_t>(n));
  SimOutput sim;
  try {
    sim = simulate_tvar(cfg.dgp, n, seed);
  } catch (const Error&) {
    return out;
  }
  const FitOptions opts = options_for(cfg, n);
  Vector<double> weights;
  if (std::find(cfg.estimators.begin(), cfg.estimators.end(), Beta1Method::Weighted) != cfg.estimators.end()) {
    weights = oracle_weights(cfg.dgp, n);
  }
  for (std::size_t k = 0; k < cfg.estimators.size(); ++k) {
    auto& draw = out.draws[k];
    const auto start = std::chrono::steady_clock::now();
    try {
      const auto fit = fit_by_method(sim.dataset, cfg.estimators[k], opts, weights);
      if (!fit.beta1.allFinite()) continue;
      draw.error = fit.beta1 - sim.beta1;
      draw.covered.resize(fit.ci.size());
      for (std::size_t c = 0; c < fit.ci.size(); ++c) {
        const double truth = sim.beta1(static_cast<Index>(c));
        draw.covered[c] = fit.ci[c].contains(truth, 1e-8 * std::max(1.0, std::abs(truth)));
      }
      draw.ok = true;
    } catch (const Error&) {
      draw.ok = false;
    }
    draw.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return out;
}

/// Empirical covariance of sqrt(n) * errors[idx] around their mean; zero for fewer than two draws.
Matrix<double> scaled_cov(const std::vector<const Vector<double>*>& errors, Index p1, Index n) {
  Matrix<double> cov = Matrix<double>::Zero(p1, p1);
  const auto m = static_cast<Index>(errors.size());
  if (m < 2) return cov;
  Vector<double> mean = Vector<double>::Zero(p1);
  for (const auto* e : errors) mean += *e;
  mean /= static_cast<double>(m);
  for (const auto* e : errors) {
    const Vector<double> c = *e - mean;
    cov += c * c.transpose();
  }
  return symmetrized(Matrix<double>(cov * (static_cast<double>(n) / static_cast<double>(m - 1))));
}

McCell aggregate(const ExperimentConfig& cfg, const std::vector<Replication>& reps, std::size_t k, Index n) {
  const Index p1 = cfg.dgp.p1();
  McCell cell;
  cell.estimator = cfg.estimators[k];
  cell.n = n;
  cell.bias = Vector<double>::Zero(p1);
  cell.rmse = Vector<double>::Zero(p1);
  cell.coverage = Vector<double>::Zero(p1);
  std::vector<const Vector<double>*> ok;
  double runtime = 0.0;
  for (const auto& r : reps) {
    const auto& d = r.draws[k];
    if (!d.ok) {
      ++cell.failures;
      continue;
    }
    ++cell.successes;
    ok.push_back(&d.error);
    cell.bias += d.error;
    cell.rmse += d.error.cwiseAbs2();
    for (Index c = 0; c < p1; ++c) cell.coverage(c) += d.covered[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
    runtime += d.runtime;
  }
  const auto total = static_cast<double>(reps.size());
  if (static_cast<double>(cell.failures) > 0.01 * total) {
    fail(ErrorCode::ReplicationBudgetExceeded,
         std::string(method_name(cell.estimator)) + " at n = " + std::to_string(n) + ": " +
             std::to_string(cell.failures) + " of " + std::to_string(reps.size()) + " replications failed");
  }
  if (cell.successes > 0) {
    const auto s = static_cast<double>(cell.successes);
    cell.bias /= s;
    cell.rmse = (cell.rmse / s).cwiseSqrt();
    cell.coverage /= s;
    cell.mean_runtime = runtime / s;
  }
  cell.emp_cov = scaled_cov(ok, p1, n);

  const auto m = reps.size();
  const auto batches = static_cast<std::size_t>(std::min<Index>(cfg.batches, static_cast<Index>(m)));
  if (batches >= 2) {
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<const Vector<double>*> part;
      for (std::size_t r = b * m / batches; r < (b + 1) * m / batches; ++r) {
        if (reps[r].draws[k].ok) part.push_back(&reps[r].draws[k].error);
      }
      cell.batch_traces.push_back(scaled_cov(part, p1, n).trace());
    }
  }
  return cell;
}

McReport run_cells(const ExperimentConfig& cfg, const char* kind) {
  cfg.validate();
  McReport report;
  report.kind = kind;
  report.config_hash = cfg.hash();
  report.include_timing = cfg.include_timing;
  const auto m = static_cast<std::size_t>(cfg.replications);
  const auto grid = cfg.n_grid.size();
  std::vector<Replication> all(m * grid);
  parallel_for(all.size(), cfg.workers, [&](std::size_t task) {
    const std::size_t g = task / m;
    const std::size_t r = task % m;
    all[task] = run_replication(cfg, cfg.n_grid[g], r);
  });
  for (std::size_t g = 0; g < grid; ++g) {
    const std::vector<Replication> slice(all.begin() + static_cast<std::ptrdiff_t>(g * m),
                                         all.begin() + static_cast<std::ptrdiff_t>((g + 1) * m));
    for (std::size_t k = 0; k < cfg.estimators.size(); ++k) {
      report.cells.push_back(aggregate(cfg, slice, k, cfg.n_grid[g]));
    }
  }
  return report;
}

GapRow paired_gap(const McCell& better, const McCell& worse) {
  GapRow g;
  g.better = better.estimator;
  g.worse = worse.estimator;
  g.n = better.n;
  const auto b = std::min(better.batch_traces.size(), worse.batch_traces.size());
  if (b < 2) return g;
  std::vector<double> diff(b);
  for (std::size_t i = 0; i < b; ++i) diff[i] = worse.batch_traces[i] - better.batch_traces[i];
  double mean = 0.0;
  for (double x : diff) mean += x;
  mean /= static_cast<double>(b);
  double var = 0.0;
  for (double x : diff) var += (x - mean) * (x - mean);
  var /= static_cast<double>(b - 1);
  g.mean = mean;
  g.std_error = std::sqrt(var / static_cast<double>(b));
  return g;
}

json vector_json(const Vector<double>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const McCell& McReport::cell(Beta1Method m, Index n) const {
  for (const auto& c : cells) {
    if (c.estimator == m && c.n == n) return c;
  }
  fail(ErrorCode::InvalidArgument, "no cell for " + std::string(method_name(m)) + " at n = " + std::to_string(n));
}

McReport run_mc_consistency(const ExperimentConfig& cfg) {
  if (cfg.n_grid.size() < 2) fail(ErrorCode::InvalidArgument, "consistency runs need at least two sample sizes");
  auto report = run_cells(cfg, "consistency");
  for (auto m : cfg.estimators) {
    for (std::size_t g = 0; g + 1 < cfg.n_grid.size(); ++g) {
      const auto& small = report.cell(m, cfg.n_grid[g]);
      const auto& large = report.cell(m, cfg.n_grid[g + 1]);
      RatioRow row;
      row.estimator = m;
      row.n_small = small.n;
      row.n_large = large.n;
      row.per_coordinate = small.rmse.cwiseQuotient(large.rmse);
      row.overall = small.rmse.norm() / large.rmse.norm();
      report.ratios.push_back(row);
    }
  }
  return report;
}

McReport run_mc_efficiency(const ExperimentConfig& cfg) {
  for (auto m : {Beta1Method::Optimal, Beta1Method::PartialNW, Beta1Method::Average}) {
    if (std::find(cfg.estimators.begin(), cfg.estimators.end(), m) == cfg.estimators.end()) {
      fail(ErrorCode::InvalidArgument, "efficiency runs need the optimal, partial-nw and average estimators");
    }
  }
  auto report = run_cells(cfg, "efficiency");
  EfficiencyVerdict v;
  v.ordering_within_margin = true;
  v.strict = true;
  for (Index n : cfg.n_grid) {
    const auto& opt = report.cell(Beta1Method::Optimal, n);
    const auto& nw = report.cell(Beta1Method::PartialNW, n);
    const auto& avg = report.cell(Beta1Method::Average, n);
    for (const auto& g : {paired_gap(opt, nw), paired_gap(nw, avg)}) {
      v.ordering_within_margin = v.ordering_within_margin && g.mean >= -3.0 * g.std_error;
      v.strict = v.strict && g.mean > 3.0 * g.std_error;
      v.gaps.push_back(g);
    }
  }
  if (cfg.theory_paths > 0) {
    TheoryOptions t;
    t.mc_paths = cfg.theory_paths;
    t.grid_size = cfg.theory_grid;
    t.seed = subkey(cfg.seed, kTheoryStream);
    t.workers = cfg.workers;
    const auto mats = theoretical_matrices(cfg.dgp, t);
    v.theory_trace = mats.efficient_bound().trace();
    v.theory_ratio = report.cell(Beta1Method::Optimal, cfg.n_grid.back()).trace() / *v.theory_trace;
  }
  report.efficiency = v;
  return report;
}

McReport run_mc_coverage(const ExperimentConfig& cfg) {
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) fail(ErrorCode::InvalidArgument, "level must be in (0, 1)");
  return run_cells(cfg, "coverage");
}

json report_to_json(const McReport& report) {
  json j;
  j["kind"] = report.kind;
  j["config_hash"] = report.config_hash;
  j["cells"] = json::array();
  for (const auto& c : report.cells) {
    json cell;
    cell["config_hash"] = report.config_hash;
    cell["estimator"] = std::string(method_name(c.estimator));
    cell["n"] = c.n;
    cell["successes"] = c.successes;
    cell["failures"] = c.failures;
    cell["bias"] = vector_json(c.bias);
    cell["rmse"] = vector_json(c.rmse);
    json cov = json::array();
    for (Index r = 0; r < c.emp_cov.rows(); ++r) {
      cov.push_back(vector_json(c.emp_cov.row(r).transpose()));
    }
    cell["emp_cov"] = cov;
    cell["trace"] = c.trace();
    cell["coverage"] = vector_json(c.coverage);
    cell["batch_traces"] = c.batch_traces;
    if (report.include_timing) cell["mean_runtime"] = c.mean_runtime;
    j["cells"].push_back(cell);
  }
  if (!report.ratios.empty()) {
    j["ratios"] = json::array();
    for (const auto& r : report.ratios) {
      j["ratios"].push_back({{"config_hash", report.config_hash},
                             {"estimator", std::string(method_name(r.estimator))},
                             {"n_small", r.n_small},
                             {"n_large", r.n_large},
                             {"per_coordinate", vector_json(r.per_coordinate)},
                             {"overall", r.overall}});
    }
  }
  if (report.efficiency) {
    const auto& v = *report.efficiency;
    json e;
    e["config_hash"] = report.config_hash;
    e["gaps"] = json::array();
    for (const auto& g : v.gaps) {
      e["gaps"].push_back({{"better", std::string(method_name(g.better))},
                           {"worse", std::string(method_name(g.worse))},
                           {"n", g.n},
                           {"mean", g.mean},
                           {"std_error", g.std_error}});
    }
    e["ordering_within_margin"] = v.ordering_within_margin;
    e["strict"] = v.strict;
    e["theory_trace"] = v.theory_trace ? json(*v.theory_trace) : json(nullptr);
    e["theory_ratio"] = v.theory_ratio ? json(*v.theory_ratio) : json(nullptr);
    j["efficiency"] = e;
  }
  return j;
}

std::string report_to_csv(const McReport& report) {
  std::string s = "config_hash,kind,estimator,n,coordinate,successes,failures,bias,rmse,emp_var,coverage,trace";
  if (report.include_timing) s += ",mean_runtime";
  s += '\n';
  for (const auto& c : report.cells) {
    for (Index k = 0; k < c.bias.size(); ++k) {
      s += report.config_hash + ',' + report.kind + ',' + std::string(method_name(c.estimator)) + ',' +
           std::to_string(c.n) + ',' + std::to_string(k + 1) + ',' + std::to_string(c.successes) + ',' +
           std::to_string(c.failures) + ',' + num(c.bias(k)) + ',' + num(c.rmse(k)) + ',' +
           num(c.emp_cov(k, k)) + ',' + num(c.coverage(k)) + ',' + num(c.trace());
      if (report.include_timing) s += ',' + num(c.mean_runtime);
      s += '\n';
    }
  }
  return s;
}

}  // namespace tvsemi
