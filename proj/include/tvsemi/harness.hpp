#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tvsemi/estimators.hpp"
#include "tvsemi/kernel.hpp"
#include "tvsemi/simulate.hpp"
#include "tvsemi/smoother.hpp"
#include "tvsemi/theory.hpp"

namespace tvsemi {

using json = nlohmann::json;

// ---- data files -----------------------------------------------------------

/// Reads a CSV with header columns y, x1_1..x1_p1, x2_1..x2_p2 (any order).
Dataset<double> load_csv(const std::filesystem::path& path);
Dataset<double> parse_csv(const std::string& text);
void save_csv(const std::filesystem::path& path, const Dataset<double>& d);
std::string format_csv(const Dataset<double>& d);

/// One value per line (a header line is allowed).
Vector<double> load_vector(const std::filesystem::path& path);

// ---- configuration ---------------------------------------------------------

CoefFunction coef_from_json(const json& j);
json coef_to_json(const CoefFunction& f);
DgpSpec dgp_from_json(const json& j);
json dgp_to_json(const DgpSpec& spec);
BandwidthSpec bandwidth_from_json(const json& j);
json bandwidth_to_json(const BandwidthSpec& b);

/// Reads a JSON file; throws IoError / ParseError.
json read_json_file(const std::filesystem::path& path);

struct ExperimentConfig {
  DgpSpec dgp;
  std::vector<Index> n_grid;
  Index replications = 100;
  BandwidthSpec bandwidth;
  KernelSpec kernel;
  std::vector<Beta1Method> estimators{Beta1Method::PartialNW};
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::optional<double> ridge;
  Index batches = 20;
  /// Monte Carlo size for the theoretical (Sigma*)^-1 comparison; 0 disables it.
  Index theory_paths = 0;
  Index theory_grid = 51;
  bool include_timing = false;

  void validate() const;
  /// Canonical JSON used for the provenance hash; excludes worker count and timing.
  json canonical() const;
  std::string hash() const;
};

/// `base_dir` resolves a relative "dgp_file" entry.
ExperimentConfig experiment_from_json(const json& j, const std::filesystem::path& base_dir = {});

// ---- single fit ------------------------------------------------------------

struct RunFitConfig {
  Beta1Method estimator = Beta1Method::PartialNW;
  BandwidthSpec bandwidth;
  KernelSpec kernel;
  double level = 0.95;
  std::optional<double> ridge;
  std::uint64_t seed = 0;
  Vector<double> weights;  // required for Beta1Method::Weighted
};

/// Fits the configured estimator plus the beta2 and variance paths and
/// returns the result document.
json run_fit(const Dataset<double>& d, const RunFitConfig& cfg);

/// Dispatches one estimator with fully resolved options.
Beta1Fit<double> fit_by_method(const Dataset<double>& d, Beta1Method method, const FitOptions& opts,
                               const Vector<double>& weights = Vector<double>());

// ---- Monte Carlo -------------------------------------------------------------

struct McCell {
  Beta1Method estimator = Beta1Method::PartialNW;
  Index n = 0;
  Index successes = 0;
  Index failures = 0;
  Vector<double> bias;
  Vector<double> rmse;
  /// Empirical covariance of sqrt(n) (beta1_hat - beta1) around its mean.
  Matrix<double> emp_cov;
  Vector<double> coverage;
  /// Trace of emp_cov computed within contiguous replication batches.
  std::vector<double> batch_traces;
  double mean_runtime = 0.0;

  double trace() const { return emp_cov.trace(); }
};

struct RatioRow {
  Beta1Method estimator = Beta1Method::PartialNW;
  Index n_small = 0;
  Index n_large = 0;
  Vector<double> per_coordinate;
  double overall = 0.0;
};

struct GapRow {
  Beta1Method better = Beta1Method::Optimal;
  Beta1Method worse = Beta1Method::PartialNW;
  Index n = 0;
  double mean = 0.0;       // batch mean of trace(worse) - trace(better)
  double std_error = 0.0;  // batch standard error of that difference
};

struct EfficiencyVerdict {
  std::vector<GapRow> gaps;
  /// Every gap above -3 standard errors.
  bool ordering_within_margin = false;
  /// Every gap above +3 standard errors.
  bool strict = false;
  /// trace of theoretical (Sigma*)^-1 and the ratio of the empirical optimal trace to it.
  std::optional<double> theory_trace;
  std::optional<double> theory_ratio;
};

struct McReport {
  std::string kind;
  std::string config_hash;
  std::vector<McCell> cells;
  std::vector<RatioRow> ratios;
  std::optional<EfficiencyVerdict> efficiency;
  bool include_timing = false;

  const McCell& cell(Beta1Method m, Index n) const;
};

McReport run_mc_consistency(const ExperimentConfig& cfg);
McReport run_mc_efficiency(const ExperimentConfig& cfg);
McReport run_mc_coverage(const ExperimentConfig& cfg);

json report_to_json(const McReport& report);
std::string report_to_csv(const McReport& report);

json matrices_to_json(const AsymptoticMatrices& m);

}  // namespace tvsemi
