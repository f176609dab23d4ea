#include "tvsemi/error.hpp"
#include "tvsemi/harness.hpp"

namespace tvsemi {

namespace {

json vector_json(const Vector<double>& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Matrix<double>& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

Beta1Fit<double> fit_by_method(const Dataset<double>& d, Beta1Method method, const FitOptions& opts,
                               const Vector<double>& weights) {
  switch (method) {
    case Beta1Method::PartialNW: return fit_beta1(d, opts, SmoothMethod::NadarayaWatson);
    case Beta1Method::PartialLL: return fit_beta1(d, opts, SmoothMethod::LocalLinear);
    case Beta1Method::Optimal: return fit_beta1_optimal(d, opts);
    case Beta1Method::Average: return fit_beta1_average(d, opts);
    case Beta1Method::Weighted:
      if (weights.size() == 0) fail(ErrorCode::InvalidArgument, "the weighted estimator needs a weight vector");
      return fit_beta1_weighted(d, opts, weights);
  }
  fail(ErrorCode::InvalidArgument, "unknown estimator");
}

json run_fit(const Dataset<double>& d, const RunFitConfig& cfg) {
  d.validate();
  FitOptions opts;
  opts.kernel = cfg.kernel;
  opts.bandwidth = cfg.bandwidth.resolve(d.n());
  opts.ridge = cfg.ridge;
  opts.level = cfg.level;
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) fail(ErrorCode::InvalidArgument, "level must be in (0, 1)");
  if (cfg.ridge && !(*cfg.ridge >= 0.0)) fail(ErrorCode::InvalidArgument, "ridge must be non-negative");
  if (cfg.estimator == Beta1Method::Weighted && cfg.weights.size() != d.n()) {
    fail(ErrorCode::DimensionMismatch, "the weighted estimator needs one weight per row");
  }

  const auto fit = fit_by_method(d, cfg.estimator, opts, cfg.weights);
  const auto smooth =
      cfg.estimator == Beta1Method::PartialLL ? SmoothMethod::LocalLinear : SmoothMethod::NadarayaWatson;

  json doc;
  doc["estimator"] = std::string(method_name(cfg.estimator));
  doc["n"] = d.n();
  doc["p1"] = d.p1();
  doc["p2"] = d.p2();
  doc["kernel"] = std::string(kernel_name(cfg.kernel.kind));
  doc["b_used"] = fit.b_used;
  doc["ridge"] = opts.smoother().ridge_for(d.n());
  doc["level"] = fit.level;
  doc["seed"] = cfg.seed;
  doc["beta1"] = vector_json(fit.beta1);
  doc["cov"] = matrix_json(fit.cov);
  doc["avar"] = matrix_json(fit.avar);
  json ci = json::array();
  for (const auto& iv : fit.ci) ci.push_back({iv.lower, iv.upper});
  doc["ci"] = ci;
  doc["diagnostics"] = {{"design_condition", fit.diagnostics.design_condition},
                        {"smoother_condition", fit.diagnostics.smoother_condition},
                        {"n", fit.diagnostics.n},
                        {"hac_lag", fit.diagnostics.hac_lag}};

  json u = json::array();
  for (Index i = 1; i <= d.n(); ++i) u.push_back(static_cast<double>(i) / static_cast<double>(d.n()));
  doc["beta2_path"] = {{"u", u}, {"values", matrix_json(fit_beta2_path(d, opts, fit.beta1, smooth))}};
  try {
    doc["sigma2_path"] = vector_json(estimate_sigma2_path(d, opts));
  } catch (const Error&) {
    doc["sigma2_path"] = nullptr;
  }
  return doc;
}

json matrices_to_json(const AsymptoticMatrices& m) {
  json j;
  j["sigma1"] = matrix_json(m.sigma1);
  j["sigma2"] = matrix_json(m.sigma2);
  j["sigma_star"] = matrix_json(m.sigma_star);
  j["s_zw"] = matrix_json(m.s_zw);
  j["s_zw_opt"] = matrix_json(m.s_zw_opt);
  j["sandwich"] = matrix_json(m.sandwich());
  j["efficient_bound"] = matrix_json(m.efficient_bound());
  j["hac_lag"] = m.hac_lag;
  return j;
}

}  // namespace tvsemi
