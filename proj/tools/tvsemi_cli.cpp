#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tvsemi/error.hpp"
#include "tvsemi/harness.hpp"
#include "tvsemi/theory.hpp"

using namespace tvsemi;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

/// DgpSpec from either a bare DGP file or an experiment file with a "dgp" entry.
DgpSpec load_dgp(const std::string& path) {
  const auto j = read_json_file(path);
  if (j.is_object() && (j.contains("n_grid") || j.contains("dgp") || j.contains("dgp_file"))) {
    return experiment_from_json(j, std::filesystem::path(path).parent_path()).dgp;
  }
  return dgp_from_json(j);
}

struct BandwidthFlags {
  std::optional<double> value;
  double c = 1.0;
  double exponent = 1.0 / 3.0;

  BandwidthSpec spec() const {
    if (value) return BandwidthSpec::explicit_value(*value);
    return BandwidthSpec::rule(c, exponent);
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Semiparametric estimation of stable coefficients in time-varying regressions"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a dataset from a DGP config; writes CSV and a truth sidecar");
  std::string sim_config, sim_out;
  Index sim_n = 500;
  std::uint64_t sim_seed = 1;
  sim->add_option("--config", sim_config, "DGP (or experiment) JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--n", sim_n, "Sample size")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", sim_out, "Output CSV; the truth goes to <out>.truth.json")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "Estimate the stable coefficients of a CSV dataset");
  std::string fit_data, fit_out, fit_weights, fit_kernel = "epanechnikov", fit_estimator = "partial-nw";
  BandwidthFlags fit_bw;
  double fit_level = 0.95;
  std::optional<double> fit_ridge;
  std::uint64_t fit_seed = 0;
  fit->add_option("--data", fit_data, "CSV with columns y, x1_*, x2_*")->required()->check(CLI::ExistingFile);
  fit->add_option("--bandwidth", fit_bw.value,
                  "Fixed bandwidth b in (0, 0.5]. Default is the rule c n^-e. The optimal estimator's "
                  "convergence theory uses a different bandwidth window than partial-nw, so set b "
                  "explicitly for optimal runs");
  fit->add_option("--bandwidth-c", fit_bw.c, "Constant c of the bandwidth rule");
  fit->add_option("--bandwidth-exponent", fit_bw.exponent, "Exponent e of the bandwidth rule, in (1/4, 1/2)");
  fit->add_option("--kernel", fit_kernel, "epanechnikov | triangular | quartic");
  fit->add_option("--estimator", fit_estimator, "partial-nw | partial-ll | optimal | weighted | average");
  fit->add_option("--weights", fit_weights, "One weight per row for the weighted estimator")
      ->check(CLI::ExistingFile);
  fit->add_option("--level", fit_level, "Confidence level");
  fit->add_option("--ridge", fit_ridge, "Ridge added to local Gram matrices (default 1/n)");
  fit->add_option("--seed", fit_seed, "Recorded in the result document");
  fit->add_option("--out", fit_out, "Result JSON (stdout if omitted)");

  // Monte Carlo
  struct McFlags {
    std::string config, out, csv;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;
    std::optional<double> level;
    std::optional<double> bandwidth;
    std::optional<std::string> kernel;
  };
  McFlags mc;
  auto add_mc = [&](const char* name, const char* help) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", mc.config, "Experiment JSON file")->required()->check(CLI::ExistingFile);
    s->add_option("--seed", mc.seed, "Override the config seed");
    s->add_option("--workers", mc.workers, "Worker threads (0 = all cores)");
    s->add_option("--level", mc.level, "Override the confidence level");
    s->add_option("--bandwidth", mc.bandwidth, "Override with a fixed bandwidth");
    s->add_option("--kernel", mc.kernel, "Override the kernel");
    s->add_option("--out", mc.out, "Report JSON (stdout if omitted)");
    s->add_option("--csv", mc.csv, "Also write the tabular CSV summary here");
    return s;
  };
  auto* mc_cons = add_mc("mc-consistency", "RMSE across sample sizes");
  auto* mc_eff = add_mc("mc-efficiency", "Empirical covariance ordering of optimal, partial-nw and average");
  auto* mc_cov = add_mc("mc-coverage", "Confidence interval coverage");

  // asymptotics
  auto* asy = app.add_subcommand("asymptotics", "Monte Carlo population matrices of a DGP");
  std::string asy_config, asy_out;
  TheoryOptions topts;
  asy->add_option("--config", asy_config, "DGP (or experiment) JSON file")->required()->check(CLI::ExistingFile);
  asy->add_option("--paths", topts.mc_paths, "Monte Carlo paths per grid point");
  asy->add_option("--grid", topts.grid_size, "Grid points on [0, 1]");
  asy->add_option("--seed", topts.seed, "Random seed");
  asy->add_option("--workers", topts.workers, "Worker threads (0 = all cores)");
  asy->add_option("--out", asy_out, "Output JSON (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    const auto spec = load_dgp(sim_config);
    const auto out = simulate_tvar(spec, sim_n, sim_seed);
    save_csv(sim_out, out.dataset);
    json truth;
    truth["seed"] = sim_seed;
    truth["n"] = sim_n;
    truth["beta1"] = std::vector<double>(out.beta1.data(), out.beta1.data() + out.beta1.size());
    json b2 = json::array();
    for (Index i = 0; i < out.beta2.rows(); ++i) {
      json row = json::array();
      for (Index k = 0; k < out.beta2.cols(); ++k) row.push_back(out.beta2(i, k));
      b2.push_back(row);
    }
    truth["beta2"] = b2;
    truth["errors"] = std::vector<double>(out.errors.data(), out.errors.data() + out.errors.size());
    truth["dgp"] = dgp_to_json(spec);
    emit(truth.dump(2) + "\n", sim_out + ".truth.json");
    return 0;
  }

  if (fit->parsed()) {
    RunFitConfig cfg;
    cfg.estimator = parse_method(fit_estimator);
    cfg.bandwidth = fit_bw.spec();
    cfg.kernel = parse_kernel(fit_kernel);
    cfg.level = fit_level;
    cfg.ridge = fit_ridge;
    cfg.seed = fit_seed;
    if (!fit_weights.empty()) cfg.weights = load_vector(fit_weights);
    const auto d = load_csv(fit_data);
    emit(run_fit(d, cfg).dump(2) + "\n", fit_out);
    return 0;
  }

  if (mc_cons->parsed() || mc_eff->parsed() || mc_cov->parsed()) {
    const auto j = read_json_file(mc.config);
    auto cfg = experiment_from_json(j, std::filesystem::path(mc.config).parent_path());
    if (mc.seed) cfg.seed = *mc.seed;
    if (mc.workers) cfg.workers = *mc.workers;
    if (mc.level) cfg.level = *mc.level;
    if (mc.bandwidth) cfg.bandwidth = BandwidthSpec::explicit_value(*mc.bandwidth);
    if (mc.kernel) cfg.kernel = parse_kernel(*mc.kernel);
    const auto report = mc_cons->parsed()  ? run_mc_consistency(cfg)
                        : mc_eff->parsed() ? run_mc_efficiency(cfg)
                                           : run_mc_coverage(cfg);
    emit(report_to_json(report).dump(2) + "\n", mc.out);
    if (!mc.csv.empty()) emit(report_to_csv(report), mc.csv);
    return 0;
  }

  if (asy->parsed()) {
    const auto spec = load_dgp(asy_config);
    const auto m = theoretical_matrices(spec, topts);
    emit(matrices_to_json(m).dump(2) + "\n", asy_out);
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_numerical(e.code()) ? 3 : 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: schema_error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
