#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "tvsemi/error.hpp"
#include "tvsemi/harness.hpp"

namespace tvsemi {

namespace {

std::string number_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> allowed, const char* where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::SchemaError, std::string(where) + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
T get_as(const json& j, const char* what) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string(what) + ": " + e.what());
  }
}

double get_number(const json& j, const char* what) {
  if (!j.is_number()) fail(ErrorCode::SchemaError, std::string(what) + " must be a number");
  return j.get<double>();
}

Index get_count(const json& j, const char* what) {
  if (!j.is_number_integer()) fail(ErrorCode::SchemaError, std::string(what) + " must be an integer");
  return j.get<Index>();
}

/// "sine(0.3, 0.2, 1)" -> name "sine", args {0.3, 0.2, 1}.
CoefFunction parse_preset(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open ||
      text.find_first_not_of(" \t", close + 1) != std::string::npos) {
    fail(ErrorCode::SchemaError, "coefficient preset '" + text + "' is not of the form name(args)");
  }
  std::string name = text.substr(0, open);
  name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
  std::vector<double> args;
  std::stringstream body(text.substr(open + 1, close - open - 1));
  std::string item;
  while (std::getline(body, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) fail(ErrorCode::SchemaError, "empty argument in '" + text + "'");
    const std::string_view s(item.data() + b, e - b + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(ErrorCode::SchemaError, "malformed number in '" + text + "'");
    }
    args.push_back(v);
  }
  const auto need = [&](std::size_t k) {
    if (args.size() != k) {
      fail(ErrorCode::SchemaError, "'" + name + "' takes " + std::to_string(k) + " arguments");
    }
  };
  if (name == "constant") {
    need(1);
    return CoefFunction::constant(args[0]);
  }
  if (name == "linear") {
    need(2);
    return CoefFunction::linear(args[0], args[1]);
  }
  if (name == "sine") {
    need(3);
    return CoefFunction::sine(args[0], args[1], args[2]);
  }
  fail(ErrorCode::SchemaError, "unknown coefficient preset '" + name + "'");
}

json noise_to_json(const DgpSpec& s) {
  switch (s.noise) {
    case NoiseDist::Gaussian: return "gaussian";
    case NoiseDist::Uniform: return "uniform";
    case NoiseDist::StudentT: return json{{"student_t", s.df}};
  }
  return nullptr;
}

CovariateSpec covariate_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaError, "covariate entries must be objects");
  reject_unknown(j, {"intercept", "scale", "ma", "ar_decay", "time_varying"}, "covariate");
  CovariateSpec c;
  if (j.contains("intercept")) c.intercept = get_as<bool>(j["intercept"], "intercept");
  if (j.contains("scale")) c.scale = coef_from_json(j["scale"]);
  if (j.contains("ma")) c.ma = get_as<std::vector<double>>(j["ma"], "ma");
  if (j.contains("ar_decay")) c.ar_decay = get_number(j["ar_decay"], "ar_decay");
  if (j.contains("time_varying")) c.time_varying = get_as<bool>(j["time_varying"], "time_varying");
  if (!(std::abs(c.ar_decay) < 1.0)) fail(ErrorCode::InvalidArgument, "ar_decay must lie in (-1, 1)");
  return c;
}

json covariate_to_json(const CovariateSpec& c) {
  json j;
  j["intercept"] = c.intercept;
  j["scale"] = coef_to_json(c.scale);
  if (!c.ma.empty()) j["ma"] = c.ma;
  j["ar_decay"] = c.ar_decay;
  j["time_varying"] = c.time_varying;
  return j;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

CoefFunction coef_from_json(const json& j) {
  if (j.is_number()) return CoefFunction::constant(j.get<double>());
  if (j.is_string()) return parse_preset(j.get<std::string>());
  if (j.is_object()) {
    reject_unknown(j, {"kind", "a", "b", "freq"}, "coefficient");
    if (!j.contains("kind")) fail(ErrorCode::SchemaError, "coefficient object needs 'kind'");
    const auto kind = get_as<std::string>(j["kind"], "kind");
    const double a = j.contains("a") ? get_number(j["a"], "a") : 0.0;
    const double b = j.contains("b") ? get_number(j["b"], "b") : 0.0;
    const double freq = j.contains("freq") ? get_number(j["freq"], "freq") : 1.0;
    if (kind == "constant") return CoefFunction::constant(a);
    if (kind == "linear") return CoefFunction::linear(a, b);
    if (kind == "sine") return CoefFunction::sine(a, b, freq);
    fail(ErrorCode::SchemaError, "unknown coefficient kind '" + kind + "'");
  }
  fail(ErrorCode::SchemaError, "coefficient must be a number, preset string or object");
}

json coef_to_json(const CoefFunction& f) {
  switch (f.kind) {
    case CoefFunction::Kind::Constant: return "constant(" + number_text(f.a) + ")";
    case CoefFunction::Kind::Linear: return "linear(" + number_text(f.a) + "," + number_text(f.b) + ")";
    case CoefFunction::Kind::Sine:
      return "sine(" + number_text(f.a) + "," + number_text(f.b) + "," + number_text(f.freq) + ")";
  }
  return nullptr;
}

DgpSpec dgp_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorCode::SchemaError, "dgp must be an object");
  reject_unknown(j, {"ar", "gamma", "covariates", "sigma", "noise", "stable"}, "dgp");
  DgpSpec s;
  if (j.contains("ar")) {
    if (!j["ar"].is_array()) fail(ErrorCode::SchemaError, "ar must be an array");
    for (const auto& a : j["ar"]) s.ar.push_back(coef_from_json(a));
  }
  if (j.contains("gamma")) {
    if (!j["gamma"].is_array()) fail(ErrorCode::SchemaError, "gamma must be an array");
    for (const auto& g : j["gamma"]) s.gamma.push_back(coef_from_json(g));
  }
  if (j.contains("covariates")) {
    if (!j["covariates"].is_array()) fail(ErrorCode::SchemaError, "covariates must be an array");
    for (const auto& c : j["covariates"]) s.covariates.push_back(covariate_from_json(c));
  }
  if (j.contains("sigma")) s.sigma = coef_from_json(j["sigma"]);
  if (j.contains("noise")) {
    const auto& nz = j["noise"];
    if (nz.is_string()) {
      const auto name = nz.get<std::string>();
      if (name == "gaussian") {
        s.noise = NoiseDist::Gaussian;
      } else if (name == "uniform") {
        s.noise = NoiseDist::Uniform;
      } else {
        fail(ErrorCode::SchemaError, "unknown noise '" + name + "'");
      }
    } else if (nz.is_object() && nz.contains("student_t") && nz.size() == 1) {
      s.noise = NoiseDist::StudentT;
      s.df = get_number(nz["student_t"], "student_t");
      if (!(s.df > 2.0)) fail(ErrorCode::InvalidArgument, "student_t needs df > 2");
    } else {
      fail(ErrorCode::SchemaError, "noise must be \"gaussian\", \"uniform\" or {\"student_t\": df}");
    }
  }
  if (!j.contains("stable")) fail(ErrorCode::SchemaError, "dgp needs a 'stable' mask");
  for (const auto& b : j["stable"]) s.stable_mask.push_back(get_as<bool>(b, "stable"));
  s.validate();
  return s;
}

json dgp_to_json(const DgpSpec& s) {
  json j;
  j["ar"] = json::array();
  for (const auto& a : s.ar) j["ar"].push_back(coef_to_json(a));
  j["gamma"] = json::array();
  for (const auto& g : s.gamma) j["gamma"].push_back(coef_to_json(g));
  j["covariates"] = json::array();
  for (const auto& c : s.covariates) j["covariates"].push_back(covariate_to_json(c));
  j["sigma"] = coef_to_json(s.sigma);
  j["noise"] = noise_to_json(s);
  j["stable"] = json::array();
  for (bool b : s.stable_mask) j["stable"].push_back(b);
  return j;
}

BandwidthSpec bandwidth_from_json(const json& j) {
  if (j.is_number()) return BandwidthSpec::explicit_value(j.get<double>());
  if (j.is_object()) {
    reject_unknown(j, {"c", "exponent"}, "bandwidth");
    BandwidthSpec b;
    if (j.contains("c")) b.c = get_number(j["c"], "c");
    if (j.contains("exponent")) b.exponent = get_number(j["exponent"], "exponent");
    if (!(b.c > 0.0) || !(b.exponent > 0.25 && b.exponent < 0.5)) {
      fail(ErrorCode::InvalidArgument, "bandwidth rule needs c > 0 and exponent in (1/4, 1/2)");
    }
    return b;
  }
  fail(ErrorCode::SchemaError, "bandwidth must be a number or {\"c\", \"exponent\"}");
}

json bandwidth_to_json(const BandwidthSpec& b) {
  if (b.fixed) return *b.fixed;
  return json{{"c", b.c}, {"exponent", b.exponent}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void ExperimentConfig::validate() const {
  dgp.validate();
  const auto report = validate_stability(dgp);
  if (!report.ok) {
    fail(ErrorCode::StabilityViolation,
         "spectral radius " + std::to_string(report.worst_radius) + " at u = " + std::to_string(report.worst_u));
  }
  if (n_grid.empty()) fail(ErrorCode::InvalidArgument, "n_grid is empty");
  if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
      std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end()) {
    fail(ErrorCode::InvalidArgument, "n_grid must be strictly increasing");
  }
  if (n_grid.front() < 1) fail(ErrorCode::InvalidArgument, "sample sizes must be positive");
  for (Index n : n_grid) bandwidth.resolve(n);
  if (replications < 1) fail(ErrorCode::InvalidArgument, "replications must be at least 1");
  if (estimators.empty()) fail(ErrorCode::InvalidArgument, "no estimators selected");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorCode::InvalidArgument, "level must be in (0, 1)");
  if (ridge && !(*ridge >= 0.0)) fail(ErrorCode::InvalidArgument, "ridge must be non-negative");
  if (batches < 2) fail(ErrorCode::InvalidArgument, "batches must be at least 2");
  if (theory_paths < 0) fail(ErrorCode::InvalidArgument, "theory_paths must be non-negative");
  if (theory_grid < 2) fail(ErrorCode::InvalidArgument, "theory_grid must be at least 2");
}

json ExperimentConfig::canonical() const {
  json j;
  j["dgp"] = dgp_to_json(dgp);
  j["n_grid"] = n_grid;
  j["replications"] = replications;
  j["bandwidth"] = bandwidth_to_json(bandwidth);
  j["kernel"] = std::string(kernel_name(kernel.kind));
  j["estimators"] = json::array();
  for (auto m : estimators) j["estimators"].push_back(std::string(method_name(m)));
  j["level"] = level;
  j["seed"] = seed;
  j["ridge"] = ridge ? json(*ridge) : json(nullptr);
  j["batches"] = batches;
  j["theory_paths"] = theory_paths;
  j["theory_grid"] = theory_grid;
  return j;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(canonical().dump()); }

ExperimentConfig experiment_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail(ErrorCode::SchemaError, "experiment config must be an object");
  reject_unknown(j,
                 {"dgp", "dgp_file", "n_grid", "replications", "bandwidth", "kernel", "estimators", "level",
                  "seed", "workers", "ridge", "batches", "theory_paths", "theory_grid", "include_timing"},
                 "experiment");
  ExperimentConfig cfg;
  if (j.contains("dgp") == j.contains("dgp_file")) {
    fail(ErrorCode::SchemaError, "give exactly one of 'dgp' and 'dgp_file'");
  }
  if (j.contains("dgp")) {
    cfg.dgp = dgp_from_json(j["dgp"]);
  } else {
    std::filesystem::path p = get_as<std::string>(j["dgp_file"], "dgp_file");
    if (p.is_relative()) p = base_dir / p;
    cfg.dgp = dgp_from_json(read_json_file(p));
  }
  if (!j.contains("n_grid") || !j["n_grid"].is_array()) fail(ErrorCode::SchemaError, "n_grid must be an array");
  for (const auto& n : j["n_grid"]) cfg.n_grid.push_back(get_count(n, "n_grid"));
  if (j.contains("replications")) cfg.replications = get_count(j["replications"], "replications");
  if (j.contains("bandwidth")) cfg.bandwidth = bandwidth_from_json(j["bandwidth"]);
  if (j.contains("kernel")) cfg.kernel = parse_kernel(get_as<std::string>(j["kernel"], "kernel"));
  if (j.contains("estimators")) {
    cfg.estimators.clear();
    for (const auto& m : j["estimators"]) {
      const auto method = parse_method(get_as<std::string>(m, "estimators"));
      if (std::find(cfg.estimators.begin(), cfg.estimators.end(), method) == cfg.estimators.end()) {
        cfg.estimators.push_back(method);
      }
    }
  }
  if (j.contains("level")) cfg.level = get_number(j["level"], "level");
  if (j.contains("seed")) cfg.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("workers")) cfg.workers = static_cast<unsigned>(get_count(j["workers"], "workers"));
  if (j.contains("ridge") && !j["ridge"].is_null()) cfg.ridge = get_number(j["ridge"], "ridge");
  if (j.contains("batches")) cfg.batches = get_count(j["batches"], "batches");
  if (j.contains("theory_paths")) cfg.theory_paths = get_count(j["theory_paths"], "theory_paths");
  if (j.contains("theory_grid")) cfg.theory_grid = get_count(j["theory_grid"], "theory_grid");
  if (j.contains("include_timing")) cfg.include_timing = get_as<bool>(j["include_timing"], "include_timing");
  cfg.validate();
  return cfg;
}

}  // namespace tvsemi
