#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <random>

#include "support.hpp"
#include "tvsemi/harness.hpp"

using namespace tvsemi;

namespace {

const std::filesystem::path kData = TVSEMI_TEST_DATA;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "tvsemi_harness_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

json reference_dgp() {
  return json::parse(R"j({"ar": ["sine(0.3, 0.2, 1)"], "gamma": ["constant(1.5)"],
                         "covariates": [{"ar_decay": 0.5}], "stable": [false, true]})j");
}

json noiseless_dgp() {
  return json::parse(R"j({"ar": [0.4], "gamma": [1.5], "covariates": [{"ar_decay": 0.5}],
                         "sigma": 0, "stable": [false, true]})j");
}

ExperimentConfig small_experiment(json dgp, std::vector<Index> n_grid, Index reps) {
  json j;
  j["dgp"] = std::move(dgp);
  j["n_grid"] = n_grid;
  j["replications"] = reps;
  j["seed"] = 5;
  j["workers"] = 1;
  j["batches"] = 4;
  return experiment_from_json(j);
}

}  // namespace

TEST_CASE("CSV parsing") {
  const auto d = parse_csv("y,x1_1,x2_1\n1,2,3\n4,5,6\n7,8,9\n");
  CHECK(d.n() == 3);
  CHECK(d.p1() == 1);
  CHECK(d.p2() == 1);
  CHECK(d.y(2) == 7.0);
  CHECK(d.x2(1, 0) == 6.0);

  const auto shuffled = parse_csv("x2_2,x1_1,y,x2_1\r\n1,2,3,4\r\n\n5,6,7,8\r\n");
  CHECK(shuffled.n() == 2);
  CHECK(shuffled.y(1) == 7.0);
  CHECK(shuffled.x2(0, 0) == 4.0);
  CHECK(shuffled.x2(0, 1) == 1.0);

  const auto no_x2 = parse_csv("x1_1,y\n1,-2.5e-3\n");
  CHECK(no_x2.p2() == 0);
  CHECK(no_x2.y(0) == -2.5e-3);
}

TEST_CASE("CSV errors") {
  CHECK(code_of([] { parse_csv("x1_1,x2_1\n1,2\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_csv("y,x2_1\n1,2\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_csv("y,x1_1,z\n1,2,3\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_csv("y,x1_1,x1_1\n1,2,3\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_csv("y,x1_2\n1,2\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_csv(""); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { parse_csv("y,x1_1\n1,2\n3\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_csv("y,x1_1\n1,2,3\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_csv("y,x1_1\n1,abc\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_csv("y,x1_1\n1,2x\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { parse_csv("y,x1_1\n1,\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { load_csv(scratch("missing.csv")); }) == ErrorCode::IoError);
}

TEST_CASE("CSV round trip keeps full precision") {
  std::mt19937_64 rng(1);
  Dataset<double> d{tvsemi::testing::gaussian_matrix(25, 1, rng) * 1e-7,
                    tvsemi::testing::gaussian_matrix(25, 2, rng) * 3e5,
                    tvsemi::testing::gaussian_matrix(25, 3, rng)};
  d.y(0) = 0.1;
  d.x1(3, 1) = -1.0 / 3.0;
  const auto path = scratch("roundtrip.csv");
  save_csv(path, d);
  const auto back = load_csv(path);
  CHECK(back.y == d.y);
  CHECK(back.x1 == d.x1);
  CHECK(back.x2 == d.x2);
}

TEST_CASE("weight vectors") {
  const auto path = scratch("weights.txt");
  std::ofstream(path) << "p\n1.5\n2\n\n0.25\n";
  const auto w = load_vector(path);
  REQUIRE(w.size() == 3);
  CHECK(w(2) == 0.25);
}

TEST_CASE("coefficient and DGP configs") {
  CHECK(coef_from_json(json(2.5)).a == 2.5);
  const auto s = coef_from_json(json("sine( 0.3, 0.2 ,1)"));
  CHECK(s.kind == CoefFunction::Kind::Sine);
  CHECK(s.b == 0.2);
  CHECK(coef_from_json(json::parse(R"j({"kind": "linear", "a": 1, "b": -1})j"))(1.0) == 0.0);
  CHECK(code_of([] { coef_from_json(json("cosine(1)")); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { coef_from_json(json("linear(1)")); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { coef_from_json(json("constant(x)")); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { coef_from_json(json::array()); }) == ErrorCode::SchemaError);
  for (const auto& f : {CoefFunction::constant(0.1), CoefFunction::linear(-1e-3, 2.0 / 3.0),
                        CoefFunction::sine(0.3, 0.2, 1.5)}) {
    const auto back = coef_from_json(coef_to_json(f));
    CHECK(back.kind == f.kind);
    CHECK(back.a == f.a);
    CHECK(back.b == f.b);
  }

  auto j = reference_dgp();
  j["noise"] = json::parse(R"j({"student_t": 6})j");
  j["sigma"] = "linear(0.5, 1)";
  const auto dgp = dgp_from_json(j);
  CHECK(dgp.noise == NoiseDist::StudentT);
  CHECK(dgp.df == 6.0);
  CHECK(dgp.sigma(1.0) == 1.5);
  CHECK(dgp_to_json(dgp_from_json(dgp_to_json(dgp))) == dgp_to_json(dgp));

  auto bad = reference_dgp();
  bad["colour"] = "red";
  CHECK(code_of([&] { dgp_from_json(bad); }) == ErrorCode::SchemaError);
  bad = reference_dgp();
  bad.erase("stable");
  CHECK(code_of([&] { dgp_from_json(bad); }) == ErrorCode::SchemaError);
  bad = reference_dgp();
  bad["stable"] = {true, true};
  CHECK(code_of([&] { dgp_from_json(bad); }) == ErrorCode::InvalidArgument);
  bad = reference_dgp();
  bad["noise"] = "cauchy";
  CHECK(code_of([&] { dgp_from_json(bad); }) == ErrorCode::SchemaError);
}

TEST_CASE("experiment configs") {
  const auto dgp_path = scratch("dgp.json");
  std::ofstream(dgp_path) << reference_dgp().dump();
  json j = json::parse(R"j({"dgp_file": "dgp.json", "n_grid": [100, 400], "replications": 10,
                           "bandwidth": {"c": 1.2, "exponent": 0.3}, "estimators": ["optimal", "average"],
                           "level": 0.9, "seed": 42, "workers": 2})j");
  const auto cfg = experiment_from_json(j, dgp_path.parent_path());
  CHECK(cfg.dgp.p1() == 1);
  CHECK(cfg.estimators.size() == 2);
  CHECK(cfg.bandwidth.c == 1.2);
  CHECK(cfg.workers == 2);

  auto other = cfg;
  other.workers = 7;
  other.include_timing = true;
  CHECK(other.hash() == cfg.hash());
  other.seed = 43;
  CHECK(other.hash() != cfg.hash());
  CHECK(cfg.hash().size() == 16);

  auto bad = j;
  bad["n_grid"] = {400, 100};
  CHECK(code_of([&] { experiment_from_json(bad, dgp_path.parent_path()); }) == ErrorCode::InvalidArgument);
  bad = j;
  bad["replications"] = 0;
  CHECK(code_of([&] { experiment_from_json(bad, dgp_path.parent_path()); }) == ErrorCode::InvalidArgument);
  bad = j;
  bad["bandwidth"] = 0.9;
  CHECK(code_of([&] { experiment_from_json(bad, dgp_path.parent_path()); }) == ErrorCode::InvalidArgument);
  bad = j;
  bad["estimators"] = {"ols"};
  CHECK(code_of([&] { experiment_from_json(bad, dgp_path.parent_path()); }) == ErrorCode::InvalidArgument);
  bad = j;
  bad["extra"] = 1;
  CHECK(code_of([&] { experiment_from_json(bad, dgp_path.parent_path()); }) == ErrorCode::SchemaError);
  bad = j;
  bad["dgp"] = reference_dgp();
  CHECK(code_of([&] { experiment_from_json(bad, dgp_path.parent_path()); }) == ErrorCode::SchemaError);
  CHECK(code_of([&] { read_json_file(scratch("nope.json")); }) == ErrorCode::IoError);
  std::ofstream(scratch("broken.json")) << "{\"a\": ";
  CHECK(code_of([&] { read_json_file(scratch("broken.json")); }) == ErrorCode::ParseError);
}

TEST_CASE("run_fit documents") {
  SUBCASE("noiseless fixture") {
    const auto d = load_csv(kData / "noiseless.csv");
    RunFitConfig cfg;
    cfg.bandwidth = BandwidthSpec::explicit_value(0.2);
    cfg.ridge = 0.0;
    cfg.seed = 17;
    const auto doc = run_fit(d, cfg);
    CHECK(doc["beta1"][0].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(doc["beta1"][1].get<double>() == doctest::Approx(-2.0).epsilon(1e-6));
    CHECK(doc["seed"] == 17);
    CHECK(doc["b_used"] == 0.2);
    CHECK(doc["estimator"] == "partial-nw");
    CHECK(doc["beta2_path"]["values"].size() == 200);
    CHECK(doc["beta2_path"]["u"][199] == 1.0);
    CHECK(doc["beta2_path"]["values"][50][1].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(doc["ci"].size() == 2);
    CHECK(doc["cov"].size() == 2);
    CHECK(doc["sigma2_path"].size() == 200);
    for (auto m : {Beta1Method::PartialLL, Beta1Method::Optimal, Beta1Method::Average}) {
      cfg.estimator = m;
      const auto other = run_fit(d, cfg);
      CHECK(other["beta1"][1].get<double>() == doctest::Approx(-2.0).epsilon(1e-6));
    }
  }
  SUBCASE("hand-computed least squares") {
    const auto d = load_csv(kData / "ols_p2_zero.csv");
    RunFitConfig cfg;
    cfg.bandwidth = BandwidthSpec::explicit_value(0.5);
    const auto doc = run_fit(d, cfg);
    // sum x y / sum x^2 = 61 / 30
    CHECK(doc["beta1"][0].get<double>() == doctest::Approx(61.0 / 30.0).epsilon(1e-12));
    CHECK(doc["p2"] == 0);
  }
  SUBCASE("validation happens first") {
    Dataset<double> d{Vector<double>::Ones(40), Matrix<double>::Ones(40, 1), Matrix<double>::Zero(40, 1)};
    RunFitConfig cfg;
    cfg.ridge = 0.0;
    cfg.bandwidth = BandwidthSpec::explicit_value(0.9);
    CHECK(code_of([&] { run_fit(d, cfg); }) == ErrorCode::InvalidArgument);
    cfg.bandwidth = BandwidthSpec::explicit_value(0.3);
    CHECK(code_of([&] { run_fit(d, cfg); }) == ErrorCode::SingularSmoother);
    cfg.estimator = Beta1Method::Weighted;
    CHECK(code_of([&] { run_fit(d, cfg); }) == ErrorCode::DimensionMismatch);
  }
  SUBCASE("weighted") {
    const auto d = load_csv(kData / "noiseless.csv");
    RunFitConfig cfg;
    cfg.estimator = Beta1Method::Weighted;
    cfg.ridge = 0.0;
    cfg.weights = Vector<double>::LinSpaced(200, 1.0, 2.0);
    CHECK(run_fit(d, cfg)["estimator"] == "weighted");
  }
}

TEST_CASE("Monte Carlo on noiseless data") {
  auto cfg = small_experiment(noiseless_dgp(), {100, 200}, 6);
  cfg.ridge = 0.0;
  cfg.estimators = {Beta1Method::PartialNW, Beta1Method::Optimal, Beta1Method::Average};
  const auto cons = run_mc_consistency(cfg);
  REQUIRE(cons.cells.size() == 6);
  for (const auto& c : cons.cells) {
    INFO(method_name(c.estimator) << " n=" << c.n);
    CHECK(c.rmse.maxCoeff() < 1e-6);
    CHECK(c.failures == 0);
  }
  const auto cov = run_mc_coverage(cfg);
  for (const auto& c : cov.cells) CHECK(c.coverage.minCoeff() == 1.0);
}

TEST_CASE("single replication") {
  const auto cfg = small_experiment(reference_dgp(), {200, 400}, 1);
  const auto rep = run_mc_consistency(cfg);
  for (const auto& c : rep.cells) {
    CHECK(c.successes == 1);
    CHECK(c.emp_cov.norm() == 0.0);
    CHECK(c.rmse(0) == doctest::Approx(std::abs(c.bias(0))));
  }
}

TEST_CASE("report invariants and determinism") {
  auto cfg = small_experiment(reference_dgp(), {150, 300}, 24);
  cfg.estimators = {Beta1Method::Optimal, Beta1Method::PartialNW, Beta1Method::Average, Beta1Method::Weighted,
                    Beta1Method::PartialLL};
  const auto a = run_mc_efficiency(cfg);
  for (const auto& c : a.cells) {
    CHECK(c.successes == 24);
    CHECK(c.coverage.minCoeff() >= 0.0);
    CHECK(c.coverage.maxCoeff() <= 1.0);
    CHECK((c.rmse.array() >= c.bias.array().abs() - 1e-15).all());
    CHECK(c.batch_traces.size() == 4);
  }
  REQUIRE(a.efficiency);
  CHECK(a.efficiency->gaps.size() == 4);

  cfg.workers = 3;
  const auto b = run_mc_efficiency(cfg);
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
  CHECK(report_to_csv(a) == report_to_csv(b));

  const auto csv = report_to_csv(a);
  std::size_t rows = 0;
  for (std::size_t pos = csv.find('\n'); pos != std::string::npos; pos = csv.find('\n', pos + 1)) ++rows;
  CHECK(rows == 1 + a.cells.size());
  CHECK(csv.find(a.config_hash) != std::string::npos);
  CHECK(report_to_json(a)["cells"][0]["config_hash"] == cfg.hash());
  CHECK_FALSE(report_to_json(a)["cells"][0].contains("mean_runtime"));

  cfg.estimators = {Beta1Method::PartialNW};
  CHECK(code_of([&] { run_mc_efficiency(cfg); }) == ErrorCode::InvalidArgument);
  cfg.n_grid = {300};
  CHECK(code_of([&] { run_mc_consistency(cfg); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("failure budget") {
  json j;
  j["dgp"] = reference_dgp();
  j["n_grid"] = {7};
  j["replications"] = 5;
  j["bandwidth"] = 0.3;
  const auto cfg = experiment_from_json(j);
  CHECK(code_of([&] { run_mc_coverage(cfg); }) == ErrorCode::ReplicationBudgetExceeded);
}

TEST_CASE("coverage at level one half") {
  auto cfg = small_experiment(reference_dgp(), {300}, 400);
  cfg.level = 0.5;
  const auto rep = run_mc_coverage(cfg);
  CHECK(std::abs(rep.cells[0].coverage(0) - 0.5) <= 0.05);
}
