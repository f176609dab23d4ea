#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tvsemi/kernel.hpp"

using namespace tvsemi;

namespace {

const KernelSpec kAll[] = {{KernelKind::Epanechnikov}, {KernelKind::Triangular}, {KernelKind::Quartic}};

double simpson(KernelSpec k, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = eval_kernel(k, a) + eval_kernel(k, b);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * eval_kernel(k, a + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("kernel values") {
  CHECK(eval_kernel(KernelSpec{KernelKind::Epanechnikov}, 0.0) == doctest::Approx(0.75));
  CHECK(eval_kernel(KernelSpec{KernelKind::Epanechnikov}, 1.2) == 0.0);
  CHECK(eval_kernel(KernelSpec{KernelKind::Triangular}, 0.5) == doctest::Approx(0.5));
  CHECK(eval_kernel(KernelSpec{KernelKind::Quartic}, 0.0) == doctest::Approx(15.0 / 16.0));
  for (auto k : kAll) {
    CHECK(eval_kernel(k, -1.0001) == 0.0);
    CHECK(eval_kernel(k, 3.0) == 0.0);
    CHECK(eval_kernel(k, 1.0) == doctest::Approx(0.0));
  }
}

TEST_CASE("kernels are densities") {
  for (auto k : kAll) {
    const double total = simpson(k, -1.0, 0.0, 2000) + simpson(k, 0.0, 1.0, 2000);
    CHECK(std::abs(total - 1.0) <= 1e-10);
    for (double u = -1.5; u <= 1.5; u += 0.01) CHECK(eval_kernel(k, u) >= 0.0);
  }
}

TEST_CASE("kernels are Lipschitz with the stated constant") {
  for (auto k : kAll) {
    const double h = 1e-6;
    double worst = 0.0;
    for (double u = -1.2; u <= 1.2; u += 1e-3) {
      worst = std::max(worst, std::abs(eval_kernel(k, u + h) - eval_kernel(k, u)) / h);
    }
    CHECK(worst <= lipschitz_constant(k) + 1e-6);
    CHECK(worst >= 0.9 * lipschitz_constant(k));
  }
}

TEST_CASE("kernel names round trip") {
  for (auto k : kAll) CHECK(parse_kernel(kernel_name(k.kind)).kind == k.kind);
  CHECK_THROWS_AS(parse_kernel("gaussian"), Error);
}

TEST_CASE("bandwidth resolution") {
  CHECK(BandwidthSpec{}.resolve(1000) == doctest::Approx(0.1));
  CHECK(BandwidthSpec::rule(2.0, 0.4).resolve(1000) == doctest::Approx(2.0 * std::pow(1000.0, -0.4)));
  CHECK(BandwidthSpec::explicit_value(0.5).resolve(10) == 0.5);
  CHECK_THROWS_AS(BandwidthSpec::explicit_value(0.9).resolve(100), Error);
  CHECK_THROWS_AS(BandwidthSpec::explicit_value(0.0).resolve(100), Error);
  CHECK_THROWS_AS(BandwidthSpec::explicit_value(0.01).resolve(100), Error);  // n b = 1
  CHECK_THROWS_AS(BandwidthSpec::rule(1.0, 0.6).resolve(100), Error);
  CHECK_THROWS_AS(BandwidthSpec::rule(-1.0, 0.3).resolve(100), Error);
  CHECK_THROWS_AS(BandwidthSpec::rule(1.0, 1.0 / 3.0).resolve(4), Error);  // b > 0.5
}

TEST_CASE("hand-evaluated boundary row") {
  const auto row = weights_row<double>(0, 5, 0.5, KernelSpec{});
  CHECK(row(0) == doctest::Approx(0.75 / 1.65).epsilon(1e-12));
  CHECK(row(1) == doctest::Approx(0.63 / 1.65).epsilon(1e-12));
  CHECK(row(2) == doctest::Approx(0.27 / 1.65).epsilon(1e-12));
  CHECK(row(3) == 0.0);
  CHECK(row(4) == 0.0);
  CHECK(std::round(row(0) * 1e4) / 1e4 == doctest::Approx(0.4545));
  CHECK(std::round(row(1) * 1e4) / 1e4 == doctest::Approx(0.3818));
  CHECK(std::round(row(2) * 1e4) / 1e4 == doctest::Approx(0.1636));
}

TEST_CASE("weight rows are normalized, nonnegative and banded") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const Index n = std::uniform_int_distribution<Index>(4, 400)(rng);
    const double b = std::uniform_real_distribution<double>(2.0 / n, 0.5)(rng);
    const Index i = std::uniform_int_distribution<Index>(0, n - 1)(rng);
    const auto k = kAll[trial % 3];
    const auto row = weights_row<double>(i, n, b, k);
    CHECK(std::abs(row.sum() - 1.0) <= 1e-12);
    CHECK(row.minCoeff() >= 0.0);
    for (Index j = 0; j < n; ++j) {
      if (std::abs(static_cast<double>(i - j)) > n * b) CHECK(row(j) == 0.0);
    }
  }
}

TEST_CASE("interior symmetry and translation invariance") {
  for (auto k : kAll) {
    const auto row = weights_row<double>(50, 101, 0.1, k);
    for (Index d = 1; d <= 15; ++d) CHECK(row(50 - d) == doctest::Approx(row(50 + d)).epsilon(1e-14));
    const auto other = weights_row<double>(30, 101, 0.1, k);
    for (Index d = -10; d <= 10; ++d) CHECK(row(50 + d) == doctest::Approx(other(30 + d)).epsilon(1e-14));
  }
}

TEST_CASE("band and dense rows agree") {
  const auto band = weights_band<double>(7, 40, 0.2, KernelSpec{KernelKind::Quartic});
  const auto row = weights_row<double>(7, 40, 0.2, KernelSpec{KernelKind::Quartic});
  CHECK(band.first == 0);
  for (Index k = 0; k < band.size(); ++k) CHECK(row(band.first + k) == band.weight(k));
  CHECK_THROWS_AS(weights_band<double>(40, 40, 0.2, KernelSpec{}), Error);
}

TEST_CASE("local linear blocks") {
  const Matrix<double> ones = Matrix<double>::Ones(101, 1);
  const auto interior = local_linear_blocks(50, 0.1, KernelSpec{}, ones);
  CHECK(interior.s0(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(interior.s1(0, 0)) <= 1e-14);
  CHECK(interior.s2(0, 0) > 0.0);

  const auto edge = local_linear_blocks(0, 0.5, KernelSpec{}, Matrix<double>(Matrix<double>::Ones(5, 1)));
  // direct summation: (0.63 * 0.4 + 0.27 * 0.8) / 1.65
  CHECK(edge.s1(0, 0) == doctest::Approx(0.468 / 1.65).epsilon(1e-12));
  CHECK(edge.s2(0, 0) == doctest::Approx((0.63 * 0.16 + 0.27 * 0.64) / 1.65).epsilon(1e-12));

  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  Matrix<double> x2(60, 3);
  for (Index r = 0; r < 60; ++r)
    for (Index c = 0; c < 3; ++c) x2(r, c) = nd(rng);
  const auto blk = local_linear_blocks(11, 0.2, KernelSpec{KernelKind::Triangular}, x2);
  CHECK((blk.s0 - blk.s0.transpose()).norm() <= 1e-14);
  CHECK((blk.s2 - blk.s2.transpose()).norm() <= 1e-14);
  CHECK(min_eigenvalue(blk.s0) >= -1e-12);
  CHECK(min_eigenvalue(blk.s2) >= -1e-12);
}
