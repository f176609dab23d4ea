#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tvsemi/smoother.hpp"

using namespace tvsemi;
using tvsemi::testing::make_dataset;
using tvsemi::testing::vec;

namespace {

SmootherOptions exact(double b, SmoothMethod m = SmoothMethod::NadarayaWatson) {
  SmootherOptions o;
  o.bandwidth = b;
  o.method = m;
  o.ridge = 0.0;
  return o;
}

}  // namespace

TEST_CASE("moment smoothers on constant regressors") {
  Dataset<double> d{Vector<double>::Constant(30, 2.5), Matrix<double>::Ones(30, 1), Matrix<double>::Ones(30, 1)};
  for (Index i = 0; i < 30; ++i) {
    const auto m = moment_smooth(d, 0.2, KernelSpec{}, i);
    CHECK(m.s3(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.s1(0) == doctest::Approx(2.5).epsilon(1e-14));
  }
}

TEST_CASE("moment smoother by direct summation") {
  Dataset<double> d{Vector<double>::Ones(5), Matrix<double>::Ones(5, 1), Matrix<double>(5, 1)};
  d.x2 << 1, 2, 3, 4, 5;
  const auto m = moment_smooth(d, 0.5, KernelSpec{}, 0);
  CHECK(m.s1(0) == doctest::Approx(2.82 / 1.65).epsilon(1e-12));
  CHECK(m.s3(0, 0) == doctest::Approx((0.75 + 0.63 * 4 + 0.27 * 9) / 1.65).epsilon(1e-12));
  const Vector<double> w = vec({2, 1, 1, 1, 1});
  const auto mw = moment_smooth(d, 0.5, KernelSpec{}, 0, w);
  CHECK(mw.s1(0) == doctest::Approx(3.57 / 1.65).epsilon(1e-12));
}

TEST_CASE("noiseless constant beta2: q1 - q2 beta1 recovers beta2") {
  const Vector<double> beta1 = vec({1.0, -2.0});
  const Vector<double> beta2 = vec({0.5, -0.25});
  const auto d = make_dataset(60, beta1, 2, [&](double) { return beta2; }, 0.0, 3);
  const auto pc = partial_coeffs(d, exact(0.2));
  for (Index i = 0; i < d.n(); ++i) {
    const Vector<double> b = pc.q1.row(i).transpose() - pc.q2[static_cast<std::size_t>(i)] * beta1;
    CHECK((b - beta2).norm() <= 1e-10);
  }
  SmootherOptions ridge = exact(0.2);
  ridge.ridge.reset();
  const auto pr = partial_coeffs(d, ridge);
  double worst = 0.0;
  for (Index i = 0; i < d.n(); ++i) {
    const Vector<double> b = pr.q1.row(i).transpose() - pr.q2[static_cast<std::size_t>(i)] * beta1;
    worst = std::max(worst, (b - beta2).norm());
  }
  CHECK(worst > 0.0);
  CHECK(worst < 20.0 / 60.0);
}

TEST_CASE("constant response gives constant q1") {
  Dataset<double> d{Vector<double>::Constant(25, -1.75), Matrix<double>::Ones(25, 1), Matrix<double>::Ones(25, 1)};
  d.x1.col(0).setLinSpaced(25, 0.0, 1.0);
  const auto pc = partial_coeffs(d, exact(0.3));
  for (Index i = 0; i < 25; ++i) CHECK(pc.q1(i, 0) == doctest::Approx(-1.75).epsilon(1e-13));
}

TEST_CASE("local linear reproduces a linear beta2") {
  const Index n = 50;
  const Vector<double> beta1 = vec({0.7});
  const auto b2 = [](double u) { return vec({1.0 + 2.0 * u, -0.5 + u}); };
  const auto d = make_dataset(n, beta1, 2, b2, 0.0, 8);
  const auto pc = partial_coeffs(d, exact(0.2, SmoothMethod::LocalLinear));
  for (Index i = 0; i < n; ++i) {
    const double u = static_cast<double>(i + 1) / n;
    const Vector<double> b = pc.q1.row(i).transpose() - pc.q2[static_cast<std::size_t>(i)] * beta1;
    CHECK((b - b2(u)).norm() <= 1e-9);
  }
  // the Nadaraya-Watson fit is biased at the boundary for the same data
  const auto nw = partial_coeffs(d, exact(0.2));
  const Vector<double> b0 = nw.q1.row(0).transpose() - nw.q2[0] * beta1;
  CHECK((b0 - b2(1.0 / n)).norm() > 1e-3);
}

TEST_CASE("residualization") {
  const Vector<double> beta1 = vec({1.0});
  auto d = make_dataset(50, beta1, 1, [](double) { return vec({0.8}); }, 0.0, 4);
  SUBCASE("p2 = 0 is the identity") {
    Dataset<double> e{d.y, d.x1, Matrix<double>(50, 0)};
    const auto r = residualize(e, PartialCoeffs<double>{});
    CHECK(r.y_hat == e.y);
    CHECK(r.x1_hat == e.x1);
  }
  SUBCASE("response explained by x2 alone") {
    Dataset<double> e{d.x2.col(0) * 0.8, d.x1, d.x2};
    const auto r = residualize(e, partial_coeffs(e, exact(0.2)));
    CHECK(r.y_hat.cwiseAbs().maxCoeff() <= 1e-12);
  }
  SUBCASE("shift by x1 delta") {
    const Vector<double> delta = vec({-0.3});
    Dataset<double> shifted{d.y + d.x1 * delta, d.x1, d.x2};
    const auto opts = exact(0.25);
    const auto r = residualize(d, partial_coeffs(d, opts));
    const auto rs = residualize(shifted, partial_coeffs(shifted, opts));
    CHECK((rs.y_hat - r.y_hat - r.x1_hat * delta).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("linearity in the response") {
  std::mt19937_64 rng(9);
  const Matrix<double> x1 = tvsemi::testing::gaussian_matrix(80, 2, rng);
  const Matrix<double> x2 = tvsemi::testing::gaussian_matrix(80, 2, rng, 1.0);
  const Vector<double> ya = tvsemi::testing::gaussian_matrix(80, 1, rng);
  const Vector<double> yb = tvsemi::testing::gaussian_matrix(80, 1, rng);
  SmootherOptions opts;
  opts.bandwidth = 0.2;
  const auto qa = partial_coeffs(Dataset<double>{ya, x1, x2}, opts);
  const auto qb = partial_coeffs(Dataset<double>{yb, x1, x2}, opts);
  const auto qc = partial_coeffs(Dataset<double>{Vector<double>(2.0 * ya - 3.0 * yb), x1, x2}, opts);
  CHECK((qc.q1 - (2.0 * qa.q1 - 3.0 * qb.q1)).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("constant weights cancel") {
  const auto d = make_dataset(70, vec({1.0, 2.0}), 2, [](double u) { return vec({u, 1.0 - u}); }, 0.5, 12);
  const auto base = partial_coeffs(d, exact(0.2));
  const auto weighted = partial_coeffs(d, exact(0.2), Vector<double>::Constant(70, 3.7));
  CHECK((base.q1 - weighted.q1).cwiseAbs().maxCoeff() <= 1e-11);
  for (std::size_t i = 0; i < base.q2.size(); ++i) CHECK((base.q2[i] - weighted.q2[i]).norm() <= 1e-11);

  SmootherOptions ridge;
  ridge.bandwidth = 0.2;
  const auto rb = partial_coeffs(d, ridge);
  const auto rw = partial_coeffs(d, ridge, Vector<double>::Constant(70, 3.7));
  CHECK((rb.q1 - rw.q1).cwiseAbs().maxCoeff() <= 10.0 / 70.0);
}

TEST_CASE("Nadaraya-Watson with x2 = 1 is the running kernel mean") {
  std::mt19937_64 rng(21);
  const Vector<double> y = tvsemi::testing::gaussian_matrix(40, 1, rng);
  Dataset<double> d{y, Matrix<double>::Ones(40, 1), Matrix<double>::Ones(40, 1)};
  const auto pc = partial_coeffs(d, exact(0.15));
  for (Index i = 0; i < 40; ++i) {
    CHECK(pc.q1(i, 0) == doctest::Approx(weights_row<double>(i, 40, 0.15, KernelSpec{}).dot(y)).epsilon(1e-12));
  }
}

TEST_CASE("smoother errors") {
  Dataset<double> zero{Vector<double>::Ones(20), Matrix<double>::Ones(20, 1), Matrix<double>::Zero(20, 1)};
  try {
    partial_coeffs(zero, exact(0.2));
    FAIL("expected a singular smoother");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularSmoother);
  }
  Dataset<double> none{Vector<double>::Ones(20), Matrix<double>::Ones(20, 1), Matrix<double>(20, 0)};
  CHECK_THROWS_AS(partial_coeffs(none, exact(0.2)), Error);
  Dataset<double> ok{Vector<double>::Ones(20), Matrix<double>::Ones(20, 1), Matrix<double>::Ones(20, 1)};
  CHECK_THROWS_AS(partial_coeffs(ok, exact(0.2), Vector<double>::Ones(19)), Error);
  CHECK_THROWS_AS(partial_coeffs(ok, exact(0.2), Vector<double>::Zero(20)), Error);
}
