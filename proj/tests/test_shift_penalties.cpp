#include "helpers.hpp"
#include "oracles.hpp"

#include "opfa/penalties.hpp"
#include "opfa/shift_model.hpp"

#include <doctest.h>

using namespace opfa;

TEST_CASE("circular_shift moves samples later and wraps") {
  Vector v(5);
  v << 1, 2, 3, 4, 5;
  Vector s = circular_shift(v, 2);
  Vector expected(5);
  expected << 4, 5, 1, 2, 3;
  CHECK(s == expected);
  CHECK(circular_shift(v, 0) == v);
  CHECK(circular_shift(v, 5) == v);
  CHECK(circular_shift(v, -3) == circular_shift(v, 2));
}

TEST_CASE("circular shifts compose additively") {
  std::mt19937_64 rng(1);
  const Vector v = testing::gaussian(11, 1, rng);
  for (int a = -4; a < 15; ++a)
    for (int b = 0; b < 7; ++b) CHECK(circular_shift(circular_shift(v, a), b) == circular_shift(v, a + b));
}

TEST_CASE("windowed_factors equals the window of the full shifted matrix") {
  std::mt19937_64 rng(2);
  const Matrix F = testing::uniform(14, 3, rng);
  for (int start = 0; start <= 4; ++start) {
    const DelayVector d{0, 2, 5};
    const Matrix full = build_shifted_factors(F, d);
    CHECK(windowed_factors(F, d, Window{start, 10}) == window_restrict(full, start, 10));
  }
}

TEST_CASE("window and shape errors") {
  const Matrix F = Matrix::Ones(8, 2);
  CHECK_THROWS_AS(build_shifted_factors(F, DelayVector{1}), DimensionError);
  CHECK_THROWS_AS(window_restrict(F, 3, 6), std::invalid_argument);
  CHECK_THROWS_AS(predict_subject(F, DelayVector{0, 0}, Matrix::Ones(3, 4), Window{0, 8}), DimensionError);
}

TEST_CASE("order cone membership") {
  CHECK(in_order_cone(DelayVector{0, 0, 3}, 3));
  CHECK_FALSE(in_order_cone(DelayVector{1, 0}, 3));
  CHECK_FALSE(in_order_cone(DelayVector{0, 4}, 3));
  CHECK_FALSE(in_order_cone(DelayVector{-1, 0}, 3));
}

TEST_CASE("predict_subject matches the entrywise model") {
  std::mt19937_64 rng(3);
  const Matrix F = testing::uniform(13, 2, rng);
  const Matrix A = testing::uniform(2, 5, rng);
  const DelayVector d{1, 3};
  const Matrix X = predict_subject(F, d, A, Window{2, 9});
  CHECK(testing::direct_residual(X, F, d, A, Matrix::Ones(9, 5), 2) < 1e-24);
}

TEST_CASE("group lasso penalty") {
  Matrix a(1, 1), b(1, 1);
  a << 3;
  b << 4;
  CHECK(group_lasso_penalty({a, b}) == doctest::Approx(5.0));
  std::mt19937_64 rng(4);
  std::vector<Matrix> A{testing::gaussian(3, 6, rng), testing::gaussian(3, 6, rng)};
  double expected = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 6; ++i) expected += std::hypot(A[0](j, i), A[1](j, i));
  CHECK(group_lasso_penalty(A) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("squared total variation") {
  Matrix F(4, 1);
  F << 0, 1, 3, 3;
  CHECK(tv_penalty(F, first_difference(4)) == doctest::Approx(5.0));
  CHECK(tv_penalty(Matrix::Constant(6, 2, 2.5), first_difference(6)) == 0.0);
  CHECK(first_difference(1).rows() == 0);
}

TEST_CASE("nonneg_group_prox closed form") {
  Vector v(2);
  v << 3, 4;
  Vector x = nonneg_group_prox(v, 1.0);
  CHECK(x[0] == doctest::Approx(2.4));
  CHECK(x[1] == doctest::Approx(3.2));
  CHECK(nonneg_group_prox(v, 5.0).isZero());
  v << -1, -2;
  CHECK(nonneg_group_prox(v, 0.0).isZero());
}

TEST_CASE("nonneg_group_prox matches the splitting oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> t(0.0, 2.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Vector v = testing::gaussian(1 + trial % 5, 1, rng);
    const double th = t(rng);
    CHECK(testing::max_abs(nonneg_group_prox(v, th) - oracle::nonneg_group_prox(v, th)) < 1e-8);
  }
}

TEST_CASE("project_factor_set closed form and oracle") {
  Matrix F(2, 1);
  F << 3, -4;
  Matrix P = project_factor_set(F, 1.0);
  CHECK(P(0, 0) == doctest::Approx(1.0));
  CHECK(P(1, 0) == 0.0);
  CHECK(project_factor_set(Matrix::Constant(2, 2, 0.1), 1.0) == Matrix::Constant(2, 2, 0.1));

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    const Matrix G = testing::gaussian(6, 2, rng) * 2.0;
    CHECK(testing::max_abs(project_factor_set(G, 1.3) - oracle::project_factor_set(G, 1.3)) < 1e-8);
    CHECK(in_factor_set(project_factor_set(G, 1.3), 1.3));
  }
}
