#include "helpers.hpp"

#include "opfa/penalties.hpp"
#include "opfa/quadratic.hpp"

#include <doctest.h>

using namespace opfa;

namespace {

struct Instance {
  ObservationSet data;
  Matrix F;
  std::vector<Matrix> A;
  std::vector<DelayVector> d;
  Window window;
  int n_F;
};

Instance make_instance(std::uint64_t seed, double missing, bool shared = false) {
  std::mt19937_64 rng(seed);
  const int S = 3, n = 9, p = 5, f = 2, d_max = 3, start = 1;
  Instance in;
  in.n_F = n + d_max + 1;
  in.window = Window{start, n};
  in.F = testing::uniform(in.n_F, f, rng);
  std::vector<Matrix> X, masks;
  for (int s = 0; s < S; ++s) {
    X.push_back(testing::gaussian(n, p, rng));
    masks.push_back(missing > 0 ? testing::random_mask(n, p, missing, rng) : Matrix::Ones(n, p));
    in.d.push_back(testing::random_cone_point(f, d_max, rng));
    if (!shared || s == 0) in.A.push_back(testing::uniform(f, p, rng));
  }
  in.data = ObservationSet::from_matrices(X, masks);
  return in;
}

double direct_total(const Instance& in, const Matrix& F, const std::vector<Matrix>& A) {
  double total = 0.0;
  for (int s = 0; s < in.data.num_subjects(); ++s)
    total += testing::direct_residual(in.data.subjects[s], F, in.d[s], A.size() == 1 ? A[0] : A[s],
                                      in.data.masks[s], in.window.start);
  return total;
}

Vector vec(const Matrix& F) { return Eigen::Map<const Vector>(F.data(), F.size()); }
Matrix unvec(const Vector& x, int rows, int cols) { return Eigen::Map<const Matrix>(x.data(), rows, cols); }

}  // namespace

TEST_CASE("factor quadratic value equals the direct masked objective") {
  for (double missing : {0.0, 0.3}) {
    for (bool shared : {false, true}) {
      const Instance in = make_instance(10, missing, shared);
      const Matrix W = first_difference(in.n_F);
      const double beta = 0.7;
      const QuadraticForm qf = assemble_factor_quadratic(in.data, in.A, in.d, in.n_F, in.window, beta, W);
      const double expected = direct_total(in, in.F, in.A) + beta * tv_penalty(in.F, W);
      CHECK(qf.value(vec(in.F)) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("factor quadratic gradient matches central differences") {
  const Instance in = make_instance(11, 0.3);
  const Matrix W = first_difference(in.n_F);
  const double beta = 0.4;
  const QuadraticForm qf = assemble_factor_quadratic(in.data, in.A, in.d, in.n_F, in.window, beta, W);
  const Vector x = vec(in.F);
  const Vector g = qf.gradient(x);
  const double h = 1e-5;
  for (int i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Matrix Fp = unvec(xp, in.n_F, 2), Fm = unvec(xm, in.n_F, 2);
    const double fd = (direct_total(in, Fp, in.A) + beta * tv_penalty(Fp, W) - direct_total(in, Fm, in.A) -
                       beta * tv_penalty(Fm, W)) /
                      (2 * h);
    CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
  }
}

TEST_CASE("score quadratic value and gradient") {
  const Instance in = make_instance(12, 0.3);
  const auto qs = assemble_score_quadratics(in.data, in.F, in.d, in.window);
  for (int s = 0; s < in.data.num_subjects(); ++s) {
    const Matrix& X = in.data.subjects[s];
    const Matrix& w = in.data.masks[s];
    const double direct = testing::direct_residual(X, in.F, in.d[s], in.A[s], w, in.window.start);
    CHECK(qs[s].value(in.A[s]) == doctest::Approx(direct).epsilon(1e-12));
    const Matrix g = qs[s].gradient(in.A[s]);
    const double h = 1e-6;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < X.cols(); ++i) {
        Matrix Ap = in.A[s], Am = in.A[s];
        Ap(j, i) += h;
        Am(j, i) -= h;
        const double fd = (testing::direct_residual(X, in.F, in.d[s], Ap, w, in.window.start) -
                           testing::direct_residual(X, in.F, in.d[s], Am, w, in.window.start)) /
                          (2 * h);
        CHECK(std::abs(fd - g(j, i)) <= 1e-6 * std::max(1.0, std::abs(g(j, i))));
      }
  }
}

TEST_CASE("dense score form agrees with the block form") {
  const Instance in = make_instance(13, 0.2);
  const auto qs = assemble_score_quadratics(in.data, in.F, in.d, in.window);
  const QuadraticForm dense = qs[0].to_dense();
  CHECK(dense.value(vec(in.A[0])) == doctest::Approx(qs[0].value(in.A[0])).epsilon(1e-13));
}

TEST_CASE("all-ones masks give the closed-form assembly") {
  const Instance in = make_instance(14, 0.0);
  const Matrix W = first_difference(in.n_F);
  const QuadraticForm a = assemble_factor_quadratic(in.data, in.A, in.d, in.n_F, in.window, 0.3, W,
                                                    MaskPath::automatic);
  const QuadraticForm b = assemble_factor_quadratic(in.data, in.A, in.d, in.n_F, in.window, 0.3, W,
                                                    MaskPath::masked);
  CHECK(testing::max_abs(a.Q - b.Q) < 1e-10);
  CHECK(testing::max_abs(a.q - b.q) < 1e-10);
  CHECK(a.c == doctest::Approx(b.c).epsilon(1e-14));

  const auto sa = assemble_score_quadratics(in.data, in.F, in.d, in.window, MaskPath::automatic);
  const auto sb = assemble_score_quadratics(in.data, in.F, in.d, in.window, MaskPath::masked);
  for (std::size_t s = 0; s < sa.size(); ++s) {
    CHECK(testing::max_abs(sa[s].rhs - sb[s].rhs) < 1e-10);
    for (std::size_t i = 0; i < sa[s].blocks.size(); ++i)
      CHECK(testing::max_abs(sa[s].blocks[i] - sb[s].blocks[i]) < 1e-10);
  }
}

TEST_CASE("assembly shape errors") {
  Instance in = make_instance(15, 0.0);
  const Matrix W = first_difference(in.n_F);
  in.d.pop_back();
  CHECK_THROWS_AS(assemble_factor_quadratic(in.data, in.A, in.d, in.n_F, in.window, 0.0, W), DimensionError);
  CHECK_THROWS_AS(assemble_score_quadratics(in.data, in.F, in.d, in.window), DimensionError);
}
