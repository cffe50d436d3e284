#include "helpers.hpp"

#include "opfa/delay_solver.hpp"
#include "opfa/driver.hpp"
#include "opfa/penalties.hpp"
#include "opfa/quadratic.hpp"
#include "opfa/score_solver.hpp"
#include "opfa/sweep.hpp"
#include "opfa/synthetic.hpp"

#include <doctest.h>

using namespace opfa;

namespace {

SyntheticDataset dataset(double missing) {
  SyntheticConfig sc;
  sc.S = 6;
  sc.n = 14;
  sc.p = 20;
  sc.d_max = 4;
  sc.sigma_d2 = 2.0;
  sc.sigma_eps2 = 0.01;
  sc.seed = 21;
  auto ds = generate_synthetic(sc);
  if (missing > 0) {
    std::mt19937_64 rng(5);
    for (auto& m : ds.data.masks) m = testing::random_mask(14, 20, missing, rng);
  }
  return ds;
}

}  // namespace

TEST_CASE("parallel kernels reproduce the serial path bit for bit") {
  for (double missing : {0.0, 0.2}) {
    const auto ds = dataset(missing);
    const Window window{0, 14};
    const Matrix W = first_difference(18);

    const QuadraticForm qs = assemble_factor_quadratic(ds.data, ds.true_scores, ds.true_delays, 18, window, 0.1, W,
                                                       MaskPath::automatic, Execution::serial);
    const QuadraticForm qp = assemble_factor_quadratic(ds.data, ds.true_scores, ds.true_delays, 18, window, 0.1, W,
                                                       MaskPath::automatic, Execution::parallel);
    CHECK(qs.Q == qp.Q);
    CHECK(qs.q == qp.q);
    CHECK(qs.c == qp.c);

    const auto ss = assemble_score_quadratics(ds.data, ds.true_factors, ds.true_delays, window, MaskPath::automatic,
                                              Execution::serial);
    const auto sp = assemble_score_quadratics(ds.data, ds.true_factors, ds.true_delays, window, MaskPath::automatic,
                                              Execution::parallel);
    for (std::size_t s = 0; s < ss.size(); ++s) {
      CHECK(ss[s].rhs == sp[s].rhs);
      for (std::size_t i = 0; i < ss[s].blocks.size(); ++i) CHECK(ss[s].blocks[i] == sp[s].blocks[i]);
    }

    for (auto v : {Variant::opfa, Variant::opfa_c}) {
      const auto as = estimate_scores(ss, 0.2, v, 1e-10, 500, {}, Execution::serial);
      const auto ap = estimate_scores(ss, 0.2, v, 1e-10, 500, {}, Execution::parallel);
      REQUIRE(as.size() == ap.size());
      for (std::size_t s = 0; s < as.size(); ++s) CHECK(as[s] == ap[s]);
    }

    const auto ds_ = estimate_all_delays(ds.data, ds.true_factors, ds.true_scores, 4, window, Execution::serial);
    const auto dp = estimate_all_delays(ds.data, ds.true_factors, ds.true_scores, 4, window, Execution::parallel);
    CHECK(ds_ == dp);
  }
}

TEST_CASE("fits and sweeps do not depend on the execution mode") {
  const auto ds = dataset(0.1);
  ModelConfig c;
  c.d_max = 4;
  c.lambda = 0.05;
  c.restarts = 3;
  c.max_outer_iters = 30;
  c.execution = Execution::serial;
  const OpfaFit a = fit_opfa(ds.data, c);
  c.execution = Execution::parallel;
  const OpfaFit b = fit_opfa(ds.data, c);
  CHECK(a.factors == b.factors);
  CHECK(a.delays == b.delays);
  CHECK(a.objective_trace == b.objective_trace);
  for (std::size_t s = 0; s < a.scores.size(); ++s) CHECK(a.scores[s] == b.scores[s]);

  SweepConfig sweep;
  sweep.values = {0.0, 2.0};
  sweep.trials = 2;
  sweep.models = {BenchModel::opfa, BenchModel::opfa_c};
  sweep.synthetic.S = 3;
  sweep.synthetic.n = 8;
  sweep.synthetic.p = 6;
  sweep.synthetic.d_max = 2;
  sweep.synthetic.snr_db = 10.0;
  sweep.model.restarts = 1;
  sweep.model.max_outer_iters = 15;
  sweep.model.execution = Execution::serial;
  const auto rs = run_sweep(sweep);
  sweep.model.execution = Execution::parallel;
  const auto rp = run_sweep(sweep);
  REQUIRE(rs.records.size() == rp.records.size());
  for (std::size_t k = 0; k < rs.records.size(); ++k) {
    CHECK(rs.records[k].mse == rp.records[k].mse);
    CHECK(rs.records[k].dtf == rp.records[k].dtf);
  }
}
