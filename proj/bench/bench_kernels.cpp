// Serial reference versus OpenMP path for the hot kernels.
// Argument 0 selects serial, 1 parallel.

#include "opfa/delay_solver.hpp"
#include "opfa/penalties.hpp"
#include "opfa/quadratic.hpp"
#include "opfa/score_solver.hpp"
#include "opfa/sweep.hpp"
#include "opfa/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace opfa;

namespace {

const SyntheticDataset& dataset() {
  static const SyntheticDataset ds = [] {
    SyntheticConfig sc;
    sc.S = 10;
    sc.n = 20;
    sc.p = 100;
    sc.d_max = 8;
    sc.sigma_d2 = 5.0;
    sc.snr_db = 15.0;
    sc.seed = 1;
    return generate_synthetic(sc);
  }();
  return ds;
}

Execution mode(const benchmark::State& state) { return state.range(0) ? Execution::parallel : Execution::serial; }

void BM_FactorAssembly(benchmark::State& state) {
  const auto& ds = dataset();
  const int n_F = static_cast<int>(ds.true_factors.rows());
  const Matrix W = first_difference(n_F);
  for (auto _ : state)
    benchmark::DoNotOptimize(assemble_factor_quadratic(ds.data, ds.true_scores, ds.true_delays, n_F, Window{0, 20},
                                                       0.1, W, MaskPath::automatic, mode(state)));
}

void BM_ScoreSolve(benchmark::State& state) {
  const auto& ds = dataset();
  const auto qs = assemble_score_quadratics(ds.data, ds.true_factors, ds.true_delays, Window{0, 20});
  for (auto _ : state) benchmark::DoNotOptimize(estimate_scores(qs, 0.1, Variant::opfa, 1e-9, 500, {}, mode(state)));
}

void BM_AllDelays(benchmark::State& state) {
  const auto& ds = dataset();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        estimate_all_delays(ds.data, ds.true_factors, ds.true_scores, 8, Window{0, 20}, mode(state)));
}

void BM_SweepTrials(benchmark::State& state) {
  SweepConfig sweep;
  sweep.values = {2.0};
  sweep.trials = 4;
  sweep.models = {BenchModel::opfa};
  sweep.synthetic.S = 4;
  sweep.synthetic.n = 12;
  sweep.synthetic.p = 20;
  sweep.synthetic.d_max = 3;
  sweep.synthetic.snr_db = 10.0;
  sweep.model.restarts = 1;
  sweep.model.max_outer_iters = 20;
  sweep.model.execution = mode(state);
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(sweep));
}

}  // namespace

BENCHMARK(BM_FactorAssembly)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScoreSolve)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AllDelays)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SweepTrials)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
