#pragma once

#include "opfa/synthetic.hpp"
#include "opfa/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace opfa {

enum class BenchModel { opfa, opfa_c, sfa };

std::string to_string(BenchModel m);
BenchModel bench_model_from_string(const std::string& s);

/// A Monte-Carlo sweep over one axis of the synthetic generator.
struct SweepConfig {
  std::string axis = "sigma_d2";  ///< "sigma_d2" or "snr_db"
  std::vector<double> values;
  int trials = 20;
  std::vector<BenchModel> models{BenchModel::opfa, BenchModel::opfa_c, BenchModel::sfa};
  /// Base generator settings. On the sigma_d2 axis `synthetic.snr_db` fixes
  /// the SNR; on the snr_db axis `synthetic.sigma_d2` fixes the delay variance.
  SyntheticConfig synthetic;
  /// Base fit settings. f and n_F follow the generator; SFA forces d_max = 0.
  ModelConfig model;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Keys absent from `j` keep the value in `base`.
SyntheticConfig synthetic_from_json(const nlohmann::json& j, SyntheticConfig base = {});

SweepConfig sweep_from_json(const nlohmann::json& j);

struct SweepRecord {
  std::string axis_name;
  double axis_value = 0.0;
  BenchModel model = BenchModel::opfa;
  int trial = 0;
  double mse = 0.0;
  double dtf = 0.0;
};

struct SweepSummary {
  double axis_value = 0.0;
  BenchModel model = BenchModel::opfa;
  int trials = 0;
  double mse_mean = 0.0;
  double mse_ci95 = 0.0;
  double dtf_mean = 0.0;
  double dtf_ci95 = 0.0;
};

struct SweepResults {
  std::vector<SweepRecord> records;
  std::vector<SweepSummary> summary;
};

/// Model config used for one bench model on one generated dataset.
ModelConfig bench_model_config(const SweepConfig& sweep, BenchModel model);

/// Generator config for one grid value and trial (seed = sweep.seed + trial).
SyntheticConfig bench_synthetic_config(const SweepConfig& sweep, double axis_value, int trial);

/// For every grid value and trial: generate, fit each model, record MSE and
/// DTF. Trials run in parallel; each trial's data depends only on its seed.
SweepResults run_sweep(const SweepConfig& sweep);

/// Mean and normal-approximation 95% half-width (1.96 * stderr).
std::pair<double, double> mean_ci95(const std::vector<double>& values);

/// results.csv, summary.csv, mse.svg and dtf.svg.
void write_sweep(const SweepResults& results, const SweepConfig& sweep, const std::filesystem::path& out_dir);

}  // namespace opfa
