// opfa: fit, cross-validate, simulate, benchmark and align OPFA models.

#include "opfa/data_model.hpp"
#include "opfa/driver.hpp"
#include "opfa/metrics.hpp"
#include "opfa/model_selection.hpp"
#include "opfa/sweep.hpp"
#include "opfa/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<double> holdout_fraction;
};

opfa::ModelConfig model_config(const std::string& path, const Overrides& o) {
  opfa::ModelConfig c;
  json j = path.empty() ? json::object() : read_json(path);
  try {
    opfa::from_json(j, c);
  } catch (const json::exception& e) {
    throw UsageError("config: " + std::string(e.what()));
  }
  if (o.seed) c.seed = *o.seed;
  if (o.variant) c.variant = opfa::variant_from_string(*o.variant);
  return c;
}

opfa::CvConfig cv_config(const std::string& path, const Overrides& o) {
  opfa::CvConfig cv;
  if (!path.empty()) {
    const json j = read_json(path);
    try {
      if (j.contains("holdout_fraction")) j["holdout_fraction"].get_to(cv.holdout_fraction);
      if (j.contains("lambda")) j["lambda"].get_to(cv.lambda_grid);
      if (j.contains("lambda_grid")) j["lambda_grid"].get_to(cv.lambda_grid);
      if (j.contains("beta")) j["beta"].get_to(cv.beta_grid);
      if (j.contains("beta_grid")) j["beta_grid"].get_to(cv.beta_grid);
      if (j.contains("f")) j["f"].get_to(cv.f_values);
      if (j.contains("f_values")) j["f_values"].get_to(cv.f_values);
      if (j.contains("seed")) j["seed"].get_to(cv.seed);
      if (j.contains("warm_start")) j["warm_start"].get_to(cv.warm_start);
      if (j.contains("tie_tolerance")) j["tie_tolerance"].get_to(cv.tie_tolerance);
    } catch (const json::exception& e) {
      throw UsageError("grid: " + std::string(e.what()));
    }
  }
  if (o.seed) cv.seed = *o.seed;
  if (o.holdout_fraction) cv.holdout_fraction = *o.holdout_fraction;
  cv.validate();
  return cv;
}

int fit_exit_code(const opfa::OpfaFit& fit) { return fit.converged ? 0 : 2; }

int cmd_fit(const std::string& data_path, const std::string& config_path, const std::string& out, const Overrides& o) {
  const auto data = opfa::load_dataset(data_path);
  const auto config = model_config(config_path, o);
  const auto fit = opfa::fit_opfa(data, config);
  opfa::write_fit(fit, data.subject_ids, out);
  std::cout << json{{"objective", fit.final_objective()}, {"iterations", fit.iterations}, {"converged", fit.converged}}
            << '\n';
  return fit_exit_code(fit);
}

int cmd_cv(const std::string& data_path, const std::string& config_path, const std::string& grid_path,
           const std::string& out, const Overrides& o) {
  const auto data = opfa::load_dataset(data_path);
  const auto base = model_config(config_path, o);
  const auto cv = cv_config(grid_path, o);
  std::vector<opfa::CvFit> fits;
  const auto table = opfa::cross_validate(data, base, cv, &fits);
  fs::create_directories(out);
  opfa::write_cv_table(table, fs::path(out) / "cv_table.csv");

  const auto& best = table.best();
  // The model trained on the holdout split, and the refit on all entries.
  opfa::write_fit(fits.at(table.selected).fit, data.subject_ids, fs::path(out) / "cv_model");
  opfa::ModelConfig refit_config = base;
  refit_config.f = best.f;
  refit_config.lambda = best.lambda;
  refit_config.beta = best.beta;
  const auto refit = opfa::fit_opfa(data, refit_config);
  opfa::write_fit(refit, data.subject_ids, fs::path(out) / "refit");

  std::cout << json{{"f", best.f},
                    {"lambda", best.lambda},
                    {"beta", best.beta},
                    {"cv_error", best.cv_error},
                    {"train_error", best.train_error}}
            << '\n';
  return fit_exit_code(refit);
}

int cmd_simulate(const std::string& config_path, const std::string& out, const Overrides& o) {
  opfa::SyntheticConfig config;
  try {
    config = opfa::synthetic_from_json(read_json(config_path));
  } catch (const json::exception& e) {
    throw UsageError("simulate config: " + std::string(e.what()));
  }
  if (o.seed) config.seed = *o.seed;
  const auto ds = opfa::generate_synthetic(config);
  const fs::path dir(out);
  opfa::save_dataset(ds.data, dir);

  const fs::path truth = dir / "truth";
  fs::create_directories(truth);
  opfa::write_csv_matrix(ds.true_factors, truth / "factors.csv");
  opfa::Matrix delays(ds.true_delays.size(), config.f);
  for (std::size_t s = 0; s < ds.true_delays.size(); ++s)
    for (int j = 0; j < config.f; ++j) delays(s, j) = ds.true_delays[s][j];
  opfa::write_csv_matrix(delays, truth / "delays.csv");
  for (std::size_t s = 0; s < ds.true_scores.size(); ++s) {
    opfa::write_csv_matrix(ds.true_scores[s], truth / ("scores_" + ds.data.subject_ids[s] + ".csv"));
    opfa::write_csv_matrix(ds.noiseless[s], truth / ("noiseless_" + ds.data.subject_ids[s] + ".csv"));
  }
  std::ofstream meta(truth / "truth.json");
  meta << json{{"noise_variance", ds.noise_variance},
               {"snr_db", opfa::snr_db(ds)},
               {"n_F", config.factor_length()},
               {"window_start", config.window_start},
               {"seed", config.seed}}
              .dump(2)
       << '\n';
  return 0;
}

int cmd_bench(const std::string& sweep_path, const std::string& out, const Overrides& o) {
  opfa::SweepConfig sweep = opfa::sweep_from_json(read_json(sweep_path));
  if (o.seed) sweep.seed = *o.seed;
  const auto results = opfa::run_sweep(sweep);
  opfa::write_sweep(results, sweep, out);
  for (const auto& s : results.summary)
    std::cout << sweep.axis << '=' << s.axis_value << ' ' << opfa::to_string(s.model) << " mse=" << s.mse_mean
              << " +/- " << s.mse_ci95 << " dtf=" << s.dtf_mean << " +/- " << s.dtf_ci95 << '\n';
  return 0;
}

int cmd_align(const std::string& fit_dir, int t_i, std::vector<int> factors, const std::string& out) {
  const auto loaded = opfa::read_fit(fit_dir);
  const auto& fit = loaded.fit;
  const int f = static_cast<int>(fit.factors.cols());
  if (factors.empty())
    for (int j = 0; j < f; ++j) factors.push_back(j);
  const int n_F = static_cast<int>(fit.factors.rows());
  std::vector<std::vector<double>> cols;
  for (int j : factors) {
    if (j < 0 || j >= f) throw UsageError("--factor out of range");
    cols.push_back(opfa::absolute_onset_times(fit.delays, t_i, j, n_F, fit.config.window_start));
  }
  std::ofstream o(out);
  if (!o) throw opfa::IoError("cannot write " + out);
  o << "subject";
  for (int j : factors) o << ",factor_" << j;
  o << '\n';
  for (std::size_t s = 0; s < fit.delays.size(); ++s) {
    o << (s < loaded.subject_ids.size() ? loaded.subject_ids[s] : std::to_string(s));
    for (const auto& c : cols) o << ',' << opfa::format_number(c[s]);
    o << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Order-preserving factor analysis"};
  app.require_subcommand(1);

  Overrides o;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string variant;
  double holdout = 0.0;
  app.add_option("--threads", threads, "worker threads (default: all cores)")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "overrides the seed in any config file");

  std::string data, config, grid, out, sweep, fit_dir;
  int t_i = 0;
  std::vector<int> factors;

  auto* fit = app.add_subcommand("fit", "fit a model to a dataset");
  fit->add_option("--data", data, "dataset manifest")->required();
  fit->add_option("--config", config, "model config JSON");
  fit->add_option("--out", out, "output directory")->required();
  auto* fit_variant = fit->add_option("--variant", variant, "opfa or opfa-c");

  auto* cv = app.add_subcommand("cv", "cross-validate (f, lambda, beta) and refit");
  cv->add_option("--data", data, "dataset manifest")->required();
  cv->add_option("--config", config, "base model config JSON");
  cv->add_option("--grid", grid, "grid JSON");
  cv->add_option("--out", out, "output directory")->required();
  auto* cv_variant = cv->add_option("--variant", variant, "opfa or opfa-c");
  auto* cv_holdout = cv->add_option("--holdout-fraction", holdout, "fraction of entries held out");

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  sim->add_option("--config", config, "synthetic config JSON")->required();
  sim->add_option("--out", out, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "Monte-Carlo sweep");
  bench->add_option("--sweep", sweep, "sweep JSON")->required();
  bench->add_option("--out", out, "output directory")->required();

  auto* align = app.add_subcommand("align", "absolute onset times from a fit");
  align->add_option("--fit", fit_dir, "fit directory")->required();
  align->add_option("--t-i", t_i, "onset index of the motif in model coordinates")->required();
  align->add_option("--factor", factors, "factor index (repeatable; default all)");
  align->add_option("--out", out, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (threads > 0) omp_set_num_threads(threads);
  if (*seed_opt) o.seed = seed;
  if (*fit_variant || *cv_variant) o.variant = variant;
  if (*cv_holdout) o.holdout_fraction = holdout;

  try {
    if (*fit) return cmd_fit(data, config, out, o);
    if (*cv) return cmd_cv(data, config, grid, out, o);
    if (*sim) return cmd_simulate(config, out, o);
    if (*bench) return cmd_bench(sweep, out, o);
    if (*align) return cmd_align(fit_dir, t_i, factors, out);
  } catch (const opfa::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
