#include "opfa/sweep.hpp"

#include "opfa/data_model.hpp"
#include "opfa/driver.hpp"
#include "opfa/metrics.hpp"
#include "opfa/svg_chart.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;

namespace opfa {

std::string to_string(BenchModel m) {
  switch (m) {
    case BenchModel::opfa: return "OPFA";
    case BenchModel::opfa_c: return "OPFA_C";
    case BenchModel::sfa: return "SFA";
  }
  return "?";
}

BenchModel bench_model_from_string(const std::string& s) {
  if (s == "OPFA" || s == "opfa") return BenchModel::opfa;
  if (s == "OPFA_C" || s == "OPFA-C" || s == "opfa_c" || s == "opfa-c") return BenchModel::opfa_c;
  if (s == "SFA" || s == "sfa") return BenchModel::sfa;
  throw std::invalid_argument("unknown bench model '" + s + "'");
}

void SweepConfig::validate() const {
  if (axis != "sigma_d2" && axis != "snr_db") throw std::invalid_argument("sweep axis must be sigma_d2 or snr_db");
  if (values.empty()) throw std::invalid_argument("sweep needs at least one axis value");
  if (trials < 1) throw std::invalid_argument("sweep needs at least one trial");
  if (models.empty()) throw std::invalid_argument("sweep needs at least one model");
  if (axis == "sigma_d2" && !synthetic.snr_db && synthetic.sigma_eps2 < 0)
    throw std::invalid_argument("noise level unspecified");
  for (double v : values)
    if (axis == "sigma_d2" && v < 0) throw std::invalid_argument("delay variances must be nonnegative");
  synthetic.validate();
}

SyntheticConfig synthetic_from_json(const json& s, SyntheticConfig base) {
  auto take = [&](const char* key, auto& field) {
    if (s.contains(key)) s.at(key).get_to(field);
  };
  take("S", base.S);
  take("n", base.n);
  take("p", base.p);
  take("f", base.f);
  take("d_max", base.d_max);
  take("n_F", base.n_F);
  take("window_start", base.window_start);
  take("sigma_eps2", base.sigma_eps2);
  take("sigma_d2", base.sigma_d2);
  take("sparsity", base.sparsity);
  take("seed", base.seed);
  if (s.contains("snr_db") && !s["snr_db"].is_null()) base.snr_db = s["snr_db"].get<double>();
  if (s.contains("dictionary")) base.dictionary = dictionary_from_string(s["dictionary"].get<std::string>());
  return base;
}

SweepConfig sweep_from_json(const json& j) {
  SweepConfig sweep;
  try {
    if (j.contains("axis")) sweep.axis = j["axis"].get<std::string>();
    sweep.values = j.at("values").get<std::vector<double>>();
    if (j.contains("trials")) sweep.trials = j["trials"].get<int>();
    if (j.contains("seed")) sweep.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("models")) {
      sweep.models.clear();
      for (const auto& m : j["models"]) sweep.models.push_back(bench_model_from_string(m.get<std::string>()));
    }
    if (j.contains("synthetic")) sweep.synthetic = synthetic_from_json(j["synthetic"]);
    ModelConfig model;
    model.restarts = 1;
    if (j.contains("model")) {
      json m = j["model"];
      if (!m.contains("frobenius_bound"))
        m["frobenius_bound"] = std::sqrt(static_cast<double>(sweep.synthetic.f));
      from_json(m, model);
    } else {
      model.frobenius_bound = std::sqrt(static_cast<double>(sweep.synthetic.f));
    }
    sweep.model = model;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed sweep description: ") + e.what());
  }
  sweep.validate();
  return sweep;
}

ModelConfig bench_model_config(const SweepConfig& sweep, BenchModel model) {
  ModelConfig c = sweep.model;
  c.f = sweep.synthetic.f;
  c.n_F = sweep.synthetic.factor_length();
  c.window_start = sweep.synthetic.window_start;
  if (c.d_max <= 0) c.d_max = sweep.synthetic.d_max;
  c.variant = model == BenchModel::opfa_c ? Variant::opfa_c : Variant::opfa;
  if (model == BenchModel::sfa) c.d_max = 0;
  // Trials already run in parallel.
  c.execution = Execution::serial;
  return c;
}

SyntheticConfig bench_synthetic_config(const SweepConfig& sweep, double axis_value, int trial) {
  SyntheticConfig s = sweep.synthetic;
  if (sweep.axis == "sigma_d2")
    s.sigma_d2 = axis_value;
  else
    s.snr_db = axis_value;
  s.seed = sweep.seed + static_cast<std::uint64_t>(trial);
  return s;
}

std::pair<double, double> mean_ci95(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  if (values.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= values.size() - 1;
  return {mean, 1.96 * std::sqrt(var / values.size())};
}

SweepResults run_sweep(const SweepConfig& sweep) {
  sweep.validate();
  const int V = static_cast<int>(sweep.values.size());
  const int T = sweep.trials;
  const int M = static_cast<int>(sweep.models.size());
  std::vector<SweepRecord> records(static_cast<std::size_t>(V) * T * M);
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(V) * T);

#pragma omp parallel for collapse(2) schedule(dynamic) if (sweep.model.execution == Execution::parallel)
  for (int v = 0; v < V; ++v) {
    for (int t = 0; t < T; ++t) {
      try {
        const SyntheticDataset truth = generate_synthetic(bench_synthetic_config(sweep, sweep.values[v], t));
        for (int m = 0; m < M; ++m) {
          const OpfaFit fit = fit_opfa(truth.data, bench_model_config(sweep, sweep.models[m]));
          SweepRecord& r = records[(static_cast<std::size_t>(v) * T + t) * M + m];
          r.axis_name = sweep.axis;
          r.axis_value = sweep.values[v];
          r.model = sweep.models[m];
          r.trial = t;
          r.mse = mse(truth, fit);
          r.dtf = dtf(truth.true_factors, fit.factors, true);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(v) * T + t] = std::current_exception();
      }
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  SweepResults out;
  out.records = std::move(records);
  for (int v = 0; v < V; ++v) {
    for (int m = 0; m < M; ++m) {
      std::vector<double> mses, dtfs;
      for (const auto& r : out.records)
        if (r.axis_value == sweep.values[v] && r.model == sweep.models[m]) {
          mses.push_back(r.mse);
          dtfs.push_back(r.dtf);
        }
      SweepSummary s;
      s.axis_value = sweep.values[v];
      s.model = sweep.models[m];
      s.trials = static_cast<int>(mses.size());
      std::tie(s.mse_mean, s.mse_ci95) = mean_ci95(mses);
      std::tie(s.dtf_mean, s.dtf_ci95) = mean_ci95(dtfs);
      out.summary.push_back(s);
    }
  }
  return out;
}

void write_sweep(const SweepResults& results, const SweepConfig& sweep, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create directory " + out_dir.string());

  {
    std::ofstream out(out_dir / "results.csv");
    if (!out) throw IoError("cannot write results.csv");
    out << "axis_name,axis_value,model,trial,mse,dtf\n";
    for (const auto& r : results.records)
      out << r.axis_name << ',' << format_number(r.axis_value) << ',' << to_string(r.model) << ',' << r.trial << ','
          << format_number(r.mse) << ',' << format_number(r.dtf) << '\n';
  }
  {
    std::ofstream out(out_dir / "summary.csv");
    if (!out) throw IoError("cannot write summary.csv");
    out << "axis_name,axis_value,model,trials,mse_mean,mse_ci95,dtf_mean,dtf_ci95\n";
    for (const auto& s : results.summary)
      out << sweep.axis << ',' << format_number(s.axis_value) << ',' << to_string(s.model) << ',' << s.trials << ','
          << format_number(s.mse_mean) << ',' << format_number(s.mse_ci95) << ',' << format_number(s.dtf_mean)
          << ',' << format_number(s.dtf_ci95) << '\n';
  }

  const std::string x_label = sweep.axis == "sigma_d2" ? "delay variance" : "SNR (dB)";
  for (const bool is_mse : {true, false}) {
    std::vector<ChartSeries> series;
    for (const auto model : sweep.models) {
      ChartSeries cs;
      cs.name = to_string(model);
      for (const auto& s : results.summary) {
        if (s.model != model) continue;
        cs.x.push_back(s.axis_value);
        cs.y.push_back(is_mse ? s.mse_mean : s.dtf_mean);
        cs.error.push_back(is_mse ? s.mse_ci95 : s.dtf_ci95);
      }
      series.push_back(std::move(cs));
    }
    std::ofstream out(out_dir / (is_mse ? "mse.svg" : "dtf.svg"));
    if (!out) throw IoError("cannot write chart");
    out << line_chart_svg(is_mse ? "MSE" : "DTF", x_label, is_mse ? "MSE" : "DTF", series);
  }
}

}  // namespace opfa
