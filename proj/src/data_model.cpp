#include "opfa/data_model.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace opfa {

std::string to_string(Variant v) { return v == Variant::opfa ? "opfa" : "opfa-c"; }

Variant variant_from_string(const std::string& s) {
  if (s == "opfa" || s == "OPFA") return Variant::opfa;
  if (s == "opfa-c" || s == "opfa_c" || s == "OPFA-C" || s == "OPFA_C") return Variant::opfa_c;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

bool ObservationSet::fully_observed() const {
  for (const auto& m : masks)
    if ((m.array() != 1.0).any()) return false;
  return true;
}

void ObservationSet::validate() const {
  if (subjects.empty()) throw std::invalid_argument("observation set needs at least one subject");
  const auto n = subjects[0].rows();
  const auto p = subjects[0].cols();
  if (n < 2) throw DimensionError("observation matrices need at least 2 rows");
  if (p < 1) throw DimensionError("observation matrices need at least 1 column");
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (subjects[s].rows() != n || subjects[s].cols() != p)
      throw DimensionError("subject " + std::to_string(s) + " is " +
                           std::to_string(subjects[s].rows()) + "x" +
                           std::to_string(subjects[s].cols()) + ", expected " +
                           std::to_string(n) + "x" + std::to_string(p));
    if (!subjects[s].allFinite())
      throw std::invalid_argument("subject " + std::to_string(s) + " has non-finite entries");
  }
  if (masks.size() != subjects.size()) throw DimensionError("one mask per subject is required");
  for (std::size_t s = 0; s < masks.size(); ++s) {
    if (masks[s].rows() != n || masks[s].cols() != p)
      throw DimensionError("mask " + std::to_string(s) + " does not match its matrix");
    if (((masks[s].array() != 0.0) && (masks[s].array() != 1.0)).any())
      throw std::invalid_argument("mask " + std::to_string(s) + " has values outside {0,1}");
  }
  if (subject_ids.size() != subjects.size()) throw DimensionError("one id per subject is required");
  if (static_cast<Eigen::Index>(variable_ids.size()) != p)
    throw DimensionError("variable_ids must have p entries");
  if (static_cast<Eigen::Index>(time_points.size()) != n)
    throw DimensionError("time_points must have n entries");
}

ObservationSet ObservationSet::from_matrices(std::vector<Matrix> subjects) {
  ObservationSet out;
  out.subjects = std::move(subjects);
  if (out.subjects.empty()) throw std::invalid_argument("observation set needs at least one subject");
  for (std::size_t s = 0; s < out.subjects.size(); ++s) {
    out.masks.push_back(Matrix::Ones(out.subjects[s].rows(), out.subjects[s].cols()));
    out.subject_ids.push_back("s" + std::to_string(s));
  }
  for (int i = 0; i < out.cols(); ++i) out.variable_ids.push_back("v" + std::to_string(i));
  for (int t = 0; t < out.rows(); ++t) out.time_points.push_back(t);
  out.validate();
  return out;
}

ObservationSet ObservationSet::from_matrices(std::vector<Matrix> subjects, std::vector<Matrix> masks) {
  ObservationSet out = from_matrices(std::move(subjects));
  out.masks = std::move(masks);
  out.validate();
  return out;
}

void ModelConfig::validate(int n) const {
  if (f < 1) throw std::invalid_argument("f must be positive");
  if (d_max < 0) throw std::invalid_argument("d_max must be nonnegative");
  if (d_max > n) throw std::invalid_argument("d_max must not exceed n");
  if (lambda < 0 || beta < 0) throw std::invalid_argument("penalty weights must be nonnegative");
  if (!(frobenius_bound > 0)) throw std::invalid_argument("frobenius_bound must be positive");
  const int nf = factor_length(n);
  if (nf < n + d_max) throw std::invalid_argument("n_F must be at least n + d_max");
  if (window_start < 0 || window_start + n > nf)
    throw std::invalid_argument("observation window must lie inside [0, n_F)");
  if (max_outer_iters < 1 || max_inner_iters < 1) throw std::invalid_argument("iteration caps must be positive");
  if (!(outer_tol > 0) || !(inner_tol > 0)) throw std::invalid_argument("tolerances must be positive");
  if (restarts < 1) throw std::invalid_argument("restarts must be positive");
}

std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      const std::string trimmed = first == std::string::npos ? "" : cell.substr(first, last - first + 1);
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(trimmed, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (trimmed.empty() || used != trimmed.size())
        throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                    ": non-numeric cell '" + trimmed + "'");
      row.push_back(value);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DimensionError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv_matrix(const Matrix& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

}  // namespace

ObservationSet load_dataset(const fs::path& manifest_path) {
  const json manifest = read_json(manifest_path);
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    fs::path candidate(p);
    return candidate.is_absolute() ? candidate : base / candidate;
  };

  ObservationSet data;
  try {
    const int n = manifest.at("n").get<int>();
    const int p = manifest.at("p").get<int>();
    const int S = manifest.at("S").get<int>();
    const auto& subjects = manifest.at("subjects");
    if (static_cast<int>(subjects.size()) != S)
      throw DimensionError("manifest lists " + std::to_string(subjects.size()) +
                           " subjects but S = " + std::to_string(S));
    for (const auto& entry : subjects) {
      Matrix x = read_csv_matrix(resolve(entry.at("matrix").get<std::string>()));
      if (x.rows() != n || x.cols() != p)
        throw DimensionError("subject '" + entry.at("id").get<std::string>() + "' is " +
                             std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                             ", manifest declares " + std::to_string(n) + "x" + std::to_string(p));
      Matrix mask = Matrix::Ones(n, p);
      if (entry.contains("mask") && !entry["mask"].is_null()) {
        const fs::path mask_path = resolve(entry["mask"].get<std::string>());
        if (fs::exists(mask_path)) {
          mask = read_csv_matrix(mask_path);
          if (mask.rows() != n || mask.cols() != p)
            throw DimensionError("mask for subject '" + entry.at("id").get<std::string>() +
                                 "' does not match its matrix");
        }
      }
      data.subject_ids.push_back(entry.at("id").get<std::string>());
      data.subjects.push_back(std::move(x));
      data.masks.push_back(std::move(mask));
    }
    if (manifest.contains("time_points")) {
      data.time_points = manifest["time_points"].get<std::vector<double>>();
    } else {
      for (int t = 0; t < n; ++t) data.time_points.push_back(t);
    }
    if (manifest.contains("variable_ids")) {
      data.variable_ids = manifest["variable_ids"].get<std::vector<std::string>>();
    } else {
      for (int i = 0; i < p; ++i) data.variable_ids.push_back("v" + std::to_string(i));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(manifest_path.string() + ": malformed manifest: " + e.what());
  }
  data.validate();
  return data;
}

void save_dataset(const ObservationSet& data, const fs::path& out_dir) {
  data.validate();
  ensure_directory(out_dir);
  json manifest;
  manifest["n"] = data.rows();
  manifest["p"] = data.cols();
  manifest["S"] = data.num_subjects();
  manifest["time_points"] = data.time_points;
  manifest["variable_ids"] = data.variable_ids;
  manifest["subjects"] = json::array();
  for (int s = 0; s < data.num_subjects(); ++s) {
    const std::string& id = data.subject_ids[s];
    json entry{{"id", id}, {"matrix", "X_" + id + ".csv"}};
    write_csv_matrix(data.subjects[s], out_dir / ("X_" + id + ".csv"));
    if ((data.masks[s].array() != 1.0).any()) {
      entry["mask"] = "mask_" + id + ".csv";
      write_csv_matrix(data.masks[s], out_dir / ("mask_" + id + ".csv"));
    }
    manifest["subjects"].push_back(entry);
  }
  write_json(manifest, out_dir / "manifest.json");
}

ObservationSet column_sum_normalize(const ObservationSet& data) {
  ObservationSet out = data;
  for (int s = 0; s < out.num_subjects(); ++s) {
    for (Eigen::Index j = 0; j < out.subjects[s].cols(); ++j) {
      const double sum = out.subjects[s].col(j).sum();
      if (!(sum > 0.0))
        throw std::invalid_argument("column " + std::to_string(j) + " of subject " +
                                    std::to_string(s) + " has non-positive sum");
      out.subjects[s].col(j) /= sum;
    }
  }
  return out;
}

void to_json(json& j, const ModelConfig& c) {
  j = json{{"f", c.f},
           {"d_max", c.d_max},
           {"lambda", c.lambda},
           {"beta", c.beta},
           {"n_F", c.n_F},
           {"window_start", c.window_start},
           {"frobenius_bound", c.frobenius_bound},
           {"variant", to_string(c.variant)},
           {"max_outer_iters", c.max_outer_iters},
           {"outer_tol", c.outer_tol},
           {"inner_tol", c.inner_tol},
           {"max_inner_iters", c.max_inner_iters},
           {"restarts", c.restarts},
           {"seed", c.seed}};
}

void from_json(const json& j, ModelConfig& c) {
  auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  take("f", c.f);
  take("d_max", c.d_max);
  take("lambda", c.lambda);
  take("beta", c.beta);
  take("n_F", c.n_F);
  take("window_start", c.window_start);
  if (j.contains("frobenius_bound"))
    j.at("frobenius_bound").get_to(c.frobenius_bound);
  else
    c.frobenius_bound = std::sqrt(static_cast<double>(c.f));
  if (j.contains("variant")) c.variant = variant_from_string(j.at("variant").get<std::string>());
  take("max_outer_iters", c.max_outer_iters);
  take("outer_tol", c.outer_tol);
  take("inner_tol", c.inner_tol);
  take("max_inner_iters", c.max_inner_iters);
  take("restarts", c.restarts);
  take("seed", c.seed);
}

void write_fit(const OpfaFit& fit, const std::vector<std::string>& subject_ids, const fs::path& out_dir) {
  if (subject_ids.size() != fit.delays.size())
    throw DimensionError("write_fit: one subject id per delay vector is required");
  ensure_directory(out_dir);
  write_csv_matrix(fit.factors, out_dir / "factors.csv");

  const int S = static_cast<int>(fit.delays.size());
  const int f = static_cast<int>(fit.factors.cols());
  Matrix delays(S, f);
  for (int s = 0; s < S; ++s)
    for (int k = 0; k < f; ++k) delays(s, k) = fit.delays[s][k];
  write_csv_matrix(delays, out_dir / "delays.csv");

  json score_files = json::array();
  if (fit.config.variant == Variant::opfa_c) {
    write_csv_matrix(fit.scores.at(0), out_dir / "scores.csv");
    score_files.push_back("scores.csv");
  } else {
    for (int s = 0; s < S; ++s) {
      const std::string name = "scores_" + subject_ids[s] + ".csv";
      write_csv_matrix(fit.scores.at(s), out_dir / name);
      score_files.push_back(name);
    }
  }

  {
    std::ofstream trace(out_dir / "objective_trace.csv");
    if (!trace) throw IoError("cannot write objective_trace.csv in " + out_dir.string());
    trace << "iteration,objective\n";
    for (std::size_t t = 0; t < fit.objective_trace.size(); ++t)
      trace << t << ',' << format_number(fit.objective_trace[t]) << '\n';
  }

  json manifest{{"config", fit.config},
                {"subject_ids", subject_ids},
                {"score_files", score_files},
                {"converged", fit.converged},
                {"iterations", fit.iterations}};
  write_json(manifest, out_dir / "fit.json");
}

LoadedFit read_fit(const fs::path& dir) {
  const json manifest = read_json(dir / "fit.json");
  LoadedFit out;
  try {
    out.fit.config = manifest.at("config").get<ModelConfig>();
    out.subject_ids = manifest.at("subject_ids").get<std::vector<std::string>>();
    out.fit.converged = manifest.at("converged").get<bool>();
    out.fit.iterations = manifest.at("iterations").get<int>();
    for (const auto& name : manifest.at("score_files"))
      out.fit.scores.push_back(read_csv_matrix(dir / name.get<std::string>()));
  } catch (const json::exception& e) {
    throw std::invalid_argument((dir / "fit.json").string() + ": " + e.what());
  }
  out.fit.factors = read_csv_matrix(dir / "factors.csv");
  const Matrix delays = read_csv_matrix(dir / "delays.csv");
  if (delays.rows() != static_cast<Eigen::Index>(out.subject_ids.size()))
    throw DimensionError("delays.csv row count does not match subject_ids");
  for (Eigen::Index s = 0; s < delays.rows(); ++s) {
    std::vector<int> d(delays.cols());
    for (Eigen::Index k = 0; k < delays.cols(); ++k) d[k] = static_cast<int>(std::lround(delays(s, k)));
    out.fit.delays.emplace_back(std::move(d));
  }

  std::ifstream trace(dir / "objective_trace.csv");
  if (!trace) throw IoError("cannot open objective_trace.csv in " + dir.string());
  std::string line;
  std::getline(trace, line);  // header
  while (std::getline(trace, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    out.fit.objective_trace.push_back(std::stod(line.substr(comma + 1)));
  }
  return out;
}

}  // namespace opfa
