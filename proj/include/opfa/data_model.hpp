#pragma once

#include "opfa/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace opfa {

/// Reads a dataset manifest (JSON) and the per-subject CSV matrices it names.
/// Relative matrix and mask paths resolve against the manifest's directory.
ObservationSet load_dataset(const std::filesystem::path& manifest_path);

/// Writes `manifest.json` plus one matrix CSV (and one mask CSV, when any
/// entry is unobserved) per subject into out_dir.
void save_dataset(const ObservationSet& data, const std::filesystem::path& out_dir);

/// Divides every entry by the sum of its column, per subject.
ObservationSet column_sum_normalize(const ObservationSet& data);

/// Writes factors.csv, delays.csv, scores_<id>.csv (or scores.csv under
/// OPFA-C), objective_trace.csv and fit.json.
void write_fit(const OpfaFit& fit, const std::vector<std::string>& subject_ids,
               const std::filesystem::path& out_dir);

struct LoadedFit {
  OpfaFit fit;
  std::vector<std::string> subject_ids;
};

LoadedFit read_fit(const std::filesystem::path& dir);

// Config (de)serialization. Absent keys keep their defaults; frobenius_bound
// defaults to sqrt(f) when omitted.
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// CSV helpers shared by the CLI and the sweep harness.
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const Matrix& m, const std::filesystem::path& path);
/// Decimal rendering with 12 significant digits.
std::string format_number(double v);

}  // namespace opfa
