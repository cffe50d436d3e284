#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace opfa {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when shapes of conforming arguments disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown for file and directory failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an iterate or an operator loses a numerical property it must
/// keep (finiteness, positive semidefiniteness, feasibility).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Selects between the serial reference path and the OpenMP path of a kernel.
/// Both produce bit-identical output; work items never share accumulators.
enum class Execution { serial, parallel };

enum class Variant { opfa, opfa_c };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Integer per-factor circular shifts of one subject.
class DelayVector {
 public:
  DelayVector() = default;
  explicit DelayVector(std::vector<int> values) : values_(std::move(values)) {}
  DelayVector(std::initializer_list<int> values) : values_(values) {}
  static DelayVector zeros(int f) { return DelayVector(std::vector<int>(f, 0)); }

  int size() const { return static_cast<int>(values_.size()); }
  int operator[](int i) const { return values_[i]; }
  int& operator[](int i) { return values_[i]; }
  const std::vector<int>& values() const { return values_; }

  auto operator<=>(const DelayVector&) const = default;
  bool operator==(const DelayVector&) const = default;

 private:
  std::vector<int> values_;
};

/// The S observed n x p matrices plus per-entry observation masks.
/// Masks are dense {0,1} matrices; an absent mask is stored as all-ones.
struct ObservationSet {
  std::vector<Matrix> subjects;
  std::vector<Matrix> masks;
  std::vector<std::string> subject_ids;
  std::vector<std::string> variable_ids;
  std::vector<double> time_points;

  int num_subjects() const { return static_cast<int>(subjects.size()); }
  int rows() const { return subjects.empty() ? 0 : static_cast<int>(subjects[0].rows()); }
  int cols() const { return subjects.empty() ? 0 : static_cast<int>(subjects[0].cols()); }

  /// True when every mask entry is one.
  bool fully_observed() const;

  /// Checks shape and mask invariants; throws DimensionError / std::invalid_argument.
  void validate() const;

  /// Builds a validated set with all-ones masks and default ids.
  static ObservationSet from_matrices(std::vector<Matrix> subjects);
  static ObservationSet from_matrices(std::vector<Matrix> subjects, std::vector<Matrix> masks);
};

struct ModelConfig {
  int f = 2;
  int d_max = 0;
  double lambda = 0.0;
  double beta = 0.0;
  int n_F = 0;  ///< 0 means n + d_max
  int window_start = 0;
  double frobenius_bound = 1.0;
  Variant variant = Variant::opfa;
  int max_outer_iters = 200;
  /// Relative to the initial objective: the loop stops once a full sweep
  /// decreases the objective by less than outer_tol * c_initial.
  double outer_tol = 1e-6;
  double inner_tol = 1e-9;
  int max_inner_iters = 2000;
  int restarts = 4;
  std::uint64_t seed = 0;
  Execution execution = Execution::parallel;

  /// Resolves n_F against the observation length n.
  int factor_length(int n) const { return n_F > 0 ? n_F : n + d_max; }

  /// Throws std::invalid_argument when an invariant fails for series length n.
  void validate(int n) const;
};

/// Observation window [start, start + length) inside the n_F-periodic model.
struct Window {
  int start = 0;
  int length = 0;
};

/// Output of the block coordinate descent fit.
struct OpfaFit {
  Matrix factors;               ///< n_F x f, nonnegative, inside the Frobenius ball
  std::vector<Matrix> scores;   ///< S matrices f x p (one shared matrix under OPFA-C)
  std::vector<DelayVector> delays;
  std::vector<double> objective_trace;
  bool converged = false;
  int iterations = 0;
  ModelConfig config;

  /// Score matrix used for subject s (the shared one under OPFA-C).
  const Matrix& scores_for(int s) const {
    return scores.size() == 1 ? scores[0] : scores[static_cast<std::size_t>(s)];
  }
  double final_objective() const { return objective_trace.empty() ? 0.0 : objective_trace.back(); }
};

}  // namespace opfa
