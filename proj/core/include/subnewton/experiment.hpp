#pragma once

// Experiment orchestration: build a problem, run seeded trials, check the
// applicable convergence envelope and emit traces plus an aggregate report.

#include "subnewton/model.hpp"
#include "subnewton/sketch.hpp"
#include "subnewton/solvers.hpp"
#include "subnewton/synthetic.hpp"
#include "subnewton/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace subnewton {

struct ProblemSource {
  /// Exactly one of `synthetic` or `data_path` is set.
  std::optional<SyntheticSpec> synthetic;
  std::filesystem::path data_path;
  std::string format = "libsvm";  // "libsvm" or "csv"
  Index label_column = 0;         // csv only
  std::optional<Index> num_features;
  LossKind loss = LossKind::Quadratic;
  double gamma = 1e-3;  // file data only; synthetic specs carry their own
};

struct ExperimentConfig {
  ProblemSource problem;
  Regularizer reg;
  SolverConfig solver;
  /// Derive s from sample_size(bound, d_eff, coherence) at w_0 = 0.
  bool s_from_bound = false;
  BoundParams bound;
  /// Defaults by loss and method when unset.
  std::optional<EnvelopeKind> envelope;
  int trials = 1;
  std::uint64_t seed = 0;
  /// Directory for trace_<k>.csv and aggregate.json; empty writes nothing.
  std::filesystem::path output;

  void validate() const;
};

/// Relative paths in the JSON resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(std::string_view json,
                                             const std::filesystem::path& base_dir = {});

struct ExperimentResult {
  std::vector<ConvergenceTrace> traces;
  std::vector<std::string> trial_errors;  // empty string for trials that finished
  std::string aggregate_json;
  std::string summary;
  bool hard_checks_pass = false;
};

/// The solver seed of trial k is config.seed + k; synthetic instances are
/// generated once from config.seed. Progress and trimming notes go to `log`.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& log);

/// Geometric mean of ||D_t|| / ||D_{t-1}|| over steps whose start lies above
/// floor * ||D_0||; NaN when no step qualifies.
double geometric_mean_contraction(const ConvergenceTrace& trace, double floor = 1e-12);

}  // namespace subnewton
