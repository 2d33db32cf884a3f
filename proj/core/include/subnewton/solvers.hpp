#pragma once

// Newton-type solvers for regularized ERM: exact Newton, sub-sampled Newton
// (SSN), GIANT with simulated workers, and sub-sampled proximal Newton (SSPN).
//
// Every step uses the full gradient g_t and an approximate Hessian built from
// A_t = scaled_row_matrix(w_t). Step sketches are drawn from seed ^ iter.

#include "subnewton/linsolve.hpp"
#include "subnewton/model.hpp"
#include "subnewton/sketch.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace subnewton {

enum class Method { ExactNewton, SSN, GIANT, SSPN };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct InexactOptions {
  double epsilon0 = 0.1;
  /// 0 picks cg_iteration_budget on the cheap upper bound of kappa(H~).
  int max_iter = 0;
};

struct InnerOptions {
  int max_iter = 20000;
  /// Gradient-map tolerance; 0 means 1e-3 * ||w_t - prox_r(w_t - g_t)||,
  /// floored at 1e-13 * max(1, ||g_t||).
  double tol = 0.0;
};

struct SolverConfig {
  Method method = Method::SSN;
  SamplingScheme scheme = SamplingScheme::Uniform;
  /// Subsample size; for GIANT the local shard size n / m (0 derives it from m).
  Index s = 0;
  Index m = 1;
  /// SSN / SSPN: use every row once (s = n permutation sketch) instead of sampling.
  bool full_sample = false;
  double step_size = 1.0;
  std::optional<InexactOptions> inexact;
  int max_outer = 50;
  double grad_tol = 1e-10;
  std::uint64_t seed = 0;
  InnerOptions sspn_inner;
  /// Record epsilon_measured and phi_ratio (needs the exact Hessian each step).
  bool certify = true;

  /// Throws ArgumentError for inconsistent settings given the problem size n.
  void validate(Index n) const;
};

struct IterationRecord {
  int iter = 0;
  double grad_norm = 0.0;
  double objective = 0.0;
  double delta_norm = 0.0;        // NaN when w* unknown
  double epsilon_measured = 0.0;  // NaN when not certified
  double phi_ratio = 0.0;         // phi(p~) / phi(p*) in [0, 1]; NaN when not certified
  long comm_rounds = 0;
  int cg_iters = 0;
};

struct ConvergenceTrace {
  Method method = Method::SSN;
  double initial_grad_norm = 0.0;
  double initial_objective = 0.0;
  double initial_delta_norm = 0.0;  // NaN when w* unknown
  std::vector<IterationRecord> records;
};

/// CSV with header iter,grad_norm,objective,delta_norm,epsilon_measured,phi_ratio,comm_rounds,cg_iters.
std::string to_csv(const ConvergenceTrace& trace);
std::string to_json(const ConvergenceTrace& trace);

struct WorkerPartition {
  /// Permutation of 0..n-1; worker i owns assignment[i*block, (i+1)*block).
  std::vector<Index> assignment;
  Index m = 1;
  Index block_size = 0;
  std::uint64_t seed = 0;

  std::span<const Index> block(Index worker) const;
};

WorkerPartition make_partition(Index n, Index m, std::uint64_t seed);

struct StepResult {
  IterateState state;
  IterationRecord record;
  /// The direction actually applied: w_{t+1} = w_t - step_size * direction.
  Vector direction;
};

StepResult exact_newton_step(const Problem& problem, const IterateState& state,
                             const SolverConfig& config);
StepResult ssn_step(const Problem& problem, const IterateState& state, const SolverConfig& config);
StepResult giant_step(const Problem& problem, const IterateState& state,
                      const WorkerPartition& partition, const SolverConfig& config);
StepResult sspn_step(const Problem& problem, const IterateState& state, const SolverConfig& config);

/// argmin_z 1/2 (z - v)^T Q (z - v) + r(z). Closed form for r = None or
/// diagonal Q; otherwise accelerated proximal gradient with adaptive restart
/// and step 1 / lambda_max(Q), stopping on gradient-map norm <= inner.tol.
Vector scaled_prox(const Regularizer& reg, const Matrix& Q, const Vector& v,
                   const InnerOptions& inner);

class ProxNotConvergedError : public std::runtime_error {
 public:
  ProxNotConvergedError(Vector best, double gradient_map_norm)
      : std::runtime_error("scaled proximal subproblem did not reach its tolerance"),
        best_(std::move(best)),
        gradient_map_norm_(gradient_map_norm) {}

  const Vector& best() const noexcept { return best_; }
  double gradient_map_norm() const noexcept { return gradient_map_norm_; }

 private:
  Vector best_;
  double gradient_map_norm_;
};

/// A step failed; carries the records accumulated before the failure.
class RunError : public std::runtime_error {
 public:
  RunError(const std::string& what, ConvergenceTrace partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}

  const ConvergenceTrace& partial() const noexcept { return partial_; }

 private:
  ConvergenceTrace partial_;
};

/// Iterates the configured step until ||g_t|| <= grad_tol or max_outer steps.
/// With w_star the trace records ||w_t - w*||.
ConvergenceTrace run(const Problem& problem, const Vector& w0, const SolverConfig& config,
                     const std::optional<Vector>& w_star = std::nullopt);

/// ||w - prox^{H}(w - H^{-1} g(w))||: zero exactly at minimizers of G.
double fixed_point_residual(const Problem& problem, const Vector& w, const Matrix& H,
                            const InnerOptions& inner);

}  // namespace subnewton
