#include "subnewton/solvers.hpp"

#include "subnewton/errors.hpp"
#include "subnewton/rng.hpp"
#include "subnewton/verify.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace subnewton {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct DirectionSolve {
  Vector direction;
  int cg_iters = 0;
};

// Solves ((1/n) C^T C + gamma I) p = g, exactly from H_tilde or by CG on the factored form.
DirectionSolve solve_direction(const Matrix& C, const Matrix* H_tilde, double n_scale,
                               double gamma, const Vector& g, const SolverConfig& config) {
  DirectionSolve out;
  if (!config.inexact) {
    const Matrix H = H_tilde ? *H_tilde : gram_plus_ridge(C, n_scale, gamma);
    out.direction = solve_exact(H, g).solution;
    return out;
  }
  const FactoredHessian op(C, n_scale, gamma);
  int max_iter = config.inexact->max_iter;
  if (max_iter <= 0) {
    max_iter = gamma > 0.0
                   ? cg_iteration_budget(op.lambda_max_upper() / gamma, config.inexact->epsilon0)
                   : static_cast<int>(10 * g.size());
  }
  const std::optional<double> lower = gamma > 0.0 ? std::optional<double>(gamma) : std::nullopt;
  const SolveReport report = solve_cg(op, g, config.inexact->epsilon0, max_iter, lower);
  out.direction = report.solution;
  out.cg_iters = report.iterations;
  return out;
}

Sketch step_sketch(const Matrix& A, const Problem& problem, const IterateState& state,
                   const SolverConfig& config) {
  if (config.full_sample) return full_sketch(problem.n());
  const Vector probs = sampling_probabilities(A, config.scheme, problem.gamma);
  const std::uint64_t seed = config.seed ^ static_cast<std::uint64_t>(state.iter);
  return draw_sketch(probs, config.s, seed, config.scheme);
}

double phi_ratio(const Matrix& H, const Vector& g, const Vector& p) {
  const Vector p_star = solve_exact(H, g).solution;
  const double best = phi(H, g, p_star);
  if (!(best < 0.0)) return kNaN;
  return phi(H, g, p) / best;
}

StepResult finish_step(const Problem& problem, const IterateState& state, Vector w_next,
                       Vector direction) {
  if (!w_next.allFinite()) throw NumericError("step produced a non-finite iterate");
  StepResult result;
  result.state = make_state(problem, std::move(w_next), state.iter + 1);
  result.direction = std::move(direction);
  result.record.iter = state.iter + 1;
  result.record.grad_norm = result.state.g.norm();
  result.record.objective = objective(problem, result.state.w);
  result.record.delta_norm = kNaN;
  result.record.epsilon_measured = kNaN;
  result.record.phi_ratio = kNaN;
  return result;
}

// Stationarity measure used by run(): ||w - prox_r(w - g)||, which is ||g|| for r = 0.
double stationarity(const Problem& problem, const IterateState& state) {
  if (problem.reg.is_none()) return state.g.norm();
  return (state.w - problem.reg.prox(state.w - state.g, 1.0)).norm();
}

// With a regularizer g_t does not vanish at the optimum, so the subproblem
// tolerance tracks stationarity instead, floored near rounding level.
InnerOptions resolve_inner(const InnerOptions& inner, const Problem& problem,
                           const IterateState& state) {
  InnerOptions out = inner;
  if (out.tol <= 0.0) {
    out.tol = std::max(1e-3 * stationarity(problem, state), 1e-13 * std::max(1.0, state.g.norm()));
  }
  return out;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::ExactNewton: return "exact_newton";
    case Method::SSN: return "ssn";
    case Method::GIANT: return "giant";
    case Method::SSPN: return "sspn";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  if (name == "exact_newton") return Method::ExactNewton;
  if (name == "ssn") return Method::SSN;
  if (name == "giant") return Method::GIANT;
  if (name == "sspn") return Method::SSPN;
  throw ArgumentError("unknown method '" + std::string(name) + "'");
}

void SolverConfig::validate(Index n) const {
  if (!(step_size > 0.0 && step_size <= 1.0)) throw ArgumentError("step_size must lie in (0, 1]");
  if (max_outer < 0) throw ArgumentError("max_outer must be >= 0");
  if (!(grad_tol >= 0.0)) throw ArgumentError("grad_tol must be >= 0");
  if (inexact && !(inexact->epsilon0 > 0.0 && inexact->epsilon0 < 1.0)) {
    throw ArgumentError("inexact epsilon0 must lie in (0, 1)");
  }
  if (sspn_inner.max_iter < 1) throw ArgumentError("sspn_inner.max_iter must be >= 1");
  switch (method) {
    case Method::ExactNewton: break;
    case Method::SSN:
    case Method::SSPN:
      if (!full_sample && s < 1) throw ArgumentError("subsample size s must be >= 1");
      break;
    case Method::GIANT: {
      if (m < 1) throw ArgumentError("GIANT requires m >= 1 workers");
      if (n % m != 0) {
        throw ArgumentError("GIANT requires m to divide n (n = " + std::to_string(n) +
                            ", m = " + std::to_string(m) + ")");
      }
      if (s != 0 && s * m != n) throw ArgumentError("GIANT requires m * s = n");
      break;
    }
  }
}

std::string to_csv(const ConvergenceTrace& trace) {
  std::ostringstream out;
  out << "iter,grad_norm,objective,delta_norm,epsilon_measured,phi_ratio,comm_rounds,cg_iters\n";
  char buf[512];
  for (const IterationRecord& r : trace.records) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%ld,%d\n", r.iter,
                  r.grad_norm, r.objective, r.delta_norm, r.epsilon_measured, r.phi_ratio,
                  r.comm_rounds, r.cg_iters);
    out << buf;
  }
  return out.str();
}

std::string to_json(const ConvergenceTrace& trace) {
  nlohmann::ordered_json j;
  j["method"] = std::string(to_string(trace.method));
  j["initial_grad_norm"] = trace.initial_grad_norm;
  j["initial_objective"] = trace.initial_objective;
  j["initial_delta_norm"] = trace.initial_delta_norm;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const IterationRecord& r : trace.records) {
    nlohmann::ordered_json row;
    row["iter"] = r.iter;
    row["grad_norm"] = r.grad_norm;
    row["objective"] = r.objective;
    row["delta_norm"] = r.delta_norm;
    row["epsilon_measured"] = r.epsilon_measured;
    row["phi_ratio"] = r.phi_ratio;
    row["comm_rounds"] = r.comm_rounds;
    row["cg_iters"] = r.cg_iters;
    records.push_back(std::move(row));
  }
  j["records"] = std::move(records);
  return j.dump(2);
}

std::span<const Index> WorkerPartition::block(Index worker) const {
  if (worker < 0 || worker >= m) throw ArgumentError("worker index out of range");
  return {assignment.data() + worker * block_size, static_cast<std::size_t>(block_size)};
}

WorkerPartition make_partition(Index n, Index m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw ArgumentError("make_partition requires n >= 1 and m >= 1");
  if (n % m != 0) {
    throw ArgumentError("make_partition: m = " + std::to_string(m) +
                        " does not divide n = " + std::to_string(n));
  }
  CounterRng rng(seed);
  const std::vector<std::int64_t> perm = random_permutation(n, rng);
  WorkerPartition partition;
  partition.assignment.assign(perm.begin(), perm.end());
  partition.m = m;
  partition.block_size = n / m;
  partition.seed = seed;
  return partition;
}

StepResult exact_newton_step(const Problem& problem, const IterateState& state,
                             const SolverConfig& config) {
  const Matrix A = scaled_row_matrix(problem, state.w);
  const Matrix H = gram_plus_ridge(A, static_cast<double>(problem.n()), problem.gamma);
  const DirectionSolve solve =
      solve_direction(A, &H, static_cast<double>(problem.n()), problem.gamma, state.g, config);

  Vector w_next = state.w - config.step_size * solve.direction;
  if (!problem.reg.is_none()) {
    w_next = scaled_prox(problem.reg, H, w_next, resolve_inner(config.sspn_inner, problem, state));
  }
  Vector applied = state.w - w_next;
  StepResult result = finish_step(problem, state, std::move(w_next), std::move(applied));
  result.record.cg_iters = solve.cg_iters;
  if (config.certify) {
    result.record.epsilon_measured = 0.0;
    result.record.phi_ratio = phi_ratio(H, state.g, solve.direction);
  }
  return result;
}

StepResult ssn_step(const Problem& problem, const IterateState& state, const SolverConfig& config) {
  const double n = static_cast<double>(problem.n());
  const Matrix A = scaled_row_matrix(problem, state.w);
  const Sketch sketch = step_sketch(A, problem, state, config);
  const Matrix C = sketched_rows(A, sketch);

  std::optional<Matrix> H_tilde;
  if (!config.inexact || config.certify) H_tilde = gram_plus_ridge(C, n, problem.gamma);
  const DirectionSolve solve = solve_direction(C, H_tilde ? &*H_tilde : nullptr, n,
                                               problem.gamma, state.g, config);

  Vector w_next = state.w - config.step_size * solve.direction;
  StepResult result = finish_step(problem, state, std::move(w_next), solve.direction);
  result.record.cg_iters = solve.cg_iters;
  if (config.certify) {
    const Matrix H = gram_plus_ridge(A, n, problem.gamma);
    result.record.epsilon_measured = spectral_epsilon(H, *H_tilde);
    result.record.phi_ratio = phi_ratio(H, state.g, solve.direction);
  }
  return result;
}

StepResult giant_step(const Problem& problem, const IterateState& state,
                      const WorkerPartition& partition, const SolverConfig& config) {
  if (static_cast<Index>(partition.assignment.size()) != problem.n() ||
      partition.m * partition.block_size != problem.n()) {
    throw ArgumentError("worker partition does not cover the dataset");
  }
  const Index s = partition.block_size;
  const Matrix A = scaled_row_matrix(problem, state.w);
  std::optional<Matrix> H;
  if (config.certify) H = gram_plus_ridge(A, static_cast<double>(problem.n()), problem.gamma);

  Vector direction = Vector::Zero(problem.d());
  int cg_iters = 0;
  double epsilon = 0.0;
  // Reduction runs in ascending worker order so the sum is bitwise reproducible.
  for (Index i = 0; i < partition.m; ++i) {
    const std::span<const Index> rows = partition.block(i);
    Matrix local(s, A.cols());
    for (Index r = 0; r < s; ++r) local.row(r) = A.row(rows[static_cast<std::size_t>(r)]);

    std::optional<Matrix> H_local;
    if (!config.inexact || config.certify) {
      H_local = gram_plus_ridge(local, static_cast<double>(s), problem.gamma);
    }
    const DirectionSolve solve =
        solve_direction(local, H_local ? &*H_local : nullptr, static_cast<double>(s),
                        problem.gamma, state.g, config);
    direction += solve.direction;
    // Workers run concurrently in the modeled system, so report the slowest one.
    cg_iters = std::max(cg_iters, solve.cg_iters);
    if (config.certify) epsilon = std::max(epsilon, spectral_epsilon(*H, *H_local));
  }
  direction /= static_cast<double>(partition.m);

  Vector w_next = state.w - config.step_size * direction;
  StepResult result = finish_step(problem, state, std::move(w_next), direction);
  result.record.cg_iters = cg_iters;
  result.record.comm_rounds = 4L * result.record.iter;
  if (config.certify) {
    result.record.epsilon_measured = epsilon;
    result.record.phi_ratio = phi_ratio(*H, state.g, direction);
  }
  return result;
}

StepResult sspn_step(const Problem& problem, const IterateState& state,
                     const SolverConfig& config) {
  const double n = static_cast<double>(problem.n());
  const Matrix A = scaled_row_matrix(problem, state.w);
  const Sketch sketch = step_sketch(A, problem, state, config);
  const Matrix C = sketched_rows(A, sketch);
  const Matrix H_tilde = gram_plus_ridge(C, n, problem.gamma);
  const DirectionSolve solve = solve_direction(C, &H_tilde, n, problem.gamma, state.g, config);

  Vector w_next = state.w - config.step_size * solve.direction;
  if (!problem.reg.is_none()) {
    w_next = scaled_prox(problem.reg, H_tilde, w_next, resolve_inner(config.sspn_inner, problem, state));
  }
  Vector applied = state.w - w_next;
  StepResult result = finish_step(problem, state, std::move(w_next), std::move(applied));
  result.record.cg_iters = solve.cg_iters;
  if (config.certify) {
    const Matrix H = gram_plus_ridge(A, n, problem.gamma);
    result.record.epsilon_measured = spectral_epsilon(H, H_tilde);
    result.record.phi_ratio = phi_ratio(H, state.g, solve.direction);
  }
  return result;
}

Vector scaled_prox(const Regularizer& reg, const Matrix& Q, const Vector& v,
                   const InnerOptions& inner) {
  if (Q.rows() != Q.cols() || Q.rows() != v.size()) {
    throw ArgumentError("scaled_prox: dimension mismatch");
  }
  if (reg.is_none()) return v;

  const Matrix off_diagonal = Q.triangularView<Eigen::StrictlyLower>();
  if (off_diagonal.cwiseAbs().maxCoeff() == 0.0 || Q.rows() == 1) {
    return reg.weighted_prox(v, Q.diagonal());
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(Q, Eigen::EigenvaluesOnly);
  const double L = eig.eigenvalues().maxCoeff();
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw ArgumentError("scaled_prox: Q must be positive definite");
  }
  const double tol = inner.tol > 0.0 ? inner.tol : 1e-12 * std::max(1.0, L * v.norm());
  const double step = 1.0 / L;

  Vector x = reg.prox(v, step);
  Vector y = x;
  double t = 1.0;
  Vector best = x;
  double best_norm = std::numeric_limits<double>::infinity();

  for (int k = 0; k < inner.max_iter; ++k) {
    const Vector grad = Q * (y - v);
    const Vector x_next = reg.prox(y - step * grad, step);
    const double map_norm = L * (y - x_next).norm();
    if (map_norm < best_norm) {
      best_norm = map_norm;
      best = x_next;
    }
    if (map_norm <= tol) return x_next;

    // Gradient-based adaptive restart keeps the accelerated rate linear here.
    if ((y - x_next).dot(x_next - x) > 0.0) {
      t = 1.0;
      y = x_next;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      y = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x = x_next;
  }
  throw ProxNotConvergedError(best, best_norm);
}

double fixed_point_residual(const Problem& problem, const Vector& w, const Matrix& H,
                            const InnerOptions& inner) {
  const IterateState state = make_state(problem, w);
  const Vector p = solve_exact(H, state.g).solution;
  const Vector z = scaled_prox(problem.reg, H, w - p, resolve_inner(inner, problem, state));
  return (w - z).norm();
}

ConvergenceTrace run(const Problem& problem, const Vector& w0, const SolverConfig& config,
                     const std::optional<Vector>& w_star) {
  problem.validate();
  if (w0.size() != problem.d()) throw ArgumentError("w0 has the wrong dimension");
  if (w_star && w_star->size() != problem.d()) throw ArgumentError("w_star has the wrong dimension");
  SolverConfig cfg = config;
  cfg.validate(problem.n());
  if (cfg.method == Method::GIANT && cfg.s == 0) cfg.s = problem.n() / cfg.m;

  ConvergenceTrace trace;
  trace.method = cfg.method;
  IterateState state = make_state(problem, w0);
  trace.initial_grad_norm = state.g.norm();
  trace.initial_objective = objective(problem, state.w);
  trace.initial_delta_norm = w_star ? (state.w - *w_star).norm() : kNaN;

  std::optional<WorkerPartition> partition;
  if (cfg.method == Method::GIANT) partition = make_partition(problem.n(), cfg.m, cfg.seed);

  for (int t = 0; t < cfg.max_outer; ++t) {
    if (stationarity(problem, state) <= cfg.grad_tol) break;
    StepResult step;
    try {
      switch (cfg.method) {
        case Method::ExactNewton: step = exact_newton_step(problem, state, cfg); break;
        case Method::SSN: step = ssn_step(problem, state, cfg); break;
        case Method::GIANT: step = giant_step(problem, state, *partition, cfg); break;
        case Method::SSPN: step = sspn_step(problem, state, cfg); break;
      }
    } catch (const std::exception& e) {
      throw RunError(std::string("step ") + std::to_string(state.iter + 1) + " failed: " + e.what(),
                     trace);
    }
    if (w_star) step.record.delta_norm = (step.state.w - *w_star).norm();
    trace.records.push_back(step.record);
    state = std::move(step.state);
  }
  return trace;
}

}  // namespace subnewton
