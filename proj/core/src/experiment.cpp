#include "subnewton/experiment.hpp"

#include "subnewton/errors.hpp"
#include "subnewton/io.hpp"
#include "subnewton/linsolve.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace subnewton {

namespace {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

OrderedJson number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

double median(std::vector<double> values) {
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }),
               values.end());
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

template <typename Fn>
void for_fields(const Json& object, std::string_view where, Fn&& fn) {
  if (!object.is_object()) throw ArgumentError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (!fn(key, value)) {
      throw ArgumentError("unknown field '" + key + "' in " + std::string(where));
    }
  }
}

Regularizer regularizer_from_json(const Json& j) {
  std::string kind = "none";
  double lambda = 0.0;
  for_fields(j, "regularizer", [&](const std::string& key, const Json& value) {
    if (key == "kind") kind = value.get<std::string>();
    else if (key == "lambda") lambda = value.get<double>();
    else return false;
    return true;
  });
  if (kind == "none") return Regularizer::none();
  if (kind == "l1") return Regularizer::l1(lambda);
  if (kind == "elastic_net_extra") return Regularizer::elastic_net_extra(lambda);
  throw ArgumentError("unknown regularizer kind '" + kind + "'");
}

SolverConfig solver_from_json(const Json& j, bool& s_from_bound) {
  SolverConfig cfg;
  for_fields(j, "solver", [&](const std::string& key, const Json& value) {
    if (key == "method") cfg.method = method_from_string(value.get<std::string>());
    else if (key == "scheme") cfg.scheme = scheme_from_string(value.get<std::string>());
    else if (key == "s") {
      if (value.is_string()) {
        if (value.get<std::string>() != "bound") throw ArgumentError("solver.s must be an integer or \"bound\"");
        s_from_bound = true;
      } else {
        cfg.s = value.get<Index>();
      }
    } else if (key == "m") cfg.m = value.get<Index>();
    else if (key == "full_sample") cfg.full_sample = value.get<bool>();
    else if (key == "step_size") cfg.step_size = value.get<double>();
    else if (key == "max_outer") cfg.max_outer = value.get<int>();
    else if (key == "grad_tol") cfg.grad_tol = value.get<double>();
    else if (key == "certify") cfg.certify = value.get<bool>();
    else if (key == "inexact") {
      if (value.is_null()) return true;
      InexactOptions opt;
      for_fields(value, "solver.inexact", [&](const std::string& k, const Json& v) {
        if (k == "epsilon0") opt.epsilon0 = v.get<double>();
        else if (k == "max_iter") opt.max_iter = v.get<int>();
        else return false;
        return true;
      });
      cfg.inexact = opt;
    } else if (key == "sspn_inner") {
      for_fields(value, "solver.sspn_inner", [&](const std::string& k, const Json& v) {
        if (k == "max_iter") cfg.sspn_inner.max_iter = v.get<int>();
        else if (k == "tol") cfg.sspn_inner.tol = v.get<double>();
        else return false;
        return true;
      });
    } else {
      return false;
    }
    return true;
  });
  return cfg;
}

BoundParams bound_from_json(const Json& j) {
  BoundParams b;
  for_fields(j, "bound", [&](const std::string& key, const Json& value) {
    if (key == "epsilon") b.epsilon = value.get<double>();
    else if (key == "delta") b.delta = value.get<double>();
    else if (key == "constant_c") b.constant_c = value.get<double>();
    else if (key == "lipschitz_L") {
      if (!value.is_null()) b.lipschitz_L = value.get<double>();
    } else {
      return false;
    }
    return true;
  });
  return b;
}

EnvelopeKind envelope_from_string(std::string_view name) {
  for (EnvelopeKind k : {EnvelopeKind::GlobalQuadratic, EnvelopeKind::LocalNonquadratic,
                         EnvelopeKind::SSPNGlobal, EnvelopeKind::SSPNLocal}) {
    if (to_string(k) == name) return k;
  }
  throw ArgumentError("unknown envelope '" + std::string(name) + "'");
}

ProblemSource problem_from_json(const Json& j, const std::filesystem::path& base_dir) {
  ProblemSource src;
  for_fields(j, "problem", [&](const std::string& key, const Json& value) {
    if (key == "synthetic") src.synthetic = synthetic_spec_from_json(value.dump());
    else if (key == "data") {
      std::filesystem::path p = value.get<std::string>();
      src.data_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    } else if (key == "format") src.format = value.get<std::string>();
    else if (key == "label_column") src.label_column = value.get<Index>();
    else if (key == "num_features") src.num_features = value.get<Index>();
    else if (key == "loss") src.loss = loss_from_string(value.get<std::string>());
    else if (key == "gamma") src.gamma = value.get<double>();
    else return false;
    return true;
  });
  return src;
}

struct PreparedProblem {
  Problem problem;
  Vector w_star;
};

PreparedProblem prepare_problem(const ExperimentConfig& config, std::ostream& log) {
  PreparedProblem out;
  bool have_w_star = false;
  if (config.problem.synthetic) {
    SyntheticInstance instance = generate_synthetic(*config.problem.synthetic, config.seed);
    out.problem = std::move(instance.problem);
    out.w_star = std::move(instance.truth.w_star);
    have_w_star = true;
  } else {
    const ProblemSource& src = config.problem;
    if (src.format == "libsvm") {
      out.problem.data = load_libsvm(src.data_path, src.loss, src.num_features);
    } else if (src.format == "csv") {
      out.problem.data = load_csv(src.data_path, src.label_column, src.loss);
    } else {
      throw ArgumentError("unknown data format '" + src.format + "'");
    }
    out.problem.loss = src.loss;
    out.problem.gamma = src.gamma;
  }

  if (config.solver.method == Method::GIANT) {
    const Index n = out.problem.n();
    const Index m = config.solver.m;
    const Index kept = m > 0 ? (n / m) * m : n;
    if (kept < 1) throw ArgumentError("fewer rows than workers");
    if (kept != n) {
      log << "trimming dataset from " << n << " to " << kept << " rows so that m = " << m
          << " divides n\n";
      out.problem.data.features.conservativeResize(kept, Eigen::NoChange);
      out.problem.data.responses.conservativeResize(kept);
      have_w_star = false;
    }
  }

  out.problem.reg = config.reg;
  out.problem.validate();
  if (!config.reg.is_none()) have_w_star = false;
  if (!have_w_star) {
    if (out.problem.loss == LossKind::Quadratic && out.problem.reg.is_none()) {
      const Matrix H = exact_hessian(out.problem, Vector::Zero(out.problem.d()));
      const Vector b = out.problem.data.features.transpose() * out.problem.data.responses /
                       static_cast<double>(out.problem.n());
      out.w_star = solve_exact(H, b).solution;
    } else {
      out.w_star = solve_reference(out.problem);
    }
  }
  return out;
}

EnvelopeKind default_envelope(const Problem& problem, Method method) {
  const bool composite = method == Method::SSPN && !problem.reg.is_none();
  if (problem.loss == LossKind::Quadratic) {
    return composite ? EnvelopeKind::SSPNGlobal : EnvelopeKind::GlobalQuadratic;
  }
  return composite ? EnvelopeKind::SSPNLocal : EnvelopeKind::LocalNonquadratic;
}

std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (trials < 1) throw ArgumentError("trials must be >= 1");
  if (problem.synthetic.has_value() == !problem.data_path.empty()) {
    throw ArgumentError("problem needs exactly one of 'synthetic' or 'data'");
  }
  if (problem.synthetic) problem.synthetic->validate();
  if (!problem.data_path.empty() && !std::filesystem::exists(problem.data_path)) {
    throw ArgumentError("data file '" + problem.data_path.string() + "' does not exist");
  }
  bound.validate();
}

ExperimentConfig experiment_config_from_json(std::string_view json,
                                             const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(json);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 1);
  }
  ExperimentConfig cfg;
  bool have_problem = false;
  try {
    for_fields(j, "experiment config", [&](const std::string& key, const Json& value) {
      if (key == "problem") {
        cfg.problem = problem_from_json(value, base_dir);
        have_problem = true;
      } else if (key == "regularizer") cfg.reg = regularizer_from_json(value);
      else if (key == "solver") cfg.solver = solver_from_json(value, cfg.s_from_bound);
      else if (key == "bound") cfg.bound = bound_from_json(value);
      else if (key == "envelope") {
        if (!value.is_null()) cfg.envelope = envelope_from_string(value.get<std::string>());
      } else if (key == "trials") cfg.trials = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "output") {
        std::filesystem::path p = value.get<std::string>();
        cfg.output = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      } else {
        return false;
      }
      return true;
    });
  } catch (const Json::exception& e) {
    throw ArgumentError(std::string("experiment config: ") + e.what());
  }
  if (!have_problem) throw ArgumentError("experiment config needs a 'problem' section");
  return cfg;
}

double geometric_mean_contraction(const ConvergenceTrace& trace, double floor) {
  double previous = trace.initial_delta_norm;
  const double cutoff = floor * trace.initial_delta_norm;
  double log_sum = 0.0;
  int count = 0;
  for (const IterationRecord& r : trace.records) {
    if (!std::isfinite(previous) || !std::isfinite(r.delta_norm)) return kNaN;
    if (previous > cutoff && previous > 0.0) {
      log_sum += std::log(std::max(r.delta_norm / previous, 1e-300));
      ++count;
    }
    previous = r.delta_norm;
  }
  return count > 0 ? std::exp(log_sum / count) : kNaN;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream& log) {
  config.validate();
  const PreparedProblem prepared = prepare_problem(config, log);
  const Problem& problem = prepared.problem;
  const Vector w0 = Vector::Zero(problem.d());

  const Matrix A0 = scaled_row_matrix(problem, w0);
  const LeverageSummary leverage = leverage_summary(A0, problem.gamma, problem.n());
  const double kappa0 = condition_number(exact_hessian(problem, w0));

  SolverConfig solver = config.solver;
  if (config.s_from_bound) {
    if (solver.method == Method::SSN || solver.method == Method::SSPN) {
      solver.s = sample_size(config.bound, leverage.d_eff, leverage.coherence, solver.scheme, 1,
                             BoundFamily::SSN);
    } else {
      log << "s = \"bound\" only applies to SSN and SSPN; ignored\n";
    }
  }
  if (solver.method == Method::GIANT && solver.s == 0) solver.s = problem.n() / solver.m;
  solver.validate(problem.n());

  const Matrix H_star = exact_hessian(problem, prepared.w_star);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H_star, Eigen::EigenvaluesOnly);
  const double sigma_min = eig.eigenvalues().minCoeff();
  const double kappa_star = eig.eigenvalues().maxCoeff() / sigma_min;

  const EnvelopeKind kind = config.envelope ? *config.envelope : default_envelope(problem, solver.method);
  const bool local = kind == EnvelopeKind::LocalNonquadratic || kind == EnvelopeKind::SSPNLocal;
  EnvelopeOptions envelope_options;
  bool lipschitz_estimated = false;
  if (local && !config.bound.lipschitz_L) {
    const double radius = std::max((w0 - prepared.w_star).norm(), 1e-3);
    envelope_options.lipschitz_L = estimate_lipschitz(problem, prepared.w_star, radius, 100, config.seed);
    lipschitz_estimated = true;
  }

  ExperimentResult result;
  std::vector<double> contractions;
  std::vector<bool> envelope_pass;
  std::vector<std::vector<bool>> iteration_pass;
  OrderedJson reports = OrderedJson::array();
  OrderedJson final_grad = OrderedJson::array();
  std::ostringstream table;
  table << "trial  seed                  iters  final_delta    contraction  envelope\n";

  if (!config.output.empty()) std::filesystem::create_directories(config.output);

  for (int k = 0; k < config.trials; ++k) {
    SolverConfig trial_cfg = solver;
    trial_cfg.seed = config.seed + static_cast<std::uint64_t>(k);
    ConvergenceTrace trace;
    std::string error;
    try {
      trace = run(problem, w0, trial_cfg, prepared.w_star);
    } catch (const RunError& e) {
      trace = e.partial();
      error = e.what();
      log << "trial " << k << ": " << error << '\n';
    }

    const double contraction = geometric_mean_contraction(trace);
    contractions.push_back(contraction);
    const CheckReport check = check_envelope(trace, kind, config.bound, kappa_star, sigma_min,
                                             envelope_options);
    const bool passed = check.pass && error.empty();
    envelope_pass.push_back(passed);
    std::vector<bool> per_iter;
    for (const IterationVerdict& v : check.iterations) per_iter.push_back(v.pass);
    iteration_pass.push_back(std::move(per_iter));

    double eps_max = kNaN;
    for (const IterationRecord& r : trace.records) {
      if (std::isfinite(r.epsilon_measured)) {
        eps_max = std::isnan(eps_max) ? r.epsilon_measured : std::max(eps_max, r.epsilon_measured);
      }
    }
    OrderedJson report;
    report["epsilon_measured"] = number_or_null(eps_max);
    report["d_eff"] = leverage.d_eff;
    report["coherence"] = leverage.coherence;
    report["kappa"] = kappa0;
    report["s_used"] = solver.method == Method::ExactNewton ? problem.n()
                       : solver.full_sample                 ? problem.n()
                                                            : solver.s;
    reports.push_back(std::move(report));
    final_grad.push_back(trace.records.empty() ? trace.initial_grad_norm
                                               : trace.records.back().grad_norm);

    const double final_delta =
        trace.records.empty() ? trace.initial_delta_norm : trace.records.back().delta_norm;
    char line[160];
    std::snprintf(line, sizeof line, "%-6d %-21llu %-6zu %-12.4e %-12.4g %s\n", k,
                  static_cast<unsigned long long>(trial_cfg.seed), trace.records.size(),
                  final_delta, contraction, passed ? "pass" : "FAIL");
    table << line;

    if (!config.output.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "trace_%03d.csv", k);
      write_text_file(config.output / name, to_csv(trace));
    }
    result.trial_errors.push_back(error);
    result.traces.push_back(std::move(trace));
  }

  const double pass_fraction =
      static_cast<double>(std::count(envelope_pass.begin(), envelope_pass.end(), true)) /
      static_cast<double>(config.trials);
  std::size_t max_iters = 0;
  for (const auto& v : iteration_pass) max_iters = std::max(max_iters, v.size());
  OrderedJson per_iteration = OrderedJson::array();
  for (std::size_t t = 0; t < max_iters; ++t) {
    int hits = 0;
    int total = 0;
    for (const auto& v : iteration_pass) {
      if (t < v.size()) {
        ++total;
        hits += v[t] ? 1 : 0;
      }
    }
    per_iteration.push_back(static_cast<double>(hits) / total);
  }
  const bool all_finished = std::all_of(result.trial_errors.begin(), result.trial_errors.end(),
                                        [](const std::string& e) { return e.empty(); });
  result.hard_checks_pass = all_finished && pass_fraction >= 1.0 - config.bound.delta;

  OrderedJson agg;
  agg["method"] = std::string(to_string(solver.method));
  agg["scheme"] = std::string(to_string(solver.scheme));
  agg["loss"] = std::string(to_string(problem.loss));
  agg["regularizer"] = {{"kind", std::string(to_string(problem.reg.kind()))},
                        {"lambda", problem.reg.lambda()}};
  agg["trials"] = config.trials;
  agg["seed"] = config.seed;
  agg["n"] = problem.n();
  agg["d"] = problem.d();
  agg["gamma"] = problem.gamma;
  agg["s"] = solver.s;
  agg["m"] = solver.m;
  agg["kappa_at_optimum"] = kappa_star;
  agg["median_contraction"] = number_or_null(median(contractions));
  OrderedJson contraction_list = OrderedJson::array();
  for (double c : contractions) contraction_list.push_back(number_or_null(c));
  agg["contractions"] = std::move(contraction_list);
  OrderedJson env;
  env["kind"] = std::string(to_string(kind));
  env["epsilon"] = config.bound.epsilon;
  env["pass_fraction"] = pass_fraction;
  env["per_trial"] = envelope_pass;
  env["per_iteration_pass_fraction"] = std::move(per_iteration);
  if (local) {
    env["lipschitz_L"] = envelope_options.lipschitz_L ? *envelope_options.lipschitz_L
                                                      : *config.bound.lipschitz_L;
    env["lipschitz_estimated"] = lipschitz_estimated;
  }
  agg["envelope"] = std::move(env);
  agg["spectral_reports"] = std::move(reports);
  agg["final_grad_norm"] = std::move(final_grad);
  agg["trial_errors"] = result.trial_errors;
  agg["hard_checks_pass"] = result.hard_checks_pass;
  result.aggregate_json = agg.dump(2) + "\n";

  table << "envelope " << to_string(kind) << " pass fraction " << format_number(pass_fraction)
        << ", median contraction " << format_number(median(contractions)) << ", hard checks "
        << (result.hard_checks_pass ? "pass" : "FAIL") << '\n';
  result.summary = table.str();

  if (!config.output.empty()) write_text_file(config.output / "aggregate.json", result.aggregate_json);
  return result;
}

}  // namespace subnewton
