#include "subnewton/verify.hpp"

#include "subnewton/errors.hpp"
#include "subnewton/linsolve.hpp"
#include "subnewton/rng.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>

namespace subnewton {

namespace {

bool within(double lhs, double rhs, double floor) {
  return lhs <= rhs * (1.0 + 1e-12) || lhs <= floor;
}

double q_norm(const Matrix& Q, const Vector& v) { return std::sqrt(std::max(0.0, v.dot(Q * v))); }

nlohmann::ordered_json number_or_null(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

}  // namespace

double phi(const Matrix& H, const Vector& g, const Vector& p) {
  if (H.rows() != p.size() || g.size() != p.size()) throw ArgumentError("phi: dimension mismatch");
  return p.dot(H * p) - 2.0 * p.dot(g);
}

double ssn_direction_alpha(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in [0, 1)");
  return epsilon / (1.0 - epsilon);
}

double giant_direction_alpha(double epsilon) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in [0, 1)");
  return epsilon * epsilon / (1.0 - epsilon);
}

DirectionQuality check_direction(const Matrix& H, const Vector& g, const Vector& p_candidate,
                                 double alpha) {
  if (!(alpha >= 0.0)) throw ArgumentError("alpha must be >= 0");
  DirectionQuality q;
  const Vector p_star = solve_exact(H, g).solution;
  q.phi_exact = phi(H, g, p_star);
  q.phi_approx = phi(H, g, p_candidate);
  q.alpha_bound = alpha;
  const double slack = 1e-12 * std::abs(q.phi_exact);
  q.holds = q.phi_exact - slack <= q.phi_approx &&
            q.phi_approx <= (1.0 - alpha * alpha) * q.phi_exact + slack;
  return q;
}

bool check_step_recursion(const Matrix& H_t, const Vector& delta_t, const Vector& delta_next,
                          double alpha, double L) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ArgumentError("alpha must lie in [0, 1)");
  if (!(L >= 0.0)) throw ArgumentError("L must be >= 0");
  const double lhs = delta_next.dot(H_t * delta_next);
  const double rhs = L * delta_t.squaredNorm() * delta_next.norm() +
                     alpha * alpha / (1.0 - alpha * alpha) * delta_t.dot(H_t * delta_t);
  const double slack = 1e-9 * std::max(1.0, rhs);
  return lhs <= rhs + slack;
}

std::string_view to_string(EnvelopeKind kind) {
  switch (kind) {
    case EnvelopeKind::GlobalQuadratic: return "global_quadratic";
    case EnvelopeKind::LocalNonquadratic: return "local_nonquadratic";
    case EnvelopeKind::SSPNGlobal: return "sspn_global";
    case EnvelopeKind::SSPNLocal: return "sspn_local";
  }
  return "unknown";
}

std::string to_json(const CheckReport& report) {
  nlohmann::ordered_json j;
  j["check"] = report.check;
  j["pass"] = report.pass;
  j["first_failure_iter"] =
      report.first_failure_iter ? nlohmann::ordered_json(*report.first_failure_iter) : nullptr;
  nlohmann::ordered_json details;
  for (const auto& [name, value] : report.scalars) details[name] = number_or_null(value);
  nlohmann::ordered_json iters = nlohmann::ordered_json::array();
  for (const IterationVerdict& v : report.iterations) {
    iters.push_back({{"iter", v.iter},
                     {"lhs", number_or_null(v.lhs)},
                     {"rhs", number_or_null(v.rhs)},
                     {"pass", v.pass},
                     {"skipped", v.skipped}});
  }
  details["iterations"] = std::move(iters);
  details["notes"] = report.notes;
  j["details"] = std::move(details);
  return j.dump(2);
}

CheckReport check_envelope(const ConvergenceTrace& trace, EnvelopeKind kind,
                           const BoundParams& bound, double kappa, double sigma_min,
                           const EnvelopeOptions& options) {
  bound.validate();
  if (!(kappa >= 1.0)) throw ArgumentError("kappa must be >= 1");
  if (!std::isfinite(trace.initial_delta_norm)) {
    throw ArgumentError("envelope checks need ||w_0 - w*||; run with a reference solution");
  }
  for (const IterationRecord& r : trace.records) {
    if (!std::isfinite(r.delta_norm)) throw ArgumentError("trace record lacks delta_norm");
    if (options.use_measured_epsilon && !std::isfinite(r.epsilon_measured)) {
      throw ArgumentError("use_measured_epsilon requires a certified trace");
    }
  }

  CheckReport report;
  report.check = std::string("envelope_") + std::string(to_string(kind));
  const double delta0 = trace.initial_delta_norm;
  const double floor = options.relative_floor * delta0;
  const double sqrt_kappa = std::sqrt(kappa);
  report.scalars = {{"epsilon", bound.epsilon},
                    {"kappa", kappa},
                    {"initial_delta_norm", delta0}};

  auto record_verdict = [&](IterationVerdict v) {
    if (!v.pass && !report.first_failure_iter) report.first_failure_iter = v.iter;
    report.pass = report.pass && v.pass;
    report.iterations.push_back(v);
  };

  const bool global = kind == EnvelopeKind::GlobalQuadratic || kind == EnvelopeKind::SSPNGlobal;
  if (global) {
    const bool sspn = kind == EnvelopeKind::SSPNGlobal;
    auto rate = [&](double eps) {
      if (!sspn) return eps;
      if (!(eps < 1.0)) return std::numeric_limits<double>::infinity();
      return eps / (1.0 - eps);
    };
    double factor = 1.0;
    for (const IterationRecord& r : trace.records) {
      factor *= rate(options.use_measured_epsilon ? r.epsilon_measured : bound.epsilon);
      IterationVerdict v;
      v.iter = r.iter;
      v.lhs = r.delta_norm;
      v.rhs = factor * sqrt_kappa * delta0;
      v.pass = within(v.lhs, v.rhs, floor);
      record_verdict(v);
    }
    return report;
  }

  const std::optional<double> L = options.lipschitz_L ? options.lipschitz_L : bound.lipschitz_L;
  if (!L || !(*L >= 0.0)) {
    throw ArgumentError("local envelope needs a Hessian Lipschitz constant");
  }
  if (!(sigma_min > 0.0)) throw ArgumentError("sigma_min must be > 0");
  report.scalars.emplace_back("lipschitz_L", *L);
  report.scalars.emplace_back("sigma_min", sigma_min);
  const double basin =
      *L > 0.0 ? sigma_min / (2.0 * *L) : std::numeric_limits<double>::infinity();
  report.scalars.emplace_back("basin_radius", basin);

  double previous = delta0;
  int skipped = 0;
  for (const IterationRecord& r : trace.records) {
    IterationVerdict v;
    v.iter = r.iter;
    v.lhs = r.delta_norm;
    if (previous > basin) {
      v.skipped = true;
      v.rhs = std::numeric_limits<double>::quiet_NaN();
      ++skipped;
    } else {
      const double eps = options.use_measured_epsilon ? r.epsilon_measured : bound.epsilon;
      v.rhs = eps * sqrt_kappa * previous + (*L / sigma_min) * previous * previous;
      v.pass = within(v.lhs, v.rhs, floor);
    }
    record_verdict(v);
    previous = r.delta_norm;
  }
  if (skipped > 0) {
    report.notes.push_back(std::to_string(skipped) +
                           " iteration(s) started outside the local basin and were skipped");
  }
  return report;
}

CheckReport check_prox_properties(const Regularizer& reg, const Matrix& Q, const Vector& w1,
                                  const Vector& w2, const InnerOptions& inner) {
  CheckReport report;
  report.check = "prox_nonexpansive";
  const Vector z1 = scaled_prox(reg, Q, w1, inner);
  const Vector z2 = scaled_prox(reg, Q, w2, inner);
  const double lhs = q_norm(Q, z1 - z2);
  const double rhs = q_norm(Q, w1 - w2);
  report.pass = lhs <= rhs + 1e-8;
  report.scalars = {{"prox_distance_q", lhs}, {"input_distance_q", rhs}};
  if (!report.pass) report.first_failure_iter = 0;
  return report;
}

double estimate_lipschitz(const Problem& problem, const Vector& center, double radius, int pairs,
                          std::uint64_t seed) {
  if (center.size() != problem.d()) throw ArgumentError("center has the wrong dimension");
  if (!(radius > 0.0)) throw ArgumentError("radius must be > 0");
  if (pairs < 1) throw ArgumentError("pairs must be >= 1");
  CounterRng rng(seed);
  const Index d = problem.d();

  auto random_point = [&] {
    Vector u(d);
    for (Index k = 0; k < d; ++k) u[k] = rng.normal();
    const double norm = u.norm();
    const double r = radius * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(d));
    return Vector(center + (r / norm) * u);
  };

  double worst = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const Vector a = random_point();
    const Vector b = random_point();
    const double dist = (a - b).norm();
    if (!(dist > 0.0)) continue;
    const Matrix diff = exact_hessian(problem, a) - exact_hessian(problem, b);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(diff, Eigen::EigenvaluesOnly);
    const double spectral = eig.eigenvalues().cwiseAbs().maxCoeff();
    worst = std::max(worst, spectral / dist);
  }
  return 2.0 * worst;
}

}  // namespace subnewton
