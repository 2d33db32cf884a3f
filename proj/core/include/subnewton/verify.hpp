#pragma once

// Executable certificates for the convergence analysis: direction quality
// through phi(p) = p^T H p - 2 p^T g, the one-step error recursion, the
// convergence envelopes, and prox nonexpansiveness.

#include "subnewton/model.hpp"
#include "subnewton/sketch.hpp"
#include "subnewton/solvers.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace subnewton {

double phi(const Matrix& H, const Vector& g, const Vector& p);

/// alpha = eps / (1 - eps): single sketched Hessian with an eps-sandwich.
double ssn_direction_alpha(double epsilon);
/// alpha = eps^2 / (1 - eps): average of m local directions, each eps-sandwiched.
double giant_direction_alpha(double epsilon);

struct DirectionQuality {
  double phi_exact = 0.0;   // min_p phi(p) = -g^T H^{-1} g
  double phi_approx = 0.0;  // phi at the candidate
  double alpha_bound = 0.0;
  bool holds = false;       // phi_exact <= phi_approx <= (1 - alpha^2) phi_exact
};

DirectionQuality check_direction(const Matrix& H, const Vector& g, const Vector& p_candidate,
                                 double alpha);

/// Delta'^T H Delta' <= L ||Delta||^2 ||Delta'|| + alpha^2 / (1 - alpha^2) Delta^T H Delta,
/// with slack 1e-9 (relative to the right side when it exceeds 1).
bool check_step_recursion(const Matrix& H_t, const Vector& delta_t, const Vector& delta_next,
                          double alpha, double L);

enum class EnvelopeKind { GlobalQuadratic, LocalNonquadratic, SSPNGlobal, SSPNLocal };

std::string_view to_string(EnvelopeKind kind);

struct EnvelopeOptions {
  /// Use each record's epsilon_measured instead of bound.epsilon.
  bool use_measured_epsilon = false;
  /// Hessian Lipschitz constant for local checks; falls back to bound.lipschitz_L.
  std::optional<double> lipschitz_L;
  /// ||Delta_t|| below floor * ||Delta_0|| passes regardless (rounding floor).
  double relative_floor = 1e-12;
};

struct IterationVerdict {
  int iter = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;
  bool skipped = false;  // outside the local basin
};

struct CheckReport {
  std::string check;
  bool pass = true;
  std::optional<int> first_failure_iter;
  std::vector<IterationVerdict> iterations;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<std::string> notes;
};

/// {check, pass, first_failure_iter, details}
std::string to_json(const CheckReport& report);

/// GlobalQuadratic: ||D_t|| <= eps^t sqrt(kappa) ||D_0||.
/// SSPNGlobal:      ||D_t|| <= (eps/(1-eps))^t sqrt(kappa) ||D_0||.
/// LocalNonquadratic / SSPNLocal: ||D_{t+1}|| <= eps sqrt(kappa) ||D_t|| + (L/sigma_min) ||D_t||^2
/// inside the basin ||D_t|| <= sigma_min / (2L); iterations outside are skipped.
/// With use_measured_epsilon, eps^t becomes the product of the recorded epsilons.
CheckReport check_envelope(const ConvergenceTrace& trace, EnvelopeKind kind,
                           const BoundParams& bound, double kappa, double sigma_min,
                           const EnvelopeOptions& options = {});

/// ||prox(w1) - prox(w2)||_Q <= ||w1 - w2||_Q + 1e-8.
CheckReport check_prox_properties(const Regularizer& reg, const Matrix& Q, const Vector& w1,
                                  const Vector& w2, const InnerOptions& inner);

/// 2 x max ||H(w) - H(w')||_2 / ||w - w'|| over `pairs` random pairs in the
/// ball of `radius` around `center`. Advisory only.
double estimate_lipschitz(const Problem& problem, const Vector& center, double radius,
                          int pairs = 100, std::uint64_t seed = 0);

}  // namespace subnewton
