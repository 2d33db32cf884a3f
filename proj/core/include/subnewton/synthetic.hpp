#pragma once

// Synthetic ERM instances with a planted spectrum: X = U diag(sigma) V^T with
// seeded orthonormal U (n x r) and V (d x r), r = min(n, d). The planted
// spectrum fixes d_eff and kappa analytically.

#include "subnewton/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace subnewton {

enum class SpectrumKind { Geometric, Polynomial, Flat };

std::string_view to_string(SpectrumKind kind);
SpectrumKind spectrum_from_string(std::string_view name);

struct SyntheticSpec {
  Index n = 256;
  Index d = 16;
  /// Geometric: sigma_k^2 = top * rate^k. Polynomial: sigma_k^2 = top * (k+1)^-power.
  SpectrumKind spectrum = SpectrumKind::Geometric;
  double spectrum_param = 0.5;
  /// sigma_1^2; 0 means n, so that sigma_1^2 / n = 1.
  double top_sq = 0.0;
  /// Rows 0..boosted_rows-1 are multiplied by this factor (>= 1).
  double coherence_boost = 1.0;
  /// 0 picks max(1, n / 128).
  Index boosted_rows = 0;
  double noise = 0.1;
  LossKind loss = LossKind::Quadratic;
  double gamma = 1e-3;
  /// When set, n * gamma = sigma_k^2 with k = gamma_rank (1-based), overriding gamma.
  std::optional<Index> gamma_rank;

  void validate() const;
};

struct GroundTruth {
  Vector singular_values;  // descending, length min(n, d)
  double gamma = 0.0;
  double d_eff = 0.0;
  double coherence = 1.0;
  double kappa = 1.0;  // of the Hessian at w* (quadratic: the only Hessian)
  Vector planted_w;
  Vector w_star;
};

struct SyntheticInstance {
  Problem problem;
  GroundTruth truth;
};

/// Without boosting, d_eff, coherence and (quadratic) w* come from the
/// factors in closed form; with boosting they are recomputed from the
/// reweighted matrix. Logistic w* is an exact-Newton solution with ||g|| <= 1e-12.
SyntheticInstance generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

std::string to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(std::string_view json);
std::string to_json(const GroundTruth& truth);

/// Damped Newton (backtracking on the objective) to ||g|| <= grad_tol for r = None.
Vector solve_reference(const Problem& problem, double grad_tol = 1e-12, int max_iter = 200);

}  // namespace subnewton
