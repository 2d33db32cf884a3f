#pragma once

// Ridge leverage diagnostics and row-sampling sketches.
//
// For A (n x d) and ridge gamma the ridge leverage score of row j is
//   l_j = a_j^T (A^T A + n gamma I)^+ a_j,
// the effective dimension is sum_j l_j = sum_k s_k^2 / (s_k^2 + n gamma),
// and the ridge coherence is (n / d_eff) max_j l_j.
//
// A sketch draws s rows with replacement; a draw of row k carries weight
// 1 / sqrt(s p_k), and the sketched Hessian is
//   H~ = (1/n) sum_i w_i^2 a_{k_i} a_{k_i}^T + gamma I,
// which for uniform sampling equals (1/s) A~^T A~ + gamma I.

#include "subnewton/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace subnewton {

enum class SamplingScheme { Uniform, RidgeLeverage, RowNorm };

std::string_view to_string(SamplingScheme scheme);
SamplingScheme scheme_from_string(std::string_view name);

struct Sketch {
  std::vector<Index> indices;
  Vector weights;
  SamplingScheme scheme = SamplingScheme::Uniform;
  std::uint64_t seed = 0;

  Index size() const noexcept { return static_cast<Index>(indices.size()); }
};

struct SpectralReport {
  double epsilon_measured = 0.0;
  double d_eff = 0.0;
  double coherence = 1.0;
  double kappa = 1.0;
  Index s_used = 0;
};

/// JSON object with keys epsilon_measured, d_eff, coherence, kappa, s_used.
std::string to_json(const SpectralReport& report);

struct BoundParams {
  double epsilon = 0.25;
  double delta = 0.1;
  double constant_c = 4.0;
  std::optional<double> lipschitz_L;

  void validate() const;
};

enum class BoundFamily { SSN, GIANT };

Vector ridge_leverage_scores(const Matrix& A, double gamma, Index n_scale);
double effective_dimension(const Matrix& A, double gamma, Index n_scale);
double ridge_coherence(const Matrix& A, double gamma, Index n_scale);

/// Scores, d_eff and coherence from one eigendecomposition.
struct LeverageSummary {
  Vector scores;
  double d_eff = 0.0;
  double coherence = 1.0;
};
LeverageSummary leverage_summary(const Matrix& A, double gamma, Index n_scale);

Vector sampling_probabilities(const Matrix& A, SamplingScheme scheme, double gamma);

/// s i.i.d. draws from `probs` by inverse CDF (first index whose cumulative
/// mass reaches u). Uniform-scheme weights are exactly sqrt(n/s).
Sketch draw_sketch(const Vector& probs, Index s, std::uint64_t seed,
                   SamplingScheme scheme = SamplingScheme::Uniform);

/// Every row once with unit weight: the permutation case s = n.
Sketch full_sketch(Index n);

/// The s x d matrix whose row i is weights[i] * A.row(indices[i]).
Matrix sketched_rows(const Matrix& A, const Sketch& sketch);

Matrix subsampled_hessian(const Matrix& A, const Sketch& sketch, double gamma, Index n_scale);

/// max |lambda - 1| over generalized eigenvalues of (H_tilde, H).
/// Throws NumericError if H is not positive definite.
double spectral_epsilon(const Matrix& H, const Matrix& H_tilde);

/// ceil(c K log(M / delta)):
///   SSN:   K = mu d_eff / eps^2 (uniform) or d_eff / eps^2 (ridge leverage), M = d_eff
///   GIANT: K = mu d_eff / eps   (uniform) or d_eff / eps   (ridge leverage), M = m d_eff
/// Row-norm sampling has no certified bound and is rejected.
Index sample_size(const BoundParams& bound, double d_eff, double coherence, SamplingScheme scheme,
                  Index m_workers, BoundFamily family);

/// kappa = lambda_max(H) / lambda_min(H) for symmetric positive definite H.
double condition_number(const Matrix& H);

/// Certificate for one sketch of A against H = (1/n) A^T A + gamma I.
SpectralReport spectral_report(const Matrix& A, double gamma, const Sketch& sketch);

}  // namespace subnewton
