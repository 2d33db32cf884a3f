#include "subnewton/sketch.hpp"

#include "subnewton/errors.hpp"
#include "subnewton/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace subnewton {

namespace {

struct GramSpectrum {
  Vector eigenvalues;   // of A^T A, clamped at 0
  Matrix eigenvectors;  // columns
  Vector inverse;       // 1 / (lambda_k + n gamma), 0 where pseudo-inverted away
};

// Eigenvalues of A^T A + n gamma I below eps * max(n, d) * lambda_max count as zero.
GramSpectrum gram_spectrum(const Matrix& A, double gamma, Index n_scale) {
  if (!(gamma >= 0.0)) throw ArgumentError("gamma must be >= 0");
  if (n_scale < 1) throw ArgumentError("n_scale must be >= 1");
  if (!A.allFinite()) throw ArgumentError("matrix contains non-finite entries");

  const Matrix gram = gram_plus_ridge(A, 1.0, 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of A^T A failed");

  GramSpectrum out;
  out.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
  out.eigenvectors = eig.eigenvectors();
  const double shift = static_cast<double>(n_scale) * gamma;
  const Vector shifted = out.eigenvalues.array() + shift;
  const double top = shifted.size() > 0 ? shifted.maxCoeff() : 0.0;
  const double cutoff = std::numeric_limits<double>::epsilon() *
                        static_cast<double>(std::max(A.rows(), A.cols())) * top;
  out.inverse.resize(shifted.size());
  for (Index k = 0; k < shifted.size(); ++k) {
    out.inverse[k] = (shifted[k] > cutoff && shifted[k] > 0.0) ? 1.0 / shifted[k] : 0.0;
  }
  return out;
}

Vector scores_from(const Matrix& A, const GramSpectrum& spec) {
  const Matrix projected = A * spec.eigenvectors;  // n x d, entry (j, k) = a_j^T v_k
  Vector scores = projected.array().square().matrix() * spec.inverse;
  return scores.cwiseMax(0.0).cwiseMin(1.0);
}

double d_eff_from(const GramSpectrum& spec) {
  return spec.eigenvalues.cwiseProduct(spec.inverse).sum();
}

}  // namespace

std::string_view to_string(SamplingScheme scheme) {
  switch (scheme) {
    case SamplingScheme::Uniform: return "uniform";
    case SamplingScheme::RidgeLeverage: return "ridge_leverage";
    case SamplingScheme::RowNorm: return "row_norm";
  }
  return "unknown";
}

SamplingScheme scheme_from_string(std::string_view name) {
  if (name == "uniform") return SamplingScheme::Uniform;
  if (name == "ridge_leverage") return SamplingScheme::RidgeLeverage;
  if (name == "row_norm") return SamplingScheme::RowNorm;
  throw ArgumentError("unknown sampling scheme '" + std::string(name) + "'");
}

std::string to_json(const SpectralReport& report) {
  nlohmann::ordered_json j;
  j["epsilon_measured"] = report.epsilon_measured;
  j["d_eff"] = report.d_eff;
  j["coherence"] = report.coherence;
  j["kappa"] = report.kappa;
  j["s_used"] = report.s_used;
  return j.dump(2);
}

void BoundParams::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ArgumentError("epsilon must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("delta must lie in (0, 1)");
  if (!(constant_c > 0.0) || !std::isfinite(constant_c)) {
    throw ArgumentError("constant_c must be finite and > 0");
  }
  if (lipschitz_L && !(*lipschitz_L >= 0.0)) throw ArgumentError("lipschitz_L must be >= 0");
}

Vector ridge_leverage_scores(const Matrix& A, double gamma, Index n_scale) {
  return scores_from(A, gram_spectrum(A, gamma, n_scale));
}

double effective_dimension(const Matrix& A, double gamma, Index n_scale) {
  return d_eff_from(gram_spectrum(A, gamma, n_scale));
}

LeverageSummary leverage_summary(const Matrix& A, double gamma, Index n_scale) {
  const GramSpectrum spec = gram_spectrum(A, gamma, n_scale);
  LeverageSummary out;
  out.scores = scores_from(A, spec);
  out.d_eff = d_eff_from(spec);
  if (!(out.d_eff > 0.0) || out.scores.maxCoeff() <= 0.0) {
    throw DegenerateMatrixError("ridge coherence undefined: all ridge leverage scores are zero");
  }
  out.coherence = static_cast<double>(A.rows()) / out.d_eff * out.scores.maxCoeff();
  return out;
}

double ridge_coherence(const Matrix& A, double gamma, Index n_scale) {
  return leverage_summary(A, gamma, n_scale).coherence;
}

Vector sampling_probabilities(const Matrix& A, SamplingScheme scheme, double gamma) {
  const Index n = A.rows();
  if (n < 1) throw ArgumentError("matrix has no rows");
  switch (scheme) {
    case SamplingScheme::Uniform:
      return Vector::Constant(n, 1.0 / static_cast<double>(n));
    case SamplingScheme::RidgeLeverage: {
      const Vector scores = ridge_leverage_scores(A, gamma, n);
      const double total = scores.sum();
      if (!(total > 0.0)) {
        throw DegenerateMatrixError("ridge leverage scores are all zero; no sampling distribution");
      }
      return scores / total;
    }
    case SamplingScheme::RowNorm: {
      const Vector norms = A.rowwise().squaredNorm();
      const double total = norms.sum();
      if (!(total > 0.0)) throw DegenerateMatrixError("all rows are zero; no row-norm distribution");
      return norms / total;
    }
  }
  throw ArgumentError("unknown sampling scheme");
}

Sketch draw_sketch(const Vector& probs, Index s, std::uint64_t seed, SamplingScheme scheme) {
  if (s < 1) throw ArgumentError("sketch size s must be >= 1");
  const Index n = probs.size();
  if (n < 1) throw ArgumentError("probability vector is empty");
  if (!probs.allFinite() || probs.minCoeff() < 0.0) {
    throw ArgumentError("probabilities must be finite and nonnegative");
  }

  std::vector<double> cumulative(static_cast<std::size_t>(n));
  std::partial_sum(probs.begin(), probs.end(), cumulative.begin());
  const double total = cumulative.back();
  if (!(total > 0.0) || std::abs(total - 1.0) > 1e-9) {
    throw ArgumentError("probabilities must sum to 1");
  }
  for (double& c : cumulative) c /= total;
  cumulative.back() = 1.0;

  Sketch sketch;
  sketch.scheme = scheme;
  sketch.seed = seed;
  sketch.indices.resize(static_cast<std::size_t>(s));
  sketch.weights.resize(s);

  const double uniform_weight = std::sqrt(static_cast<double>(n) / static_cast<double>(s));
  CounterRng rng(seed);
  for (Index i = 0; i < s; ++i) {
    const double u = rng.uniform_open();
    const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    const Index k = static_cast<Index>(it - cumulative.begin());
    sketch.indices[static_cast<std::size_t>(i)] = k;
    sketch.weights[i] = scheme == SamplingScheme::Uniform
                            ? uniform_weight
                            : 1.0 / std::sqrt(static_cast<double>(s) * probs[k]);
  }
  return sketch;
}

Sketch full_sketch(Index n) {
  if (n < 1) throw ArgumentError("full_sketch requires n >= 1");
  Sketch sketch;
  sketch.indices.resize(static_cast<std::size_t>(n));
  std::iota(sketch.indices.begin(), sketch.indices.end(), Index{0});
  sketch.weights = Vector::Ones(n);
  sketch.scheme = SamplingScheme::Uniform;
  return sketch;
}

Matrix sketched_rows(const Matrix& A, const Sketch& sketch) {
  Matrix C(sketch.size(), A.cols());
  for (Index i = 0; i < sketch.size(); ++i) {
    const Index k = sketch.indices[static_cast<std::size_t>(i)];
    if (k < 0 || k >= A.rows()) throw ArgumentError("sketch index out of range");
    C.row(i) = sketch.weights[i] * A.row(k);
  }
  return C;
}

Matrix subsampled_hessian(const Matrix& A, const Sketch& sketch, double gamma, Index n_scale) {
  return gram_plus_ridge(sketched_rows(A, sketch), static_cast<double>(n_scale), gamma);
}

double spectral_epsilon(const Matrix& H, const Matrix& H_tilde) {
  if (H.rows() != H.cols() || H_tilde.rows() != H.rows() || H_tilde.cols() != H.cols()) {
    throw ArgumentError("spectral_epsilon: matrices must be square and of equal size");
  }
  Eigen::LLT<Matrix> llt(H);
  if (llt.info() != Eigen::Success) {
    throw NumericError("spectral_epsilon: reference Hessian is not positive definite");
  }
  // Eigenvalues of L^{-1} H~ L^{-T}, the same spectrum as H^{-1/2} H~ H^{-1/2}.
  Matrix reduced = llt.matrixL().solve(H_tilde);
  reduced = llt.matrixL().solve(reduced.transpose()).transpose();
  reduced = 0.5 * (reduced + reduced.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("spectral_epsilon: eigensolver failed");
  return (eig.eigenvalues().array() - 1.0).abs().maxCoeff();
}

Index sample_size(const BoundParams& bound, double d_eff, double coherence, SamplingScheme scheme,
                  Index m_workers, BoundFamily family) {
  bound.validate();
  if (!(d_eff > 0.0) || !std::isfinite(d_eff)) throw ArgumentError("d_eff must be > 0");
  if (!(coherence >= 1.0 - 1e-12) || !std::isfinite(coherence)) {
    throw ArgumentError("coherence must be >= 1");
  }
  if (m_workers < 1) throw ArgumentError("m_workers must be >= 1");

  double mu = 1.0;
  switch (scheme) {
    case SamplingScheme::Uniform: mu = coherence; break;
    case SamplingScheme::RidgeLeverage: mu = 1.0; break;
    case SamplingScheme::RowNorm:
      throw ArgumentError("row-norm sampling has no certified sample-size bound");
  }

  const bool giant = family == BoundFamily::GIANT;
  const double eps_power = giant ? bound.epsilon : bound.epsilon * bound.epsilon;
  const double log_arg = (giant ? static_cast<double>(m_workers) : 1.0) * d_eff / bound.delta;
  const double raw = bound.constant_c * mu * d_eff / eps_power * std::log(log_arg);
  if (!std::isfinite(raw) || raw > 1e15) throw ArgumentError("sample size overflows");
  return std::max<Index>(1, static_cast<Index>(std::ceil(raw)));
}

double condition_number(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(H, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("condition_number: eigensolver failed");
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw NumericError("condition_number: matrix is not positive definite");
  return hi / lo;
}

SpectralReport spectral_report(const Matrix& A, double gamma, const Sketch& sketch) {
  const Index n = A.rows();
  const Matrix H = gram_plus_ridge(A, static_cast<double>(n), gamma);
  const LeverageSummary lev = leverage_summary(A, gamma, n);
  SpectralReport report;
  report.epsilon_measured = spectral_epsilon(H, subsampled_hessian(A, sketch, gamma, n));
  report.d_eff = lev.d_eff;
  report.coherence = lev.coherence;
  report.kappa = condition_number(H);
  report.s_used = sketch.size();
  return report;
}

}  // namespace subnewton
