#include "subnewton/synthetic.hpp"

#include "subnewton/errors.hpp"
#include "subnewton/linsolve.hpp"
#include "subnewton/rng.hpp"
#include "subnewton/sketch.hpp"
#include "subnewton/solvers.hpp"

#include "json.hpp"

#include <cmath>

namespace subnewton {

namespace {

// Independent streams for each random ingredient of an instance.
enum StreamTag : std::uint64_t { kLeft = 1, kRight = 2, kPlanted = 3, kNoise = 4 };

CounterRng stream(std::uint64_t seed, StreamTag tag) {
  return CounterRng(mix64(seed) ^ mix64(tag));
}

Matrix orthonormal_columns(Index rows, Index cols, CounterRng& rng) {
  Matrix G(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) G(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(rows, cols);
  // Fix column signs so Q does not depend on the QR sign convention.
  const Matrix R = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (Index j = 0; j < cols; ++j) {
    if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

Vector planted_spectrum(const SyntheticSpec& spec, Index r) {
  const double top = spec.top_sq > 0.0 ? spec.top_sq : static_cast<double>(spec.n);
  Vector sq(r);
  for (Index k = 0; k < r; ++k) {
    switch (spec.spectrum) {
      case SpectrumKind::Geometric:
        sq[k] = top * std::pow(spec.spectrum_param, static_cast<double>(k));
        break;
      case SpectrumKind::Polynomial:
        sq[k] = top * std::pow(static_cast<double>(k + 1), -spec.spectrum_param);
        break;
      case SpectrumKind::Flat: sq[k] = top; break;
    }
  }
  return sq.cwiseSqrt();
}

double hessian_condition(const Problem& problem, const Vector& w) {
  return condition_number(exact_hessian(problem, w));
}

}  // namespace

std::string_view to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::Geometric: return "geometric";
    case SpectrumKind::Polynomial: return "polynomial";
    case SpectrumKind::Flat: return "flat";
  }
  return "unknown";
}

SpectrumKind spectrum_from_string(std::string_view name) {
  if (name == "geometric") return SpectrumKind::Geometric;
  if (name == "polynomial") return SpectrumKind::Polynomial;
  if (name == "flat") return SpectrumKind::Flat;
  throw ArgumentError("unknown spectrum '" + std::string(name) + "'");
}

void SyntheticSpec::validate() const {
  if (n < 1 || d < 1) throw ArgumentError("synthetic spec needs n, d >= 1");
  if (spectrum == SpectrumKind::Geometric && !(spectrum_param > 0.0 && spectrum_param <= 1.0)) {
    throw ArgumentError("geometric rate must lie in (0, 1]");
  }
  if (spectrum == SpectrumKind::Polynomial && !(spectrum_param >= 0.0)) {
    throw ArgumentError("polynomial power must be >= 0");
  }
  if (!(top_sq >= 0.0) || !std::isfinite(top_sq)) throw ArgumentError("top_sq must be >= 0");
  if (!(coherence_boost >= 1.0) || !std::isfinite(coherence_boost)) {
    throw ArgumentError("coherence_boost must be >= 1");
  }
  if (boosted_rows < 0 || (boosted_rows > 0 && boosted_rows >= n) ||
      (coherence_boost > 1.0 && n < 2)) {
    throw ArgumentError("boosted_rows must lie in [0, n) so that some rows stay unboosted");
  }
  if (!(noise >= 0.0)) throw ArgumentError("noise must be >= 0");
  if (!(gamma >= 0.0)) throw ArgumentError("gamma must be >= 0");
  if (gamma_rank && (*gamma_rank < 1 || *gamma_rank > std::min(n, d))) {
    throw ArgumentError("gamma_rank must lie in [1, min(n, d)]");
  }
  if (!gamma_rank && gamma == 0.0 && d > n) {
    throw ArgumentError("gamma = 0 with d > n gives a singular Hessian");
  }
}

SyntheticInstance generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Index n = spec.n;
  const Index d = spec.d;
  const Index r = std::min(n, d);

  CounterRng left_rng = stream(seed, kLeft);
  CounterRng right_rng = stream(seed, kRight);
  const Matrix U = orthonormal_columns(n, r, left_rng);
  const Matrix V = orthonormal_columns(d, r, right_rng);
  const Vector sigma = planted_spectrum(spec, r);

  SyntheticInstance out;
  GroundTruth& truth = out.truth;
  truth.gamma = spec.gamma_rank ? sigma[*spec.gamma_rank - 1] * sigma[*spec.gamma_rank - 1] /
                                      static_cast<double>(n)
                                : spec.gamma;
  const double n_gamma = static_cast<double>(n) * truth.gamma;

  Matrix X = U * sigma.asDiagonal() * V.transpose();
  const bool boosted = spec.coherence_boost > 1.0;
  const Index boosted_rows =
      spec.boosted_rows > 0 ? spec.boosted_rows : std::max<Index>(1, n / 128);
  if (boosted) X.topRows(boosted_rows) *= spec.coherence_boost;

  if (!boosted) {
    truth.singular_values = sigma;
    const Vector shrink = sigma.cwiseAbs2().cwiseQuotient(
        (sigma.cwiseAbs2().array() + n_gamma).matrix());
    truth.d_eff = shrink.sum();
    if (!(truth.d_eff > 0.0)) throw DegenerateMatrixError("planted spectrum has d_eff = 0");
    const Vector scores = U.cwiseAbs2() * shrink;
    truth.coherence = static_cast<double>(n) * scores.maxCoeff() / truth.d_eff;
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(X.transpose() * X, Eigen::EigenvaluesOnly);
    truth.singular_values = eig.eigenvalues().reverse().head(r).cwiseMax(0.0).cwiseSqrt();
    const LeverageSummary summary = leverage_summary(X, truth.gamma, n);
    truth.d_eff = summary.d_eff;
    truth.coherence = summary.coherence;
  }

  CounterRng planted_rng = stream(seed, kPlanted);
  truth.planted_w.resize(d);
  for (Index k = 0; k < d; ++k) {
    truth.planted_w[k] = planted_rng.normal() / std::sqrt(static_cast<double>(d));
  }
  CounterRng noise_rng = stream(seed, kNoise);
  Vector y = X * truth.planted_w;
  for (Index j = 0; j < n; ++j) y[j] += spec.noise * noise_rng.normal();
  if (spec.loss == LossKind::Logistic) {
    for (Index j = 0; j < n; ++j) y[j] = y[j] >= 0.0 ? 1.0 : -1.0;
  }

  Problem& problem = out.problem;
  problem.data.features = std::move(X);
  problem.data.responses = std::move(y);
  problem.loss = spec.loss;
  problem.gamma = truth.gamma;
  problem.validate();

  if (spec.loss == LossKind::Quadratic && !boosted) {
    // w* = V diag(sigma / (sigma^2 + n gamma)) U^T y.
    const Vector filter =
        sigma.cwiseQuotient((sigma.cwiseAbs2().array() + n_gamma).matrix());
    truth.w_star = V * filter.cwiseProduct(U.transpose() * problem.data.responses);
  } else if (spec.loss == LossKind::Quadratic) {
    const Matrix H = exact_hessian(problem, Vector::Zero(d));
    const Vector b = problem.data.features.transpose() * problem.data.responses /
                     static_cast<double>(n);
    truth.w_star = solve_exact(H, b).solution;
  } else {
    truth.w_star = solve_reference(problem);
  }
  truth.kappa = hessian_condition(problem, truth.w_star);
  return out;
}

Vector solve_reference(const Problem& problem, double grad_tol, int max_iter) {
  problem.validate();
  const Index d = problem.d();
  Vector w = Vector::Zero(d);

  if (!problem.reg.is_none()) {
    const InnerOptions inner{200000, 1e-14};
    for (int it = 0; it < max_iter; ++it) {
      const Vector g = gradient(problem, w);
      const Matrix H = exact_hessian(problem, w);
      const Vector p = solve_exact(H, g).solution;
      const Vector next = scaled_prox(problem.reg, H, w - p, inner);
      const double move = (next - w).norm();
      w = next;
      if (move <= grad_tol * std::max(1.0, w.norm())) return w;
    }
    throw NumericError("proximal Newton reference did not converge");
  }

  for (int it = 0; it < max_iter; ++it) {
    const Vector g = gradient(problem, w);
    if (g.norm() <= grad_tol) return w;
    const Vector p = solve_exact(exact_hessian(problem, w), g).solution;
    const double f = objective(problem, w);
    const double slope = g.dot(p);
    double t = 1.0;
    Vector trial = w - p;
    for (int k = 0; k < 60 && objective(problem, trial) > f - 1e-4 * t * slope; ++k) {
      t *= 0.5;
      trial = w - t * p;
    }
    if ((trial - w).norm() == 0.0) break;
    w = std::move(trial);
  }
  const double final_norm = gradient(problem, w).norm();
  if (final_norm <= grad_tol) return w;
  throw NumericError("reference Newton run stopped at ||g|| = " + std::to_string(final_norm));
}

std::string to_json(const SyntheticSpec& spec) {
  nlohmann::ordered_json j;
  j["n"] = spec.n;
  j["d"] = spec.d;
  j["spectrum"] = std::string(to_string(spec.spectrum));
  j["spectrum_param"] = spec.spectrum_param;
  j["top_sq"] = spec.top_sq;
  j["coherence_boost"] = spec.coherence_boost;
  j["boosted_rows"] = spec.boosted_rows;
  j["noise"] = spec.noise;
  j["loss"] = std::string(to_string(spec.loss));
  j["gamma"] = spec.gamma;
  j["gamma_rank"] = spec.gamma_rank ? nlohmann::ordered_json(*spec.gamma_rank) : nullptr;
  return j.dump(2);
}

SyntheticSpec synthetic_spec_from_json(std::string_view json) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), 1);
  }
  if (!j.is_object()) throw ParseError("synthetic spec must be a JSON object", 1);
  SyntheticSpec spec;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n") spec.n = value.get<Index>();
      else if (key == "d") spec.d = value.get<Index>();
      else if (key == "spectrum") spec.spectrum = spectrum_from_string(value.get<std::string>());
      else if (key == "spectrum_param") spec.spectrum_param = value.get<double>();
      else if (key == "top_sq") spec.top_sq = value.get<double>();
      else if (key == "coherence_boost") spec.coherence_boost = value.get<double>();
      else if (key == "boosted_rows") spec.boosted_rows = value.get<Index>();
      else if (key == "noise") spec.noise = value.get<double>();
      else if (key == "loss") spec.loss = loss_from_string(value.get<std::string>());
      else if (key == "gamma") spec.gamma = value.get<double>();
      else if (key == "gamma_rank") {
        if (!value.is_null()) spec.gamma_rank = value.get<Index>();
      } else {
        throw ArgumentError("unknown synthetic spec field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("synthetic spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

std::string to_json(const GroundTruth& truth) {
  nlohmann::ordered_json j;
  j["gamma"] = truth.gamma;
  j["d_eff"] = truth.d_eff;
  j["coherence"] = truth.coherence;
  j["kappa"] = truth.kappa;
  j["singular_values"] = std::vector<double>(truth.singular_values.begin(), truth.singular_values.end());
  j["planted_w"] = std::vector<double>(truth.planted_w.begin(), truth.planted_w.end());
  j["w_star"] = std::vector<double>(truth.w_star.begin(), truth.w_star.end());
  return j.dump(2);
}

}  // namespace subnewton
