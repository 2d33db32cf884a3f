#include "subnewton/linsolve.hpp"

#include "subnewton/errors.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace subnewton {

namespace {

Matrix cholesky_lower(const Matrix& H) {
  const Index d = H.rows();
  Matrix L = Matrix::Zero(d, d);
  for (Index j = 0; j < d; ++j) {
    const double pivot = H(j, j) - L.row(j).head(j).squaredNorm();
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      throw NotPositiveDefiniteError(static_cast<std::size_t>(j + 1), pivot);
    }
    const double diag = std::sqrt(pivot);
    L(j, j) = diag;
    const Index below = d - j - 1;
    if (below > 0) {
      L.col(j).tail(below) =
          (H.col(j).tail(below) - L.block(j + 1, 0, below, j) * L.row(j).head(j).transpose()) /
          diag;
    }
  }
  return L;
}

// Smallest eigenvalue of the Lanczos tridiagonal implied by the CG coefficients.
double smallest_ritz_value(const std::vector<double>& alphas, const std::vector<double>& betas) {
  const auto k = static_cast<Index>(alphas.size());
  Vector diag(k);
  Vector sub(std::max<Index>(k - 1, 0));
  for (Index j = 0; j < k; ++j) {
    diag[j] = 1.0 / alphas[static_cast<std::size_t>(j)];
    if (j > 0) {
      diag[j] += betas[static_cast<std::size_t>(j - 1)] / alphas[static_cast<std::size_t>(j - 1)];
      sub[j - 1] = std::sqrt(betas[static_cast<std::size_t>(j - 1)]) /
                   alphas[static_cast<std::size_t>(j - 1)];
    }
  }
  if (k == 1) return diag[0];
  Eigen::SelfAdjointEigenSolver<Matrix> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double energy_bound(double residual_norm, double lambda_lo, double solution_energy_lower) {
  if (!(solution_energy_lower > 0.0) || !(lambda_lo > 0.0)) {
    return std::numeric_limits<double>::infinity();
  }
  return residual_norm / std::sqrt(lambda_lo) / std::sqrt(solution_energy_lower);
}

}  // namespace

SolveReport solve_exact(const Matrix& H, const Vector& g) {
  if (H.rows() != H.cols() || H.rows() != g.size()) {
    throw ArgumentError("solve_exact: dimension mismatch");
  }
  const Matrix L = cholesky_lower(H);
  Vector x = L.triangularView<Eigen::Lower>().solve(g);
  L.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
  if (!x.allFinite()) throw NumericError("solve_exact: non-finite solution");

  SolveReport report;
  const double gnorm = g.norm();
  report.relative_energy_error_bound = gnorm > 0.0 ? (H * x - g).norm() / gnorm : 0.0;
  report.solution = std::move(x);
  report.iterations = 0;
  report.method = SolveMethod::Exact;
  report.certified = false;
  return report;
}

SolveReport solve_cg(const LinearOperator& apply, const Vector& g, double epsilon0, int max_iter,
                     std::optional<double> lambda_min_lower) {
  if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) throw ArgumentError("epsilon0 must lie in (0, 1)");
  if (max_iter < 1) throw ArgumentError("max_iter must be >= 1");
  if (lambda_min_lower && !(*lambda_min_lower > 0.0)) {
    throw ArgumentError("lambda_min lower bound must be > 0");
  }

  const Index d = g.size();
  SolveReport report;
  report.method = SolveMethod::CG;
  report.certified = lambda_min_lower.has_value();
  report.solution = Vector::Zero(d);
  if (g.squaredNorm() == 0.0) return report;

  // The smallest Ritz value overestimates lambda_min, so the uncertified
  // bound is optimistic; halve its target to compensate.
  const double target = lambda_min_lower ? 0.5 * epsilon0 : 0.25 * epsilon0;
  Vector x = Vector::Zero(d);
  Vector r = g;
  Vector p = r;
  double rr = r.squaredNorm();
  std::vector<double> alphas;
  std::vector<double> betas;

  SolveReport best = report;
  best.relative_energy_error_bound = std::numeric_limits<double>::infinity();

  for (int k = 1; k <= max_iter; ++k) {
    const Vector Ap = apply(p);
    const double curvature = p.dot(Ap);
    if (!(curvature > 0.0) || !std::isfinite(curvature)) {
      throw NumericError("solve_cg: operator is not positive definite along a search direction");
    }
    const double alpha = rr / curvature;
    x += alpha * p;
    r -= alpha * Ap;
    const double rr_next = r.squaredNorm();
    alphas.push_back(alpha);

    const double lambda_lo =
        lambda_min_lower ? *lambda_min_lower : smallest_ritz_value(alphas, betas);
    double bound = energy_bound(std::sqrt(rr_next), lambda_lo, x.dot(g) + x.dot(r));

    if (bound <= target) {
      // Confirm against the true residual; the recursive one drifts.
      const Vector r_true = g - apply(x);
      bound = energy_bound(r_true.norm(), lambda_lo, 2.0 * x.dot(g) - x.dot(g - r_true));
    }
    if (bound < best.relative_energy_error_bound) {
      best.solution = x;
      best.iterations = k;
      best.relative_energy_error_bound = bound;
    }
    if (bound <= target) {
      report.solution = x;
      report.iterations = k;
      report.relative_energy_error_bound = bound;
      return report;
    }
    if (rr_next == 0.0) break;

    const double beta = rr_next / rr;
    betas.push_back(beta);
    p = r + beta * p;
    rr = rr_next;
  }
  throw CgNotConvergedError(best);
}

int cg_iteration_budget(double kappa, double epsilon0) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw ArgumentError("kappa must be >= 1");
  if (!(epsilon0 > 0.0 && epsilon0 < 1.0)) throw ArgumentError("epsilon0 must lie in (0, 1)");
  const double q = (std::sqrt(kappa) - 1.0) / 2.0 * std::log(8.0 / (epsilon0 * epsilon0));
  if (q > 1e9) throw ArgumentError("iteration budget overflows");
  return std::max(1, static_cast<int>(std::ceil(q)));
}

}  // namespace subnewton
