#pragma once

#include "subnewton/model.hpp"

#include <functional>
#include <optional>
#include <stdexcept>

namespace subnewton {

enum class SolveMethod { Exact, CG };

struct SolveReport {
  Vector solution;
  int iterations = 0;
  /// CG: upper bound on ||H^{1/2}(x - x*)|| / ||H^{1/2} x*||. It is a proven
  /// bound when a lambda_min lower bound was supplied (certified == true),
  /// otherwise it uses the smallest Lanczos Ritz value as a surrogate.
  /// Exact: the relative residual ||Hx - g|| / ||g||.
  double relative_energy_error_bound = 0.0;
  bool certified = false;
  SolveMethod method = SolveMethod::Exact;
};

/// Cholesky solve. Throws NotPositiveDefiniteError naming the failing leading minor.
SolveReport solve_exact(const Matrix& H, const Vector& g);

/// v -> H v for an SPD operator.
using LinearOperator = std::function<Vector(const Vector&)>;

/// v -> (1/scale) C^T (C v) + gamma v without forming C^T C.
class FactoredHessian {
 public:
  FactoredHessian(const Matrix& rows, double scale, double gamma)
      : rows_(&rows), inv_scale_(1.0 / scale), gamma_(gamma) {}

  Vector operator()(const Vector& v) const {
    Vector out = rows_->transpose() * (*rows_ * v);
    out *= inv_scale_;
    out += gamma_ * v;
    return out;
  }

  double gamma() const noexcept { return gamma_; }
  /// gamma + ||C||_F^2 / scale, an upper bound on lambda_max.
  double lambda_max_upper() const { return gamma_ + inv_scale_ * rows_->squaredNorm(); }

 private:
  const Matrix* rows_;
  double inv_scale_;
  double gamma_;
};

class CgNotConvergedError : public std::runtime_error {
 public:
  CgNotConvergedError(SolveReport best)
      : std::runtime_error("conjugate gradient hit its iteration limit before the energy-norm "
                           "condition was met"),
        best_(std::move(best)) {}

  const SolveReport& best() const noexcept { return best_; }

 private:
  SolveReport best_;
};

/// Conjugate gradient from x0 = 0, stopping once
///   ||H^{1/2}(x - x*)|| <= (epsilon0 / 2) ||H^{1/2} x*||.
/// The test uses ||x - x*||_H <= ||r|| / sqrt(lambda_lo) and
/// ||x*||_H^2 >= 2 x^T g - x^T H x, with lambda_lo the supplied lower bound
/// on lambda_min. Without one, lambda_lo is the smallest Ritz value and the
/// bound must reach epsilon0 / 4, since the Ritz value can overshoot lambda_min.
SolveReport solve_cg(const LinearOperator& apply, const Vector& g, double epsilon0, int max_iter,
                     std::optional<double> lambda_min_lower = std::nullopt);

/// ceil((sqrt(kappa) - 1) / 2 * log(8 / epsilon0^2)), at least 1.
int cg_iteration_budget(double kappa, double epsilon0);

}  // namespace subnewton
