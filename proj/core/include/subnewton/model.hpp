#pragma once

// Regularized empirical risk minimization problems:
//
//   G(w) = (1/n) sum_j l(x_j^T w; y_j) + (gamma/2) ||w||^2 + r(w)
//
// F(w) denotes the smooth part (everything except r). All derivative
// routines below act on F only; r enters through proximal maps.

#include <Eigen/Dense>

#include <string_view>

namespace subnewton {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Dataset {
  Matrix features;   // n x d
  Vector responses;  // n

  Index rows() const noexcept { return features.rows(); }
  Index cols() const noexcept { return features.cols(); }

  /// Throws ArgumentError unless n, d >= 1, shapes agree and every entry is finite.
  void validate() const;
};

enum class LossKind { Quadratic, Logistic };

std::string_view to_string(LossKind kind);
LossKind loss_from_string(std::string_view name);

// Per-sample loss and its derivatives in z = x^T w.
// Quadratic: l = (z - y)^2 / 2.  Logistic (y in {-1, +1}): l = log(1 + exp(-y z)).
double loss_value(LossKind kind, double z, double y);
double loss_first(LossKind kind, double z, double y);
double loss_second(LossKind kind, double z, double y);

class Regularizer {
 public:
  enum class Kind { None, L1, ElasticNetExtra };

  Regularizer() = default;
  static Regularizer none() { return {}; }
  static Regularizer l1(double lambda) { return Regularizer(Kind::L1, lambda); }
  /// r(w) = lambda ||w||_1 + (lambda/2) ||w||^2, on top of the problem's gamma term.
  static Regularizer elastic_net_extra(double lambda) {
    return Regularizer(Kind::ElasticNetExtra, lambda);
  }

  Kind kind() const noexcept { return kind_; }
  double lambda() const noexcept { return lambda_; }
  bool is_none() const noexcept { return kind_ == Kind::None || lambda_ == 0.0; }

  double value(const Vector& w) const;

  /// Coordinate-wise prox of t*r: argmin_z (1/(2t)) (z - v)^2 + r(z).
  double prox_scalar(double v, double t) const;
  Vector prox(const Vector& v, double t) const;

  /// Prox with a per-coordinate quadratic weight q_j > 0:
  /// argmin_z (q_j / 2) (z_j - v_j)^2 + r(z_j).
  Vector weighted_prox(const Vector& v, const Vector& q) const;

 private:
  Regularizer(Kind kind, double lambda);

  Kind kind_ = Kind::None;
  double lambda_ = 0.0;
};

std::string_view to_string(Regularizer::Kind kind);

struct Problem {
  Dataset data;
  LossKind loss = LossKind::Quadratic;
  double gamma = 0.0;
  Regularizer reg;

  Index n() const noexcept { return data.rows(); }
  Index d() const noexcept { return data.cols(); }

  /// Dataset checks plus gamma >= 0 and logistic labels in {-1, +1}.
  void validate() const;
};

struct IterateState {
  Vector w;
  Vector g;  // gradient of F at w
  int iter = 0;
};

/// Fresh state at w: computes the gradient.
IterateState make_state(const Problem& problem, Vector w, int iter = 0);

double smooth_objective(const Problem& problem, const Vector& w);
double objective(const Problem& problem, const Vector& w);
Vector gradient(const Problem& problem, const Vector& w);

/// A_t with row j = sqrt(l''(x_j^T w)) x_j, so that H_t = (1/n) A_t^T A_t + gamma I.
Matrix scaled_row_matrix(const Problem& problem, const Vector& w);

Matrix exact_hessian(const Problem& problem, const Vector& w);

/// (1/scale) A^T A + gamma I, filled symmetrically from a rank update.
Matrix gram_plus_ridge(const Matrix& A, double scale, double gamma);

}  // namespace subnewton
