#include "subnewton/model.hpp"

#include "subnewton/errors.hpp"

#include <cmath>
#include <string>

namespace subnewton {

namespace {

void require_dim(const Problem& problem, const Vector& w) {
  if (w.size() != problem.d()) {
    throw ArgumentError("iterate has length " + std::to_string(w.size()) + ", expected d = " +
                        std::to_string(problem.d()));
  }
}

// log(1 + exp(-m)) without overflow for either sign of m.
double log1p_exp_neg(double m) {
  if (m > 0.0) return std::log1p(std::exp(-m));
  return -m + std::log1p(std::exp(m));
}

// 1 / (1 + exp(-t)), evaluated on the side that does not overflow.
double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double soft_threshold(double v, double tau) {
  if (v > tau) return v - tau;
  if (v < -tau) return v + tau;
  return 0.0;
}

}  // namespace

void Dataset::validate() const {
  if (features.rows() < 1 || features.cols() < 1) {
    throw ArgumentError("dataset must have n >= 1 rows and d >= 1 columns");
  }
  if (responses.size() != features.rows()) {
    throw ArgumentError("responses length " + std::to_string(responses.size()) +
                        " does not match n = " + std::to_string(features.rows()));
  }
  if (!features.allFinite() || !responses.allFinite()) {
    throw ArgumentError("dataset contains non-finite entries");
  }
}

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Quadratic: return "quadratic";
    case LossKind::Logistic: return "logistic";
  }
  return "unknown";
}

LossKind loss_from_string(std::string_view name) {
  if (name == "quadratic") return LossKind::Quadratic;
  if (name == "logistic") return LossKind::Logistic;
  throw ArgumentError("unknown loss '" + std::string(name) + "'");
}

double loss_value(LossKind kind, double z, double y) {
  switch (kind) {
    case LossKind::Quadratic: return 0.5 * (z - y) * (z - y);
    case LossKind::Logistic: return log1p_exp_neg(y * z);
  }
  return 0.0;
}

double loss_first(LossKind kind, double z, double y) {
  switch (kind) {
    case LossKind::Quadratic: return z - y;
    case LossKind::Logistic: return -y * sigmoid(-y * z);
  }
  return 0.0;
}

double loss_second(LossKind kind, double z, double y) {
  switch (kind) {
    case LossKind::Quadratic: return 1.0;
    case LossKind::Logistic: {
      const double p = sigmoid(y * z);
      return p * (1.0 - p);
    }
  }
  return 0.0;
}

Regularizer::Regularizer(Kind kind, double lambda) : kind_(kind), lambda_(lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("regularizer lambda must be finite and >= 0");
  }
}

double Regularizer::value(const Vector& w) const {
  switch (kind_) {
    case Kind::None: return 0.0;
    case Kind::L1: return lambda_ * w.lpNorm<1>();
    case Kind::ElasticNetExtra: return lambda_ * (w.lpNorm<1>() + 0.5 * w.squaredNorm());
  }
  return 0.0;
}

double Regularizer::prox_scalar(double v, double t) const {
  switch (kind_) {
    case Kind::None: return v;
    case Kind::L1: return soft_threshold(v, t * lambda_);
    case Kind::ElasticNetExtra: return soft_threshold(v, t * lambda_) / (1.0 + t * lambda_);
  }
  return v;
}

Vector Regularizer::prox(const Vector& v, double t) const {
  Vector out(v.size());
  for (Index j = 0; j < v.size(); ++j) out[j] = prox_scalar(v[j], t);
  return out;
}

Vector Regularizer::weighted_prox(const Vector& v, const Vector& q) const {
  if (q.size() != v.size()) throw ArgumentError("weighted_prox: weight/vector size mismatch");
  Vector out(v.size());
  for (Index j = 0; j < v.size(); ++j) {
    if (!(q[j] > 0.0)) throw ArgumentError("weighted_prox: weights must be positive");
    out[j] = prox_scalar(v[j], 1.0 / q[j]);
  }
  return out;
}

std::string_view to_string(Regularizer::Kind kind) {
  switch (kind) {
    case Regularizer::Kind::None: return "none";
    case Regularizer::Kind::L1: return "l1";
    case Regularizer::Kind::ElasticNetExtra: return "elastic_net_extra";
  }
  return "unknown";
}

void Problem::validate() const {
  data.validate();
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ArgumentError("gamma must be finite and >= 0");
  }
  if (loss == LossKind::Logistic) {
    for (Index i = 0; i < data.responses.size(); ++i) {
      const double y = data.responses[i];
      if (y != 1.0 && y != -1.0) {
        throw ArgumentError("logistic responses must be -1 or +1 (row " + std::to_string(i) +
                            " has " + std::to_string(y) + ")");
      }
    }
  }
}

IterateState make_state(const Problem& problem, Vector w, int iter) {
  IterateState state;
  state.g = gradient(problem, w);
  state.w = std::move(w);
  state.iter = iter;
  return state;
}

double smooth_objective(const Problem& problem, const Vector& w) {
  require_dim(problem, w);
  const Vector z = problem.data.features * w;
  double sum = 0.0;
  for (Index j = 0; j < z.size(); ++j) {
    sum += loss_value(problem.loss, z[j], problem.data.responses[j]);
  }
  const double value =
      sum / static_cast<double>(problem.n()) + 0.5 * problem.gamma * w.squaredNorm();
  if (!std::isfinite(value)) throw NumericError("objective evaluated to a non-finite value");
  return value;
}

double objective(const Problem& problem, const Vector& w) {
  return smooth_objective(problem, w) + problem.reg.value(w);
}

Vector gradient(const Problem& problem, const Vector& w) {
  require_dim(problem, w);
  const Vector z = problem.data.features * w;
  Vector coef(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    coef[j] = loss_first(problem.loss, z[j], problem.data.responses[j]);
  }
  Vector g = problem.data.features.transpose() * coef;
  g /= static_cast<double>(problem.n());
  g += problem.gamma * w;
  if (!g.allFinite()) throw NumericError("gradient evaluated to a non-finite value");
  return g;
}

Matrix scaled_row_matrix(const Problem& problem, const Vector& w) {
  require_dim(problem, w);
  if (problem.loss == LossKind::Quadratic) return problem.data.features;
  const Vector z = problem.data.features * w;
  Vector scale(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    const double curvature = loss_second(problem.loss, z[j], problem.data.responses[j]);
    if (!(curvature >= 0.0)) {
      throw NumericError("internal invariant violated: negative loss curvature");
    }
    scale[j] = std::sqrt(curvature);
  }
  return scale.asDiagonal() * problem.data.features;
}

Matrix gram_plus_ridge(const Matrix& A, double scale, double gamma) {
  const Index d = A.cols();
  Matrix H = Matrix::Zero(d, d);
  H.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose(), 1.0 / scale);
  H.triangularView<Eigen::StrictlyUpper>() = H.transpose().eval();
  H.diagonal().array() += gamma;
  return H;
}

Matrix exact_hessian(const Problem& problem, const Vector& w) {
  return gram_plus_ridge(scaled_row_matrix(problem, w), static_cast<double>(problem.n()),
                         problem.gamma);
}

}  // namespace subnewton
