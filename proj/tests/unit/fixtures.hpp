#pragma once

#include "oracles.hpp"

#include "subnewton/model.hpp"

namespace fixtures {

inline subnewton::Problem make_problem(subnewton::Matrix X, subnewton::Vector y,
                                       subnewton::LossKind loss, double gamma,
                                       subnewton::Regularizer reg = {}) {
  subnewton::Problem p;
  p.data.features = std::move(X);
  p.data.responses = std::move(y);
  p.loss = loss;
  p.gamma = gamma;
  p.reg = reg;
  p.validate();
  return p;
}

inline subnewton::Problem random_logistic(subnewton::Index n, subnewton::Index d,
                                          std::uint64_t seed, double gamma = 0.01) {
  return make_problem(oracle::random_matrix(n, d, seed), oracle::random_signs(n, seed + 1000),
                      subnewton::LossKind::Logistic, gamma);
}

inline subnewton::Problem random_quadratic(subnewton::Index n, subnewton::Index d,
                                           std::uint64_t seed, double gamma = 0.01) {
  return make_problem(oracle::random_matrix(n, d, seed), oracle::random_vector(n, seed + 1000),
                      subnewton::LossKind::Quadratic, gamma);
}

}  // namespace fixtures
