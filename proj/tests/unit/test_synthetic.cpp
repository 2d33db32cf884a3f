#include "oracles.hpp"

#include "subnewton/errors.hpp"
#include "subnewton/linsolve.hpp"
#include "subnewton/sketch.hpp"
#include "subnewton/synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace subnewton;

TEST(Synthetic, FlatSquareHasUnitCoherence) {
  SyntheticSpec spec;
  spec.n = 32;
  spec.d = 32;
  spec.spectrum = SpectrumKind::Flat;
  spec.gamma = 0.1;
  const SyntheticInstance inst = generate_synthetic(spec, 1);
  const double measured = ridge_coherence(inst.problem.data.features, inst.truth.gamma, 32);
  EXPECT_NEAR(measured, 1.0, 0.1);
  EXPECT_NEAR(inst.truth.coherence, measured, 1e-8);
}

TEST(Synthetic, GeometricEffectiveDimensionMatchesAnalytic) {
  SyntheticSpec spec;
  spec.n = 256;
  spec.d = 64;
  spec.spectrum = SpectrumKind::Geometric;
  spec.spectrum_param = 0.5;
  spec.top_sq = 1.0;
  spec.gamma = std::pow(2.0, -6) / 256.0;  // n gamma = sigma_1^2 * 2^-6
  const SyntheticInstance inst = generate_synthetic(spec, 2);
  double analytic = 0.0;
  for (int k = 0; k < 64; ++k) {
    const double s2 = std::pow(0.5, k);
    analytic += s2 / (s2 + std::pow(2.0, -6));
  }
  EXPECT_NEAR(inst.truth.d_eff, analytic, 1e-10 * analytic);
  const double measured = effective_dimension(inst.problem.data.features, inst.truth.gamma, 256);
  EXPECT_NEAR(measured, analytic, 0.01 * analytic);
}

TEST(Synthetic, SingularValuesFollowSpec) {
  SyntheticSpec spec;
  spec.n = 200;
  spec.d = 20;
  spec.spectrum = SpectrumKind::Polynomial;
  spec.spectrum_param = 2.0;
  const SyntheticInstance inst = generate_synthetic(spec, 3);
  Eigen::JacobiSVD<Matrix> svd(inst.problem.data.features);
  for (Index k = 0; k < 20; ++k) {
    const double want = std::sqrt(200.0 * std::pow(k + 1.0, -2.0));
    EXPECT_NEAR(svd.singularValues()[k], want, 0.01 * want);
    EXPECT_NEAR(inst.truth.singular_values[k], want, 1e-12 * want);
  }
}

TEST(Synthetic, QuadraticOptimumMatchesNormalEquations) {
  for (double boost : {1.0, 4.0}) {
    SyntheticSpec spec;
    spec.n = 300;
    spec.d = 12;
    spec.gamma_rank = 6;
    spec.coherence_boost = boost;
    spec.boosted_rows = 5;
    const SyntheticInstance inst = generate_synthetic(spec, 4);
    const Matrix& X = inst.problem.data.features;
    const Matrix H = X.transpose() * X / 300.0 + inst.truth.gamma * Matrix::Identity(12, 12);
    const Vector w = oracle::inverse(H) * (X.transpose() * inst.problem.data.responses / 300.0);
    EXPECT_LE((w - inst.truth.w_star).norm(), 1e-8 * std::max(1.0, w.norm()));
  }
}

TEST(Synthetic, GammaRankPinsRidge) {
  SyntheticSpec spec;
  spec.n = 128;
  spec.d = 16;
  spec.spectrum_param = 0.5;
  spec.gamma_rank = 4;
  const SyntheticInstance inst = generate_synthetic(spec, 5);
  EXPECT_NEAR(inst.truth.gamma * 128.0, 128.0 * std::pow(0.5, 3), 1e-9);
}

TEST(Synthetic, BoostRaisesCoherenceAndIsRecomputed) {
  SyntheticSpec spec;
  spec.n = 512;
  spec.d = 16;
  spec.gamma_rank = 8;
  const double base = generate_synthetic(spec, 6).truth.coherence;
  spec.coherence_boost = 8.0;
  spec.boosted_rows = 4;
  const SyntheticInstance boosted = generate_synthetic(spec, 6);
  EXPECT_GT(boosted.truth.coherence, 2.0 * base);
  const LeverageSummary s = leverage_summary(boosted.problem.data.features, boosted.truth.gamma, 512);
  EXPECT_NEAR(boosted.truth.d_eff, s.d_eff, 1e-10);
  EXPECT_NEAR(boosted.truth.coherence, s.coherence, 1e-10);
}

TEST(Synthetic, LogisticOptimumIsCertified) {
  SyntheticSpec spec;
  spec.n = 300;
  spec.d = 10;
  spec.loss = LossKind::Logistic;
  spec.gamma = 1e-3;
  const SyntheticInstance inst = generate_synthetic(spec, 7);
  EXPECT_LE(gradient(inst.problem, inst.truth.w_star).norm(), 1e-12);
  for (Index j = 0; j < 300; ++j) EXPECT_EQ(std::abs(inst.problem.data.responses[j]), 1.0);
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticSpec spec;
  const SyntheticInstance a = generate_synthetic(spec, 11);
  const SyntheticInstance b = generate_synthetic(spec, 11);
  const SyntheticInstance c = generate_synthetic(spec, 12);
  EXPECT_EQ(a.problem.data.features, b.problem.data.features);
  EXPECT_EQ(a.truth.w_star, b.truth.w_star);
  EXPECT_NE(a.problem.data.features, c.problem.data.features);
}

TEST(Synthetic, WideMatricesSupported) {
  SyntheticSpec spec;
  spec.n = 32;
  spec.d = 64;
  spec.gamma = 0.01;
  const SyntheticInstance inst = generate_synthetic(spec, 8);
  EXPECT_EQ(inst.truth.singular_values.size(), 32);
  EXPECT_LE(inst.truth.d_eff, 32.0);
}

TEST(Synthetic, RejectsInfeasibleSpecs) {
  SyntheticSpec spec;
  spec.coherence_boost = 0.5;
  EXPECT_THROW(generate_synthetic(spec, 0), ArgumentError);
  spec = {};
  spec.coherence_boost = 2.0;
  spec.boosted_rows = spec.n;
  EXPECT_THROW(generate_synthetic(spec, 0), ArgumentError);
  spec = {};
  spec.gamma_rank = spec.d + 1;
  EXPECT_THROW(generate_synthetic(spec, 0), ArgumentError);
  spec = {};
  spec.n = 0;
  EXPECT_THROW(generate_synthetic(spec, 0), ArgumentError);
}

TEST(Synthetic, SpecJsonRoundTrip) {
  SyntheticSpec spec;
  spec.n = 99;
  spec.spectrum = SpectrumKind::Polynomial;
  spec.spectrum_param = 1.5;
  spec.gamma_rank = 3;
  spec.loss = LossKind::Logistic;
  const SyntheticSpec back = synthetic_spec_from_json(to_json(spec));
  EXPECT_EQ(back.n, 99);
  EXPECT_EQ(back.spectrum, SpectrumKind::Polynomial);
  EXPECT_EQ(back.gamma_rank, std::optional<Index>(3));
  EXPECT_EQ(back.loss, LossKind::Logistic);
  EXPECT_THROW(synthetic_spec_from_json("{\"nn\": 3}"), ArgumentError);
  EXPECT_THROW(synthetic_spec_from_json("{"), ParseError);
}
