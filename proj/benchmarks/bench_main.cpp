#include "subnewton/linsolve.hpp"
#include "subnewton/model.hpp"
#include "subnewton/sketch.hpp"
#include "subnewton/solvers.hpp"
#include "subnewton/synthetic.hpp"

#include <benchmark/benchmark.h>

using namespace subnewton;

namespace {

SyntheticInstance instance(Index n, Index d) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = d;
  spec.spectrum_param = 0.8;
  spec.gamma_rank = std::min<Index>(16, d);
  return generate_synthetic(spec, 1);
}

void BM_RidgeLeverageScores(benchmark::State& state) {
  const SyntheticInstance inst = instance(state.range(0), state.range(1));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ridge_leverage_scores(inst.problem.data.features, inst.truth.gamma, inst.problem.n()));
  }
}
BENCHMARK(BM_RidgeLeverageScores)->Args({2048, 64})->Args({4096, 128})->Unit(benchmark::kMillisecond);

void BM_SubsampledHessian(benchmark::State& state) {
  const SyntheticInstance inst = instance(4096, state.range(0));
  const Matrix& X = inst.problem.data.features;
  const Vector probs = sampling_probabilities(X, SamplingScheme::Uniform, inst.truth.gamma);
  const Sketch sk = draw_sketch(probs, state.range(1), 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(subsampled_hessian(X, sk, inst.truth.gamma, X.rows()));
  }
}
BENCHMARK(BM_SubsampledHessian)->Args({64, 512})->Args({128, 1024})->Args({256, 2048})
    ->Unit(benchmark::kMicrosecond);

// Exact Cholesky solve versus CG on the same sketched system.
void BM_DirectionSolve(benchmark::State& state) {
  const Index d = state.range(0);
  const bool use_cg = state.range(1) != 0;
  const SyntheticInstance inst = instance(4096, d);
  const Matrix& X = inst.problem.data.features;
  const Sketch sk = draw_sketch(sampling_probabilities(X, SamplingScheme::Uniform, inst.truth.gamma),
                                1024, 3);
  const Matrix H = subsampled_hessian(X, sk, inst.truth.gamma, X.rows());
  const Vector g = Vector::Ones(d);
  const LinearOperator apply = [&](const Vector& v) { return Vector(H * v); };
  for (auto _ : state) {
    if (use_cg) {
      benchmark::DoNotOptimize(solve_cg(apply, g, 0.1, 10 * static_cast<int>(d), inst.truth.gamma));
    } else {
      benchmark::DoNotOptimize(solve_exact(H, g));
    }
  }
}
BENCHMARK(BM_DirectionSolve)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_GiantStep(benchmark::State& state) {
  const SyntheticInstance inst = instance(4096, 128);
  SolverConfig cfg;
  cfg.method = Method::GIANT;
  cfg.m = state.range(0);
  cfg.certify = false;
  const WorkerPartition partition = make_partition(inst.problem.n(), cfg.m, 0);
  const IterateState start = make_state(inst.problem, Vector::Zero(inst.problem.d()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(giant_step(inst.problem, start, partition, cfg));
  }
}
BENCHMARK(BM_GiantStep)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace

// The packaged benchmark_main archive is LTO bytecode from another compiler release.
BENCHMARK_MAIN();
