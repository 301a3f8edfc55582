#include <benchmark/benchmark.h>

#include <random>

#include "ksgraph/eigensolver.hpp"

namespace {

using namespace ksgraph;

AxisVectors decaying_spectra(Index k, int axes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.8, 1.2);
  AxisVectors e;
  for (int a = 0; a < axes; ++a) {
    Eigen::VectorXd v(k);
    for (Index i = 0; i < k; ++i) v(i) = 1000.0 / static_cast<double>(i + 1) * jitter(rng);
    std::sort(v.data(), v.data() + k, std::greater<>());
    e.push_back(v);
  }
  return e;
}

void BM_MatrixSolve(benchmark::State& state) {
  const Index k = state.range(0);
  const AxisVectors e = decaying_spectra(k, 2, 5);
  const ModalityStructure s = build_structure({k, k}, {{0, 1}});
  for (auto _ : state) {
    const EigenvalueSolution sol = solve_eigenvalues(e, s);
    benchmark::DoNotOptimize(sol.nll);
  }
  state.SetComplexityN(k);
}
BENCHMARK(BM_MatrixSolve)->RangeMultiplier(2)->Range(16, 256)->Complexity(benchmark::oNSquared);

void BM_ThreeWaySolve(benchmark::State& state) {
  const Index k = state.range(0);
  const AxisVectors e = decaying_spectra(k, 3, 9);
  const ModalityStructure s = build_structure({k, k, k}, {{0, 1, 2}});
  for (auto _ : state) {
    const EigenvalueSolution sol = solve_eigenvalues(e, s);
    benchmark::DoNotOptimize(sol.nll);
  }
}
BENCHMARK(BM_ThreeWaySolve)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_IdentityMetric(benchmark::State& state) {
  const AxisVectors e = decaying_spectra(state.range(0), 2, 5);
  const ModalityStructure s = build_structure({state.range(0), state.range(0)}, {{0, 1}});
  SolverOptions opts;
  opts.metric = StepMetric::identity;
  opts.max_iterations = 200000;
  for (auto _ : state) {
    const EigenvalueSolution sol = solve_eigenvalues(e, s, opts);
    benchmark::DoNotOptimize(sol.nll);
  }
}
BENCHMARK(BM_IdentityMetric)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
