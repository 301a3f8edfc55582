#include <benchmark/benchmark.h>

#include "ksgraph/recompose.hpp"

namespace {

using namespace ksgraph;

Eigen::MatrixXd random_basis(Index d, Index k) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Random(d, k));
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
}

template <typename Rule>
void run(benchmark::State& state, Rule rule) {
  const Index d = state.range(0);
  const Eigen::MatrixXd v = random_basis(d, 50);
  const Eigen::VectorXd lambda = Eigen::VectorXd::LinSpaced(50, 1.0, 2.0);
  for (auto _ : state) {
    const FactorGraph g = recompose_threshold(Axis{"v", d}, v, lambda, ThresholdRule{rule, 0});
    benchmark::DoNotOptimize(g.edges.data());
  }
  state.SetComplexityN(d);
  state.counters["pairs/s"] = benchmark::Counter(
      static_cast<double>(d) * static_cast<double>(d - 1) / 2.0, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_TopOverall(benchmark::State& state) { run(state, rule::TopOverall{10 * state.range(0)}); }
void BM_TopPerVertex(benchmark::State& state) { run(state, rule::TopPerVertex{10}); }
void BM_DegreeDownweighted(benchmark::State& state) {
  run(state, rule::DegreeDownweighted{10 * state.range(0)});
}

BENCHMARK(BM_TopOverall)
    ->RangeMultiplier(2)
    ->Range(1 << 11, 1 << 13)
    ->Unit(benchmark::kMillisecond)
    ->Complexity(benchmark::oNSquared);
BENCHMARK(BM_TopPerVertex)->Arg(1 << 12)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DegreeDownweighted)->Arg(1 << 12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
