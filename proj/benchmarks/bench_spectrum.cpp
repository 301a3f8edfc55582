#include <benchmark/benchmark.h>

#include "bench_common.hpp"
#include "ksgraph/nonparanormal.hpp"
#include "ksgraph/spectrum.hpp"

namespace {

using namespace ksgraph;

void BM_SparseSpectrum(benchmark::State& state) {
  const Index d = state.range(0);
  const SparseOperator op(bench::low_rank_counts(d, 0.01, 5, 7));
  for (auto _ : state) {
    const AxisSpectrum s = operator_spectrum(op, Axis{"rows", d}, 50, 11);
    benchmark::DoNotOptimize(s.gram_eigenvalues.data());
  }
  state.SetComplexityN(d);
}
BENCHMARK(BM_SparseSpectrum)
    ->RangeMultiplier(2)
    ->Range(1 << 11, 1 << 13)
    ->Unit(benchmark::kMillisecond)
    ->Complexity();

void BM_NonparanormalSpectrum(benchmark::State& state) {
  const Index d = state.range(0);
  const ShiftedSparse op = nonparanormal_transform(bench::low_rank_counts(d, 0.01, 5, 7),
                                                   TieMethod::average);
  for (auto _ : state) {
    const AxisSpectrum s = operator_spectrum(op, Axis{"rows", d}, 50, 11);
    benchmark::DoNotOptimize(s.gram_eigenvalues.data());
  }
  state.SetComplexityN(d);
}
BENCHMARK(BM_NonparanormalSpectrum)
    ->RangeMultiplier(2)
    ->Range(1 << 11, 1 << 12)
    ->Unit(benchmark::kMillisecond);

void BM_RankTransform(benchmark::State& state) {
  const Index d = state.range(0);
  const SparseRowMatrix m = bench::low_rank_counts(d, 0.01, 5, 3);
  for (auto _ : state) {
    ShiftedSparse op = nonparanormal_transform(m, TieMethod::average);
    benchmark::DoNotOptimize(op.zero_map().data());
  }
}
BENCHMARK(BM_RankTransform)->Arg(1 << 12)->Arg(1 << 14)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
