#include <benchmark/benchmark.h>

#include <tiltperm/cgf.hpp>
#include <tiltperm/lambda.hpp>
#include <tiltperm/permtest.hpp>
#include <tiltperm/simulate.hpp>
#include <tiltperm/tail.hpp>

using namespace tiltperm;

namespace {

BlockDesign design(int b, int k) {
  RngStream rng(17, 0);
  return gen_design(ErrorModel::parse("exponential_squared"), b, k, Vector::Zero(k), rng);
}

void BM_KappaEvaluate(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const SortedDesign d = sort_design(design(10, k));
  const PermutationCgf cgf(d);
  const Vector t = Vector::Constant(k - 1, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(cgf.evaluate(t));
}
BENCHMARK(BM_KappaEvaluate)->DenseRange(2, 6);

void BM_LambdaInterior(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const BlockDesign d = design(10, k);
  const LambdaSolver solver(sort_design(d));
  const Vector x = 0.5 * reduced_means(d);
  for (auto _ : state) benchmark::DoNotOptimize(solver.evaluate(x));
}
BENCHMARK(BM_LambdaInterior)->DenseRange(2, 6);

void BM_RadialRoot(benchmark::State& state) {
  const DesignLevelSet p(sort_design(design(10, 4)));
  const Vector s = Vector::Constant(3, 1.0 / std::sqrt(3.0));
  for (auto _ : state) benchmark::DoNotOptimize(radial_root(p, s, 1.0));
}
BENCHMARK(BM_RadialRoot);

void BM_BigG(benchmark::State& state) {
  const DesignLevelSet p(sort_design(design(10, 4)));
  for (auto _ : state) {
    RngStream rng(1, 0);
    benchmark::DoNotOptimize(big_g(p, 1.0, static_cast<std::size_t>(state.range(0)), rng));
  }
}
BENCHMARK(BM_BigG)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Resamples(benchmark::State& state) {
  const BlockDesign d = design(10, 4);
  ResampleOptions opt;
  opt.lambda = state.range(0) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(draw_resamples(d, 10000, 3, opt));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_Resamples)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
