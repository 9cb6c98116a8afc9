#include <benchmark/benchmark.h>

#include "cwadam/lemmas.hpp"
#include "cwadam/optim.hpp"
#include "cwadam/oracles.hpp"

namespace {

void BM_AdamStep(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  cwadam::OptimizerConfig config;
  config.eta = 1e-3;
  cwadam::OptimizerState s = cwadam::init_state(config, cwadam::Vec(d, 1.0));
  const cwadam::Vec g(d, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cwadam::adam_step(s, config, g));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d));
}
BENCHMARK(BM_AdamStep)->Arg(10)->Arg(1000);

void BM_QuarticSample(benchmark::State& state) {
  const auto d = static_cast<double>(state.range(0));
  const auto oracle = cwadam::make_objective(
      cwadam::ObjectiveSpec("quartic").set("dim", d).set("sigma0", 1.0).set("sigma1", 1.0));
  cwadam::Engine rng = cwadam::make_stream(1, 0);
  const cwadam::Vec x(oracle->dim(), 0.3);
  cwadam::Vec g(oracle->dim());
  for (auto _ : state) {
    oracle->sample(x, rng, g);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_QuarticSample)->Arg(10)->Arg(1000);

void BM_LemmaChecks(benchmark::State& state) {
  cwadam::Engine rng = cwadam::make_stream(1, 0);
  const cwadam::SequenceCase c = cwadam::random_sequence_case(rng, true, 512);
  for (auto _ : state) {
    benchmark::DoNotOptimize(cwadam::check_momentum_ratio(c));
    benchmark::DoNotOptimize(cwadam::check_sum_ratio_log(c));
    benchmark::DoNotOptimize(cwadam::check_sum_ratio_sqrt(c));
  }
}
BENCHMARK(BM_LemmaChecks);

}  // namespace

BENCHMARK_MAIN();
