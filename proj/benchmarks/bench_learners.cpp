// Fit time of each base learner at default hyperparameters.

#include "wids/dataset.hpp"
#include "wids/learners.hpp"

#include <benchmark/benchmark.h>

namespace {

const wids::FeatureTable& data() {
  static const auto t = [] {
    wids::SynthSpec s = wids::benchmark_synth_spec();
    s.n_per_class = 500;
    return wids::synthesize_dataset(s, 0);
  }();
  return t;
}

void BM_Fit(benchmark::State& state) {
  const auto kind = wids::kBaseLearners[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(std::string(wids::kind_name(kind)));
  const auto spec = wids::default_spec(kind, 0);
  for (auto _ : state) benchmark::DoNotOptimize(wids::train(spec, data()));
}
BENCHMARK(BM_Fit)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

}  // namespace
