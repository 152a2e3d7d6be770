// Single-sample and batch prediction through a trained stacked model.

#include "wids/dataset.hpp"
#include "wids/sampling.hpp"
#include "wids/stacking.hpp"

#include <benchmark/benchmark.h>

namespace {

struct Fixture {
  wids::FeatureTable test;
  wids::StackedModel model;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    wids::SynthSpec s = wids::benchmark_synth_spec();
    s.n_per_class = 600;
    const auto data = wids::synthesize_dataset(s, 0);
    auto [tr, te] = wids::stratified_split(data, 0.7, 1);
    auto cfg = wids::default_pipeline_config();
    cfg.runs = 1;
    auto r = wids::train_pipeline2(tr, te, cfg);
    return Fixture{std::move(te), std::move(r.model)};
  }();
  return f;
}

void BM_PredictRows(benchmark::State& state) {
  const auto& f = fixture();
  std::vector<std::size_t> rows(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i % f.test.rows();
  const auto batch = f.test.select_rows(rows);
  for (auto _ : state) benchmark::DoNotOptimize(wids::predict(f.model, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PredictRows)->Arg(1)->Arg(64)->Arg(1024)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
