#include "wids/hyper_search.hpp"

#include "wids/metrics.hpp"
#include "wids/rng.hpp"

#include <numeric>

namespace wids {

std::vector<Hyperparameters> enumerate_grid(const ParamSpace& space) {
  if (space.empty()) throw SearchError("search space is empty");
  for (const auto& [name, values] : space) {
    if (values.empty()) throw SearchError("no candidates for '" + name + "'");
  }
  std::vector<Hyperparameters> out{{}};
  for (const auto& [name, values] : space) {
    std::vector<Hyperparameters> next;
    next.reserve(out.size() * values.size());
    for (const auto& partial : out) {
      for (double v : values) {
        auto h = partial;
        h[name] = v;
        next.push_back(std::move(h));
      }
    }
    out = std::move(next);
  }
  return out;
}

namespace {

double score(const std::string& metric, const EvalReport& r) {
  if (metric == "accuracy") return r.accuracy;
  return r.macro_f1;
}

}  // namespace

SearchResult hyper_search(const LearnerSpec& base, const ParamSpace& space,
                          const SearchOptions& options, const FeatureTable& t,
                          const FoldPlan& folds) {
  if (options.metric != "accuracy" && options.metric != "macro_f1") {
    throw SearchError("unsupported search metric '" + options.metric + "'");
  }
  auto candidates = enumerate_grid(space);
  if (options.mode == SearchMode::randomized) {
    Rng rng(derive_seed(options.seed, {0x5ea4c4}));
    rng.shuffle(std::span<Hyperparameters>(candidates));
    if (options.n_draws == 0) throw SearchError("randomized search needs n_draws > 0");
    if (options.n_draws < candidates.size()) candidates.resize(options.n_draws);
  }
  if (folds.assignment.size() != t.rows()) throw SearchError("fold plan does not cover the table");

  SearchResult result;
  bool have_best = false;
  for (const auto& params : candidates) {
    LearnerSpec spec = base;
    for (const auto& [k, v] : params) spec.params[k] = v;
    spec = validate(spec);
    double total = 0.0;
    for (std::size_t f = 0; f < folds.k; ++f) {
      const auto train_t = t.select_rows(folds.train_rows(f));
      const auto test_t = t.select_rows(folds.test_rows(f));
      const auto learner = train(spec, train_t);
      total += score(options.metric, evaluate(test_t.labels(), predict_proba(learner, test_t)));
    }
    const double mean = total / static_cast<double>(folds.k);
    result.evaluated.emplace_back(params, mean);
    if (!have_best || mean > result.best_score) {
      result.best = spec;
      result.best_score = mean;
      have_best = true;
    }
  }
  return result;
}

}  // namespace wids
