#pragma once

#include "wids/learners.hpp"
#include "wids/sampling.hpp"

#include <map>
#include <string>
#include <vector>

namespace wids {

using ParamSpace = std::map<std::string, std::vector<double>>;

enum class SearchMode : std::uint8_t { grid, randomized };

struct SearchOptions {
  SearchMode mode = SearchMode::grid;
  std::size_t n_draws = 10;         ///< randomized mode only
  std::string metric = "accuracy";  ///< "accuracy" or "macro_f1"
  std::uint64_t seed = 0;
};

struct SearchResult {
  LearnerSpec best;
  double best_score = 0.0;
  std::vector<std::pair<Hyperparameters, double>> evaluated;  ///< in evaluation order
};

/// Cartesian product in lexicographic parameter-name order, last name
/// varying fastest.
std::vector<Hyperparameters> enumerate_grid(const ParamSpace& space);

/// Scores candidates by mean k-fold metric; ties keep the earliest candidate.
SearchResult hyper_search(const LearnerSpec& base, const ParamSpace& space,
                          const SearchOptions& options, const FeatureTable& t,
                          const FoldPlan& folds);

}  // namespace wids
