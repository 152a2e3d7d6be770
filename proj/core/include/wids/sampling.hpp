#pragma once

#include "wids/table.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace wids {

/// Keeps min(per_class, count) uniformly chosen rows per class. Output rows
/// are in ascending original order.
FeatureTable undersample(const FeatureTable& t, std::size_t per_class, std::uint64_t seed);

struct SmoteRecord {
  ClassLabel label;
  std::size_t source_row;    ///< row index in the input table
  std::size_t neighbor_row;  ///< row index in the input table
  double lambda;
};

struct SmoteResult {
  FeatureTable table;               ///< input rows followed by synthetic rows
  std::vector<SmoteRecord> records; ///< one per synthetic row, in output order
};

/// Oversamples every non-majority class by interpolating toward one of the
/// k nearest same-class neighbours until all classes reach the majority count.
SmoteResult smote(const FeatureTable& t, std::size_t k_neighbors, std::uint64_t seed);

/// Per-class split; the train share of class c is round_half_even(fraction * n_c).
std::pair<FeatureTable, FeatureTable> stratified_split(const FeatureTable& t,
                                                       double train_fraction, std::uint64_t seed);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignment;  ///< fold index per row

  std::vector<std::size_t> train_rows(std::size_t fold) const;
  std::vector<std::size_t> test_rows(std::size_t fold) const;
};

FoldPlan stratified_kfold(std::span<const ClassLabel> labels, std::size_t k, std::uint64_t seed);
FoldPlan stratified_kfold(const FeatureTable& t, std::size_t k, std::uint64_t seed);

}  // namespace wids
