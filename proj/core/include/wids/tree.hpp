#pragma once

#include "wids/common.hpp"
#include "wids/rng.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace wids::tree {

/// Quantized copy of a feature matrix. Cut points are midpoints between
/// consecutive distinct training values, so with at most `max_bins`
/// distinct values per column the binned split search is exact.
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::vector<double>> cuts;  ///< per column, ascending
  std::vector<std::uint16_t> bins;        ///< column-major rows x cols

  std::uint16_t bin(std::size_t row, std::size_t col) const noexcept {
    return bins[col * rows + row];
  }
  std::size_t bin_count(std::size_t col) const noexcept { return cuts[col].size() + 1; }
};

BinnedMatrix bin_features(const Matrix& x, std::size_t max_bins = 256);

struct Node {
  std::int32_t feature = -1;  ///< -1 for a leaf
  double threshold = 0.0;     ///< x[feature] <= threshold goes left
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::int32_t leaf = -1;     ///< row into the leaf value table
};

/// Binary tree with a fixed-width value vector per leaf.
class Tree {
 public:
  Tree() = default;
  Tree(std::vector<Node> nodes, std::vector<double> leaf_values, std::size_t width)
      : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)), width_(width) {}

  std::span<const double> evaluate(std::span<const double> x) const noexcept {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
      const Node& n = nodes_[i];
      i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                          : n.right);
    }
    return {leaf_values_.data() + static_cast<std::size_t>(nodes_[i].leaf) * width_, width_};
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& leaf_values() const noexcept { return leaf_values_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t depth() const;

  /// Appends [n_nodes, width, n_leaf_values, nodes as 4-tuples, leaf values].
  void pack(std::vector<double>& out) const;
  /// Reads one tree starting at `pos`, advancing it.
  static Tree unpack(std::span<const double> image, std::size_t& pos);

  bool operator==(const Tree&) const;

 private:
  std::vector<Node> nodes_;
  std::vector<double> leaf_values_;
  std::size_t width_ = 0;
};

struct GrowParams {
  std::size_t max_depth = 16;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  std::size_t max_features = 0;  ///< 0 or >= cols: all columns
  double lambda = 1.0;           ///< L2 on leaf weights (regression trees)
  double gamma = 0.0;            ///< minimum gain to split (regression trees)
  double min_child_weight = 1.0; ///< minimum hessian sum per child (regression trees)
};

/// Gini classification tree over rows with integer sample weights
/// (bootstrap multiplicities). Leaves hold class proportions. When
/// `importance` is non-empty it accumulates the weighted impurity decrease
/// per feature.
Tree grow_classification_tree(const BinnedMatrix& x, std::span<const std::uint8_t> y,
                              std::span<const std::uint32_t> weights, const GrowParams& params,
                              Rng& rng, std::span<double> importance = {});

/// Second-order regression tree (gradient/hessian statistics). Leaves hold
/// `scale * -G / (H + lambda)`.
Tree grow_regression_tree(const BinnedMatrix& x, std::span<const double> grad,
                          std::span<const double> hess, const GrowParams& params, double scale);

}  // namespace wids::tree
