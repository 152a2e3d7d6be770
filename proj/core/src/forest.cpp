#include "wids/models.hpp"

#include "image_reader.hpp"
#include "wids/parallel.hpp"

#include <numeric>

namespace wids {

namespace {

void accumulate_leaf_average(const std::vector<tree::Tree>& trees, const Matrix& x, Matrix& out) {
  out.setZero(x.rows(), static_cast<Eigen::Index>(kNumClasses));
  const auto d = static_cast<std::size_t>(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::span<const double> row(x.data() + static_cast<std::size_t>(i) * d, d);
    for (const auto& t : trees) {
      auto leaf = t.evaluate(row);
      for (std::size_t c = 0; c < kNumClasses; ++c) out(i, static_cast<Eigen::Index>(c)) += leaf[c];
    }
  }
  if (!trees.empty()) out /= static_cast<double>(trees.size());
}

void check_features(const tree::Tree& t, std::size_t dim, std::size_t width) {
  if (t.width() != width) throw CorruptBundle("tree leaf width mismatch");
  for (const auto& n : t.nodes()) {
    if (n.feature >= 0 && static_cast<std::size_t>(n.feature) >= dim) {
      throw CorruptBundle("tree splits on a feature beyond the model input");
    }
  }
}

}  // namespace

DecisionTreeModel DecisionTreeModel::fit(const Matrix& x, std::span<const std::uint8_t> y,
                                         const tree::GrowParams& params, std::uint64_t seed,
                                         std::size_t max_bins) {
  const auto binned = tree::bin_features(x, max_bins);
  std::vector<std::uint32_t> weights(y.size(), 1);
  Rng rng(derive_seed(seed, {0}));
  return {tree::grow_classification_tree(binned, y, weights, params, rng),
          static_cast<std::size_t>(x.cols())};
}

void DecisionTreeModel::predict_proba(const Matrix& x, Matrix& out) const {
  accumulate_leaf_average({tree_}, x, out);
}

std::vector<double> DecisionTreeModel::pack() const {
  std::vector<double> out{static_cast<double>(dim_), 1.0};
  out.insert(out.end(), dim_, 0.0);
  tree_.pack(out);
  return out;
}

ForestModel ForestModel::fit(const Matrix& x, std::span<const std::uint8_t> y, const Options& opt) {
  if (opt.n_trees == 0) throw SpecError("random_forest: n_trees must be positive");
  const auto n = y.size();
  const auto d = static_cast<std::size_t>(x.cols());
  const auto binned = tree::bin_features(x, opt.max_bins);

  std::vector<tree::Tree> trees(opt.n_trees);
  std::vector<std::vector<double>> per_tree(opt.n_trees, std::vector<double>(d, 0.0));
  // Same rows as the single-tree path (stream tag 0) when there is one tree.
  parallel_for(opt.n_trees, [&](std::size_t t) {
    Rng rng(derive_seed(opt.seed, {t}));
    std::vector<std::uint32_t> weights(n, 1);
    if (opt.bootstrap) {
      std::fill(weights.begin(), weights.end(), 0U);
      for (std::size_t i = 0; i < n; ++i) ++weights[rng.below(n)];
    }
    trees[t] = tree::grow_classification_tree(binned, y, weights, opt.grow, rng, per_tree[t]);
  });

  std::vector<double> importance(d, 0.0);
  for (const auto& imp : per_tree) {
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total <= 0) continue;
    for (std::size_t j = 0; j < d; ++j) importance[j] += imp[j] / total;
  }
  const double total = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (total > 0) {
    for (auto& v : importance) v /= total;
  }
  return {std::move(trees), d, std::move(importance)};
}

void ForestModel::predict_proba(const Matrix& x, Matrix& out) const {
  accumulate_leaf_average(trees_, x, out);
}

std::vector<double> ForestModel::pack() const {
  std::vector<double> out{static_cast<double>(dim_), static_cast<double>(trees_.size())};
  out.insert(out.end(), importance_.begin(), importance_.end());
  for (const auto& t : trees_) t.pack(out);
  return out;
}

std::unique_ptr<ForestModel> ForestModel::unpack(std::span<const double> image) {
  detail::ImageReader r(image);
  const auto dim = r.next_size(1 << 20);
  const auto n_trees = r.next_size(1 << 24);
  if (n_trees == 0) throw CorruptBundle("forest image holds no trees");
  auto imp = r.take(dim);
  std::vector<tree::Tree> trees;
  trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    trees.push_back(tree::Tree::unpack(image, r.pos()));
    check_features(trees.back(), dim, kNumClasses);
  }
  r.finish();
  return std::make_unique<ForestModel>(std::move(trees), dim,
                                       std::vector<double>(imp.begin(), imp.end()));
}

}  // namespace wids
