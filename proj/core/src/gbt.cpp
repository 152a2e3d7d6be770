#include "wids/models.hpp"

#include "image_reader.hpp"

#include <algorithm>
#include <cmath>

namespace wids {

namespace {

double mean_log_loss(const Matrix& scores, std::span<const std::uint8_t> y) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const auto row = scores.row(i);
    const double m = row.maxCoeff();
    const double lse = m + std::log((row.array() - m).exp().sum());
    total += lse - row(y[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<double>(scores.rows());
}

}  // namespace

GbtModel GbtModel::fit(const Matrix& x, std::span<const std::uint8_t> y, const Options& opt) {
  const auto n = y.size();
  const auto d = static_cast<std::size_t>(x.cols());
  const auto binned = tree::bin_features(x, opt.max_bins);

  std::vector<double> base(kNumClasses, 0.0);
  for (auto c : y) base[c] += 1.0;
  for (auto& b : base) b = std::log(std::max(b / static_cast<double>(n), 1e-12));

  Matrix scores(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNumClasses));
  for (std::size_t c = 0; c < kNumClasses; ++c) scores.col(static_cast<Eigen::Index>(c)).setConstant(base[c]);

  tree::GrowParams params;
  params.max_depth = opt.max_depth;
  params.min_samples_leaf = 1;
  params.min_samples_split = 2;
  params.lambda = opt.lambda;
  params.gamma = opt.gamma;
  params.min_child_weight = opt.min_child_weight;

  std::vector<tree::Tree> trees;
  trees.reserve(opt.rounds * kNumClasses);
  std::vector<double> loss{mean_log_loss(scores, y)};
  std::vector<double> grad(n), hess(n);
  for (std::size_t round = 0; round < opt.rounds; ++round) {
    Matrix p = scores;
    softmax_rows(p);
    Matrix update(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNumClasses));
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const auto ci = static_cast<Eigen::Index>(c);
      for (std::size_t i = 0; i < n; ++i) {
        const double pi = p(static_cast<Eigen::Index>(i), ci);
        grad[i] = pi - (y[i] == c ? 1.0 : 0.0);
        hess[i] = std::max(2.0 * pi * (1.0 - pi), 1e-16);
      }
      trees.push_back(tree::grow_regression_tree(binned, grad, hess, params, opt.eta));
      const auto& t = trees.back();
      for (std::size_t i = 0; i < n; ++i) {
        update(static_cast<Eigen::Index>(i), ci) = t.evaluate({x.data() + i * d, d})[0];
      }
    }
    scores += update;
    loss.push_back(mean_log_loss(scores, y));
  }
  return {std::move(base), std::move(trees), d, std::move(loss)};
}

void GbtModel::predict_proba(const Matrix& x, Matrix& out) const {
  const auto d = static_cast<std::size_t>(x.cols());
  out.resize(x.rows(), static_cast<Eigen::Index>(kNumClasses));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::span<const double> row(x.data() + static_cast<std::size_t>(i) * d, d);
    for (std::size_t c = 0; c < kNumClasses; ++c) out(i, static_cast<Eigen::Index>(c)) = base_score_[c];
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      out(i, static_cast<Eigen::Index>(t % kNumClasses)) += trees_[t].evaluate(row)[0];
    }
  }
  softmax_rows(out);
}

std::vector<double> GbtModel::pack() const {
  std::vector<double> out{static_cast<double>(dim_), static_cast<double>(trees_.size())};
  out.insert(out.end(), base_score_.begin(), base_score_.end());
  for (const auto& t : trees_) t.pack(out);
  return out;
}

std::unique_ptr<GbtModel> GbtModel::unpack(std::span<const double> image) {
  detail::ImageReader r(image);
  const auto dim = r.next_size(1 << 20);
  const auto n_trees = r.next_size(1 << 24);
  if (n_trees % kNumClasses != 0) throw CorruptBundle("boosted tree count is not a multiple of 3");
  auto base = r.take(kNumClasses);
  std::vector<tree::Tree> trees;
  trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    trees.push_back(tree::Tree::unpack(image, r.pos()));
    if (trees.back().width() != 1) throw CorruptBundle("boosted tree leaf width must be 1");
    for (const auto& nd : trees.back().nodes()) {
      if (nd.feature >= 0 && static_cast<std::size_t>(nd.feature) >= dim) {
        throw CorruptBundle("tree splits on a feature beyond the model input");
      }
    }
  }
  r.finish();
  return std::make_unique<GbtModel>(std::vector<double>(base.begin(), base.end()), std::move(trees), dim);
}

}  // namespace wids
