#include "wids/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wids::tree {

BinnedMatrix bin_features(const Matrix& x, std::size_t max_bins) {
  if (max_bins < 2 || max_bins > 65535) throw SpecError("max_bins must be in [2, 65535]");
  BinnedMatrix b;
  b.rows = static_cast<std::size_t>(x.rows());
  b.cols = static_cast<std::size_t>(x.cols());
  b.cuts.resize(b.cols);
  b.bins.resize(b.rows * b.cols);
  std::vector<double> sorted(b.rows);
  for (std::size_t j = 0; j < b.cols; ++j) {
    const auto col = x.col(static_cast<Eigen::Index>(j));
    std::copy(col.begin(), col.end(), sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq;
    std::vector<std::size_t> counts;
    for (double v : sorted) {
      if (uniq.empty() || v != uniq.back()) {
        uniq.push_back(v);
        counts.push_back(1);
      } else {
        ++counts.back();
      }
    }
    auto& cuts = b.cuts[j];
    auto midpoint = [&](std::size_t i) { return uniq[i] + (uniq[i + 1] - uniq[i]) / 2.0; };
    if (uniq.size() <= max_bins) {
      for (std::size_t i = 0; i + 1 < uniq.size(); ++i) cuts.push_back(midpoint(i));
    } else {
      const double per_bin = static_cast<double>(b.rows) / static_cast<double>(max_bins);
      double next_target = per_bin;
      std::size_t seen = 0;
      for (std::size_t i = 0; i + 1 < uniq.size() && cuts.size() + 1 < max_bins; ++i) {
        seen += counts[i];
        if (static_cast<double>(seen) >= next_target) {
          cuts.push_back(midpoint(i));
          while (next_target <= static_cast<double>(seen)) next_target += per_bin;
        }
      }
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 0; i < b.rows; ++i) {
      const double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      b.bins[j * b.rows + i] =
          static_cast<std::uint16_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    }
  }
  return b;
}

std::size_t Tree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes_[i].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
    }
  }
  return best;
}

void Tree::pack(std::vector<double>& out) const {
  out.push_back(static_cast<double>(nodes_.size()));
  out.push_back(static_cast<double>(width_));
  out.push_back(static_cast<double>(leaf_values_.size()));
  for (const auto& n : nodes_) {
    out.push_back(n.feature);
    out.push_back(n.threshold);
    out.push_back(n.left);
    out.push_back(n.right);
    out.push_back(n.leaf);
  }
  out.insert(out.end(), leaf_values_.begin(), leaf_values_.end());
}

Tree Tree::unpack(std::span<const double> image, std::size_t& pos) {
  auto take = [&]() {
    if (pos >= image.size()) throw CorruptBundle("tree image truncated");
    return image[pos++];
  };
  const auto n_nodes = static_cast<std::size_t>(take());
  const auto width = static_cast<std::size_t>(take());
  const auto n_values = static_cast<std::size_t>(take());
  if (n_nodes == 0 || width == 0 || pos + n_nodes * 5 + n_values > image.size()) {
    throw CorruptBundle("tree image inconsistent");
  }
  std::vector<Node> nodes(n_nodes);
  for (auto& n : nodes) {
    n.feature = static_cast<std::int32_t>(take());
    n.threshold = take();
    n.left = static_cast<std::int32_t>(take());
    n.right = static_cast<std::int32_t>(take());
    n.leaf = static_cast<std::int32_t>(take());
  }
  std::vector<double> values(image.begin() + static_cast<std::ptrdiff_t>(pos),
                             image.begin() + static_cast<std::ptrdiff_t>(pos + n_values));
  pos += n_values;
  const auto n_leaves = static_cast<std::int64_t>(n_values / width);
  for (const auto& n : nodes) {
    const bool ok = n.feature >= 0
                        ? (n.left > 0 && n.right > 0 && static_cast<std::size_t>(n.left) < n_nodes &&
                           static_cast<std::size_t>(n.right) < n_nodes)
                        : (n.leaf >= 0 && n.leaf < n_leaves);
    if (!ok) throw CorruptBundle("tree node references out of range");
  }
  return {std::move(nodes), std::move(values), width};
}

bool Tree::operator==(const Tree& o) const {
  if (width_ != o.width_ || leaf_values_ != o.leaf_values_ || nodes_.size() != o.nodes_.size()) return false;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& a = nodes_[i];
    const auto& b = o.nodes_[i];
    if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left || a.right != b.right ||
        a.leaf != b.leaf) {
      return false;
    }
  }
  return true;
}

namespace {

struct Pending {
  std::size_t node;
  std::size_t begin;
  std::size_t end;
  std::size_t depth;
};

std::vector<std::size_t> choose_features(std::size_t cols, std::size_t max_features, Rng& rng,
                                         std::vector<std::size_t>& scratch) {
  if (max_features == 0 || max_features >= cols) {
    std::vector<std::size_t> all(cols);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  scratch.resize(cols);
  std::iota(scratch.begin(), scratch.end(), std::size_t{0});
  for (std::size_t i = 0; i < max_features; ++i) {
    const std::size_t j = i + rng.below(cols - i);
    std::swap(scratch[i], scratch[j]);
  }
  std::vector<std::size_t> chosen(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(max_features));
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

Tree grow_classification_tree(const BinnedMatrix& x, std::span<const std::uint8_t> y,
                              std::span<const std::uint32_t> weights, const GrowParams& params,
                              Rng& rng, std::span<double> importance) {
  constexpr std::size_t C = kNumClasses;
  std::vector<std::uint32_t> rows;
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (weights[i] > 0) rows.push_back(static_cast<std::uint32_t>(i));
  }
  if (rows.empty()) throw TrainError("classification tree has no training rows");

  std::vector<Node> nodes(1);
  std::vector<double> leaf_values;
  std::vector<Pending> stack{{0, 0, rows.size(), 0}};
  std::vector<double> hist;
  std::vector<std::size_t> scratch;

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();

    std::array<double, C> total{};
    for (std::size_t r = p.begin; r < p.end; ++r) total[y[rows[r]]] += weights[rows[r]];
    const double w = total[0] + total[1] + total[2];
    const bool pure = std::count_if(total.begin(), total.end(), [](double c) { return c > 0; }) <= 1;

    auto make_leaf = [&] {
      nodes[p.node].feature = -1;
      nodes[p.node].leaf = static_cast<std::int32_t>(leaf_values.size() / C);
      for (double c : total) leaf_values.push_back(c / w);
    };

    if (pure || p.depth >= params.max_depth || w < static_cast<double>(params.min_samples_split) ||
        w < 2.0 * static_cast<double>(params.min_samples_leaf)) {
      make_leaf();
      continue;
    }

    const double parent_term = (total[0] * total[0] + total[1] * total[1] + total[2] * total[2]) / w;
    double best_gain = 1e-12;
    std::optional<std::pair<std::size_t, std::size_t>> best;  // (feature, bin)
    const auto features = choose_features(x.cols, params.max_features, rng, scratch);
    for (std::size_t f : features) {
      const std::size_t nb = x.bin_count(f);
      if (nb < 2) continue;
      hist.assign(nb * C, 0.0);
      for (std::size_t r = p.begin; r < p.end; ++r) {
        const auto row = rows[r];
        hist[x.bin(row, f) * C + y[row]] += weights[row];
      }
      std::array<double, C> left{};
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        for (std::size_t c = 0; c < C; ++c) left[c] += hist[b * C + c];
        const double lw = left[0] + left[1] + left[2];
        const double rw = w - lw;
        if (lw < static_cast<double>(params.min_samples_leaf) || rw < static_cast<double>(params.min_samples_leaf) ||
            lw <= 0.0 || rw <= 0.0) {
          continue;
        }
        double lsq = 0.0;
        double rsq = 0.0;
        for (std::size_t c = 0; c < C; ++c) {
          lsq += left[c] * left[c];
          const double rc = total[c] - left[c];
          rsq += rc * rc;
        }
        const double gain = lsq / lw + rsq / rw - parent_term;
        if (gain > best_gain) {
          best_gain = gain;
          best.emplace(f, b);
        }
      }
    }
    if (!best) {
      make_leaf();
      continue;
    }

    const auto [f, b] = *best;
    auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(p.begin),
                              rows.begin() + static_cast<std::ptrdiff_t>(p.end),
                              [&](std::uint32_t row) { return x.bin(row, f) <= b; });
    const auto split = static_cast<std::size_t>(mid - rows.begin());
    if (!importance.empty()) importance[f] += best_gain;

    const auto left_id = nodes.size();
    nodes.emplace_back();
    nodes.emplace_back();
    nodes[p.node].feature = static_cast<std::int32_t>(f);
    nodes[p.node].threshold = x.cuts[f][b];
    nodes[p.node].left = static_cast<std::int32_t>(left_id);
    nodes[p.node].right = static_cast<std::int32_t>(left_id + 1);
    stack.push_back({left_id + 1, split, p.end, p.depth + 1});
    stack.push_back({left_id, p.begin, split, p.depth + 1});
  }
  return {std::move(nodes), std::move(leaf_values), C};
}

Tree grow_regression_tree(const BinnedMatrix& x, std::span<const double> grad,
                          std::span<const double> hess, const GrowParams& params, double scale) {
  std::vector<std::uint32_t> rows(x.rows);
  std::iota(rows.begin(), rows.end(), std::uint32_t{0});
  std::vector<Node> nodes(1);
  std::vector<double> leaf_values;
  std::vector<Pending> stack{{0, 0, rows.size(), 0}};
  std::vector<double> hg;
  std::vector<double> hh;
  const double lambda = params.lambda;

  while (!stack.empty()) {
    const Pending p = stack.back();
    stack.pop_back();
    double g = 0.0;
    double h = 0.0;
    for (std::size_t r = p.begin; r < p.end; ++r) {
      g += grad[rows[r]];
      h += hess[rows[r]];
    }
    auto make_leaf = [&] {
      nodes[p.node].feature = -1;
      nodes[p.node].leaf = static_cast<std::int32_t>(leaf_values.size());
      leaf_values.push_back(scale * (-g / (h + lambda)));
    };
    if (p.depth >= params.max_depth || p.end - p.begin < 2) {
      make_leaf();
      continue;
    }
    const double parent_score = g * g / (h + lambda);
    double best_gain = 1e-12;
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t f = 0; f < x.cols; ++f) {
      const std::size_t nb = x.bin_count(f);
      if (nb < 2) continue;
      hg.assign(nb, 0.0);
      hh.assign(nb, 0.0);
      for (std::size_t r = p.begin; r < p.end; ++r) {
        const auto row = rows[r];
        const auto bin = x.bin(row, f);
        hg[bin] += grad[row];
        hh[bin] += hess[row];
      }
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        gl += hg[b];
        hl += hh[b];
        const double gr = g - gl;
        const double hr = h - hl;
        if (hl < params.min_child_weight || hr < params.min_child_weight) continue;
        const double gain =
            0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_score) - params.gamma;
        if (gain > best_gain) {
          best_gain = gain;
          best.emplace(f, b);
        }
      }
    }
    if (!best) {
      make_leaf();
      continue;
    }
    const auto [f, b] = *best;
    auto mid = std::partition(rows.begin() + static_cast<std::ptrdiff_t>(p.begin),
                              rows.begin() + static_cast<std::ptrdiff_t>(p.end),
                              [&](std::uint32_t row) { return x.bin(row, f) <= b; });
    const auto split = static_cast<std::size_t>(mid - rows.begin());
    if (split == p.begin || split == p.end) {
      make_leaf();
      continue;
    }
    const auto left_id = nodes.size();
    nodes.emplace_back();
    nodes.emplace_back();
    nodes[p.node].feature = static_cast<std::int32_t>(f);
    nodes[p.node].threshold = x.cuts[f][b];
    nodes[p.node].left = static_cast<std::int32_t>(left_id);
    nodes[p.node].right = static_cast<std::int32_t>(left_id + 1);
    stack.push_back({left_id + 1, split, p.end, p.depth + 1});
    stack.push_back({left_id, p.begin, split, p.depth + 1});
  }
  return {std::move(nodes), std::move(leaf_values), 1};
}

}  // namespace wids::tree
