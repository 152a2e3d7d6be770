#include "wids/sampling.hpp"

#include "wids/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wids {
namespace {

std::array<std::vector<std::size_t>, kNumClasses> rows_by_class(std::span<const ClassLabel> labels) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[index_of(labels[i])].push_back(i);
  return by_class;
}

constexpr std::uint64_t kUndersampleTag = 0x554E4452;
constexpr std::uint64_t kSmoteTag = 0x534D4F54;
constexpr std::uint64_t kSplitTag = 0x53504C54;
constexpr std::uint64_t kFoldTag = 0x464F4C44;

}  // namespace

FeatureTable undersample(const FeatureTable& t, std::size_t per_class, std::uint64_t seed) {
  const auto by_class = rows_by_class(t.labels());
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto rows = by_class[c];
    if (rows.size() > per_class) {
      Rng rng(derive_seed(seed, {kUndersampleTag, c}));
      // Partial Fisher-Yates: the first per_class slots become the sample.
      for (std::size_t i = 0; i < per_class; ++i) {
        const std::size_t j = i + rng.below(rows.size() - i);
        std::swap(rows[i], rows[j]);
      }
      rows.resize(per_class);
    }
    keep.insert(keep.end(), rows.begin(), rows.end());
  }
  std::sort(keep.begin(), keep.end());
  return t.select_rows(keep);
}

SmoteResult smote(const FeatureTable& t, std::size_t k_neighbors, std::uint64_t seed) {
  if (k_neighbors < 1) throw SmoteError("k_neighbors must be >= 1");
  if (!t.is_clean()) throw SmoteError("SMOTE needs a clean numeric table");
  const auto& labels = t.labels();
  const auto by_class = rows_by_class(labels);
  std::size_t majority = 0;
  for (const auto& rows : by_class) majority = std::max(majority, rows.size());

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto m = by_class[c].size();
    if (m == 1 && m < majority) {
      throw SmoteError("class " + std::string(label_name(label_from_index(c))) +
                       " has a single sample; SMOTE needs at least 2");
    }
  }

  const Matrix& x = t.values();
  const auto d = x.cols();
  std::vector<SmoteRecord> records;
  std::vector<Eigen::RowVectorXd> synthetic;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& members = by_class[c];
    if (members.empty() || members.size() >= majority) continue;
    const std::size_t k = std::min(k_neighbors, members.size() - 1);
    Rng rng(derive_seed(seed, {kSmoteTag, c}));
    std::vector<std::vector<std::size_t>> neighbor_cache(members.size());

    auto neighbors_of = [&](std::size_t local) -> const std::vector<std::size_t>& {
      auto& cached = neighbor_cache[local];
      if (!cached.empty()) return cached;
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(members.size() - 1);
      const auto xi = x.row(static_cast<Eigen::Index>(members[local]));
      for (std::size_t o = 0; o < members.size(); ++o) {
        if (o == local) continue;
        dist.emplace_back((x.row(static_cast<Eigen::Index>(members[o])) - xi).squaredNorm(), members[o]);
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
      for (std::size_t i = 0; i < k; ++i) cached.push_back(dist[i].second);
      return cached;
    };

    for (std::size_t made = members.size(); made < majority; ++made) {
      const std::size_t local = rng.below(members.size());
      const auto& nn = neighbors_of(local);
      const std::size_t neighbor = nn[rng.below(nn.size())];
      const double lambda = rng.uniform_closed();
      const auto xs = x.row(static_cast<Eigen::Index>(members[local]));
      const auto xn = x.row(static_cast<Eigen::Index>(neighbor));
      synthetic.emplace_back(xs + lambda * (xn - xs));
      records.push_back({label_from_index(c), members[local], neighbor, lambda});
    }
  }

  if (synthetic.empty()) return {t, {}};

  const std::size_t n = t.rows();
  Matrix values(static_cast<Eigen::Index>(n + synthetic.size()), d);
  values.topRows(static_cast<Eigen::Index>(n)) = x;
  std::vector<ClassLabel> out_labels = labels;
  std::vector<std::uint64_t> ids = t.row_ids();
  std::uint64_t next_id = ids.empty() ? 0 : *std::max_element(ids.begin(), ids.end()) + 1;
  for (std::size_t s = 0; s < synthetic.size(); ++s) {
    values.row(static_cast<Eigen::Index>(n + s)) = synthetic[s];
    out_labels.push_back(records[s].label);
    ids.push_back(next_id++);
  }
  return {FeatureTable(t.columns(), std::move(values), std::move(out_labels), {}, std::move(ids)),
          std::move(records)};
}

std::pair<FeatureTable, FeatureTable> stratified_split(const FeatureTable& t, double train_fraction,
                                                       std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw SplitError("train_fraction must be in (0, 1)");
  }
  const auto by_class = rows_by_class(t.labels());
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      throw SplitError("class " + std::string(label_name(label_from_index(c))) + " has fewer than 2 rows");
    }
    Rng rng(derive_seed(seed, {kSplitTag, c}));
    rng.shuffle(std::span(rows));
    // nearbyint uses the default round-half-to-even mode.
    auto n_train = static_cast<std::size_t>(std::nearbyint(train_fraction * static_cast<double>(rows.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    train_rows.insert(train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_rows.insert(test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());
  return {t.select_rows(train_rows), t.select_rows(test_rows)};
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(i);
  }
  return rows;
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(i);
  }
  return rows;
}

FoldPlan stratified_kfold(std::span<const ClassLabel> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw FoldError("k must be >= 2");
  const auto by_class = rows_by_class(labels);
  FoldPlan plan{k, std::vector<std::size_t>(labels.size(), 0)};
  std::size_t offset = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < k) {
      throw FoldError("class " + std::string(label_name(label_from_index(c))) + " has " +
                      std::to_string(rows.size()) + " rows, fewer than k = " + std::to_string(k));
    }
    Rng rng(derive_seed(seed, {kFoldTag, c}));
    rng.shuffle(std::span(rows));
    for (std::size_t p = 0; p < rows.size(); ++p) plan.assignment[rows[p]] = (offset + p) % k;
    offset = (offset + rows.size()) % k;
  }
  return plan;
}

FoldPlan stratified_kfold(const FeatureTable& t, std::size_t k, std::uint64_t seed) {
  return stratified_kfold(t.labels(), k, seed);
}

}  // namespace wids
