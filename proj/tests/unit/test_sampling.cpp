#include "oracles.hpp"

#include "wids/rng.hpp"
#include "wids/sampling.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace wids;

namespace {

FeatureTable imbalanced(std::array<std::size_t, 3> counts, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::size_t n = counts[0] + counts[1] + counts[2];
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<ClassLabel> y;
  Eigen::Index r = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i, ++r) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) = rng.normal() + 4.0 * static_cast<double>(c);
      y.push_back(label_from_index(c));
    }
  }
  return FeatureTable::from_matrix(x, y);
}

}  // namespace

TEST_CASE("SMOTE balances to the majority and interpolates between neighbours") {
  const auto t = imbalanced({200, 37, 90}, 4, 1);
  const std::size_t k = 5;
  const auto r = smote(t, k, 99);
  const auto counts = class_counts(r.table.labels());
  CHECK(counts[0] == 200);
  CHECK(counts[1] == 200);
  CHECK(counts[2] == 200);
  REQUIRE(r.records.size() == r.table.rows() - t.rows());
  // Original rows come first, untouched.
  CHECK(r.table.values().topRows(t.values().rows()) == t.values());

  oracle::Dense rows(t.rows(), std::vector<double>(4));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < 4; ++j) rows[i][j] = t.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));

  for (std::size_t s = 0; s < r.records.size(); ++s) {
    const auto& rec = r.records[s];
    CHECK(rec.lambda >= 0.0);
    CHECK(rec.lambda <= 1.0);
    CHECK(t.labels()[rec.source_row] == rec.label);
    CHECK(t.labels()[rec.neighbor_row] == rec.label);
    CHECK(r.table.labels()[t.rows() + s] == rec.label);
    const auto xs = t.values().row(static_cast<Eigen::Index>(rec.source_row));
    const auto xn = t.values().row(static_cast<Eigen::Index>(rec.neighbor_row));
    const auto got = r.table.values().row(static_cast<Eigen::Index>(t.rows() + s));
    CHECK((got - (xs + rec.lambda * (xn - xs))).cwiseAbs().maxCoeff() <= 1e-9);

    // Neighbour is among the k nearest of the same class.
    oracle::Dense same;
    std::vector<std::size_t> map;
    std::size_t local = 0;
    for (std::size_t i = 0; i < t.rows(); ++i) {
      if (t.labels()[i] != rec.label) continue;
      if (i == rec.source_row) local = same.size();
      same.push_back(rows[i]);
      map.push_back(i);
    }
    const auto nn = oracle::nearest(same, rows[rec.source_row], k, local);
    bool found = false;
    for (auto i : nn) found |= map[i] == rec.neighbor_row;
    CHECK(found);
  }
  // Synthetic ids do not collide with real ones.
  std::set<std::uint64_t> ids(r.table.row_ids().begin(), r.table.row_ids().end());
  CHECK(ids.size() == r.table.rows());
}

TEST_CASE("SMOTE is deterministic and a no-op on balanced data") {
  const auto t = imbalanced({50, 20, 30}, 3, 2);
  CHECK(smote(t, 3, 5).table == smote(t, 3, 5).table);
  const auto b = imbalanced({10, 10, 10}, 2, 3);
  CHECK(smote(b, 3, 1).records.empty());
  CHECK(smote(b, 3, 1).table == b);
}

TEST_CASE("SMOTE errors") {
  CHECK_THROWS_AS(smote(imbalanced({10, 1, 10}, 2, 1), 3, 0), SmoteError);
  CHECK_THROWS_AS(smote(imbalanced({10, 4, 10}, 2, 1), 0, 0), SmoteError);
  Matrix x(3, 1);
  x << 1, std::nan(""), 3;
  const auto dirty = FeatureTable::from_matrix(x, std::vector<ClassLabel>{ClassLabel::normal, ClassLabel::normal, ClassLabel::kr00k});
  CHECK_THROWS_AS(smote(dirty, 1, 0), SmoteError);
}

TEST_CASE("undersample caps every class") {
  const auto t = imbalanced({100, 30, 60}, 2, 4);
  const auto u = undersample(t, 50, 8);
  const auto c = class_counts(u.labels());
  CHECK(c[0] == 50);
  CHECK(c[1] == 30);
  CHECK(c[2] == 50);
  CHECK(std::is_sorted(u.row_ids().begin(), u.row_ids().end()));
  CHECK(undersample(t, 50, 8) == u);
}

TEST_CASE("stratified split rounds half to even per class") {
  // 5 * 0.5 = 2.5 -> 2 ; 7 * 0.5 = 3.5 -> 4 ; 10 * 0.5 = 5
  const auto t = imbalanced({5, 7, 10}, 2, 5);
  const auto [tr, te] = stratified_split(t, 0.5, 1);
  const auto a = class_counts(tr.labels());
  const auto b = class_counts(te.labels());
  CHECK(a[0] == 2);
  CHECK(a[1] == 4);
  CHECK(a[2] == 5);
  CHECK(a[0] + b[0] == 5);
  std::set<std::uint64_t> ids(tr.row_ids().begin(), tr.row_ids().end());
  for (auto id : te.row_ids()) CHECK(ids.count(id) == 0);
  CHECK_THROWS_AS(stratified_split(t, 1.0, 1), SplitError);
  CHECK_THROWS_AS(stratified_split(imbalanced({5, 1, 5}, 1, 1), 0.5, 1), SplitError);
}

TEST_CASE("stratified k-fold partitions every class evenly") {
  const auto t = imbalanced({103, 51, 77}, 1, 6);
  const auto plan = stratified_kfold(t, 5, 3);
  std::array<std::array<std::size_t, 3>, 5> per{};
  for (std::size_t i = 0; i < t.rows(); ++i) ++per[plan.assignment[i]][index_of(t.labels()[i])];
  for (std::size_t c = 0; c < 3; ++c) {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (std::size_t f = 0; f < 5; ++f) {
      lo = std::min(lo, per[f][c]);
      hi = std::max(hi, per[f][c]);
    }
    CHECK(hi - lo <= 1);
  }
  std::size_t total = 0;
  for (std::size_t f = 0; f < 5; ++f) {
    const auto tr = plan.train_rows(f);
    const auto te = plan.test_rows(f);
    CHECK(tr.size() + te.size() == t.rows());
    total += te.size();
  }
  CHECK(total == t.rows());
  CHECK_THROWS_AS(stratified_kfold(t, 1, 0), FoldError);
  CHECK_THROWS_AS(stratified_kfold(imbalanced({10, 3, 10}, 1, 0), 5, 0), FoldError);
}
