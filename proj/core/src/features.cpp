#include "wids/features.hpp"

#include "wids/learners.hpp"
#include "wids/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace wids {

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<ClipBounds> fit_iqr_bounds(const FeatureTable& t, const std::vector<std::string>& cols,
                                       double factor) {
  if (!(factor > 0.0)) throw SpecError("IQR factor must be > 0");
  std::vector<ClipBounds> out;
  for (const auto& name : cols) {
    auto j = t.find_column(name);
    if (!j) throw SpecError("IQR column '" + name + "' not found");
    if (t.has_text(*j)) throw SpecError("IQR column '" + name + "' is not numeric");
    ClipBounds b{.column = name};
    if (t.rows() > 0) {
      auto col = t.values().col(static_cast<Eigen::Index>(*j));
      std::vector<double> v(col.begin(), col.end());
      const double q1 = quantile_linear(v, 0.25);
      const double q3 = quantile_linear(std::move(v), 0.75);
      const double iqr = q3 - q1;
      if (iqr > 0.0) {
        b.lower = q1 - factor * iqr;
        b.upper = q3 + factor * iqr;
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

FeatureTable apply_clip(const FeatureTable& t, const std::vector<ClipBounds>& bounds) {
  Matrix v = t.values();
  for (const auto& b : bounds) {
    auto j = t.find_column(b.column);
    if (!j) throw TransformError("clip column '" + b.column + "' not found");
    auto col = v.col(static_cast<Eigen::Index>(*j));
    col = col.cwiseMax(b.lower).cwiseMin(b.upper);
  }
  return t.with_values(std::move(v));
}

FeatureTable iqr_clip(const FeatureTable& t, const std::vector<std::string>& cols, double factor) {
  return apply_clip(t, fit_iqr_bounds(t, cols, factor));
}

Matrix pearson_correlation(const FeatureTable& t) {
  const Matrix& x = t.values();
  const auto d = x.cols();
  if (x.rows() < 2) throw Error("correlation needs at least 2 rows");
  Matrix centered = x.rowwise() - x.colwise().mean();
  Vector norms = centered.colwise().norm();
  Matrix corr = Matrix::Identity(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a + 1; b < d; ++b) {
      double r = 0.0;
      if (norms(a) > 0.0 && norms(b) > 0.0) {
        r = centered.col(a).dot(centered.col(b)) / (norms(a) * norms(b));
        r = std::clamp(r, -1.0, 1.0);
      }
      corr(a, b) = r;
      corr(b, a) = r;
    }
  }
  return corr;
}

std::vector<double> variance_inflation_factors(const Matrix& x) {
  const auto d = x.cols();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> vif(static_cast<std::size_t>(d), 1.0);
  if (d < 2 || x.rows() < 2) return vif;

  Matrix centered = x.rowwise() - x.colwise().mean();
  Vector norms = centered.colwise().norm();
  std::vector<Eigen::Index> live;
  const double scale_ref = norms.maxCoeff();
  for (Eigen::Index j = 0; j < d; ++j) {
    // A constant column is fully explained by the intercept.
    if (!(norms(j) > 1e-14 * std::max(1.0, scale_ref))) {
      vif[static_cast<std::size_t>(j)] = inf;
    } else {
      live.push_back(j);
    }
  }
  if (live.size() < 2) return vif;

  const auto m = static_cast<Eigen::Index>(live.size());
  Matrix z(centered.rows(), m);
  for (Eigen::Index k = 0; k < m; ++k) z.col(k) = centered.col(live[static_cast<std::size_t>(k)]) / norms(live[static_cast<std::size_t>(k)]);
  const Eigen::MatrixXd corr = z.transpose() * z;

  for (Eigen::Index k = 0; k < m; ++k) {
    Eigen::MatrixXd others(m - 1, m - 1);
    Eigen::VectorXd target(m - 1);
    for (Eigen::Index a = 0, ia = 0; a < m; ++a) {
      if (a == k) continue;
      target(ia) = corr(a, k);
      for (Eigen::Index b = 0, ib = 0; b < m; ++b) {
        if (b == k) continue;
        others(ia, ib++) = corr(a, b);
      }
      ++ia;
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(others);
    const Eigen::VectorXd beta = cod.solve(target);
    const double r2 = std::clamp(target.dot(beta), 0.0, 1.0);
    const double unexplained = 1.0 - r2;
    vif[static_cast<std::size_t>(live[static_cast<std::size_t>(k)])] =
        unexplained <= 1e-12 ? inf : 1.0 / unexplained;
  }
  return vif;
}

std::pair<FeatureTable, VifReport> vif_filter(const FeatureTable& t, double threshold) {
  if (!(threshold > 1.0)) throw SpecError("VIF threshold must be > 1");
  VifReport report;
  if (t.cols() < 2) return {t, report};

  std::vector<std::size_t> survivors(t.cols());
  std::iota(survivors.begin(), survivors.end(), std::size_t{0});
  bool first = true;
  while (true) {
    const FeatureTable current = t.select_columns(survivors);
    const auto vif = survivors.size() >= 2 ? variance_inflation_factors(current.values())
                                           : std::vector<double>(survivors.size(), 1.0);
    std::vector<std::pair<std::string, double>> named;
    for (std::size_t k = 0; k < survivors.size(); ++k) named.emplace_back(current.column(k).name, vif[k]);
    if (first) {
      report.initial = named;
      first = false;
    }
    std::optional<std::size_t> worst;
    for (std::size_t k = 0; k < named.size(); ++k) {
      if (!(named[k].second > threshold)) continue;
      if (!worst || named[k].second > named[*worst].second ||
          (named[k].second == named[*worst].second && named[k].first < named[*worst].first)) {
        worst = k;
      }
    }
    if (!worst) {
      report.final = std::move(named);
      return {current, report};
    }
    report.removed.push_back(named[*worst]);
    survivors.erase(survivors.begin() + static_cast<std::ptrdiff_t>(*worst));
  }
}

ImportanceRanking importance_rank_select(const FeatureTable& t, std::size_t k,
                                         const LearnerSpec& forest_spec) {
  if (forest_spec.kind != LearnerKind::random_forest) {
    throw SpecError("importance ranking requires a random_forest spec");
  }
  if (k > t.cols()) {
    throw SelectionError("k = " + std::to_string(k) + " exceeds column count " + std::to_string(t.cols()));
  }
  const TrainedLearner learner = train(forest_spec, t);
  const auto& forest = dynamic_cast<const ForestModel&>(learner.model());
  std::vector<double> scores = forest.importance();
  const double total = std::accumulate(scores.begin(), scores.end(), 0.0);
  if (!(total > 0.0)) {
    std::fill(scores.begin(), scores.end(), 1.0 / static_cast<double>(scores.size()));
  }

  ImportanceRanking ranking;
  for (std::size_t j = 0; j < t.cols(); ++j) ranking.scores.emplace_back(t.column(j).name, scores[j]);
  std::vector<std::size_t> order(t.cols());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return t.column(a).name < t.column(b).name;
  });
  for (std::size_t i = 0; i < k; ++i) ranking.selected.push_back(t.column(order[i]).name);
  return ranking;
}

}  // namespace wids
