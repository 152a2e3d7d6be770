#pragma once

#include "wids/table.hpp"

#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace wids {

struct LearnerSpec;

/// Quantile with linear interpolation between order statistics
/// (position (n-1)*q over the sorted sample).
double quantile_linear(std::vector<double> values, double q);

struct ClipBounds {
  std::string column;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Computes [Q1 - factor*IQR, Q3 + factor*IQR] for each named column.
/// Constant columns (IQR == 0) get infinite bounds.
std::vector<ClipBounds> fit_iqr_bounds(const FeatureTable& t, const std::vector<std::string>& cols,
                                       double factor = 1.5);
FeatureTable apply_clip(const FeatureTable& t, const std::vector<ClipBounds>& bounds);

/// Winsorizes the named columns at their IQR fences.
FeatureTable iqr_clip(const FeatureTable& t, const std::vector<std::string>& cols,
                      double factor = 1.5);

/// Pearson correlation of all columns. Constant columns correlate 0 with
/// everything but themselves.
Matrix pearson_correlation(const FeatureTable& t);

struct VifReport {
  /// VIF of every input column at the first round (+inf for exact collinearity).
  std::vector<std::pair<std::string, double>> initial;
  /// VIF of the survivors after elimination.
  std::vector<std::pair<std::string, double>> final;
  /// (name, VIF at removal) in removal order.
  std::vector<std::pair<std::string, double>> removed;
};

/// 1/(1-R^2) of regressing each column on the others (with intercept).
/// R^2 within 1e-12 of 1 reports +inf.
std::vector<double> variance_inflation_factors(const Matrix& x);

/// Greedy elimination: remove the column with the largest VIF (ties ->
/// lexicographically smallest name) until every VIF <= threshold.
std::pair<FeatureTable, VifReport> vif_filter(const FeatureTable& t, double threshold = 10.0);

struct ImportanceRanking {
  /// Normalized mean impurity decrease per column, in input column order.
  std::vector<std::pair<std::string, double>> scores;
  /// Top-k names by score (ties -> lexicographic).
  std::vector<std::string> selected;
};

/// Trains the random forest described by `forest_spec` and ranks columns
/// by Gini importance.
ImportanceRanking importance_rank_select(const FeatureTable& t, std::size_t k,
                                         const LearnerSpec& forest_spec);

}  // namespace wids
