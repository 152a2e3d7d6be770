#pragma once

#include "wids/table.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace wids {

/// z-score parameters with population (divide-by-n) standard deviation.
struct ScalerParams {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<bool> constant;
};

ScalerParams fit_standardizer(const FeatureTable& t);
FeatureTable apply_standardizer(const ScalerParams& p, const FeatureTable& t);
/// Matrix form for callers that already validated the column count.
Matrix standardize(const ScalerParams& p, const Matrix& x);

enum class NoisePhase : std::uint8_t { train_only, train_and_test };

struct NoiseSpec {
  double sigma = 0.05;
  std::uint64_t seed = 0;
  NoisePhase phase = NoisePhase::train_only;
};

/// Adds N(0, sigma^2) to every cell. The draw for a cell depends only on
/// (seed, row id, column index), never on row position.
FeatureTable inject_noise(const FeatureTable& t, const NoiseSpec& spec);

struct PcaModel {
  std::vector<std::string> input_columns;
  Vector mean;                 ///< fit-time column means
  Matrix components;           ///< d x d, row i = i-th principal axis
  Vector eigenvalues;          ///< descending, clamped at 0
  std::size_t retained = 0;    ///< k
  double threshold = 0.9;

  /// eigenvalue / sum(eigenvalues) for all d components.
  Vector explained_ratio() const;
  /// Retained k x d basis.
  Matrix basis() const { return components.topRows(static_cast<Eigen::Index>(retained)); }
};

/// Smallest k whose cumulative eigenvalue share reaches `threshold`
/// (with a relative slack of 1e-12 for rounding).
std::size_t components_for_threshold(const Vector& eigenvalues_desc, double threshold);

PcaModel fit_pca(const FeatureTable& t, double threshold = 0.9);
FeatureTable project(const PcaModel& m, const FeatureTable& t);
Matrix project(const PcaModel& m, const Matrix& x);
/// Frobenius norm of (centered x) - (its rank-k reconstruction).
double reconstruction_error(const PcaModel& m, const Matrix& x, std::size_t k);

struct ScreeRow {
  std::size_t component;  ///< 1-based
  double eigenvalue;
  double cumulative_ratio;
};
std::vector<ScreeRow> scree(const PcaModel& m);

struct SweepRow {
  double threshold;
  std::size_t components;
  double accuracy;
};

/// Downstream evaluation on projected train/test tables, returning accuracy.
using ProjectedEvaluator = std::function<double(const FeatureTable& train, const FeatureTable& test)>;

/// Fits PCA on `train` per threshold, projects both partitions and scores
/// them with `evaluate`. Thresholds must be sorted ascending.
std::vector<SweepRow> pca_threshold_sweep(const FeatureTable& train, const FeatureTable& test,
                                          const std::vector<double>& thresholds,
                                          const ProjectedEvaluator& evaluate);

}  // namespace wids
