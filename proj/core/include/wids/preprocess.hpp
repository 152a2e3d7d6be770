#pragma once

#include "wids/dataset.hpp"
#include "wids/features.hpp"
#include "wids/learners.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace wids {

struct FeatureEngineeringConfig {
  double drop_threshold = 0.5;
  std::vector<std::string> timestamp_columns = {"frame.time"};
  std::size_t onehot_max = kDefaultOneHotMax;
  double iqr_factor = 1.5;
  std::vector<std::string> iqr_columns = {"radiotap.dbm_antsignal"};
  bool vif_enabled = true;
  double vif_threshold = 10.0;
  bool importance_enabled = true;
  std::size_t importance_k = 10;
  bool vif_before_importance = true;
};

/// Raw table -> clean numeric table: missing-value handling, timestamp
/// decomposition for the configured columns that exist, categorical encoding.
FeatureTable prepare_table(const FeatureTable& raw, const FeatureEngineeringConfig& cfg);

/// Fitted feature-engineering state replayed at inference time.
struct Preprocessor {
  std::vector<std::string> timestamp_columns;
  std::vector<ColumnMeta> schema;  ///< selected output columns, in order
  std::vector<ClipBounds> clip;

  /// Works on raw rows (text categoricals, timestamps, gaps) as well as on
  /// rows that already carry the engineered columns.
  FeatureTable apply(const FeatureTable& t) const;
  std::vector<std::string> selected() const;
};

struct EngineeringReport {
  VifReport vif;
  ImportanceRanking importance;
  bool vif_run = false;
  bool importance_run = false;
};

struct EngineeringResult {
  Preprocessor preprocessor;
  EngineeringReport report;
};

/// Fits IQR fences, the VIF filter and importance selection on a clean,
/// labelled training table.
EngineeringResult fit_feature_engineering(const FeatureTable& train,
                                          const FeatureEngineeringConfig& cfg,
                                          std::uint64_t seed);

nlohmann::json to_json(const VifReport& r);
nlohmann::json to_json(const ImportanceRanking& r);
std::string vif_to_csv(const VifReport& r);
std::string importance_to_csv(const ImportanceRanking& r);

}  // namespace wids
