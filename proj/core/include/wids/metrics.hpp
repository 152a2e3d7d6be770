#pragma once

#include "wids/common.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wids {

/// counts[true][predicted].
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  std::uint64_t row_sum(std::size_t c) const noexcept;
  std::uint64_t col_sum(std::size_t c) const noexcept;
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const ClassLabel> labels, std::span<const ClassLabel> preds);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;  ///< one-vs-rest FP / (FP + TN)
  // Set when the corresponding denominator was zero and the value defaulted to 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  bool fpr_undefined = false;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation (n - 1)
};

struct EvalReport {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double macro_fpr = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  std::optional<double> roc_auc_ovr;
  std::vector<ClassLabel> auc_skipped;  ///< classes without both positives and negatives
  std::size_t folds = 0;                ///< > 0 when aggregated
  /// Keyed "accuracy", "macro_f1", ..., and "<metric>/<class name>" for per-class rows.
  std::map<std::string, MeanStd> fold_stats;
  std::string hardware;
};

/// Per-class and macro metrics from a confusion matrix (total must be > 0).
EvalReport macro_metrics(const ConfusionMatrix& m);

struct AucResult {
  double macro = 0.0;
  std::array<std::optional<double>, kNumClasses> per_class{};
  std::vector<ClassLabel> skipped;
};

/// Rank-based AUC of a binary problem; ties count one half. Requires at
/// least one positive and one negative.
double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

/// One-vs-rest AUC per class (probability column c as the score), macro
/// averaged over classes that have both positives and negatives.
AucResult roc_auc_ovr(std::span<const ClassLabel> labels, const Matrix& probs);

/// Full report: confusion of the row-wise argmax plus one-vs-rest AUC.
EvalReport evaluate(std::span<const ClassLabel> labels, const Matrix& probs);

/// Mean and sample std of every metric across fold reports; the headline
/// fields hold the means and the confusion is the sum.
EvalReport aggregate_folds(std::span<const EvalReport> reports);

struct RocPoint {
  ClassLabel cls;
  double threshold;
  double tpr;
  double fpr;
};
std::vector<RocPoint> roc_curve(std::span<const ClassLabel> labels, const Matrix& probs);

/// Short host description recorded in reports.
std::string host_description();

inline constexpr int kReportSchemaVersion = 1;

nlohmann::json to_json(const EvalReport& r);
/// Flat CSV: `metric,class,value,fold_mean,fold_std`.
std::string to_csv(const EvalReport& r);
std::string roc_to_csv(const std::vector<RocPoint>& points);

}  // namespace wids
