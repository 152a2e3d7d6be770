#pragma once

#include "wids/learners.hpp"
#include "wids/metrics.hpp"
#include "wids/sampling.hpp"
#include "wids/transform.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace wids {

enum class MetaKind : std::uint8_t {
  gradient_boosted_trees,
  logistic,
  mean,  ///< average of the base probability blocks (soft vote); identity for one learner
};

std::string_view meta_kind_name(MetaKind k) noexcept;
MetaKind parse_meta_kind(std::string_view name);

struct MetaSpec {
  MetaKind kind = MetaKind::gradient_boosted_trees;
  Hyperparameters params;

  bool operator==(const MetaSpec&) const = default;
};

/// Depth 3, 50 rounds, eta 0.1.
MetaSpec default_meta_spec();

struct PipelineConfig {
  std::vector<LearnerSpec> base_learners;  ///< defaults to the five kBaseLearners
  MetaSpec meta = default_meta_spec();
  double sigma = 0.05;
  NoisePhase noise_phase = NoisePhase::train_only;
  bool use_noise = true;
  bool use_pca = true;
  double pca_threshold = 0.90;
  std::size_t folds = 5;
  std::size_t runs = 5;
  std::uint64_t seed = 0;
};

PipelineConfig default_pipeline_config();

/// Fitted feature-space transforms: standardize -> noise -> PCA.
struct TransformStack {
  ScalerParams scaler;
  std::optional<NoiseSpec> noise;
  std::optional<PcaModel> pca;

  /// Applies scaler, then noise when `training` or the noise phase covers
  /// test data, then the PCA projection.
  FeatureTable apply(const FeatureTable& t, bool training) const;
  std::size_t output_dim() const noexcept;
};

/// Probabilities of every base learner, learner-major:
/// column 3*j + c is learner j's probability of class c.
struct MetaFeatureMatrix {
  Matrix values;
  std::vector<LearnerKind> blocks;

  std::vector<std::string> column_names() const;
};

struct OofResult {
  MetaFeatureMatrix meta;
  /// fold_learners[j][f]: learner j trained without fold f.
  std::vector<std::vector<TrainingFingerprint>> fold_fingerprints;
  /// Each learner refit on the full table, for inference.
  std::vector<TrainedLearner> refit;
};

/// Out-of-fold meta-features: rows of fold f are predicted by learners
/// trained on every other fold.
OofResult build_oof_meta_features(const FeatureTable& t, const std::vector<LearnerSpec>& specs,
                                  const FoldPlan& folds, bool refit = true);

/// Meta-classifier over meta-features.
class MetaClassifier {
 public:
  MetaClassifier() = default;
  MetaClassifier(MetaSpec spec, std::optional<TrainedLearner> learner, std::size_t blocks)
      : spec_(std::move(spec)), learner_(std::move(learner)), blocks_(blocks) {}

  static MetaClassifier fit(const MetaSpec& spec, const MetaFeatureMatrix& meta,
                            std::span<const ClassLabel> y, std::uint64_t seed);

  Matrix predict_proba(const Matrix& meta) const;
  const MetaSpec& spec() const noexcept { return spec_; }
  const std::optional<TrainedLearner>& learner() const noexcept { return learner_; }
  std::size_t blocks() const noexcept { return blocks_; }

 private:
  MetaSpec spec_;
  std::optional<TrainedLearner> learner_;
  std::size_t blocks_ = 0;
};

class StackedModel {
 public:
  StackedModel() = default;
  StackedModel(std::vector<std::string> schema, TransformStack transforms,
               std::vector<TrainedLearner> base, MetaClassifier meta, PipelineConfig config)
      : schema_(std::move(schema)), transforms_(std::move(transforms)), base_(std::move(base)),
        meta_(std::move(meta)), config_(std::move(config)) {}

  const std::vector<std::string>& schema() const noexcept { return schema_; }
  const TransformStack& transforms() const noexcept { return transforms_; }
  const std::vector<TrainedLearner>& base_learners() const noexcept { return base_; }
  const MetaClassifier& meta() const noexcept { return meta_; }
  const PipelineConfig& config() const noexcept { return config_; }

  /// Meta-features of already-transformed rows.
  MetaFeatureMatrix meta_features(const FeatureTable& transformed) const;

 private:
  std::vector<std::string> schema_;
  TransformStack transforms_;
  std::vector<TrainedLearner> base_;
  MetaClassifier meta_;
  PipelineConfig config_;
};

struct Prediction {
  std::vector<ClassLabel> labels;
  Matrix probabilities;  ///< n x 3
};

/// Full transform + base learners + meta-classifier. Columns are matched by
/// name against the training schema; missing columns throw PredictError.
Prediction predict(const StackedModel& m, const FeatureTable& t);

struct LearnerReport {
  LearnerKind kind;
  EvalReport report;
};

/// Standardize (fit on train), then train and test each learner independently.
std::vector<LearnerReport> train_pipeline1(const FeatureTable& train, const FeatureTable& test,
                                           const std::vector<LearnerSpec>& specs,
                                           const PipelineConfig& config);

/// Stratified k-fold estimate of one learner on standardized `t`.
EvalReport cross_validate(const LearnerSpec& spec, const FeatureTable& t, std::size_t k,
                          std::uint64_t seed);

struct Pipeline2Result {
  StackedModel model;
  EvalReport report;
};

Pipeline2Result train_pipeline2(const FeatureTable& train, const FeatureTable& test,
                                const PipelineConfig& config);

/// Fits only the transform stack as configured.
TransformStack fit_transforms(const FeatureTable& train, const PipelineConfig& config);

struct AblationRow {
  std::string configuration;
  EvalReport report;  ///< aggregated over runs when runs >= 2
};

/// (i) gradient-boosted trees on standardized data, (ii) + noise,
/// (iii) + PCA, (iv) the full stacked ensemble; `config.runs` repetitions
/// with seeds seed, seed+1, ...
std::vector<AblationRow> run_ablation(const FeatureTable& train, const FeatureTable& test,
                                      const PipelineConfig& config);

std::string ablation_to_csv(const std::vector<AblationRow>& rows);
nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows);

}  // namespace wids
