#include "wids/stacking.hpp"

#include "wids/csv.hpp"
#include "wids/parallel.hpp"
#include "wids/rng.hpp"

#include <algorithm>
#include <sstream>

namespace wids {

namespace {

// Stream tags for seeds derived from PipelineConfig::seed.
constexpr std::uint64_t kNoiseStream = 0x6e6f697365;
constexpr std::uint64_t kFoldStream = 0x666f6c6473;
constexpr std::uint64_t kLearnerStream = 0x6c726e;
constexpr std::uint64_t kMetaStream = 0x6d657461;

std::vector<LearnerSpec> seeded_specs(const std::vector<LearnerSpec>& specs, std::uint64_t seed) {
  std::vector<LearnerSpec> out;
  out.reserve(specs.size());
  for (std::size_t j = 0; j < specs.size(); ++j) {
    LearnerSpec s = validate(specs[j]);
    s.seed = derive_seed(seed, {kLearnerStream, j, specs[j].seed});
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<LearnerSpec> base_specs(const PipelineConfig& config) {
  if (!config.base_learners.empty()) return config.base_learners;
  std::vector<LearnerSpec> out;
  for (auto k : kBaseLearners) out.push_back(default_spec(k));
  return out;
}

}  // namespace

std::string_view meta_kind_name(MetaKind k) noexcept {
  switch (k) {
    case MetaKind::gradient_boosted_trees: return "gradient_boosted_trees";
    case MetaKind::logistic: return "logistic";
    case MetaKind::mean: return "mean";
  }
  return "?";
}

MetaKind parse_meta_kind(std::string_view name) {
  for (auto k : {MetaKind::gradient_boosted_trees, MetaKind::logistic, MetaKind::mean}) {
    if (meta_kind_name(k) == name) return k;
  }
  throw SpecError("unknown meta-classifier kind '" + std::string(name) + "'");
}

MetaSpec default_meta_spec() {
  return {MetaKind::gradient_boosted_trees, {{"max_depth", 3}, {"n_rounds", 50}, {"eta", 0.1}}};
}

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  for (auto k : kBaseLearners) c.base_learners.push_back(default_spec(k));
  return c;
}

FeatureTable TransformStack::apply(const FeatureTable& t, bool training) const {
  FeatureTable out = apply_standardizer(scaler, t);
  if (noise && (training || noise->phase == NoisePhase::train_and_test)) out = inject_noise(out, *noise);
  if (pca) out = project(*pca, out);
  return out;
}

std::size_t TransformStack::output_dim() const noexcept {
  return pca ? pca->retained : scaler.columns.size();
}

std::vector<std::string> MetaFeatureMatrix::column_names() const {
  std::vector<std::string> out;
  for (auto k : blocks) {
    for (auto c : kAllClasses) out.push_back(std::string(kind_name(k)) + ".p_" + std::string(label_name(c)));
  }
  return out;
}

OofResult build_oof_meta_features(const FeatureTable& t, const std::vector<LearnerSpec>& specs,
                                  const FoldPlan& folds, bool refit) {
  if (!t.has_labels()) throw FoldError("meta-features need a labelled table");
  if (folds.assignment.size() != t.rows()) throw FoldError("fold plan does not cover the table");
  if (specs.empty()) throw SpecError("no base learners configured");
  const std::size_t m = specs.size();
  const std::size_t k = folds.k;

  OofResult out;
  out.meta.values.resize(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(m * kNumClasses));
  for (const auto& s : specs) out.meta.blocks.push_back(s.kind);
  out.fold_fingerprints.assign(m, std::vector<TrainingFingerprint>(k));

  std::vector<std::vector<std::size_t>> test_rows(k), train_rows(k);
  for (std::size_t f = 0; f < k; ++f) {
    test_rows[f] = folds.test_rows(f);
    train_rows[f] = folds.train_rows(f);
  }
  parallel_for(m * k, [&](std::size_t task) {
    const std::size_t j = task / k;
    const std::size_t f = task % k;
    const auto learner = train(specs[j], t.select_rows(train_rows[f]));
    const Matrix p = predict_proba(learner, t.select_rows(test_rows[f]));
    for (std::size_t r = 0; r < test_rows[f].size(); ++r) {
      out.meta.values.block(static_cast<Eigen::Index>(test_rows[f][r]), static_cast<Eigen::Index>(j * kNumClasses),
                            1, static_cast<Eigen::Index>(kNumClasses)) = p.row(static_cast<Eigen::Index>(r));
    }
    out.fold_fingerprints[j][f] = learner.fingerprint();
  });
  if (refit) {
    out.refit.resize(m);
    parallel_for(m, [&](std::size_t j) { out.refit[j] = train(specs[j], t); });
  }
  return out;
}

MetaClassifier MetaClassifier::fit(const MetaSpec& spec, const MetaFeatureMatrix& meta,
                                   std::span<const ClassLabel> y, std::uint64_t seed) {
  const std::size_t blocks = meta.blocks.size();
  if (static_cast<std::size_t>(meta.values.cols()) != blocks * kNumClasses) {
    throw TrainError("meta-feature width does not match its block list");
  }
  switch (spec.kind) {
    case MetaKind::mean:
      if (!spec.params.empty()) throw SpecError("the mean meta-classifier takes no hyperparameters");
      return {spec, std::nullopt, blocks};
    case MetaKind::gradient_boosted_trees:
    case MetaKind::logistic: {
      const auto kind = spec.kind == MetaKind::logistic ? LearnerKind::logistic
                                                        : LearnerKind::gradient_boosted_trees;
      LearnerSpec ls{kind, spec.params, derive_seed(seed, {kMetaStream})};
      return {spec, train(ls, meta.values, y), blocks};
    }
  }
  throw SpecError("unknown meta-classifier kind");
}

Matrix MetaClassifier::predict_proba(const Matrix& meta) const {
  if (static_cast<std::size_t>(meta.cols()) != blocks_ * kNumClasses) {
    throw PredictError("meta-feature width mismatch");
  }
  if (learner_) return learner_->predict_proba(meta);
  Matrix out = Matrix::Zero(meta.rows(), static_cast<Eigen::Index>(kNumClasses));
  for (std::size_t j = 0; j < blocks_; ++j) {
    out += meta.middleCols(static_cast<Eigen::Index>(j * kNumClasses), static_cast<Eigen::Index>(kNumClasses));
  }
  return out / static_cast<double>(blocks_);
}

MetaFeatureMatrix StackedModel::meta_features(const FeatureTable& transformed) const {
  MetaFeatureMatrix out;
  out.values.resize(static_cast<Eigen::Index>(transformed.rows()),
                    static_cast<Eigen::Index>(base_.size() * kNumClasses));
  for (std::size_t j = 0; j < base_.size(); ++j) {
    out.values.middleCols(static_cast<Eigen::Index>(j * kNumClasses), static_cast<Eigen::Index>(kNumClasses)) =
        base_[j].predict_proba(transformed.values());
    out.blocks.push_back(base_[j].kind());
  }
  return out;
}

Prediction predict(const StackedModel& m, const FeatureTable& t) {
  std::vector<std::size_t> cols;
  cols.reserve(m.schema().size());
  for (const auto& name : m.schema()) {
    auto j = t.find_column(name);
    if (!j) throw PredictError("input is missing column '" + name + "'");
    if (t.has_text(*j)) throw PredictError("column '" + name + "' is not numeric");
    cols.push_back(*j);
  }
  const auto transformed = m.transforms().apply(t.select_columns(cols), false);
  Prediction p;
  p.probabilities = m.meta().predict_proba(m.meta_features(transformed).values);
  p.labels = argmax_labels(p.probabilities);
  return p;
}

std::vector<LearnerReport> train_pipeline1(const FeatureTable& train_t, const FeatureTable& test_t,
                                           const std::vector<LearnerSpec>& specs,
                                           const PipelineConfig& config) {
  const auto scaler = fit_standardizer(train_t);
  const auto xs = apply_standardizer(scaler, train_t);
  const auto ts = apply_standardizer(scaler, test_t);
  const auto seeded = seeded_specs(specs, config.seed);
  std::vector<LearnerReport> out(seeded.size());
  parallel_for(seeded.size(), [&](std::size_t j) {
    const auto learner = train(seeded[j], xs);
    out[j] = {seeded[j].kind, evaluate(ts.labels(), predict_proba(learner, ts))};
  });
  return out;
}

EvalReport cross_validate(const LearnerSpec& spec, const FeatureTable& t, std::size_t k,
                          std::uint64_t seed) {
  const auto folds = stratified_kfold(t, k, derive_seed(seed, {kFoldStream}));
  std::vector<EvalReport> reports(k);
  parallel_for(k, [&](std::size_t f) {
    const auto tr = t.select_rows(folds.train_rows(f));
    const auto te = t.select_rows(folds.test_rows(f));
    const auto scaler = fit_standardizer(tr);
    const auto learner = train(spec, apply_standardizer(scaler, tr));
    const auto ts = apply_standardizer(scaler, te);
    reports[f] = evaluate(ts.labels(), predict_proba(learner, ts));
  });
  return aggregate_folds(reports);
}

TransformStack fit_transforms(const FeatureTable& train_t, const PipelineConfig& config) {
  TransformStack s;
  s.scaler = fit_standardizer(train_t);
  FeatureTable x = apply_standardizer(s.scaler, train_t);
  if (config.use_noise && config.sigma > 0.0) {
    s.noise = NoiseSpec{config.sigma, derive_seed(config.seed, {kNoiseStream}), config.noise_phase};
    x = inject_noise(x, *s.noise);
  }
  if (config.use_pca) s.pca = fit_pca(x, config.pca_threshold);
  return s;
}

Pipeline2Result train_pipeline2(const FeatureTable& train_t, const FeatureTable& test_t,
                                const PipelineConfig& config) {
  if (!train_t.has_labels() || !test_t.has_labels()) throw TrainError("pipeline needs labelled tables");
  auto transforms = fit_transforms(train_t, config);
  const auto xt = transforms.apply(train_t, true);
  const auto folds = stratified_kfold(xt, config.folds, derive_seed(config.seed, {kFoldStream}));
  auto oof = build_oof_meta_features(xt, seeded_specs(base_specs(config), config.seed), folds, true);
  auto meta = MetaClassifier::fit(config.meta, oof.meta, xt.labels(), config.seed);
  Pipeline2Result r{StackedModel(train_t.column_names(), std::move(transforms), std::move(oof.refit),
                                 std::move(meta), config),
                    {}};
  r.report = evaluate(test_t.labels(), predict(r.model, test_t).probabilities);
  return r;
}

std::vector<AblationRow> run_ablation(const FeatureTable& train_t, const FeatureTable& test_t,
                                      const PipelineConfig& config) {
  static constexpr std::array<const char*, 4> kNames = {"base", "+noise", "+pca", "full_ensemble"};
  const std::size_t runs = std::max<std::size_t>(1, config.runs);
  const auto specs = base_specs(config);
  std::size_t gbt_index = 0;
  LearnerSpec gbt = default_spec(LearnerKind::gradient_boosted_trees);
  for (std::size_t j = 0; j < specs.size(); ++j) {
    if (specs[j].kind == LearnerKind::gradient_boosted_trees) {
      gbt = specs[j];
      gbt_index = j;
      break;
    }
  }

  std::vector<std::vector<EvalReport>> reports(kNames.size(), std::vector<EvalReport>(runs));
  for (std::size_t r = 0; r < runs; ++r) {
    PipelineConfig cfg = config;
    cfg.seed = config.seed + r;
    for (std::size_t stage = 0; stage < 3; ++stage) {
      PipelineConfig sc = cfg;
      sc.use_noise = config.use_noise && stage >= 1;
      sc.use_pca = config.use_pca && stage >= 2;
      const auto transforms = fit_transforms(train_t, sc);
      LearnerSpec spec = validate(gbt);
      spec.seed = derive_seed(cfg.seed, {kLearnerStream, gbt_index, gbt.seed});
      const auto learner = train(spec, transforms.apply(train_t, true));
      const auto te = transforms.apply(test_t, false);
      reports[stage][r] = evaluate(te.labels(), predict_proba(learner, te));
    }
    reports[3][r] = train_pipeline2(train_t, test_t, cfg).report;
  }

  std::vector<AblationRow> out;
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    out.push_back({kNames[i], runs >= 2 ? aggregate_folds(reports[i]) : reports[i][0]});
  }
  return out;
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  out << "configuration,accuracy,accuracy_std,macro_f1,macro_f1_std,macro_precision,macro_precision_std,"
         "macro_recall,macro_recall_std,macro_fpr,macro_fpr_std\r\n";
  for (const auto& row : rows) {
    out << row.configuration;
    const auto& r = row.report;
    for (auto [key, value] : {std::pair{"accuracy", r.accuracy}, std::pair{"macro_f1", r.macro_f1},
                              std::pair{"macro_precision", r.macro_precision},
                              std::pair{"macro_recall", r.macro_recall}, std::pair{"macro_fpr", r.macro_fpr}}) {
      auto it = r.fold_stats.find(key);
      out << ',' << csv::format_double(value) << ','
          << (it != r.fold_stats.end() ? csv::format_double(it->second.std) : std::string());
    }
    out << "\r\n";
  }
  return out.str();
}

nlohmann::json ablation_to_json(const std::vector<AblationRow>& rows) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    j["rows"].push_back({{"configuration", row.configuration}, {"report", to_json(row.report)}});
  }
  return j;
}

}  // namespace wids
