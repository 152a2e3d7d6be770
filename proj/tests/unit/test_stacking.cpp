#include "wids/dataset.hpp"
#include "wids/hyper_search.hpp"
#include "wids/rng.hpp"
#include "wids/sampling.hpp"
#include "wids/stacking.hpp"

#include <doctest.h>

#include <cmath>

using namespace wids;

namespace {

FeatureTable small_synth(std::uint64_t seed, std::size_t per_class = 60) {
  SynthSpec s;
  s.n_per_class = per_class;
  s.dim = 6;
  s.separation = 3.0;
  s.collinear_fraction = 0.0;
  s.label_noise = 0.0;
  return synthesize_dataset(s, seed);
}

std::vector<LearnerSpec> quick_specs() {
  return {{LearnerKind::knn, {}, 0},
          {LearnerKind::random_forest, {{"n_trees", 8}, {"max_depth", 6}}, 0},
          {LearnerKind::gradient_boosted_trees, {{"n_rounds", 10}, {"max_depth", 3}}, 0},
          {LearnerKind::linear_svm, {{"epochs", 10}}, 0},
          {LearnerKind::mlp, {{"epochs", 10}, {"hidden", 8}}, 0}};
}

PipelineConfig quick_config() {
  PipelineConfig c = default_pipeline_config();
  c.base_learners = quick_specs();
  c.meta.params = {{"n_rounds", 10}, {"max_depth", 2}};
  c.folds = 3;
  c.runs = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("default pipeline configuration") {
  const auto c = default_pipeline_config();
  REQUIRE(c.base_learners.size() == 5);
  for (std::size_t j = 0; j < 5; ++j) CHECK(c.base_learners[j].kind == kBaseLearners[j]);
  CHECK(c.meta.kind == MetaKind::gradient_boosted_trees);
  CHECK(c.meta.params.at("max_depth") == 3);
  CHECK(c.pca_threshold == 0.9);
  CHECK(c.sigma == 0.05);
  CHECK(parse_meta_kind(meta_kind_name(MetaKind::mean)) == MetaKind::mean);
  CHECK_THROWS_AS(parse_meta_kind("vote"), SpecError);
}

TEST_CASE("out-of-fold meta-features never come from a learner that saw the row") {
  const auto t = small_synth(1);
  const auto folds = stratified_kfold(t, 4, 2);
  const auto oof = build_oof_meta_features(t, quick_specs(), folds, false);
  CHECK(oof.meta.values.rows() == static_cast<Eigen::Index>(t.rows()));
  CHECK(oof.meta.values.cols() == 15);
  CHECK(oof.refit.empty());
  for (std::size_t j = 0; j < 5; ++j) {
    for (std::size_t f = 0; f < 4; ++f) {
      const auto& fp = oof.fold_fingerprints[j][f];
      for (auto r : folds.test_rows(f)) CHECK_FALSE(fp.contains(t.row_ids()[r]));
      for (auto r : folds.train_rows(f)) CHECK(fp.contains(t.row_ids()[r]));
    }
  }
  for (Eigen::Index i = 0; i < oof.meta.values.rows(); ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      CHECK(oof.meta.values.middleCols(3 * j, 3).row(i).sum() == doctest::Approx(1.0));
  const auto names = oof.meta.column_names();
  CHECK(names.front() == "knn.p_Normal");
  CHECK(names[5] == "random_forest.p_Krack");
}

TEST_CASE("OOF is unchanged when the learners are refit") {
  const auto t = small_synth(2);
  const auto folds = stratified_kfold(t, 3, 1);
  const auto a = build_oof_meta_features(t, quick_specs(), folds, false);
  const auto b = build_oof_meta_features(t, quick_specs(), folds, true);
  CHECK(a.meta.values == b.meta.values);
  REQUIRE(b.refit.size() == 5);
  CHECK(b.refit[0].fingerprint().rows == t.rows());
}

TEST_CASE("the mean meta-classifier averages the blocks") {
  MetaFeatureMatrix m;
  m.blocks = {LearnerKind::knn, LearnerKind::mlp};
  m.values.resize(1, 6);
  m.values << 1, 0, 0, 0, 0.5, 0.5;
  const std::vector<ClassLabel> y{ClassLabel::normal};
  const auto mc = MetaClassifier::fit({MetaKind::mean, {}}, m, y, 0);
  const Matrix p = mc.predict_proba(m.values);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(0, 1) == doctest::Approx(0.25));
  CHECK_THROWS_AS(MetaClassifier::fit({MetaKind::mean, {{"x", 1}}}, m, y, 0), SpecError);
  CHECK_THROWS_AS(mc.predict_proba(Matrix::Zero(1, 3)), PredictError);
}

TEST_CASE("stacked pipeline trains, predicts and is deterministic") {
  const auto t = small_synth(3);
  const auto [tr, te] = stratified_split(t, 0.7, 1);
  const auto cfg = quick_config();
  const auto a = train_pipeline2(tr, te, cfg);
  const auto b = train_pipeline2(tr, te, cfg);
  CHECK(a.report.accuracy > 0.85);
  CHECK(a.report.accuracy == b.report.accuracy);
  const auto pa = predict(a.model, te);
  const auto pb = predict(b.model, te);
  CHECK(pa.probabilities == pb.probabilities);
  CHECK(a.model.base_learners().size() == 5);
  CHECK(a.model.transforms().pca.has_value());
  CHECK(a.model.transforms().noise.has_value());
  CHECK(a.model.transforms().output_dim() == a.model.transforms().pca->retained);
}

TEST_CASE("prediction matches columns by name") {
  const auto t = small_synth(4);
  const auto [tr, te] = stratified_split(t, 0.7, 1);
  auto cfg = quick_config();
  cfg.use_noise = false;
  const auto r = train_pipeline2(tr, te, cfg);
  std::vector<std::size_t> reversed(te.cols());
  for (std::size_t j = 0; j < te.cols(); ++j) reversed[j] = te.cols() - 1 - j;
  CHECK(predict(r.model, te.select_columns(reversed)).probabilities == predict(r.model, te).probabilities);
  std::vector<std::size_t> fewer{0, 1};
  CHECK_THROWS_AS(predict(r.model, te.select_columns(fewer)), PredictError);
}

TEST_CASE("noise is applied only while training by default") {
  const auto t = small_synth(5);
  auto cfg = quick_config();
  cfg.sigma = 0.5;
  const auto s = fit_transforms(t, cfg);
  REQUIRE(s.noise.has_value());
  CHECK(s.apply(t, false).values() != s.apply(t, true).values());
  cfg.noise_phase = NoisePhase::train_and_test;
  const auto s2 = fit_transforms(t, cfg);
  CHECK(s2.apply(t, false).values() == s2.apply(t, true).values());
  cfg.use_noise = false;
  CHECK_FALSE(fit_transforms(t, cfg).noise.has_value());
}

TEST_CASE("independent learners and cross-validation") {
  const auto t = small_synth(6);
  const auto [tr, te] = stratified_split(t, 0.7, 1);
  const auto cfg = quick_config();
  const auto reports = train_pipeline1(tr, te, cfg.base_learners, cfg);
  REQUIRE(reports.size() == 5);
  for (const auto& r : reports) CHECK(r.report.accuracy > 0.7);
  const auto cv = cross_validate(cfg.base_learners[0], tr, 3, 1);
  CHECK(cv.folds == 3);
  CHECK(cv.fold_stats.count("macro_f1") == 1);
}

TEST_CASE("ablation rows and exports") {
  const auto t = small_synth(7);
  const auto [tr, te] = stratified_split(t, 0.7, 1);
  const auto rows = run_ablation(tr, te, quick_config());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].configuration == "base");
  CHECK(rows[1].configuration == "+noise");
  CHECK(rows[2].configuration == "+pca");
  CHECK(rows[3].configuration == "full_ensemble");
  CHECK(rows[0].report.folds == 2);
  const auto csv = ablation_to_csv(rows);
  CHECK(csv.rfind("configuration,accuracy,accuracy_std,macro_f1", 0) == 0);
  const auto j = ablation_to_json(rows);
  CHECK(j["rows"].size() == 4);
  CHECK(j["rows"][3]["configuration"] == "full_ensemble");
}

TEST_CASE("grid enumeration order and search") {
  const ParamSpace space{{"b", {1, 2}}, {"a", {10, 20}}};
  const auto g = enumerate_grid(space);
  REQUIRE(g.size() == 4);
  CHECK(g[0].at("a") == 10);
  CHECK(g[0].at("b") == 1);
  CHECK(g[1].at("b") == 2);
  CHECK(g[2].at("a") == 20);
  CHECK_THROWS_AS(enumerate_grid({}), SearchError);
  CHECK_THROWS_AS(enumerate_grid({{"k", {}}}), SearchError);

  const auto t = small_synth(8);
  const auto folds = stratified_kfold(t, 3, 1);
  SearchOptions opt;
  const auto r = hyper_search({LearnerKind::knn, {}, 0}, {{"k", {1, 3, 15}}}, opt, t, folds);
  CHECK(r.evaluated.size() == 3);
  double best = 0;
  for (const auto& [p, s] : r.evaluated) best = std::max(best, s);
  CHECK(r.best_score == best);
  opt.mode = SearchMode::randomized;
  opt.n_draws = 2;
  CHECK(hyper_search({LearnerKind::knn, {}, 0}, {{"k", {1, 3, 15}}}, opt, t, folds).evaluated.size() == 2);
}
