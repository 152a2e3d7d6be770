#include "wids/learners.hpp"

#include "wids/models.hpp"
#include "wids/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace wids {

std::string_view kind_name(LearnerKind k) noexcept {
  switch (k) {
    case LearnerKind::knn: return "knn";
    case LearnerKind::random_forest: return "random_forest";
    case LearnerKind::gradient_boosted_trees: return "gradient_boosted_trees";
    case LearnerKind::linear_svm: return "linear_svm";
    case LearnerKind::mlp: return "mlp";
    case LearnerKind::logistic: return "logistic";
  }
  return "?";
}

LearnerKind parse_learner_kind(std::string_view name) {
  for (auto k : {LearnerKind::knn, LearnerKind::random_forest, LearnerKind::gradient_boosted_trees,
                 LearnerKind::linear_svm, LearnerKind::mlp, LearnerKind::logistic}) {
    if (kind_name(k) == name) return k;
  }
  throw SpecError("unknown learner kind '" + std::string(name) + "'");
}

Hyperparameters default_hyperparameters(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::knn: return {{"k", 5}};
    case LearnerKind::random_forest:
      return {{"n_trees", 100}, {"max_depth", 16}, {"min_samples_leaf", 1}, {"min_samples_split", 2},
              {"max_features", 0}, {"bootstrap", 1}, {"max_bins", 256}};
    case LearnerKind::gradient_boosted_trees:
      return {{"n_rounds", 100}, {"max_depth", 6}, {"eta", 0.1}, {"lambda", 1.0},
              {"gamma", 0.0}, {"min_child_weight", 1.0}, {"max_bins", 256}};
    case LearnerKind::linear_svm: return {{"epochs", 50}, {"lambda", 1e-4}};
    case LearnerKind::mlp:
      return {{"hidden", 64}, {"epochs", 50}, {"batch", 128}, {"step", 0.01}, {"momentum", 0.9},
              {"alpha", 1e-4}};
    case LearnerKind::logistic: return {{"iterations", 300}, {"step", 0.5}, {"lambda", 1e-4}};
  }
  return {};
}

LearnerSpec default_spec(LearnerKind kind, std::uint64_t seed) {
  return {kind, default_hyperparameters(kind), seed};
}

namespace {

struct Range {
  double lo;
  double hi;
  bool lo_open = false;
  bool integer = false;
};

const std::map<std::string, Range>& ranges_for(LearnerKind kind) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const std::map<LearnerKind, std::map<std::string, Range>> table = {
      {LearnerKind::knn, {{"k", {1, 1e9, false, true}}}},
      {LearnerKind::random_forest,
       {{"n_trees", {1, 1e6, false, true}},
        {"max_depth", {1, 64, false, true}},
        {"min_samples_leaf", {1, 1e9, false, true}},
        {"min_samples_split", {2, 1e9, false, true}},
        {"max_features", {0, 1e9, false, true}},
        {"bootstrap", {0, 1, false, true}},
        {"max_bins", {2, 65535, false, true}}}},
      {LearnerKind::gradient_boosted_trees,
       {{"n_rounds", {0, 1e6, false, true}},
        {"max_depth", {1, 64, false, true}},
        {"eta", {0, 1, true, false}},
        {"lambda", {0, inf}},
        {"gamma", {0, inf}},
        {"min_child_weight", {0, inf}},
        {"max_bins", {2, 65535, false, true}}}},
      {LearnerKind::linear_svm, {{"epochs", {1, 1e6, false, true}}, {"lambda", {0, inf, true, false}}}},
      {LearnerKind::mlp,
       {{"hidden", {1, 1e5, false, true}},
        {"epochs", {0, 1e6, false, true}},
        {"batch", {1, 1e9, false, true}},
        {"step", {0, inf, true, false}},
        {"momentum", {0, 0.999999}},
        {"alpha", {0, inf}}}},
      {LearnerKind::logistic,
       {{"iterations", {0, 1e7, false, true}}, {"step", {0, inf, true, false}}, {"lambda", {0, inf}}}},
  };
  return table.at(kind);
}

std::size_t as_size(const Hyperparameters& p, const char* name) {
  return static_cast<std::size_t>(p.at(name));
}

}  // namespace

LearnerSpec validate(const LearnerSpec& spec) {
  LearnerSpec out = spec;
  out.params = default_hyperparameters(spec.kind);
  const auto& ranges = ranges_for(spec.kind);
  for (const auto& [name, value] : spec.params) {
    auto it = ranges.find(name);
    if (it == ranges.end()) {
      throw SpecError("unknown hyperparameter '" + name + "' for " + std::string(kind_name(spec.kind)));
    }
    const Range& r = it->second;
    const bool below = r.lo_open ? !(value > r.lo) : !(value >= r.lo);
    if (below || !(value <= r.hi) || (r.integer && value != std::floor(value))) {
      throw SpecError("hyperparameter " + std::string(kind_name(spec.kind)) + "." + name +
                      " out of range: " + std::to_string(value));
    }
    out.params[name] = value;
  }
  return out;
}

bool TrainingFingerprint::contains(std::uint64_t row_id) const {
  return std::binary_search(row_ids.begin(), row_ids.end(), row_id);
}

std::uint64_t fingerprint_hash(const Matrix& x, std::span<const ClassLabel> y,
                               std::span<const std::uint64_t> row_ids) {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(x.rows()) ^ (static_cast<std::uint64_t>(x.cols()) << 32));
  for (Eigen::Index i = 0; i < x.size(); ++i) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x.data()[i]));
  for (auto l : y) h = splitmix64(h ^ static_cast<std::uint64_t>(index_of(l)));
  for (auto id : row_ids) h = splitmix64(h ^ id);
  return h;
}

std::vector<std::uint8_t> to_indices(std::span<const ClassLabel> y) {
  std::vector<std::uint8_t> out(y.size());
  std::transform(y.begin(), y.end(), out.begin(), [](ClassLabel l) { return static_cast<std::uint8_t>(l); });
  return out;
}

void softmax_rows(Matrix& scores) {
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    const double m = row.maxCoeff();
    row = (row.array() - m).exp();
    row /= row.sum();
  }
}

std::vector<ClassLabel> argmax_labels(const Matrix& proba) {
  std::vector<ClassLabel> out(static_cast<std::size_t>(proba.rows()));
  for (Eigen::Index i = 0; i < proba.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < proba.cols(); ++c) {
      if (proba(i, c) > proba(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = label_from_index(static_cast<std::size_t>(best));
  }
  return out;
}

Matrix TrainedLearner::predict_proba(const Matrix& x) const {
  if (!model_) throw PredictError("learner is not trained");
  if (static_cast<std::size_t>(x.cols()) != model_->input_dim()) {
    throw PredictError("input has " + std::to_string(x.cols()) + " columns; " +
                       std::string(kind_name(spec_.kind)) + " was trained on " +
                       std::to_string(model_->input_dim()));
  }
  Matrix out(x.rows(), static_cast<Eigen::Index>(kNumClasses));
  model_->predict_proba(x, out);
  return out;
}

TrainedLearner train(const LearnerSpec& raw_spec, const Matrix& x, std::span<const ClassLabel> y,
                     std::span<const std::uint64_t> row_ids) {
  const LearnerSpec spec = validate(raw_spec);
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw TrainError("label count != row count");
  if (!x.allFinite()) throw TrainError("training matrix contains NaN or Inf");
  const auto counts = class_counts(y);
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    throw TrainError("training data must contain at least two classes");
  }
  const auto yi = to_indices(y);
  const auto& p = spec.params;

  std::shared_ptr<const Model> model;
  switch (spec.kind) {
    case LearnerKind::knn:
      model = std::make_shared<KnnModel>(x, yi, as_size(p, "k"));
      break;
    case LearnerKind::random_forest: {
      ForestModel::Options opt;
      opt.n_trees = as_size(p, "n_trees");
      opt.grow.max_depth = as_size(p, "max_depth");
      opt.grow.min_samples_leaf = as_size(p, "min_samples_leaf");
      opt.grow.min_samples_split = as_size(p, "min_samples_split");
      const auto mf = as_size(p, "max_features");
      opt.grow.max_features =
          mf == 0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols())))) : mf;
      opt.bootstrap = p.at("bootstrap") != 0.0;
      opt.max_bins = as_size(p, "max_bins");
      opt.seed = spec.seed;
      model = std::make_shared<ForestModel>(ForestModel::fit(x, yi, opt));
      break;
    }
    case LearnerKind::gradient_boosted_trees: {
      GbtModel::Options opt;
      opt.rounds = as_size(p, "n_rounds");
      opt.max_depth = as_size(p, "max_depth");
      opt.eta = p.at("eta");
      opt.lambda = p.at("lambda");
      opt.gamma = p.at("gamma");
      opt.min_child_weight = p.at("min_child_weight");
      opt.max_bins = as_size(p, "max_bins");
      model = std::make_shared<GbtModel>(GbtModel::fit(x, yi, opt));
      break;
    }
    case LearnerKind::linear_svm:
      model = std::make_shared<LinearModel>(
          LinearModel::fit_svm(x, yi, {as_size(p, "epochs"), p.at("lambda"), spec.seed}));
      break;
    case LearnerKind::mlp: {
      MlpModel::Options opt;
      opt.hidden = as_size(p, "hidden");
      opt.epochs = as_size(p, "epochs");
      opt.batch = as_size(p, "batch");
      opt.step = p.at("step");
      opt.momentum = p.at("momentum");
      opt.alpha = p.at("alpha");
      opt.seed = spec.seed;
      model = std::make_shared<MlpModel>(MlpModel::fit(x, yi, opt));
      break;
    }
    case LearnerKind::logistic:
      model = std::make_shared<LinearModel>(LinearModel::fit_logistic(
          x, yi, {as_size(p, "iterations"), p.at("step"), p.at("lambda")}));
      break;
  }

  TrainingFingerprint fp;
  fp.rows = y.size();
  fp.row_ids.assign(row_ids.begin(), row_ids.end());
  std::sort(fp.row_ids.begin(), fp.row_ids.end());
  fp.hash = fingerprint_hash(x, y, fp.row_ids);
  return {spec, std::move(model), std::move(fp)};
}

TrainedLearner train(const LearnerSpec& spec, const FeatureTable& t) {
  if (!t.has_labels()) throw TrainError("training table has no labels");
  if (!t.is_clean()) throw TrainError("training table must be numeric and finite");
  return train(spec, t.values(), t.labels(), t.row_ids());
}

Matrix predict_proba(const TrainedLearner& learner, const FeatureTable& t) {
  for (std::size_t j = 0; j < t.cols(); ++j) {
    if (t.has_text(j)) throw PredictError("column '" + t.column(j).name + "' is not numeric");
  }
  return learner.predict_proba(t.values());
}

std::unique_ptr<Model> unpack_model(LearnerKind kind, std::span<const double> image) {
  switch (kind) {
    case LearnerKind::knn: return KnnModel::unpack(image);
    case LearnerKind::random_forest: return ForestModel::unpack(image);
    case LearnerKind::gradient_boosted_trees: return GbtModel::unpack(image);
    case LearnerKind::linear_svm:
    case LearnerKind::logistic: return LinearModel::unpack(kind, image);
    case LearnerKind::mlp: return MlpModel::unpack(image);
  }
  throw CorruptBundle("unknown model kind");
}

}  // namespace wids
