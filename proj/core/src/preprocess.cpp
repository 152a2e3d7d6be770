#include "wids/preprocess.hpp"

#include "wids/csv.hpp"
#include "wids/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace wids {

FeatureTable prepare_table(const FeatureTable& raw, const FeatureEngineeringConfig& cfg) {
  FeatureTable t = clean_missing(raw, cfg.drop_threshold);
  for (const auto& col : cfg.timestamp_columns) {
    if (t.find_column(col)) t = decompose_timestamps(t, col);
  }
  return encode_categoricals(t, cfg.onehot_max);
}

FeatureTable Preprocessor::apply(const FeatureTable& t) const {
  FeatureTable x = t;
  for (const auto& col : timestamp_columns) {
    if (auto j = x.find_column(col); j && x.has_text(*j)) x = decompose_timestamps(x, col);
  }
  x = apply_encoding(schema, x);
  if (x.values().hasNaN()) {
    Matrix v = x.values();
    v = v.array().isNaN().select(-1.0, v.array()).matrix();
    x = x.with_values(std::move(v));
  }
  return apply_clip(x, clip);
}

std::vector<std::string> Preprocessor::selected() const {
  std::vector<std::string> out;
  for (const auto& c : schema) out.push_back(c.name);
  return out;
}

namespace {

FeatureTable keep_named(const FeatureTable& t, const std::vector<std::string>& names) {
  std::set<std::string, std::less<>> wanted(names.begin(), names.end());
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < t.cols(); ++j) {
    if (wanted.contains(t.column(j).name)) cols.push_back(j);
  }
  return t.select_columns(cols);
}

}  // namespace

EngineeringResult fit_feature_engineering(const FeatureTable& train, const FeatureEngineeringConfig& cfg,
                                          std::uint64_t seed) {
  if (!train.is_clean()) throw TransformError("feature engineering needs a clean numeric table");
  EngineeringResult out;
  std::vector<std::string> iqr_cols;
  for (const auto& c : cfg.iqr_columns) {
    if (train.find_column(c)) iqr_cols.push_back(c);
  }
  auto clip = fit_iqr_bounds(train, iqr_cols, cfg.iqr_factor);
  FeatureTable x = apply_clip(train, clip);

  auto run_vif = [&] {
    if (!cfg.vif_enabled || x.cols() < 2) return;
    auto [filtered, report] = vif_filter(x, cfg.vif_threshold);
    x = std::move(filtered);
    out.report.vif = std::move(report);
    out.report.vif_run = true;
  };
  auto run_importance = [&] {
    if (!cfg.importance_enabled) return;
    LearnerSpec forest = default_spec(LearnerKind::random_forest, derive_seed(seed, {0x696d70}));
    out.report.importance = importance_rank_select(x, std::min(cfg.importance_k, x.cols()), forest);
    out.report.importance_run = true;
    // keep the selected columns in their table order
    x = keep_named(x, out.report.importance.selected);
  };
  if (cfg.vif_before_importance) {
    run_vif();
    run_importance();
  } else {
    run_importance();
    run_vif();
  }

  out.preprocessor.timestamp_columns = cfg.timestamp_columns;
  out.preprocessor.schema = x.columns();
  std::erase_if(clip, [&](const ClipBounds& b) { return !x.find_column(b.column); });
  out.preprocessor.clip = std::move(clip);
  return out;
}

nlohmann::json to_json(const VifReport& r) {
  auto list = [](const std::vector<std::pair<std::string, double>>& xs) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& [name, v] : xs) a.push_back({{"column", name}, {"vif", std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf")}});
    return a;
  };
  return {{"initial", list(r.initial)}, {"final", list(r.final)}, {"removed", list(r.removed)}};
}

nlohmann::json to_json(const ImportanceRanking& r) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& [name, v] : r.scores) scores.push_back({{"column", name}, {"importance", v}});
  return {{"scores", scores}, {"selected", r.selected}};
}

std::string vif_to_csv(const VifReport& r) {
  std::ostringstream out;
  out << "stage,order,column,vif\r\n";
  auto emit = [&](const char* stage, const std::vector<std::pair<std::string, double>>& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      out << stage << ',' << i + 1 << ',' << csv::escape(xs[i].first) << ',' << csv::format_double(xs[i].second)
          << "\r\n";
    }
  };
  emit("initial", r.initial);
  emit("removed", r.removed);
  emit("final", r.final);
  return out.str();
}

std::string importance_to_csv(const ImportanceRanking& r) {
  std::ostringstream out;
  out << "column,importance,selected\r\n";
  for (const auto& [name, v] : r.scores) {
    const bool sel = std::find(r.selected.begin(), r.selected.end(), name) != r.selected.end();
    out << csv::escape(name) << ',' << csv::format_double(v) << ',' << (sel ? 1 : 0) << "\r\n";
  }
  return out.str();
}

}  // namespace wids
