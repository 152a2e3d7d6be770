#include "wids/config.hpp"

#include <fstream>
#include <set>

namespace wids {

using nlohmann::json;

namespace {

void require_object(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  const std::set<std::string_view> ok(allowed);
  for (const auto& [key, _] : j.items()) {
    if (!ok.contains(key)) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <class T>
void read(const json& j, const char* key, T& out, std::string_view where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

void read_size(const json& j, const char* key, std::size_t& out, std::string_view where) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(std::string(where) + "." + key + " must be a non-negative integer");
  out = v.get<std::size_t>();
}

std::string label_source_name(const LabelSource& l) {
  return std::holds_alternative<ClassLabel>(l) ? std::string(label_name(std::get<ClassLabel>(l))) : std::string();
}

}  // namespace

RunConfig default_run_config() { return RunConfig{}; }

json to_json(const SynthSpec& s) {
  return {{"n_per_class", s.n_per_class}, {"dim", s.dim},
          {"separation", s.separation},   {"within_std", s.within_std},
          {"anisotropy", s.anisotropy},   {"collinear_fraction", s.collinear_fraction},
          {"label_noise", s.label_noise}};
}

SynthSpec synth_spec_from_json(const json& j) {
  constexpr std::string_view w = "synth";
  require_object(j, w, {"n_per_class", "dim", "separation", "within_std", "anisotropy", "collinear_fraction",
                        "label_noise"});
  SynthSpec s;
  read_size(j, "n_per_class", s.n_per_class, w);
  read_size(j, "dim", s.dim, w);
  read(j, "separation", s.separation, w);
  read(j, "within_std", s.within_std, w);
  read(j, "anisotropy", s.anisotropy, w);
  read(j, "collinear_fraction", s.collinear_fraction, w);
  read(j, "label_noise", s.label_noise, w);
  return s;
}

json to_json(const LearnerSpec& s) {
  return {{"kind", kind_name(s.kind)}, {"params", s.params}, {"seed", s.seed}};
}

LearnerSpec learner_spec_from_json(const json& j) {
  constexpr std::string_view w = "learner";
  require_object(j, w, {"kind", "params", "seed"});
  if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("learner.kind is required");
  LearnerSpec s;
  try {
    s.kind = parse_learner_kind(j["kind"].get<std::string>());
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
  read(j, "params", s.params, w);
  read(j, "seed", s.seed, w);
  try {
    (void)validate(s);
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
  return s;
}

json to_json(const MetaSpec& s) { return {{"kind", meta_kind_name(s.kind)}, {"params", s.params}}; }

MetaSpec meta_spec_from_json(const json& j) {
  constexpr std::string_view w = "meta";
  require_object(j, w, {"kind", "params"});
  MetaSpec s = default_meta_spec();
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError("meta.kind must be a string");
    try {
      s.kind = parse_meta_kind(j["kind"].get<std::string>());
    } catch (const SpecError& e) {
      throw ConfigError(e.what());
    }
    if (s.kind != MetaKind::gradient_boosted_trees) s.params.clear();
  }
  read(j, "params", s.params, w);
  return s;
}

json to_json(const PipelineConfig& c) {
  json learners = json::array();
  for (const auto& s : c.base_learners) learners.push_back(to_json(s));
  return {{"base_learners", learners},
          {"meta", to_json(c.meta)},
          {"sigma", c.sigma},
          {"noise_phase", c.noise_phase == NoisePhase::train_only ? "train_only" : "train_and_test"},
          {"use_noise", c.use_noise},
          {"use_pca", c.use_pca},
          {"pca_threshold", c.pca_threshold},
          {"folds", c.folds},
          {"runs", c.runs},
          {"seed", c.seed}};
}

PipelineConfig pipeline_config_from_json(const json& j) {
  constexpr std::string_view w = "pipeline";
  require_object(j, w, {"base_learners", "meta", "sigma", "noise_phase", "use_noise", "use_pca",
                        "pca_threshold", "folds", "runs", "seed"});
  PipelineConfig c = default_pipeline_config();
  if (j.contains("base_learners")) {
    if (!j["base_learners"].is_array() || j["base_learners"].empty()) {
      throw ConfigError("pipeline.base_learners must be a non-empty array");
    }
    c.base_learners.clear();
    for (const auto& s : j["base_learners"]) c.base_learners.push_back(learner_spec_from_json(s));
  }
  if (j.contains("meta")) c.meta = meta_spec_from_json(j["meta"]);
  read(j, "sigma", c.sigma, w);
  if (j.contains("noise_phase")) {
    const auto p = j["noise_phase"].is_string() ? j["noise_phase"].get<std::string>() : std::string();
    if (p == "train_only") c.noise_phase = NoisePhase::train_only;
    else if (p == "train_and_test") c.noise_phase = NoisePhase::train_and_test;
    else throw ConfigError("pipeline.noise_phase must be train_only or train_and_test");
  }
  read(j, "use_noise", c.use_noise, w);
  read(j, "use_pca", c.use_pca, w);
  read(j, "pca_threshold", c.pca_threshold, w);
  read_size(j, "folds", c.folds, w);
  read_size(j, "runs", c.runs, w);
  read(j, "seed", c.seed, w);
  if (!(c.sigma >= 0.0)) throw ConfigError("pipeline.sigma must be >= 0");
  if (!(c.pca_threshold > 0.0 && c.pca_threshold <= 1.0)) throw ConfigError("pipeline.pca_threshold must be in (0, 1]");
  if (c.folds < 2) throw ConfigError("pipeline.folds must be >= 2");
  if (c.runs < 1) throw ConfigError("pipeline.runs must be >= 1");
  return c;
}

namespace {

json to_json(const FeatureEngineeringConfig& f) {
  return {{"drop_threshold", f.drop_threshold},
          {"timestamp_columns", f.timestamp_columns},
          {"onehot_max", f.onehot_max},
          {"iqr_factor", f.iqr_factor},
          {"iqr_columns", f.iqr_columns},
          {"vif_enabled", f.vif_enabled},
          {"vif_threshold", f.vif_threshold},
          {"importance_enabled", f.importance_enabled},
          {"importance_k", f.importance_k},
          {"vif_before_importance", f.vif_before_importance}};
}

FeatureEngineeringConfig features_from_json(const json& j) {
  constexpr std::string_view w = "features";
  require_object(j, w, {"drop_threshold", "timestamp_columns", "onehot_max", "iqr_factor", "iqr_columns",
                        "vif_enabled", "vif_threshold", "importance_enabled", "importance_k",
                        "vif_before_importance"});
  FeatureEngineeringConfig f;
  read(j, "drop_threshold", f.drop_threshold, w);
  read(j, "timestamp_columns", f.timestamp_columns, w);
  read_size(j, "onehot_max", f.onehot_max, w);
  read(j, "iqr_factor", f.iqr_factor, w);
  read(j, "iqr_columns", f.iqr_columns, w);
  read(j, "vif_enabled", f.vif_enabled, w);
  read(j, "vif_threshold", f.vif_threshold, w);
  read(j, "importance_enabled", f.importance_enabled, w);
  read_size(j, "importance_k", f.importance_k, w);
  read(j, "vif_before_importance", f.vif_before_importance, w);
  if (!(f.drop_threshold > 0.0 && f.drop_threshold <= 1.0)) throw ConfigError("features.drop_threshold must be in (0, 1]");
  if (!(f.iqr_factor >= 0.0)) throw ConfigError("features.iqr_factor must be >= 0");
  if (!(f.vif_threshold >= 1.0)) throw ConfigError("features.vif_threshold must be >= 1");
  if (f.importance_k == 0) throw ConfigError("features.importance_k must be >= 1");
  return f;
}

}  // namespace

json to_json(const RunConfig& c) {
  json sources = json::array();
  for (const auto& s : c.sources) {
    json o{{"dir", s.dir.generic_string()}};
    if (std::holds_alternative<ClassLabel>(s.label)) {
      o["label"] = label_source_name(s.label);
    } else {
      o["label_column"] = std::get<LabelFromColumn>(s.label).column;
    }
    sources.push_back(o);
  }
  json j{{"config_version", kConfigVersion},
         {"sources", sources},
         {"label_column", c.label_column},
         {"table", c.table ? json(c.table->generic_string()) : json(nullptr)},
         {"synth", c.synth ? to_json(*c.synth) : json(nullptr)},
         {"features", to_json(c.features)},
         {"per_class", c.per_class},
         {"smote_k", c.smote_k},
         {"train_fraction", c.train_fraction},
         {"pipeline", to_json(c.pipeline)}};
  return j;
}

RunConfig run_config_from_json(const json& j) {
  constexpr std::string_view w = "config";
  require_object(j, w, {"config_version", "sources", "label_column", "table", "synth", "features", "per_class",
                        "smote_k", "train_fraction", "pipeline"});
  if (!j.contains("config_version")) throw ConfigError("config_version is required");
  if (!j["config_version"].is_number_integer() || j["config_version"].get<int>() != kConfigVersion) {
    throw ConfigError("unsupported config_version (expected " + std::to_string(kConfigVersion) + ")");
  }
  RunConfig c;
  read(j, "label_column", c.label_column, w);
  if (j.contains("sources")) {
    if (!j["sources"].is_array()) throw ConfigError("sources must be an array");
    for (const auto& s : j["sources"]) {
      require_object(s, "source", {"dir", "label", "label_column"});
      if (!s.contains("dir") || !s["dir"].is_string()) throw ConfigError("source.dir is required");
      DataSource src{std::filesystem::path(s["dir"].get<std::string>()), LabelFromColumn{c.label_column}};
      if (s.contains("label") && s.contains("label_column")) {
        throw ConfigError("source takes either label or label_column, not both");
      }
      if (s.contains("label")) {
        const auto l = s["label"].is_string() ? parse_label(s["label"].get<std::string>()) : std::nullopt;
        if (!l) throw ConfigError("source.label must be Normal, Kr00k or Krack");
        src.label = *l;
      } else if (s.contains("label_column")) {
        src.label = LabelFromColumn{s["label_column"].get<std::string>()};
      }
      c.sources.push_back(std::move(src));
    }
  }
  if (j.contains("table") && !j["table"].is_null()) c.table = j["table"].get<std::string>();
  if (j.contains("synth") && !j["synth"].is_null()) c.synth = synth_spec_from_json(j["synth"]);
  if (j.contains("features")) c.features = features_from_json(j["features"]);
  read_size(j, "per_class", c.per_class, w);
  read_size(j, "smote_k", c.smote_k, w);
  read(j, "train_fraction", c.train_fraction, w);
  if (j.contains("pipeline")) c.pipeline = pipeline_config_from_json(j["pipeline"]);
  const int n_inputs = (c.sources.empty() ? 0 : 1) + (c.table ? 1 : 0) + (c.synth ? 1 : 0);
  if (n_inputs > 1) throw ConfigError("choose exactly one of sources, table or synth");
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");
  if (c.per_class == 0) throw ConfigError("per_class must be >= 1");
  if (c.smote_k == 0) throw ConfigError("smote_k must be >= 1");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig c = run_config_from_json(j);
  // relative data paths resolve against the config file's directory
  const auto base = path.parent_path();
  for (auto& s : c.sources) {
    if (s.dir.is_relative()) s.dir = base / s.dir;
  }
  if (c.table && c.table->is_relative()) c.table = base / *c.table;
  return c;
}

}  // namespace wids
