#pragma once

#include "wids/dataset.hpp"
#include "wids/preprocess.hpp"
#include "wids/stacking.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wids {

inline constexpr int kConfigVersion = 1;

struct DataSource {
  std::filesystem::path dir;
  LabelSource label = LabelFromColumn{};
};

struct RunConfig {
  std::vector<DataSource> sources;
  std::string label_column = "Label";
  std::optional<std::filesystem::path> table;  ///< pre-ingested table cache or CSV
  std::optional<SynthSpec> synth;

  FeatureEngineeringConfig features;
  std::size_t per_class = 100000;
  std::size_t smote_k = 5;
  double train_fraction = 0.7;
  PipelineConfig pipeline = default_pipeline_config();
};

RunConfig default_run_config();

/// Unknown keys are rejected so typos do not silently fall back to defaults.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const SynthSpec& s);
SynthSpec synth_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LearnerSpec& s);
LearnerSpec learner_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MetaSpec& s);
MetaSpec meta_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);

}  // namespace wids
