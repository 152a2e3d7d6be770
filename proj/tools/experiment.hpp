#pragma once

// Shared data preparation for the config-driven subcommands.

#include "wids/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace wids::cli {

/// Loads the configured input (sources, table cache/CSV, or synthetic spec).
FeatureTable load_input(const RunConfig& c, std::vector<std::string>* provenance = nullptr);

/// Reads every CSV directory and merges them on their shared columns.
/// Row ids are renumbered so they stay unique across directories.
FeatureTable load_sources(const std::vector<DataSource>& sources, std::vector<std::string>* provenance);

struct Experiment {
  FeatureTable test_prepared;  ///< held-out rows before feature engineering
  FeatureTable train;          ///< engineered (and balanced) training rows
  FeatureTable test;           ///< engineered held-out rows
  EngineeringResult engineering;
};

/// prepare -> undersample -> split -> fit feature engineering on the train
/// split -> apply to both splits -> SMOTE the train split when unbalanced.
Experiment prepare_experiment(const RunConfig& c, std::ostream& log);

}  // namespace wids::cli
