#include "experiment.hpp"

#include "wids/csv.hpp"
#include "wids/persistence.hpp"
#include "wids/rng.hpp"
#include "wids/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

namespace wids::cli {

namespace {

constexpr std::uint64_t kUndersampleStream = 0x756e6472;
constexpr std::uint64_t kSplitStream = 0x73706c74;
constexpr std::uint64_t kEngineeringStream = 0x656e6772;
constexpr std::uint64_t kSmoteStream = 0x736d6f74;

}  // namespace

FeatureTable load_sources(const std::vector<DataSource>& sources, std::vector<std::string>* provenance) {
  std::vector<FeatureTable> parts;
  for (const auto& s : sources) {
    auto r = load_csv_dir(s.dir, s.label);
    if (provenance) provenance->insert(provenance->end(), r.provenance.begin(), r.provenance.end());
    parts.push_back(std::move(r.table));
  }
  if (parts.empty()) throw IngestError("no data sources configured");

  std::vector<std::string> shared;
  for (const auto& name : parts.front().column_names()) {
    if (std::all_of(parts.begin(), parts.end(), [&](const FeatureTable& t) { return t.find_column(name); })) {
      shared.push_back(name);
    }
  }
  if (shared.empty()) throw IngestError("data sources share no columns");
  if (provenance) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      for (const auto& name : parts[p].column_names()) {
        if (std::find(shared.begin(), shared.end(), name) == shared.end()) {
          provenance->push_back("DROP " + sources[p].dir.string() + " " + name + " not-shared");
        }
      }
    }
  }

  std::size_t n = 0;
  for (const auto& t : parts) n += t.rows();
  std::vector<ColumnMeta> meta(shared.size());
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(shared.size()));
  std::vector<std::vector<std::string>> text(shared.size());
  std::vector<ClassLabel> labels;
  labels.reserve(n);
  for (const auto& t : parts) labels.insert(labels.end(), t.labels().begin(), t.labels().end());

  for (std::size_t k = 0; k < shared.size(); ++k) {
    const auto col = static_cast<Eigen::Index>(k);
    // A column that is text in any source stays text in the merged table.
    const bool as_text = std::any_of(parts.begin(), parts.end(), [&](const FeatureTable& t) {
      return t.has_text(*t.find_column(shared[k]));
    });
    meta[k].name = shared[k];
    meta[k].kind = as_text ? ColumnKind::categorical : ColumnKind::numeric;
    double missing = 0.0;
    Eigen::Index row = 0;
    for (const auto& t : parts) {
      const auto j = *t.find_column(shared[k]);
      missing += t.column(j).missing_fraction * static_cast<double>(t.rows());
      for (std::size_t i = 0; i < t.rows(); ++i, ++row) {
        const double v = t.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        values(row, col) = as_text ? std::numeric_limits<double>::quiet_NaN() : v;
        if (as_text) {
          text[k].push_back(t.has_text(j) ? t.text(j)[i] : (std::isnan(v) ? std::string() : csv::format_double(v)));
        }
      }
    }
    meta[k].missing_fraction = n ? missing / static_cast<double>(n) : 0.0;
  }
  std::vector<std::uint64_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::uint64_t{0});
  return {std::move(meta), std::move(values), std::move(labels), std::move(text), std::move(ids)};
}

FeatureTable load_input(const RunConfig& c, std::vector<std::string>* provenance) {
  if (c.synth) return synthesize_dataset(*c.synth, c.pipeline.seed);
  if (c.table) return load_table(*c.table, c.label_column);
  if (!c.sources.empty()) return load_sources(c.sources, provenance);
  throw ConfigError("config names no input: set sources, table or synth");
}

Experiment prepare_experiment(const RunConfig& c, std::ostream& log) {
  const auto seed = c.pipeline.seed;
  std::vector<std::string> provenance;
  const FeatureTable raw = load_input(c, &provenance);
  for (const auto& line : provenance) log << line << '\n';
  if (!raw.has_labels()) throw IngestError("input has no labels");

  const FeatureTable prepared = prepare_table(raw, c.features);
  const FeatureTable sampled = undersample(prepared, c.per_class, derive_seed(seed, {kUndersampleStream}));
  auto [train_prepared, test_prepared] = stratified_split(sampled, c.train_fraction, derive_seed(seed, {kSplitStream}));

  Experiment e;
  e.engineering = fit_feature_engineering(train_prepared, c.features, derive_seed(seed, {kEngineeringStream}));
  e.train = e.engineering.preprocessor.apply(train_prepared);
  e.test = e.engineering.preprocessor.apply(test_prepared);
  e.test_prepared = std::move(test_prepared);

  const auto counts = class_counts(e.train.labels());
  const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
  if (*lo != *hi) {
    auto balanced = smote(e.train, c.smote_k, derive_seed(seed, {kSmoteStream}));
    log << "SMOTE added " << balanced.records.size() << " synthetic rows\n";
    e.train = std::move(balanced.table);
  }
  return e;
}

}  // namespace wids::cli
