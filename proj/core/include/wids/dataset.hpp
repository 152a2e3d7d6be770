#pragma once

#include "wids/table.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace wids {

/// Either a fixed class for every row, or read from a label column.
struct LabelFromColumn {
  std::string column = "Label";
};
using LabelSource = std::variant<ClassLabel, LabelFromColumn>;

struct IngestResult {
  FeatureTable table;
  /// One "DROP <file> <column> <reason>" line per event, plus
  /// "SKIP <file> <line> <reason>" lines for rejected rows.
  std::vector<std::string> provenance;
};

/// Fraction of malformed rows above which ingestion aborts.
inline constexpr double kMalformedRowTolerance = 0.01;

/// Loads every *.csv file in `dir` (sorted by file name) and merges them on
/// the intersection of their column names.
IngestResult load_csv_dir(const std::filesystem::path& dir, const LabelSource& label);

/// Same merge over an explicit file list. Column order follows the file with
/// the lexicographically smallest path, so the result does not depend on the
/// order of `files` beyond a row permutation.
IngestResult load_csv_files(std::vector<std::filesystem::path> files, const LabelSource& label);

/// Drops columns whose missing fraction exceeds `drop_threshold`, imputes
/// remaining numeric gaps with -1. Missing categorical cells stay empty and
/// are mapped to the reserved code by encode_categoricals.
FeatureTable clean_missing(const FeatureTable& t, double drop_threshold = 0.5);

inline constexpr double kMissingNumericSentinel = -1.0;

/// Broken-down wall-clock time of day.
struct TimeOfDay {
  int hour = 0;
  int minute = 0;
  int second = 0;
};

/// Accepts "YYYY-MM-DD HH:MM:SS[.frac]", the ISO-8601 'T' form with an
/// optional zone suffix (fields are taken as written), bare "HH:MM:SS", and
/// epoch seconds (interpreted as UTC).
std::optional<TimeOfDay> parse_time_of_day(std::string_view text) noexcept;

/// Replaces `col` with `<col>.hour`, `<col>.minute`, `<col>.second`.
/// Missing cells become -1. Aborts when more than 1% of the present cells
/// fail to parse.
FeatureTable decompose_timestamps(const FeatureTable& t, std::string_view col);

inline constexpr std::size_t kDefaultOneHotMax = 8;

/// Encodes every categorical text column. Cardinality <= onehot_max expands
/// to `<col>=<value>` indicators; larger cardinality becomes a single column
/// of first-appearance codes with the map kept in ColumnMeta::encoding_map.
FeatureTable encode_categoricals(const FeatureTable& t, std::size_t onehot_max = kDefaultOneHotMax);

/// Apply-time encoding: reproduces the columns of `fitted_schema` from the
/// raw categorical text in `t`. Unseen values get code = cardinality (label
/// encoding) or all-zero indicators (one-hot).
FeatureTable apply_encoding(const std::vector<ColumnMeta>& fitted_schema, const FeatureTable& t);

struct SynthSpec {
  std::size_t n_per_class = 2000;
  std::size_t dim = 20;               ///< informative dimensions
  double separation = 2.0;            ///< distance scale between class means
  double within_std = 1.0;            ///< within-class standard deviation scale
  double anisotropy = 0.0;            ///< 0 = isotropic; otherwise spread of the log-variances
  double collinear_fraction = 0.3;    ///< extra exact linear-combination columns, as a fraction of dim
  double label_noise = 0.1;           ///< fraction of rows whose label is resampled uniformly
};

/// Three Gaussian clusters with optional exact collinear columns
/// `c{dim+i} = c{a} + c{b}` and uniform label noise. Pure function of
/// (spec, seed).
FeatureTable synthesize_dataset(const SynthSpec& spec, std::uint64_t seed);

/// The benchmark used by the ablation and determinism checks: 20 informative
/// + 6 collinear dims, 10% label noise, 2000 rows per class.
SynthSpec benchmark_synth_spec();

}  // namespace wids
