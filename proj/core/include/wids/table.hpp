#pragma once

#include "wids/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wids {

enum class ColumnKind : std::uint8_t { numeric, categorical, timestamp, dropped };

std::string_view kind_name(ColumnKind k) noexcept;
std::optional<ColumnKind> parse_kind(std::string_view text) noexcept;

/// Provenance of a one-hot indicator column: value == `value` in `column`.
struct OneHotSource {
  std::string column;
  std::string value;
  bool operator==(const OneHotSource&) const = default;
};

struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  double missing_fraction = 0.0;
  /// Categories indexed by integer code. Present iff the column is
  /// label-encoded (kind == categorical after encoding).
  std::optional<std::vector<std::string>> encoding_map = std::nullopt;
  std::optional<OneHotSource> one_hot = std::nullopt;

  bool operator==(const ColumnMeta&) const = default;
};

/// Immutable table of traffic records.
///
/// Numeric columns live in `values()`. Columns that still hold raw text
/// (categorical before encoding, textual timestamps) keep their cells in
/// `text(j)` and read as NaN in the numeric matrix; an empty string is a
/// missing cell. Every row carries a stable 64-bit id used for provenance
/// and leakage audits.
class FeatureTable {
 public:
  FeatureTable() = default;
  FeatureTable(std::vector<ColumnMeta> columns, Matrix values,
               std::optional<std::vector<ClassLabel>> labels = std::nullopt,
               std::vector<std::vector<std::string>> text = {},
               std::vector<std::uint64_t> row_ids = {});

  /// Numeric-only table with generated column names c0..c{d-1}.
  static FeatureTable from_matrix(Matrix values,
                                  std::optional<std::vector<ClassLabel>> labels = std::nullopt);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return columns_.size(); }

  const std::vector<ColumnMeta>& columns() const noexcept { return columns_; }
  const ColumnMeta& column(std::size_t j) const { return columns_.at(j); }
  std::vector<std::string> column_names() const;
  std::optional<std::size_t> find_column(std::string_view name) const noexcept;

  const Matrix& values() const noexcept { return values_; }
  bool has_text(std::size_t j) const noexcept { return j < text_.size() && !text_[j].empty(); }
  const std::vector<std::string>& text(std::size_t j) const;
  const std::vector<std::vector<std::string>>& all_text() const noexcept { return text_; }

  bool has_labels() const noexcept { return labels_.has_value(); }
  const std::vector<ClassLabel>& labels() const;
  const std::optional<std::vector<ClassLabel>>& maybe_labels() const noexcept { return labels_; }

  const std::vector<std::uint64_t>& row_ids() const noexcept { return row_ids_; }

  FeatureTable select_rows(std::span<const std::size_t> rows) const;
  FeatureTable select_columns(std::span<const std::size_t> cols) const;
  /// Same schema, labels and ids; new numeric matrix of identical shape.
  FeatureTable with_values(Matrix values) const;
  /// New numeric table (fresh schema) with this table's labels and ids.
  FeatureTable with_matrix(Matrix values, std::vector<std::string> names) const;
  FeatureTable with_labels(std::optional<std::vector<ClassLabel>> labels) const;
  FeatureTable without_labels() const { return with_labels(std::nullopt); }
  FeatureTable with_row_ids(std::vector<std::uint64_t> ids) const;

  /// Vertical concatenation. Schemas must match exactly.
  static FeatureTable concat(const FeatureTable& a, const FeatureTable& b);

  /// True when no text columns remain and every value is finite.
  bool is_clean() const noexcept;

  bool operator==(const FeatureTable& other) const;

 private:
  std::vector<ColumnMeta> columns_;
  Matrix values_;
  std::optional<std::vector<ClassLabel>> labels_;
  std::vector<std::vector<std::string>> text_;
  std::vector<std::uint64_t> row_ids_;
};

/// Writes the table as RFC-4180 CSV with a header row. Text columns are
/// written verbatim; labels (if any) go to a trailing `label_column`.
void write_csv(const FeatureTable& t, std::ostream& out, std::string_view label_column = "Label");
void write_csv(const FeatureTable& t, const std::filesystem::path& path,
               std::string_view label_column = "Label");

/// Reads a fully numeric CSV (e.g. one produced by write_csv or by the
/// synthetic generator). A column named `label_column`, when present,
/// becomes the label vector.
FeatureTable read_numeric_csv(const std::filesystem::path& path,
                              std::string_view label_column = "Label");

}  // namespace wids
