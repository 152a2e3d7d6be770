#include "wids/table.hpp"

#include "wids/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

namespace wids {

std::string_view kind_name(ColumnKind k) noexcept {
  switch (k) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::timestamp: return "timestamp";
    case ColumnKind::dropped: return "dropped";
  }
  return "?";
}

std::optional<ColumnKind> parse_kind(std::string_view text) noexcept {
  if (text == "numeric") return ColumnKind::numeric;
  if (text == "categorical") return ColumnKind::categorical;
  if (text == "timestamp") return ColumnKind::timestamp;
  if (text == "dropped") return ColumnKind::dropped;
  return std::nullopt;
}

FeatureTable::FeatureTable(std::vector<ColumnMeta> columns, Matrix values,
                           std::optional<std::vector<ClassLabel>> labels,
                           std::vector<std::vector<std::string>> text,
                           std::vector<std::uint64_t> row_ids)
    : columns_(std::move(columns)),
      values_(std::move(values)),
      labels_(std::move(labels)),
      text_(std::move(text)),
      row_ids_(std::move(row_ids)) {
  const auto n = rows();
  if (static_cast<std::size_t>(values_.cols()) != columns_.size()) {
    throw Error("FeatureTable: matrix has " + std::to_string(values_.cols()) + " columns, schema " +
                std::to_string(columns_.size()));
  }
  if (labels_ && labels_->size() != n) throw Error("FeatureTable: label count != row count");
  if (text_.empty()) {
    text_.resize(columns_.size());
  } else if (text_.size() != columns_.size()) {
    throw Error("FeatureTable: text store does not match schema");
  }
  for (const auto& col : text_) {
    if (!col.empty() && col.size() != n) throw Error("FeatureTable: ragged text column");
  }
  if (row_ids_.empty()) {
    row_ids_.resize(n);
    std::iota(row_ids_.begin(), row_ids_.end(), std::uint64_t{0});
  } else if (row_ids_.size() != n) {
    throw Error("FeatureTable: row id count != row count");
  }
}

FeatureTable FeatureTable::from_matrix(Matrix values, std::optional<std::vector<ClassLabel>> labels) {
  std::vector<ColumnMeta> cols(static_cast<std::size_t>(values.cols()));
  for (std::size_t j = 0; j < cols.size(); ++j) cols[j].name = "c" + std::to_string(j);
  return {std::move(cols), std::move(values), std::move(labels)};
}

std::vector<std::string> FeatureTable::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> FeatureTable::find_column(std::string_view name) const noexcept {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name == name) return j;
  }
  return std::nullopt;
}

const std::vector<std::string>& FeatureTable::text(std::size_t j) const { return text_.at(j); }

const std::vector<ClassLabel>& FeatureTable::labels() const {
  if (!labels_) throw Error("table has no labels");
  return *labels_;
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  Matrix v(static_cast<Eigen::Index>(rows.size()), values_.cols());
  std::vector<std::uint64_t> ids(rows.size());
  std::optional<std::vector<ClassLabel>> labels;
  if (labels_) labels.emplace(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    ids[i] = row_ids_[rows[i]];
    if (labels_) (*labels)[i] = (*labels_)[rows[i]];
  }
  std::vector<std::vector<std::string>> text(text_.size());
  for (std::size_t j = 0; j < text_.size(); ++j) {
    if (text_[j].empty()) continue;
    text[j].reserve(rows.size());
    for (auto r : rows) text[j].push_back(text_[j][r]);
  }
  return {columns_, std::move(v), std::move(labels), std::move(text), std::move(ids)};
}

FeatureTable FeatureTable::select_columns(std::span<const std::size_t> cols) const {
  std::vector<ColumnMeta> meta;
  std::vector<std::vector<std::string>> text;
  Matrix v(values_.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    meta.push_back(columns_.at(cols[k]));
    text.push_back(text_[cols[k]]);
    v.col(static_cast<Eigen::Index>(k)) = values_.col(static_cast<Eigen::Index>(cols[k]));
  }
  return {std::move(meta), std::move(v), labels_, std::move(text), row_ids_};
}

FeatureTable FeatureTable::with_values(Matrix values) const {
  if (values.rows() != values_.rows() || values.cols() != values_.cols()) {
    throw Error("with_values: shape mismatch");
  }
  return {columns_, std::move(values), labels_, text_, row_ids_};
}

FeatureTable FeatureTable::with_matrix(Matrix values, std::vector<std::string> names) const {
  if (static_cast<std::size_t>(values.rows()) != rows()) throw Error("with_matrix: row mismatch");
  std::vector<ColumnMeta> meta(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) meta[j].name = std::move(names[j]);
  return {std::move(meta), std::move(values), labels_, {}, row_ids_};
}

FeatureTable FeatureTable::with_labels(std::optional<std::vector<ClassLabel>> labels) const {
  return {columns_, values_, std::move(labels), text_, row_ids_};
}

FeatureTable FeatureTable::with_row_ids(std::vector<std::uint64_t> ids) const {
  return {columns_, values_, labels_, text_, std::move(ids)};
}

FeatureTable FeatureTable::concat(const FeatureTable& a, const FeatureTable& b) {
  if (a.columns_ != b.columns_) throw Error("concat: schema mismatch");
  if (a.has_labels() != b.has_labels()) throw Error("concat: label presence mismatch");
  Matrix v(a.values_.rows() + b.values_.rows(), a.values_.cols());
  v << a.values_, b.values_;
  std::optional<std::vector<ClassLabel>> labels;
  if (a.labels_) {
    labels = *a.labels_;
    labels->insert(labels->end(), b.labels_->begin(), b.labels_->end());
  }
  std::vector<std::vector<std::string>> text(a.text_.size());
  for (std::size_t j = 0; j < text.size(); ++j) {
    if (a.text_[j].empty() && b.text_[j].empty()) continue;
    text[j] = a.text_[j];
    if (text[j].empty()) text[j].resize(a.rows());
    auto rhs = b.text_[j];
    if (rhs.empty()) rhs.resize(b.rows());
    text[j].insert(text[j].end(), rhs.begin(), rhs.end());
  }
  std::vector<std::uint64_t> ids = a.row_ids_;
  ids.insert(ids.end(), b.row_ids_.begin(), b.row_ids_.end());
  return {a.columns_, std::move(v), std::move(labels), std::move(text), std::move(ids)};
}

bool FeatureTable::is_clean() const noexcept {
  for (const auto& t : text_) {
    if (!t.empty()) return false;
  }
  return values_.allFinite();
}

bool FeatureTable::operator==(const FeatureTable& other) const {
  if (columns_ != other.columns_ || labels_ != other.labels_ || text_ != other.text_ ||
      row_ids_ != other.row_ids_) {
    return false;
  }
  if (values_.rows() != other.values_.rows() || values_.cols() != other.values_.cols()) return false;
  // Bitwise so that NaN cells compare equal to themselves.
  return std::equal(values_.data(), values_.data() + values_.size(), other.values_.data(),
                    [](double x, double y) {
                      return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
                    });
}

void write_csv(const FeatureTable& t, std::ostream& out, std::string_view label_column) {
  const auto names = t.column_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (j) out << ',';
    out << csv::escape(names[j]);
  }
  if (t.has_labels()) out << (names.empty() ? "" : ",") << csv::escape(label_column);
  out << "\r\n";
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      if (j) out << ',';
      if (t.has_text(j)) {
        out << csv::escape(t.text(j)[i]);
      } else {
        const double v = t.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (!std::isnan(v)) out << csv::format_double(v);
      }
    }
    if (t.has_labels()) out << (t.cols() ? "," : "") << label_name(t.labels()[i]);
    out << "\r\n";
  }
}

void write_csv(const FeatureTable& t, const std::filesystem::path& path,
               std::string_view label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_csv(t, out, label_column);
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

FeatureTable read_numeric_csv(const std::filesystem::path& path, std::string_view label_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::string record;
  std::size_t line = 0;
  std::vector<std::string> header;
  if (!csv::read_record(in, record, line) || !csv::split_record(record, header)) {
    throw IngestError(path.string() + ": missing header row");
  }
  std::optional<std::size_t> label_idx;
  std::vector<ColumnMeta> cols;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == label_column) {
      label_idx = j;
    } else {
      cols.push_back(ColumnMeta{.name = header[j]});
    }
  }
  std::vector<double> cells;
  std::vector<ClassLabel> labels;
  std::vector<std::string> fields;
  std::size_t n = 0;
  while (csv::read_record(in, record, line)) {
    if (record.empty() || record == "\r") continue;
    if (!csv::split_record(record, fields) || fields.size() != header.size()) {
      throw IngestError(path.string() + ":" + std::to_string(line) + ": malformed record");
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (label_idx && j == *label_idx) {
        auto l = parse_label(fields[j]);
        if (!l) {
          throw IngestError(path.string() + ":" + std::to_string(line) + ": unknown label '" +
                            fields[j] + "'");
        }
        labels.push_back(*l);
        continue;
      }
      double v = 0;
      if (fields[j].empty() || fields[j] == "nan") {
        v = std::numeric_limits<double>::quiet_NaN();
      } else if (!parse_double(fields[j], v)) {
        throw IngestError(path.string() + ":" + std::to_string(line) + ": non-numeric value '" +
                          fields[j] + "' in column " + header[j]);
      }
      cells.push_back(v);
    }
    ++n;
  }
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  std::copy(cells.begin(), cells.end(), values.data());
  std::optional<std::vector<ClassLabel>> lab;
  if (label_idx) lab = std::move(labels);
  return {std::move(cols), std::move(values), std::move(lab)};
}

}  // namespace wids
