#include "wids/dataset.hpp"

#include "wids/csv.hpp"
#include "wids/parallel.hpp"
#include "wids/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>

namespace wids {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_missing_token(std::string_view s) {
  s = trim(s);
  return s.empty() || s == "?" || s == "NA" || s == "N/A" || s == "NaN" || s == "nan" ||
         s == "null" || s == "NULL";
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

struct ParsedFile {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> lines;  ///< physical line of each record
  std::vector<std::size_t> malformed_lines;
  std::size_t attempted = 0;
};

ParsedFile parse_file(const std::filesystem::path& path) {
  ParsedFile f;
  f.path = path;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::string record;
  std::size_t line = 0;
  if (!csv::read_record(in, record, line) || !csv::split_record(record, f.header)) {
    throw IngestError(path.string() + ": missing or malformed header row");
  }
  // A UTF-8 byte order mark would otherwise become part of the first name.
  if (!f.header.empty() && f.header[0].starts_with("\xEF\xBB\xBF")) f.header[0].erase(0, 3);
  for (auto& h : f.header) h = std::string(trim(h));
  std::vector<std::string> fields;
  while (true) {
    const std::size_t start = line + 1;
    if (!csv::read_record(in, record, line)) break;
    if (trim(record).empty()) continue;
    ++f.attempted;
    if (!csv::split_record(record, fields) || fields.size() != f.header.size()) {
      f.malformed_lines.push_back(start);
      continue;
    }
    f.records.push_back(fields);
    f.lines.push_back(start);
  }
  return f;
}

}  // namespace

IngestResult load_csv_dir(const std::filesystem::path& dir, const LabelSource& label) {
  if (!std::filesystem::is_directory(dir)) throw IngestError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv") files.push_back(entry.path());
  }
  if (files.empty()) throw IngestError("no CSV files in " + dir.string());
  return load_csv_files(std::move(files), label);
}

IngestResult load_csv_files(std::vector<std::filesystem::path> files, const LabelSource& label) {
  if (files.empty()) throw IngestError("no input files");
  std::sort(files.begin(), files.end());

  std::vector<ParsedFile> parsed(files.size());
  parallel_for(files.size(), [&](std::size_t i) { parsed[i] = parse_file(files[i]); });

  IngestResult result;
  std::size_t attempted = 0;
  std::size_t malformed = 0;
  for (const auto& f : parsed) {
    attempted += f.attempted;
    malformed += f.malformed_lines.size();
    for (auto l : f.malformed_lines) {
      result.provenance.push_back("SKIP " + f.path.string() + " " + std::to_string(l) + " malformed-record");
    }
  }
  if (attempted > 0 && static_cast<double>(malformed) > kMalformedRowTolerance * static_cast<double>(attempted)) {
    std::string where;
    for (const auto& f : parsed) {
      if (!f.malformed_lines.empty()) {
        where = f.path.string() + ":" + std::to_string(f.malformed_lines.front());
        break;
      }
    }
    throw IngestError(std::to_string(malformed) + " of " + std::to_string(attempted) +
                      " records malformed (first at " + where + ")");
  }

  const auto* from_column = std::get_if<LabelFromColumn>(&label);

  // Column-name intersection, ordered as in the first (sorted) file.
  std::vector<std::string> shared;
  for (const auto& name : parsed.front().header) {
    if (from_column && name == from_column->column) continue;
    const bool everywhere = std::all_of(parsed.begin(), parsed.end(), [&](const ParsedFile& f) {
      return std::find(f.header.begin(), f.header.end(), name) != f.header.end();
    });
    if (everywhere && std::find(shared.begin(), shared.end(), name) == shared.end()) {
      shared.push_back(name);
    }
  }
  for (const auto& f : parsed) {
    for (const auto& name : f.header) {
      if (from_column && name == from_column->column) continue;
      if (std::find(shared.begin(), shared.end(), name) == shared.end()) {
        result.provenance.push_back("DROP " + f.path.string() + " " + name + " not-shared");
      }
    }
    if (from_column &&
        std::find(f.header.begin(), f.header.end(), from_column->column) == f.header.end()) {
      throw IngestError(f.path.string() + ": label column '" + from_column->column + "' missing");
    }
  }
  if (shared.empty()) throw IngestError("input files share no columns");

  // Gather cells row by row in file order.
  const std::size_t d = shared.size();
  std::vector<std::vector<std::string>> cells(d);
  std::vector<ClassLabel> labels;
  for (const auto& f : parsed) {
    std::vector<std::size_t> idx(d);
    for (std::size_t j = 0; j < d; ++j) {
      idx[j] = static_cast<std::size_t>(std::find(f.header.begin(), f.header.end(), shared[j]) -
                                        f.header.begin());
    }
    std::size_t label_idx = 0;
    if (from_column) {
      label_idx = static_cast<std::size_t>(
          std::find(f.header.begin(), f.header.end(), from_column->column) - f.header.begin());
    }
    for (std::size_t r = 0; r < f.records.size(); ++r) {
      const auto& rec = f.records[r];
      ClassLabel l = ClassLabel::normal;
      if (from_column) {
        auto parsed_label = parse_label(rec[label_idx]);
        if (!parsed_label) {
          result.provenance.push_back("SKIP " + f.path.string() + " " + std::to_string(f.lines[r]) +
                                      " unknown-label");
          continue;
        }
        l = *parsed_label;
      } else {
        l = std::get<ClassLabel>(label);
      }
      labels.push_back(l);
      for (std::size_t j = 0; j < d; ++j) cells[j].push_back(rec[idx[j]]);
    }
  }

  const std::size_t n = labels.size();
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<ColumnMeta> meta(d);
  std::vector<std::vector<std::string>> text(d);
  for (std::size_t j = 0; j < d; ++j) {
    meta[j].name = shared[j];
    std::size_t missing = 0;
    bool numeric = true;
    for (const auto& cell : cells[j]) {
      if (is_missing_token(cell)) {
        ++missing;
      } else if (numeric && !parse_number(cell)) {
        numeric = false;
      }
    }
    meta[j].missing_fraction = n ? static_cast<double>(missing) / static_cast<double>(n) : 0.0;
    const auto col = static_cast<Eigen::Index>(j);
    if (numeric) {
      meta[j].kind = ColumnKind::numeric;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& cell = cells[j][i];
        values(static_cast<Eigen::Index>(i), col) = is_missing_token(cell) ? kNaN : *parse_number(cell);
      }
    } else {
      meta[j].kind = ColumnKind::categorical;
      text[j].reserve(n);
      for (const auto& cell : cells[j]) {
        text[j].push_back(is_missing_token(cell) ? std::string() : std::string(trim(cell)));
      }
      values.col(col).setConstant(kNaN);
    }
  }
  result.table = FeatureTable(std::move(meta), std::move(values), std::move(labels), std::move(text));
  return result;
}

FeatureTable clean_missing(const FeatureTable& t, double drop_threshold) {
  if (!(drop_threshold > 0.0 && drop_threshold <= 1.0)) {
    throw CleanError("drop_threshold must be in (0, 1]");
  }
  const std::size_t n = t.rows();
  std::vector<std::size_t> keep;
  std::vector<double> fractions(t.cols(), 0.0);
  for (std::size_t j = 0; j < t.cols(); ++j) {
    std::size_t missing = 0;
    if (t.has_text(j)) {
      for (const auto& s : t.text(j)) missing += s.empty();
    } else {
      missing = static_cast<std::size_t>(t.values().col(static_cast<Eigen::Index>(j)).array().isNaN().count());
    }
    fractions[j] = n ? static_cast<double>(missing) / static_cast<double>(n) : 0.0;
    if (fractions[j] <= drop_threshold) keep.push_back(j);
  }
  if (keep.empty()) throw CleanError("every column exceeds the missing-value threshold");

  std::vector<ColumnMeta> meta;
  std::vector<std::vector<std::string>> text;
  Matrix values(t.values().rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t j = keep[k];
    ColumnMeta m = t.column(j);
    // Keep the ingest-time fraction once gaps have been imputed, so a second
    // pass is a no-op.
    if (fractions[j] > 0.0) m.missing_fraction = fractions[j];
    meta.push_back(std::move(m));
    text.push_back(t.has_text(j) ? t.text(j) : std::vector<std::string>{});
    auto col = t.values().col(static_cast<Eigen::Index>(j));
    if (t.has_text(j)) {
      values.col(static_cast<Eigen::Index>(k)) = col;
    } else {
      values.col(static_cast<Eigen::Index>(k)) = col.unaryExpr(
          [](double v) { return std::isnan(v) ? kMissingNumericSentinel : v; });
    }
  }
  return {std::move(meta), std::move(values), t.maybe_labels(), std::move(text), t.row_ids()};
}

namespace {

bool read_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

bool valid_zone(std::string_view z) {
  if (z.empty() || z == "Z") return true;
  if (z.front() != '+' && z.front() != '-') return false;
  z.remove_prefix(1);
  int hh = 0;
  int mm = 0;
  if (z.size() == 2) return read_fixed(z, 0, 2, hh) && hh <= 23;
  if (z.size() == 4) return read_fixed(z, 0, 2, hh) && read_fixed(z, 2, 2, mm) && hh <= 23 && mm <= 59;
  if (z.size() == 5 && z[2] == ':') {
    return read_fixed(z, 0, 2, hh) && read_fixed(z, 3, 2, mm) && hh <= 23 && mm <= 59;
  }
  return false;
}

std::optional<TimeOfDay> parse_clock(std::string_view s, bool allow_zone) {
  TimeOfDay t;
  if (s.size() < 8 || s[2] != ':' || s[5] != ':') return std::nullopt;
  if (!read_fixed(s, 0, 2, t.hour) || !read_fixed(s, 3, 2, t.minute) || !read_fixed(s, 6, 2, t.second)) {
    return std::nullopt;
  }
  if (t.hour > 23 || t.minute > 59 || t.second > 59) return std::nullopt;
  std::size_t pos = 8;
  if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
    ++pos;
    const std::size_t digits_start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == digits_start) return std::nullopt;
  }
  const auto rest = s.substr(pos);
  if (rest.empty()) return t;
  if (allow_zone && valid_zone(rest)) return t;
  return std::nullopt;
}

bool valid_date(std::string_view s) {
  int y = 0;
  int m = 0;
  int d = 0;
  return s.size() == 10 && s[4] == '-' && s[7] == '-' && read_fixed(s, 0, 4, y) &&
         read_fixed(s, 5, 2, m) && read_fixed(s, 8, 2, d) && m >= 1 && m <= 12 && d >= 1 && d <= 31;
}

TimeOfDay from_epoch(double seconds) {
  const auto whole = static_cast<long long>(std::floor(seconds));
  long long sod = whole % 86400;
  if (sod < 0) sod += 86400;
  return {static_cast<int>(sod / 3600), static_cast<int>((sod / 60) % 60), static_cast<int>(sod % 60)};
}

}  // namespace

std::optional<TimeOfDay> parse_time_of_day(std::string_view text) noexcept {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.find(':') == std::string_view::npos) {
    auto v = parse_number(text);
    if (!v || std::abs(*v) > 1e15) return std::nullopt;
    return from_epoch(*v);
  }
  if (text.size() >= 19 && (text[10] == 'T' || text[10] == ' ')) {
    if (!valid_date(text.substr(0, 10))) return std::nullopt;
    return parse_clock(text.substr(11), /*allow_zone=*/true);
  }
  return parse_clock(text, /*allow_zone=*/false);
}

FeatureTable decompose_timestamps(const FeatureTable& t, std::string_view col) {
  const auto found = t.find_column(col);
  if (!found) throw CleanError("timestamp column '" + std::string(col) + "' not found");
  const std::size_t j = *found;
  const std::size_t n = t.rows();
  Matrix parts(static_cast<Eigen::Index>(n), 3);
  std::size_t present = 0;
  std::size_t failed = 0;
  std::optional<std::size_t> first_bad;
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<TimeOfDay> tod;
    bool missing = false;
    if (t.has_text(j)) {
      const auto& s = t.text(j)[i];
      missing = s.empty();
      if (!missing) tod = parse_time_of_day(s);
    } else {
      const double v = t.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      missing = std::isnan(v);
      if (!missing && std::isfinite(v)) tod = from_epoch(v);
    }
    const auto r = static_cast<Eigen::Index>(i);
    if (missing) {
      parts.row(r).setConstant(kMissingNumericSentinel);
      continue;
    }
    ++present;
    if (!tod) {
      ++failed;
      if (!first_bad) first_bad = i;
      parts.row(r).setConstant(kMissingNumericSentinel);
      continue;
    }
    parts(r, 0) = tod->hour;
    parts(r, 1) = tod->minute;
    parts(r, 2) = tod->second;
  }
  if (present > 0 && static_cast<double>(failed) > kMalformedRowTolerance * static_cast<double>(present)) {
    throw CleanError(std::to_string(failed) + " of " + std::to_string(present) +
                     " timestamps in '" + std::string(col) + "' unparseable (first at row " +
                     std::to_string(*first_bad) + ")");
  }

  std::vector<ColumnMeta> meta;
  std::vector<std::vector<std::string>> text;
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t.cols() + 2));
  Eigen::Index out = 0;
  for (std::size_t k = 0; k < t.cols(); ++k) {
    if (k == j) {
      static constexpr std::array<const char*, 3> suffix = {".hour", ".minute", ".second"};
      for (Eigen::Index p = 0; p < 3; ++p) {
        meta.push_back(ColumnMeta{.name = std::string(col) + suffix[static_cast<std::size_t>(p)],
                                  .kind = ColumnKind::numeric,
                                  .missing_fraction = t.column(j).missing_fraction});
        text.emplace_back();
        values.col(out++) = parts.col(p);
      }
      continue;
    }
    meta.push_back(t.column(k));
    text.push_back(t.has_text(k) ? t.text(k) : std::vector<std::string>{});
    values.col(out++) = t.values().col(static_cast<Eigen::Index>(k));
  }
  return {std::move(meta), std::move(values), t.maybe_labels(), std::move(text), t.row_ids()};
}

FeatureTable encode_categoricals(const FeatureTable& t, std::size_t onehot_max) {
  const std::size_t n = t.rows();
  std::vector<ColumnMeta> meta;
  std::vector<Vector> columns;
  for (std::size_t j = 0; j < t.cols(); ++j) {
    const auto& src = t.column(j);
    if (!t.has_text(j) || src.kind == ColumnKind::timestamp) {
      meta.push_back(src);
      columns.emplace_back(t.values().col(static_cast<Eigen::Index>(j)));
      continue;
    }
    std::vector<std::string> categories;
    std::unordered_map<std::string, std::size_t> code;
    for (const auto& s : t.text(j)) {
      if (s.empty()) continue;
      if (code.emplace(s, categories.size()).second) categories.push_back(s);
    }
    if (categories.size() <= onehot_max) {
      for (std::size_t c = 0; c < categories.size(); ++c) {
        Vector ind(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) ind(static_cast<Eigen::Index>(i)) = t.text(j)[i] == categories[c] ? 1.0 : 0.0;
        meta.push_back(ColumnMeta{.name = src.name + "=" + categories[c],
                                  .kind = ColumnKind::numeric,
                                  .missing_fraction = src.missing_fraction,
                                  .one_hot = OneHotSource{src.name, categories[c]}});
        columns.push_back(std::move(ind));
      }
    } else {
      Vector codes(static_cast<Eigen::Index>(n));
      const auto reserved = static_cast<double>(categories.size());
      for (std::size_t i = 0; i < n; ++i) {
        const auto& s = t.text(j)[i];
        codes(static_cast<Eigen::Index>(i)) = s.empty() ? reserved : static_cast<double>(code.at(s));
      }
      meta.push_back(ColumnMeta{.name = src.name,
                                .kind = ColumnKind::categorical,
                                .missing_fraction = src.missing_fraction,
                                .encoding_map = categories});
      columns.push_back(std::move(codes));
    }
  }
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) values.col(static_cast<Eigen::Index>(k)) = columns[k];
  return {std::move(meta), std::move(values), t.maybe_labels(), {}, t.row_ids()};
}

FeatureTable apply_encoding(const std::vector<ColumnMeta>& fitted_schema, const FeatureTable& t) {
  const std::size_t n = t.rows();
  Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(fitted_schema.size()));
  for (std::size_t k = 0; k < fitted_schema.size(); ++k) {
    const auto& target = fitted_schema[k];
    auto out = values.col(static_cast<Eigen::Index>(k));
    if (target.one_hot) {
      if (auto src = t.find_column(target.one_hot->column); src && t.has_text(*src)) {
        for (std::size_t i = 0; i < n; ++i) {
          out(static_cast<Eigen::Index>(i)) = t.text(*src)[i] == target.one_hot->value ? 1.0 : 0.0;
        }
        continue;
      }
    } else if (target.encoding_map) {
      if (auto src = t.find_column(target.name); src && t.has_text(*src)) {
        const auto& cats = *target.encoding_map;
        std::unordered_map<std::string_view, std::size_t> code;
        for (std::size_t c = 0; c < cats.size(); ++c) code.emplace(cats[c], c);
        for (std::size_t i = 0; i < n; ++i) {
          auto it = code.find(t.text(*src)[i]);
          out(static_cast<Eigen::Index>(i)) =
              static_cast<double>(it == code.end() ? cats.size() : it->second);
        }
        continue;
      }
    }
    auto src = t.find_column(target.name);
    if (!src || t.has_text(*src)) {
      throw TransformError("input lacks column '" + target.name + "' required by the fitted schema");
    }
    out = t.values().col(static_cast<Eigen::Index>(*src));
  }
  return {fitted_schema, std::move(values), t.maybe_labels(), {}, t.row_ids()};
}

SynthSpec benchmark_synth_spec() {
  SynthSpec s;
  s.n_per_class = 2000;
  s.dim = 20;
  s.separation = 3.5;
  s.within_std = 1.0;
  s.anisotropy = 0.0;
  s.collinear_fraction = 0.3;
  s.label_noise = 0.1;
  return s;
}

FeatureTable synthesize_dataset(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.dim < 2) throw SpecError("synthetic dimension must be >= 2");
  if (spec.n_per_class < 10) throw SpecError("synthetic n_per_class must be >= 10");
  if (!(spec.label_noise >= 0.0 && spec.label_noise <= 1.0)) throw SpecError("label_noise must be in [0, 1]");
  if (!(spec.collinear_fraction >= 0.0)) throw SpecError("collinear_fraction must be >= 0");
  if (!(spec.within_std > 0.0)) throw SpecError("within_std must be > 0");
  if (!(spec.separation >= 0.0) || !(spec.anisotropy >= 0.0)) {
    throw SpecError("separation and anisotropy must be >= 0");
  }

  Rng rng(derive_seed(seed, {0x53594E54}));
  const auto d = static_cast<Eigen::Index>(spec.dim);
  // Class means: separation * g_c / sqrt(d) with g_c ~ N(0, I).
  Matrix means(static_cast<Eigen::Index>(kNumClasses), d);
  for (Eigen::Index c = 0; c < means.rows(); ++c) {
    for (Eigen::Index k = 0; k < d; ++k) means(c, k) = rng.normal();
  }
  means *= spec.separation / std::sqrt(static_cast<double>(d));

  // Within-class covariance R diag(s^2) R^T.
  Vector scales(d);
  for (Eigen::Index k = 0; k < d; ++k) scales(k) = spec.within_std * std::exp(spec.anisotropy * rng.normal());
  Matrix rotation = Matrix::Identity(d, d);
  if (spec.anisotropy > 0.0) {
    Eigen::MatrixXd g(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index k = 0; k < d; ++k) g(r, k) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    rotation = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  }

  const std::size_t n_col = static_cast<std::size_t>(std::llround(spec.collinear_fraction * static_cast<double>(spec.dim)));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> combos;
  for (std::size_t i = 0; i < n_col; ++i) {
    const auto a = static_cast<Eigen::Index>(rng.below(spec.dim));
    auto b = static_cast<Eigen::Index>(rng.below(spec.dim - 1));
    if (b >= a) ++b;
    combos.emplace_back(a, b);
  }

  const std::size_t n = spec.n_per_class * kNumClasses;
  Matrix values(static_cast<Eigen::Index>(n), d + static_cast<Eigen::Index>(n_col));
  std::vector<ClassLabel> labels(n);
  Vector z(d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i / spec.n_per_class;
    for (Eigen::Index k = 0; k < d; ++k) z(k) = scales(k) * rng.normal();
    const auto r = static_cast<Eigen::Index>(i);
    values.row(r).head(d) = means.row(static_cast<Eigen::Index>(c)) + (rotation * z).transpose();
    for (std::size_t k = 0; k < n_col; ++k) {
      values(r, d + static_cast<Eigen::Index>(k)) = values(r, combos[k].first) + values(r, combos[k].second);
    }
    labels[i] = label_from_index(c);
  }
  // Label noise: the selected rows move to a different class chosen uniformly.
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < spec.label_noise) {
      const std::size_t shift = 1 + rng.below(kNumClasses - 1);
      labels[i] = label_from_index((index_of(labels[i]) + shift) % kNumClasses);
    }
  }
  return FeatureTable::from_matrix(std::move(values), std::move(labels));
}

}  // namespace wids
