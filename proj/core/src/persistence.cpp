#include "wids/persistence.hpp"

#include "wids/config.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <system_error>

#include <unistd.h>

namespace wids {

using nlohmann::json;

std::uint32_t crc32(std::span<const std::byte> bytes) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  const auto* p = reinterpret_cast<const Bytef*>(bytes.data());
  std::size_t left = bytes.size();
  while (left > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, std::numeric_limits<uInt>::max()));
    crc = ::crc32(crc, p, chunk);
    p += chunk;
    left -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

const std::vector<double>& Container::section(std::string_view name) const {
  for (const auto& [n, data] : sections) {
    if (n == name) return data;
  }
  throw CorruptBundle("missing section '" + std::string(name) + "'");
}

namespace {

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::byte>(v >> (8 * i)));
}

void put_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::byte> bytes, std::size_t pos, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[pos + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::byte> encode_container(const Container& c) {
  json manifest = c.manifest;
  json dir = json::array();
  for (const auto& [name, data] : c.sections) dir.push_back({{"name", name}, {"count", data.size()}});
  manifest["sections"] = dir;
  const std::string text = manifest.dump();

  std::vector<std::byte> out;
  for (char ch : c.magic) out.push_back(static_cast<std::byte>(ch));
  put_u32(out, c.version);
  put_u64(out, text.size());
  for (char ch : text) out.push_back(static_cast<std::byte>(ch));
  put_u32(out, static_cast<std::uint32_t>(c.sections.size()));
  std::uint64_t offset = out.size() + 16 * c.sections.size();
  for (const auto& [name, data] : c.sections) {
    put_u64(out, offset);
    put_u64(out, data.size());
    offset += 8 * data.size();
  }
  out.reserve(offset + 4);
  for (const auto& [name, data] : c.sections) {
    for (double v : data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  put_u32(out, crc32(out));
  return out;
}

Container decode_container(std::span<const std::byte> bytes, std::array<char, 4> magic,
                           std::uint32_t supported_version) {
  if (bytes.size() < 24) throw CorruptBundle("file too short");
  for (std::size_t i = 0; i < 4; ++i) {
    if (static_cast<char>(bytes[i]) != magic[i]) throw CorruptBundle("bad magic bytes");
  }
  const auto body = bytes.first(bytes.size() - 4);
  if (crc32(body) != static_cast<std::uint32_t>(get_le(bytes, bytes.size() - 4, 4))) {
    throw CorruptBundle("checksum mismatch");
  }
  Container c;
  c.magic = magic;
  c.version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version_major(c.version) != version_major(supported_version)) {
    throw VersionError("unsupported format version " + std::to_string(version_major(c.version)) + "." +
                       std::to_string(c.version & 0xFFFF) + " (this build reads major " +
                       std::to_string(version_major(supported_version)) + ")");
  }
  const auto manifest_len = get_le(bytes, 8, 8);
  std::size_t pos = 16;
  if (manifest_len > body.size() - pos) throw CorruptBundle("manifest length out of range");
  const std::string text(reinterpret_cast<const char*>(bytes.data() + pos), manifest_len);
  pos += manifest_len;
  try {
    c.manifest = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptBundle(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (body.size() - pos < 4) throw CorruptBundle("section table truncated");
  const auto count = get_le(bytes, pos, 4);
  pos += 4;
  if (count > (body.size() - pos) / 16) throw CorruptBundle("section table truncated");
  const auto& dir = c.manifest.contains("sections") ? c.manifest["sections"] : json();
  if (!dir.is_array() || dir.size() != count) throw CorruptBundle("manifest section directory mismatch");

  std::uint64_t expected = pos + 16 * count;
  for (std::size_t s = 0; s < count; ++s) {
    const auto offset = get_le(bytes, pos + 16 * s, 8);
    const auto n = get_le(bytes, pos + 16 * s + 8, 8);
    const auto& entry = dir[s];
    if (!entry.is_object() || !entry.contains("name") || !entry["name"].is_string() ||
        !entry.contains("count") || entry["count"] != n) {
      throw CorruptBundle("section directory entry " + std::to_string(s) + " is inconsistent");
    }
    if (offset != expected || n > (body.size() - offset) / 8) throw CorruptBundle("section offsets out of range");
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = std::bit_cast<double>(get_le(bytes, offset + 8 * i, 8));
    c.sections.emplace_back(entry["name"].get<std::string>(), std::move(data));
    expected = offset + 8 * n;
  }
  if (expected != body.size()) throw CorruptBundle("trailing bytes before checksum");
  c.manifest.erase("sections");
  return c;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move bundle into place at " + path.string());
  }
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> out(size);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error("failed reading " + path.string());
  return out;
}

// ---- model bundle ---------------------------------------------------------

namespace {

json column_to_json(const ColumnMeta& m) {
  json j{{"name", m.name}, {"kind", kind_name(m.kind)}, {"missing_fraction", m.missing_fraction}};
  if (m.encoding_map) j["encoding_map"] = *m.encoding_map;
  if (m.one_hot) j["one_hot"] = {{"column", m.one_hot->column}, {"value", m.one_hot->value}};
  return j;
}

ColumnMeta column_from_json(const json& j) {
  ColumnMeta m;
  m.name = j.at("name").get<std::string>();
  const auto kind = parse_kind(j.at("kind").get<std::string>());
  if (!kind) throw CorruptBundle("unknown column kind in manifest");
  m.kind = *kind;
  m.missing_fraction = j.at("missing_fraction").get<double>();
  if (j.contains("encoding_map")) m.encoding_map = j["encoding_map"].get<std::vector<std::string>>();
  if (j.contains("one_hot")) {
    m.one_hot = OneHotSource{j["one_hot"].at("column").get<std::string>(), j["one_hot"].at("value").get<std::string>()};
  }
  return m;
}

std::vector<double> to_doubles(const std::vector<bool>& v) {
  return {v.begin(), v.end()};
}

std::vector<double> flat(const Matrix& m) { return {m.data(), m.data() + m.size()}; }
std::vector<double> flat(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Matrix to_matrix(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
  if (data.size() != rows * cols) throw CorruptBundle("section size does not match its shape");
  return Eigen::Map<const Matrix>(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

std::string noise_phase_name(NoisePhase p) { return p == NoisePhase::train_only ? "train_only" : "train_and_test"; }

}  // namespace

std::vector<std::byte> serialize_bundle(const ModelBundle& b) {
  const StackedModel& m = b.model;
  Container c;
  c.magic = kBundleMagic;
  c.version = kBundleVersion;
  json& j = c.manifest;
  j["format"] = "wids-model";
  j["schema"] = m.schema();

  const auto& tr = m.transforms();
  json transforms;
  transforms["scaler"] = {{"columns", tr.scaler.columns}};
  c.sections.emplace_back("scaler.mean", tr.scaler.mean);
  c.sections.emplace_back("scaler.scale", tr.scaler.scale);
  c.sections.emplace_back("scaler.constant", to_doubles(tr.scaler.constant));
  transforms["noise"] = tr.noise ? json{{"sigma", tr.noise->sigma}, {"seed", tr.noise->seed},
                                        {"phase", noise_phase_name(tr.noise->phase)}}
                                 : json(nullptr);
  if (tr.pca) {
    transforms["pca"] = {{"input_columns", tr.pca->input_columns},
                         {"retained", tr.pca->retained},
                         {"threshold", tr.pca->threshold}};
    c.sections.emplace_back("pca.mean", flat(tr.pca->mean));
    c.sections.emplace_back("pca.components", flat(tr.pca->components));
    c.sections.emplace_back("pca.eigenvalues", flat(tr.pca->eigenvalues));
  } else {
    transforms["pca"] = nullptr;
  }
  j["transforms"] = transforms;

  json learners = json::array();
  for (std::size_t i = 0; i < m.base_learners().size(); ++i) {
    const auto& l = m.base_learners()[i];
    learners.push_back({{"spec", to_json(l.spec())},
                        {"fingerprint", {{"hash", l.fingerprint().hash}, {"rows", l.fingerprint().rows}}}});
    c.sections.emplace_back("learner." + std::to_string(i), l.model().pack());
  }
  j["base_learners"] = learners;

  const auto& meta = m.meta();
  json mj{{"spec", to_json(meta.spec())}, {"blocks", meta.blocks()}};
  if (meta.learner()) {
    mj["learner"] = {{"spec", to_json(meta.learner()->spec())},
                     {"fingerprint", {{"hash", meta.learner()->fingerprint().hash},
                                      {"rows", meta.learner()->fingerprint().rows}}}};
    c.sections.emplace_back("meta", meta.learner()->model().pack());
  } else {
    mj["learner"] = nullptr;
  }
  j["meta"] = mj;
  j["pipeline"] = to_json(m.config());

  if (b.preprocessor) {
    json cols = json::array();
    for (const auto& col : b.preprocessor->schema) cols.push_back(column_to_json(col));
    json clip = json::array();
    std::vector<double> bounds;
    for (const auto& cb : b.preprocessor->clip) {
      clip.push_back(cb.column);
      bounds.push_back(cb.lower);
      bounds.push_back(cb.upper);
    }
    j["preprocessor"] = {{"timestamp_columns", b.preprocessor->timestamp_columns},
                         {"schema", cols},
                         {"clip_columns", clip}};
    c.sections.emplace_back("preprocessor.clip", std::move(bounds));
  } else {
    j["preprocessor"] = nullptr;
  }
  j["run_config"] = b.run_config;
  return encode_container(c);
}

namespace {

TrainedLearner learner_from(const json& entry, std::span<const double> image) {
  const auto spec = learner_spec_from_json(entry.at("spec"));
  std::shared_ptr<const Model> model = unpack_model(spec.kind, image);
  TrainingFingerprint fp;
  fp.hash = entry.at("fingerprint").at("hash").get<std::uint64_t>();
  fp.rows = entry.at("fingerprint").at("rows").get<std::size_t>();
  return {spec, std::move(model), std::move(fp)};
}

}  // namespace

ModelBundle deserialize_bundle(std::span<const std::byte> bytes) {
  const Container c = decode_container(bytes, kBundleMagic, kBundleVersion);
  const json& j = c.manifest;
  try {
    if (j.at("format") != "wids-model") throw CorruptBundle("not a model bundle");
    const auto schema = j.at("schema").get<std::vector<std::string>>();

    TransformStack tr;
    const auto& tj = j.at("transforms");
    tr.scaler.columns = tj.at("scaler").at("columns").get<std::vector<std::string>>();
    tr.scaler.mean = c.section("scaler.mean");
    tr.scaler.scale = c.section("scaler.scale");
    for (double v : c.section("scaler.constant")) tr.scaler.constant.push_back(v != 0.0);
    const auto d = tr.scaler.columns.size();
    if (tr.scaler.mean.size() != d || tr.scaler.scale.size() != d || tr.scaler.constant.size() != d) {
      throw CorruptBundle("scaler sections do not match the column list");
    }
    if (!tj.at("noise").is_null()) {
      const auto& nj = tj["noise"];
      const auto phase = nj.at("phase").get<std::string>();
      tr.noise = NoiseSpec{nj.at("sigma").get<double>(), nj.at("seed").get<std::uint64_t>(),
                           phase == "train_only" ? NoisePhase::train_only : NoisePhase::train_and_test};
    }
    if (!tj.at("pca").is_null()) {
      const auto& pj = tj["pca"];
      PcaModel p;
      p.input_columns = pj.at("input_columns").get<std::vector<std::string>>();
      p.retained = pj.at("retained").get<std::size_t>();
      p.threshold = pj.at("threshold").get<double>();
      const auto pd = p.input_columns.size();
      const auto& mean = c.section("pca.mean");
      const auto& ev = c.section("pca.eigenvalues");
      if (mean.size() != pd || ev.size() != pd || p.retained > pd) throw CorruptBundle("PCA sections inconsistent");
      p.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(pd));
      p.eigenvalues = Eigen::Map<const Vector>(ev.data(), static_cast<Eigen::Index>(pd));
      p.components = to_matrix(c.section("pca.components"), pd, pd);
      tr.pca = std::move(p);
    }

    std::vector<TrainedLearner> base;
    const auto& lj = j.at("base_learners");
    for (std::size_t i = 0; i < lj.size(); ++i) {
      base.push_back(learner_from(lj[i], c.section("learner." + std::to_string(i))));
      if (base.back().input_dim() != tr.output_dim()) throw CorruptBundle("learner input width mismatch");
    }

    const auto& mj = j.at("meta");
    const auto meta_spec = meta_spec_from_json(mj.at("spec"));
    std::optional<TrainedLearner> meta_learner;
    if (!mj.at("learner").is_null()) meta_learner = learner_from(mj["learner"], c.section("meta"));
    const auto blocks = mj.at("blocks").get<std::size_t>();
    if (blocks != base.size()) throw CorruptBundle("meta block count mismatch");
    if (meta_learner && meta_learner->input_dim() != blocks * kNumClasses) {
      throw CorruptBundle("meta-classifier input width mismatch");
    }

    ModelBundle b{StackedModel(schema, std::move(tr), std::move(base),
                               MetaClassifier(meta_spec, std::move(meta_learner), blocks),
                               pipeline_config_from_json(j.at("pipeline"))),
                  std::nullopt, j.at("run_config")};

    if (!j.at("preprocessor").is_null()) {
      const auto& pj = j["preprocessor"];
      Preprocessor p;
      p.timestamp_columns = pj.at("timestamp_columns").get<std::vector<std::string>>();
      for (const auto& col : pj.at("schema")) p.schema.push_back(column_from_json(col));
      const auto names = pj.at("clip_columns").get<std::vector<std::string>>();
      const auto& bounds = c.section("preprocessor.clip");
      if (bounds.size() != 2 * names.size()) throw CorruptBundle("clip bounds inconsistent");
      for (std::size_t i = 0; i < names.size(); ++i) p.clip.push_back({names[i], bounds[2 * i], bounds[2 * i + 1]});
      b.preprocessor = std::move(p);
    }
    return b;
  } catch (const json::exception& e) {
    throw CorruptBundle(std::string("malformed manifest: ") + e.what());
  } catch (const ConfigError& e) {
    throw CorruptBundle(std::string("malformed manifest: ") + e.what());
  }
}

void save_model(const ModelBundle& b, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_bundle(b));
}

void save_model(const StackedModel& m, const std::filesystem::path& path) {
  save_model(ModelBundle{m, std::nullopt, nullptr}, path);
}

ModelBundle load_model(const std::filesystem::path& path) { return deserialize_bundle(read_file(path)); }

// ---- table cache ----------------------------------------------------------

std::vector<std::byte> serialize_table(const FeatureTable& t) {
  Container c;
  c.magic = kTableMagic;
  c.version = kTableVersion;
  json cols = json::array();
  json text = json::object();
  for (std::size_t j = 0; j < t.cols(); ++j) {
    cols.push_back(column_to_json(t.column(j)));
    if (t.has_text(j)) text[std::to_string(j)] = t.text(j);
  }
  c.manifest = {{"format", "wids-table"}, {"rows", t.rows()}, {"columns", cols}, {"text", text},
                {"has_labels", t.has_labels()}};
  c.sections.emplace_back("values", flat(t.values()));
  std::vector<double> labels;
  if (t.has_labels()) {
    for (auto l : t.labels()) labels.push_back(static_cast<double>(index_of(l)));
  }
  c.sections.emplace_back("labels", std::move(labels));
  std::vector<double> ids;
  ids.reserve(t.rows());
  for (auto id : t.row_ids()) ids.push_back(std::bit_cast<double>(id));
  c.sections.emplace_back("row_ids", std::move(ids));
  return encode_container(c);
}

FeatureTable deserialize_table(std::span<const std::byte> bytes) {
  const Container c = decode_container(bytes, kTableMagic, kTableVersion);
  const json& j = c.manifest;
  try {
    if (j.at("format") != "wids-table") throw CorruptBundle("not a table cache");
    const auto n = j.at("rows").get<std::size_t>();
    std::vector<ColumnMeta> cols;
    for (const auto& col : j.at("columns")) cols.push_back(column_from_json(col));
    std::vector<std::vector<std::string>> text(cols.size());
    bool any_text = false;
    for (const auto& [key, cells] : j.at("text").items()) {
      const auto idx = std::stoul(key);
      if (idx >= cols.size()) throw CorruptBundle("text column index out of range");
      text[idx] = cells.get<std::vector<std::string>>();
      if (text[idx].size() != n) throw CorruptBundle("text column length mismatch");
      any_text = true;
    }
    Matrix values = to_matrix(c.section("values"), n, cols.size());
    std::optional<std::vector<ClassLabel>> labels;
    if (j.at("has_labels").get<bool>()) {
      const auto& raw = c.section("labels");
      if (raw.size() != n) throw CorruptBundle("label count mismatch");
      labels.emplace();
      for (double v : raw) {
        if (!(v == 0.0 || v == 1.0 || v == 2.0)) throw CorruptBundle("invalid label code");
        labels->push_back(label_from_index(static_cast<std::size_t>(v)));
      }
    }
    const auto& raw_ids = c.section("row_ids");
    if (raw_ids.size() != n) throw CorruptBundle("row id count mismatch");
    std::vector<std::uint64_t> ids;
    ids.reserve(n);
    for (double v : raw_ids) ids.push_back(std::bit_cast<std::uint64_t>(v));
    if (!any_text) text.clear();
    return {std::move(cols), std::move(values), std::move(labels), std::move(text), std::move(ids)};
  } catch (const json::exception& e) {
    throw CorruptBundle(std::string("malformed table manifest: ") + e.what());
  }
}

void save_table(const FeatureTable& t, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_table(t));
}

FeatureTable load_table(const std::filesystem::path& path, std::string_view label_column) {
  if (path.extension() == ".csv") return read_numeric_csv(path, label_column);
  return deserialize_table(read_file(path));
}

}  // namespace wids
