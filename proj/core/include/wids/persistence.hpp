#pragma once

#include "wids/preprocess.hpp"
#include "wids/stacking.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wids {

/// IEEE 802.3 CRC-32 (the zlib polynomial).
std::uint32_t crc32(std::span<const std::byte> bytes) noexcept;

/// Generic container layout, all integers little-endian:
///
///   magic[4] | version u32 | manifest_len u64 | manifest JSON
///   | section_count u32 | {offset u64, count u64} * section_count
///   | sections (f64 arrays) | crc32 u32 over every preceding byte
///
/// The manifest lists the sections by name in the same order as the table.
struct Container {
  std::array<char, 4> magic{};
  std::uint32_t version = 0;
  nlohmann::json manifest;
  std::vector<std::pair<std::string, std::vector<double>>> sections;

  const std::vector<double>& section(std::string_view name) const;
};

inline constexpr std::uint32_t make_version(std::uint16_t major, std::uint16_t minor) {
  return (static_cast<std::uint32_t>(major) << 16) | minor;
}
inline constexpr std::uint16_t version_major(std::uint32_t v) { return static_cast<std::uint16_t>(v >> 16); }

inline constexpr std::array<char, 4> kBundleMagic = {'W', 'I', 'D', 'S'};
inline constexpr std::array<char, 4> kTableMagic = {'W', 'T', 'B', 'L'};
inline constexpr std::uint32_t kBundleVersion = make_version(1, 0);
inline constexpr std::uint32_t kTableVersion = make_version(1, 0);

std::vector<std::byte> encode_container(const Container& c);
/// Verifies magic, checksum, major version and the section table.
Container decode_container(std::span<const std::byte> bytes, std::array<char, 4> magic,
                           std::uint32_t supported_version);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
std::vector<std::byte> read_file(const std::filesystem::path& path);

struct ModelBundle {
  StackedModel model;
  std::optional<Preprocessor> preprocessor;
  nlohmann::json run_config;  ///< provenance snapshot (null when absent)
};

std::vector<std::byte> serialize_bundle(const ModelBundle& b);
ModelBundle deserialize_bundle(std::span<const std::byte> bytes);

void save_model(const ModelBundle& b, const std::filesystem::path& path);
void save_model(const StackedModel& m, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

/// Binary FeatureTable cache (text columns kept in the manifest).
std::vector<std::byte> serialize_table(const FeatureTable& t);
FeatureTable deserialize_table(std::span<const std::byte> bytes);
void save_table(const FeatureTable& t, const std::filesystem::path& path);
/// Loads a binary table cache, or a numeric CSV when the extension is ".csv".
FeatureTable load_table(const std::filesystem::path& path, std::string_view label_column = "Label");

}  // namespace wids
