#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wids {

/// Row-major dense matrix; rows are records, columns are features.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline constexpr std::size_t kNumClasses = 3;

/// Traffic class. Integer values are the on-disk and in-report codes.
enum class ClassLabel : std::uint8_t { normal = 0, kr00k = 1, krack = 2 };

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::normal, ClassLabel::kr00k, ClassLabel::krack};

constexpr std::size_t index_of(ClassLabel c) noexcept { return static_cast<std::size_t>(c); }
ClassLabel label_from_index(std::size_t i);
std::string_view label_name(ClassLabel c) noexcept;
/// Accepts the canonical names, the "Krook" spelling, and the digits 0..2.
std::optional<ClassLabel> parse_label(std::string_view text) noexcept;

std::array<std::size_t, kNumClasses> class_counts(std::span<const ClassLabel> labels) noexcept;

// Error hierarchy. Every failure the library reports derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define WIDS_DEFINE_ERROR(Name) \
  class Name : public Error {   \
   public:                      \
    using Error::Error;         \
  }

WIDS_DEFINE_ERROR(IngestError);
WIDS_DEFINE_ERROR(CleanError);
WIDS_DEFINE_ERROR(SpecError);
WIDS_DEFINE_ERROR(SelectionError);
WIDS_DEFINE_ERROR(SmoteError);
WIDS_DEFINE_ERROR(SplitError);
WIDS_DEFINE_ERROR(FoldError);
WIDS_DEFINE_ERROR(TransformError);
WIDS_DEFINE_ERROR(PcaError);
WIDS_DEFINE_ERROR(TrainError);
WIDS_DEFINE_ERROR(PredictError);
WIDS_DEFINE_ERROR(SearchError);
WIDS_DEFINE_ERROR(MetricError);
WIDS_DEFINE_ERROR(ConfigError);
WIDS_DEFINE_ERROR(CorruptBundle);
WIDS_DEFINE_ERROR(VersionError);

#undef WIDS_DEFINE_ERROR

}  // namespace wids
