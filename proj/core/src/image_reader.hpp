#pragma once

// Bounds-checked cursor over a packed parameter image.

#include "wids/common.hpp"

#include <cmath>
#include <span>

namespace wids::detail {

class ImageReader {
 public:
  explicit ImageReader(std::span<const double> image) : image_(image) {}

  double next() {
    if (pos_ >= image_.size()) throw CorruptBundle("model image truncated");
    return image_[pos_++];
  }

  std::size_t next_size(std::size_t max = std::size_t{1} << 31) {
    const double v = next();
    if (!(v >= 0) || v != std::floor(v) || v > static_cast<double>(max)) {
      throw CorruptBundle("model image holds an invalid count");
    }
    return static_cast<std::size_t>(v);
  }

  std::span<const double> take(std::size_t n) {
    if (n > image_.size() - pos_) throw CorruptBundle("model image truncated");
    auto s = image_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t& pos() noexcept { return pos_; }
  std::span<const double> image() const noexcept { return image_; }

  void finish() const {
    if (pos_ != image_.size()) throw CorruptBundle("model image has trailing data");
  }

 private:
  std::span<const double> image_;
  std::size_t pos_ = 0;
};

}  // namespace wids::detail
