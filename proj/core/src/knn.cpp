#include "wids/models.hpp"

#include "image_reader.hpp"

#include <algorithm>
#include <utility>

namespace wids {

KnnModel::KnnModel(Matrix x, std::vector<std::uint8_t> y, std::size_t k)
    : x_(std::move(x)), y_(std::move(y)), k_(k) {
  if (k_ == 0) throw SpecError("knn: k must be positive");
  if (static_cast<std::size_t>(x_.rows()) != y_.size()) throw TrainError("knn: label count != rows");
}

void KnnModel::predict_proba(const Matrix& x, Matrix& out) const {
  const auto n = static_cast<std::size_t>(x_.rows());
  const std::size_t k = std::min(k_, n);
  out.setZero(x.rows(), static_cast<Eigen::Index>(kNumClasses));
  std::vector<std::pair<double, std::uint32_t>> dist(n);
  for (Eigen::Index q = 0; q < x.rows(); ++q) {
    const Vector d2 = (x_.rowwise() - x.row(q)).rowwise().squaredNorm();
    for (std::size_t i = 0; i < n; ++i) dist[i] = {d2[static_cast<Eigen::Index>(i)], static_cast<std::uint32_t>(i)};
    // pair ordering breaks distance ties toward the lower training index
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    for (std::size_t j = 0; j < k; ++j) out(q, y_[dist[j].second]) += 1.0;
    out.row(q) /= static_cast<double>(k);
  }
}

std::vector<double> KnnModel::pack() const {
  std::vector<double> out;
  out.reserve(3 + static_cast<std::size_t>(x_.size()) + y_.size());
  out.push_back(static_cast<double>(k_));
  out.push_back(static_cast<double>(x_.rows()));
  out.push_back(static_cast<double>(x_.cols()));
  out.insert(out.end(), x_.data(), x_.data() + x_.size());
  for (auto c : y_) out.push_back(c);
  return out;
}

std::unique_ptr<KnnModel> KnnModel::unpack(std::span<const double> image) {
  detail::ImageReader r(image);
  const auto k = r.next_size();
  const auto n = r.next_size();
  const auto d = r.next_size(1 << 20);
  if (k == 0 || n == 0) throw CorruptBundle("knn image: empty model");
  auto xs = r.take(n * d);
  Matrix x = Eigen::Map<const Matrix>(xs.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::vector<std::uint8_t> y(n);
  for (auto& c : y) {
    const auto v = r.next_size(kNumClasses - 1);
    c = static_cast<std::uint8_t>(v);
  }
  r.finish();
  return std::make_unique<KnnModel>(std::move(x), std::move(y), k);
}

}  // namespace wids
