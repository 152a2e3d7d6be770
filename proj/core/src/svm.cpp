#include "wids/models.hpp"

#include "image_reader.hpp"

#include <numeric>

namespace wids {

Matrix LinearModel::decision_function(const Matrix& x) const {
  Matrix s = x * w_.transpose();
  s.rowwise() += b_.transpose();
  return s;
}

void LinearModel::predict_proba(const Matrix& x, Matrix& out) const {
  out = decision_function(x);
  softmax_rows(out);
}

std::vector<double> LinearModel::pack() const {
  std::vector<double> out{static_cast<double>(w_.cols())};
  out.insert(out.end(), w_.data(), w_.data() + w_.size());
  out.insert(out.end(), b_.data(), b_.data() + b_.size());
  return out;
}

std::unique_ptr<LinearModel> LinearModel::unpack(LearnerKind kind, std::span<const double> image) {
  detail::ImageReader r(image);
  const auto d = r.next_size(1 << 20);
  auto w = r.take(kNumClasses * d);
  auto b = r.take(kNumClasses);
  r.finish();
  constexpr auto k = static_cast<Eigen::Index>(kNumClasses);
  return std::make_unique<LinearModel>(
      kind, Matrix(Eigen::Map<const Matrix>(w.data(), k, static_cast<Eigen::Index>(d))),
      Vector(Eigen::Map<const Vector>(b.data(), k)));
}

LinearModel LinearModel::fit_svm(const Matrix& x, std::span<const std::uint8_t> y,
                                 const SvmOptions& opt) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = x.cols();
  Matrix w = Matrix::Zero(static_cast<Eigen::Index>(kNumClasses), d);
  Vector b = Vector::Zero(static_cast<Eigen::Index>(kNumClasses));
  std::vector<std::size_t> order(n);

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    // Bias rides along as a constant-1 feature, so it is regularized too.
    Vector v = Vector::Zero(d + 1);
    Vector avg = Vector::Zero(d + 1);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(opt.seed, {c, epoch}));
      rng.shuffle(std::span<std::size_t>(order));
      const bool last = epoch + 1 == opt.epochs;
      for (auto i : order) {
        ++t;
        const double eta = 1.0 / (opt.lambda * static_cast<double>(t));
        const double target = y[i] == c ? 1.0 : -1.0;
        const auto ii = static_cast<Eigen::Index>(i);
        const double margin = target * (x.row(ii).dot(v.head(d)) + v[d]);
        v *= 1.0 - eta * opt.lambda;
        if (margin < 1.0) {
          v.head(d) += eta * target * x.row(ii).transpose();
          v[d] += eta * target;
        }
        if (last) avg += v;
      }
    }
    if (n > 0) avg /= static_cast<double>(n);
    w.row(static_cast<Eigen::Index>(c)) = avg.head(d).transpose();
    b[static_cast<Eigen::Index>(c)] = avg[d];
  }
  return {LearnerKind::linear_svm, std::move(w), std::move(b)};
}

}  // namespace wids
