#include "wids/models.hpp"

namespace wids {

LinearModel LinearModel::fit_logistic(const Matrix& x, std::span<const std::uint8_t> y,
                                      const LogisticOptions& opt) {
  const auto n = x.rows();
  constexpr auto k = static_cast<Eigen::Index>(kNumClasses);
  Matrix onehot = Matrix::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, y[static_cast<std::size_t>(i)]) = 1.0;

  Matrix w = Matrix::Zero(k, x.cols());
  Vector b = Vector::Zero(k);
  for (std::size_t it = 0; it < opt.iterations; ++it) {
    Matrix p = x * w.transpose();
    p.rowwise() += b.transpose();
    softmax_rows(p);
    const Matrix residual = (p - onehot) / static_cast<double>(n);
    w -= opt.step * (residual.transpose() * x + opt.lambda * w);
    b -= opt.step * residual.colwise().sum().transpose();
  }
  return {LearnerKind::logistic, std::move(w), std::move(b)};
}

}  // namespace wids
