#include "wids/models.hpp"

#include "image_reader.hpp"

#include <cmath>
#include <numeric>

namespace wids {

namespace {

constexpr auto kOut = static_cast<Eigen::Index>(kNumClasses);

Matrix glorot(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

}  // namespace

MlpModel MlpModel::initial(std::size_t dim, std::size_t hidden, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x6d6c70}));
  const auto h = static_cast<Eigen::Index>(hidden);
  Matrix w1 = glorot(h, static_cast<Eigen::Index>(dim), rng);
  Matrix w2 = glorot(kOut, h, rng);
  return {std::move(w1), Vector::Zero(h), std::move(w2), Vector::Zero(kOut)};
}

std::size_t MlpModel::parameter_count() const noexcept {
  return static_cast<std::size_t>(w1_.size() + b1_.size() + w2_.size() + b2_.size());
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  out.insert(out.end(), w1_.data(), w1_.data() + w1_.size());
  out.insert(out.end(), b1_.data(), b1_.data() + b1_.size());
  out.insert(out.end(), w2_.data(), w2_.data() + w2_.size());
  out.insert(out.end(), b2_.data(), b2_.data() + b2_.size());
  return out;
}

void MlpModel::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw TrainError("mlp: parameter vector has the wrong size");
  const double* p = flat.data();
  std::copy(p, p + w1_.size(), w1_.data());
  p += w1_.size();
  std::copy(p, p + b1_.size(), b1_.data());
  p += b1_.size();
  std::copy(p, p + w2_.size(), w2_.data());
  p += w2_.size();
  std::copy(p, p + b2_.size(), b2_.data());
}

double MlpModel::loss_and_gradient(const Matrix& x, std::span<const std::uint8_t> y, double alpha,
                                   std::vector<double>* gradient) const {
  const auto n = x.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix h = x * w1_.transpose();
  h.rowwise() += b1_.transpose();
  h = h.array().tanh();
  Matrix p = h * w2_.transpose();
  p.rowwise() += b2_.transpose();
  softmax_rows(p);

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    loss -= std::log(std::max(p(i, y[static_cast<std::size_t>(i)]), 1e-300));
  }
  loss = loss * inv_n + 0.5 * alpha * inv_n * (w1_.squaredNorm() + w2_.squaredNorm());
  if (gradient == nullptr) return loss;

  Matrix ds = p;
  for (Eigen::Index i = 0; i < n; ++i) ds(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  ds *= inv_n;
  const Matrix gw2 = ds.transpose() * h + alpha * inv_n * w2_;
  const Vector gb2 = ds.colwise().sum().transpose();
  const Matrix da = ((ds * w2_).array() * (1.0 - h.array().square())).matrix();
  const Matrix gw1 = da.transpose() * x + alpha * inv_n * w1_;
  const Vector gb1 = da.colwise().sum().transpose();

  gradient->clear();
  gradient->reserve(parameter_count());
  gradient->insert(gradient->end(), gw1.data(), gw1.data() + gw1.size());
  gradient->insert(gradient->end(), gb1.data(), gb1.data() + gb1.size());
  gradient->insert(gradient->end(), gw2.data(), gw2.data() + gw2.size());
  gradient->insert(gradient->end(), gb2.data(), gb2.data() + gb2.size());
  return loss;
}

MlpModel MlpModel::fit(const Matrix& x, std::span<const std::uint8_t> y, const Options& opt) {
  MlpModel model = initial(static_cast<std::size_t>(x.cols()), opt.hidden, opt.seed);
  const auto n = static_cast<std::size_t>(x.rows());
  std::vector<double> params = model.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<std::size_t> order(n);
  std::vector<std::uint8_t> batch_y;
  Matrix batch_x;

  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(opt.seed, {epoch + 1}));
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < n; start += opt.batch) {
      const std::size_t m = std::min(opt.batch, n - start);
      batch_x.resize(static_cast<Eigen::Index>(m), x.cols());
      batch_y.resize(m);
      for (std::size_t j = 0; j < m; ++j) {
        batch_x.row(static_cast<Eigen::Index>(j)) = x.row(static_cast<Eigen::Index>(order[start + j]));
        batch_y[j] = y[order[start + j]];
      }
      model.loss_and_gradient(batch_x, batch_y, opt.alpha, &grad);
      for (std::size_t k = 0; k < params.size(); ++k) {
        velocity[k] = opt.momentum * velocity[k] - opt.step * grad[k];
        params[k] += velocity[k];
      }
      model.set_parameters(params);
    }
  }
  return model;
}

void MlpModel::predict_proba(const Matrix& x, Matrix& out) const {
  Matrix h = x * w1_.transpose();
  h.rowwise() += b1_.transpose();
  h = h.array().tanh();
  out = h * w2_.transpose();
  out.rowwise() += b2_.transpose();
  softmax_rows(out);
}

std::vector<double> MlpModel::pack() const {
  std::vector<double> out{static_cast<double>(w1_.cols()), static_cast<double>(w1_.rows())};
  const auto p = parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::unique_ptr<MlpModel> MlpModel::unpack(std::span<const double> image) {
  detail::ImageReader r(image);
  const auto d = static_cast<Eigen::Index>(r.next_size(1 << 20));
  const auto h = static_cast<Eigen::Index>(r.next_size(1 << 20));
  auto model = std::make_unique<MlpModel>(Matrix(h, d), Vector(h), Matrix(kOut, h), Vector(kOut));
  model->set_parameters(r.take(model->parameter_count()));
  r.finish();
  return model;
}

}  // namespace wids
