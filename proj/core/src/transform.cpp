#include "wids/transform.hpp"

#include "wids/rng.hpp"

#include <algorithm>
#include <cmath>

namespace wids {
namespace {

std::vector<std::size_t> match_columns(const std::vector<std::string>& expected, const FeatureTable& t,
                                       std::string_view what) {
  if (t.cols() != expected.size()) {
    throw TransformError(std::string(what) + ": expected " + std::to_string(expected.size()) +
                         " columns, got " + std::to_string(t.cols()));
  }
  std::vector<std::size_t> idx;
  idx.reserve(expected.size());
  for (const auto& name : expected) {
    auto j = t.find_column(name);
    if (!j) throw TransformError(std::string(what) + ": column '" + name + "' missing");
    if (t.has_text(*j)) throw TransformError(std::string(what) + ": column '" + name + "' is not numeric");
    idx.push_back(*j);
  }
  return idx;
}

Matrix reorder(const FeatureTable& t, const std::vector<std::size_t>& idx) {
  bool identity = true;
  for (std::size_t k = 0; k < idx.size(); ++k) identity = identity && idx[k] == k;
  if (identity) return t.values();
  Matrix out(t.values().rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = t.values().col(static_cast<Eigen::Index>(idx[k]));
  }
  return out;
}

}  // namespace

ScalerParams fit_standardizer(const FeatureTable& t) {
  if (t.rows() == 0) throw TransformError("cannot fit a scaler on an empty table");
  ScalerParams p;
  p.columns = t.column_names();
  const auto n = static_cast<double>(t.rows());
  for (std::size_t j = 0; j < t.cols(); ++j) {
    if (t.has_text(j)) throw TransformError("column '" + t.column(j).name + "' is not numeric");
    const auto col = t.values().col(static_cast<Eigen::Index>(j));
    const double mean = col.sum() / n;
    const double var = (col.array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    const bool constant = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    p.mean.push_back(mean);
    p.scale.push_back(constant ? 1.0 : sd);
    p.constant.push_back(constant);
  }
  return p;
}

Matrix standardize(const ScalerParams& p, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != p.mean.size()) {
    throw TransformError("standardize: dimension mismatch");
  }
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    if (p.constant[k]) {
      out.col(j).setZero();
    } else {
      out.col(j) = (x.col(j).array() - p.mean[k]) / p.scale[k];
    }
  }
  return out;
}

FeatureTable apply_standardizer(const ScalerParams& p, const FeatureTable& t) {
  const auto idx = match_columns(p.columns, t, "standardizer");
  Matrix z = standardize(p, reorder(t, idx));
  return t.select_columns(idx).with_values(std::move(z));
}

FeatureTable inject_noise(const FeatureTable& t, const NoiseSpec& spec) {
  if (!(spec.sigma >= 0.0)) throw TransformError("noise sigma must be >= 0");
  if (spec.sigma == 0.0) return t;
  Matrix v = t.values();
  const auto& ids = t.row_ids();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const auto id = ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      v(i, j) += spec.sigma * hashed_normal(spec.seed, id, static_cast<std::uint64_t>(j));
    }
  }
  return t.with_values(std::move(v));
}

Vector PcaModel::explained_ratio() const {
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) return Vector::Zero(eigenvalues.size());
  return eigenvalues / total;
}

std::size_t components_for_threshold(const Vector& eigenvalues_desc, double threshold) {
  const double total = eigenvalues_desc.sum();
  const auto d = static_cast<std::size_t>(eigenvalues_desc.size());
  if (d == 0) return 0;
  if (!(total > 0.0)) return 1;
  const double target = threshold * total - 1e-12 * total;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    cumulative += eigenvalues_desc(static_cast<Eigen::Index>(k));
    if (cumulative >= target) return k + 1;
  }
  return d;
}

PcaModel fit_pca(const FeatureTable& t, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw PcaError("PCA threshold must be in (0, 1]");
  if (t.rows() < 2) throw PcaError("PCA needs at least 2 rows");
  if (t.cols() == 0) throw PcaError("PCA needs at least 1 column");
  for (std::size_t j = 0; j < t.cols(); ++j) {
    if (t.has_text(j)) throw PcaError("column '" + t.column(j).name + "' is not numeric");
  }
  const Matrix& x = t.values();
  PcaModel m;
  m.input_columns = t.column_names();
  m.threshold = threshold;
  m.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - m.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw PcaError("eigendecomposition failed");

  const auto d = cov.rows();
  m.eigenvalues.resize(d);
  m.components.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index src = d - 1 - i;  // solver sorts ascending
    m.eigenvalues(i) = std::max(0.0, solver.eigenvalues()(src));
    Eigen::VectorXd v = solver.eigenvectors().col(src);
    // Largest-magnitude entry positive; ties go to the first index.
    Eigen::Index arg = 0;
    for (Eigen::Index k = 1; k < d; ++k) {
      if (std::abs(v(k)) > std::abs(v(arg))) arg = k;
    }
    if (v(arg) < 0.0) v = -v;
    m.components.row(i) = v.transpose();
  }
  m.retained = components_for_threshold(m.eigenvalues, threshold);
  return m;
}

Matrix project(const PcaModel& m, const Matrix& x) {
  if (x.cols() != m.mean.size()) throw TransformError("PCA projection: dimension mismatch");
  return (x.rowwise() - m.mean.transpose()) * m.basis().transpose();
}

FeatureTable project(const PcaModel& m, const FeatureTable& t) {
  const auto idx = match_columns(m.input_columns, t, "PCA projection");
  Matrix z = project(m, reorder(t, idx));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < m.retained; ++k) names.push_back("pc" + std::to_string(k + 1));
  return t.with_matrix(std::move(z), std::move(names));
}

double reconstruction_error(const PcaModel& m, const Matrix& x, std::size_t k) {
  const Matrix centered = x.rowwise() - m.mean.transpose();
  const Matrix w = m.components.topRows(static_cast<Eigen::Index>(k));
  return (centered - (centered * w.transpose()) * w).norm();
}

std::vector<ScreeRow> scree(const PcaModel& m) {
  std::vector<ScreeRow> rows;
  const Vector ratio = m.explained_ratio();
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < m.eigenvalues.size(); ++i) {
    cumulative += ratio(i);
    rows.push_back({static_cast<std::size_t>(i) + 1, m.eigenvalues(i), cumulative});
  }
  return rows;
}

std::vector<SweepRow> pca_threshold_sweep(const FeatureTable& train, const FeatureTable& test,
                                          const std::vector<double>& thresholds,
                                          const ProjectedEvaluator& evaluate) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw TransformError("sweep thresholds must be sorted ascending");
  }
  std::vector<SweepRow> rows;
  if (thresholds.empty()) return rows;
  PcaModel base = fit_pca(train, thresholds.front());
  for (double thr : thresholds) {
    if (!(thr > 0.0 && thr <= 1.0)) throw PcaError("PCA threshold must be in (0, 1]");
    PcaModel m = base;
    m.threshold = thr;
    m.retained = components_for_threshold(m.eigenvalues, thr);
    const double acc = evaluate(project(m, train), project(m, test));
    rows.push_back({thr, m.retained, acc});
  }
  return rows;
}

}  // namespace wids
