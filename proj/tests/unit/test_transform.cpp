#include "oracles.hpp"

#include "wids/rng.hpp"
#include "wids/transform.hpp"

#include <doctest.h>

#include <cmath>

using namespace wids;

namespace {

Matrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, d);
  // Mixed column scales keep the spectrum well separated.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal() * static_cast<double>(j + 1);
  return x;
}

oracle::Dense dense(const Matrix& x) {
  oracle::Dense out(static_cast<std::size_t>(x.rows()), std::vector<double>(static_cast<std::size_t>(x.cols())));
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x(i, j);
  return out;
}

}  // namespace

TEST_CASE("PCA agrees with a Jacobi eigendecomposition of the covariance") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix x = random_matrix(20, 6, seed);
    const auto m = fit_pca(FeatureTable::from_matrix(x), 0.9);
    const auto e = oracle::jacobi(oracle::covariance(dense(x)));
    double total = 0;
    for (double v : e.values) total += v;
    for (std::size_t i = 0; i < 6; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      CHECK(m.eigenvalues(ii) == doctest::Approx(e.values[i]).epsilon(1e-10));
      CHECK(m.explained_ratio()(ii) == doctest::Approx(e.values[i] / total).epsilon(1e-10));
      double dot = 0;
      for (std::size_t k = 0; k < 6; ++k) dot += m.components(ii, static_cast<Eigen::Index>(k)) * e.vectors[i][k];
      CHECK(std::abs(std::abs(dot) - 1.0) < 1e-8);
    }
    for (double th : {0.85, 0.90, 0.95}) {
      CHECK(components_for_threshold(m.eigenvalues, th) == oracle::retained(e.values, th));
    }
    // Residual energy of a rank-k reconstruction equals (n-1) * sum of the
    // discarded eigenvalues.
    for (std::size_t k = 0; k <= 6; ++k) {
      double tail = 0;
      for (std::size_t i = k; i < 6; ++i) tail += e.values[i];
      CHECK(reconstruction_error(m, x, k) == doctest::Approx(std::sqrt(19.0 * tail)).epsilon(1e-8));
    }
  }
}

TEST_CASE("retained components on a hand-made spectrum") {
  Vector ev(6);
  ev << 5, 3, 1, 0.5, 0.3, 0.2;
  // cumulative shares: 0.5, 0.8, 0.9, 0.95, 0.98, 1.0
  CHECK(components_for_threshold(ev, 0.5) == 1);
  CHECK(components_for_threshold(ev, 0.85) == 3);
  CHECK(components_for_threshold(ev, 0.90) == 3);
  CHECK(components_for_threshold(ev, 0.95) == 4);
  CHECK(components_for_threshold(ev, 1.0) == 6);
}

TEST_CASE("PCA rejects bad input") {
  CHECK_THROWS_AS(fit_pca(FeatureTable::from_matrix(Matrix::Zero(1, 3))), PcaError);
  CHECK_THROWS_AS(fit_pca(FeatureTable::from_matrix(Matrix::Zero(5, 3)), 0.0), PcaError);
  CHECK_THROWS_AS(fit_pca(FeatureTable::from_matrix(Matrix::Zero(5, 3)), 1.5), PcaError);
}

TEST_CASE("projection keeps the retained axes") {
  const Matrix x = random_matrix(50, 4, 11);
  const auto m = fit_pca(FeatureTable::from_matrix(x), 0.9);
  const auto p = project(m, FeatureTable::from_matrix(x));
  CHECK(p.cols() == m.retained);
  CHECK(p.rows() == 50);
  // Projected columns are centered and uncorrelated.
  const Matrix& z = p.values();
  const Matrix c = (z.transpose() * z) / 49.0;
  for (Eigen::Index i = 0; i < c.rows(); ++i) {
    CHECK(z.col(i).mean() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(c(i, i) == doctest::Approx(m.eigenvalues(i)).epsilon(1e-9));
    for (Eigen::Index j = 0; j < i; ++j) CHECK(std::abs(c(i, j)) < 1e-8);
  }
  CHECK_THROWS_AS(project(m, Matrix::Zero(2, 3)), TransformError);
}

TEST_CASE("scree rows accumulate to one") {
  const auto m = fit_pca(FeatureTable::from_matrix(random_matrix(30, 5, 2)), 0.9);
  const auto rows = scree(m);
  REQUIRE(rows.size() == 5);
  CHECK(rows.front().component == 1);
  CHECK(rows.back().cumulative_ratio == doctest::Approx(1.0));
}

TEST_CASE("threshold sweep is monotone") {
  const Matrix x = random_matrix(60, 8, 5);
  const auto t = FeatureTable::from_matrix(x);
  const auto rows = pca_threshold_sweep(t, t, {0.5, 0.85, 0.9, 0.95},
                                        [](const FeatureTable& a, const FeatureTable&) {
                                          return static_cast<double>(a.cols());
                                        });
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].components >= rows[i - 1].components);
  CHECK(rows[2].accuracy == static_cast<double>(rows[2].components));
}

TEST_CASE("standardizer uses the population deviation and flags constants") {
  Matrix x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto t = FeatureTable::from_matrix(x);
  const auto p = fit_standardizer(t);
  CHECK(p.mean[0] == doctest::Approx(2.5));
  CHECK(p.scale[0] == doctest::Approx(std::sqrt(1.25)));
  CHECK(p.constant[1]);
  CHECK_FALSE(p.constant[0]);
  const auto z = apply_standardizer(p, t);
  CHECK(z.values()(0, 0) == doctest::Approx(-1.5 / std::sqrt(1.25)));
  CHECK(z.values()(2, 1) == 0.0);
}

TEST_CASE("standardizer matches columns by name") {
  Matrix x(3, 2);
  x << 1, 10, 2, 20, 3, 30;
  const auto t = FeatureTable::from_matrix(x);
  const auto p = fit_standardizer(t);
  const std::vector<std::size_t> swap{1, 0};
  const auto swapped = t.select_columns(swap);
  CHECK(apply_standardizer(p, swapped).values() == apply_standardizer(p, t).values());
  const std::vector<std::size_t> one{0};
  CHECK_THROWS_AS(apply_standardizer(p, t.select_columns(one)), TransformError);
}

TEST_CASE("noise depends on row id, not position") {
  const Matrix x = Matrix::Zero(5, 3);
  const auto t = FeatureTable::from_matrix(x);
  const NoiseSpec spec{0.5, 42, NoisePhase::train_only};
  const auto a = inject_noise(t, spec);
  const std::vector<std::size_t> rev{4, 3, 2, 1, 0};
  const auto b = inject_noise(t.select_rows(rev), spec);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(a.values().row(i) == b.values().row(4 - i));
  CHECK(a.values().norm() > 0.0);
  CHECK(inject_noise(t, NoiseSpec{0.0, 42, NoisePhase::train_only}).values() == x);
  CHECK_THROWS_AS(inject_noise(t, NoiseSpec{-1.0, 42, NoisePhase::train_only}), TransformError);
}

TEST_CASE("noise has the requested spread") {
  const auto t = FeatureTable::from_matrix(Matrix::Zero(4000, 5));
  const auto a = inject_noise(t, NoiseSpec{0.05, 9, NoisePhase::train_only});
  const double mean = a.values().mean();
  const double sd = std::sqrt((a.values().array() - mean).square().mean());
  CHECK(std::abs(mean) < 0.003);
  CHECK(sd == doctest::Approx(0.05).epsilon(0.03));
}
