#include "oracles.hpp"

#include "wids/dataset.hpp"
#include "wids/learners.hpp"
#include "wids/metrics.hpp"
#include "wids/models.hpp"
#include "wids/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace wids;

namespace {

struct Blobs {
  Matrix x;
  std::vector<ClassLabel> y;
  std::vector<std::uint8_t> yi;
};

Blobs blobs(std::size_t per_class, std::size_t d, double sep, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  b.x.resize(static_cast<Eigen::Index>(3 * per_class), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < 3 * per_class; ++i) {
    const std::size_t c = i % 3;
    for (std::size_t j = 0; j < d; ++j) {
      const double centre = (j == c % d) ? sep : 0.0;
      b.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = centre + rng.normal();
    }
    b.y.push_back(label_from_index(c));
    b.yi.push_back(static_cast<std::uint8_t>(c));
  }
  return b;
}

double accuracy(const Matrix& proba, const std::vector<ClassLabel>& y) {
  const auto p = argmax_labels(proba);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += p[i] == y[i];
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

void check_rows_sum_to_one(const Matrix& p) {
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
}

}  // namespace

TEST_CASE("learner names and defaults") {
  for (auto k : {LearnerKind::knn, LearnerKind::random_forest, LearnerKind::gradient_boosted_trees,
                 LearnerKind::linear_svm, LearnerKind::mlp, LearnerKind::logistic}) {
    CHECK(parse_learner_kind(kind_name(k)) == k);
    CHECK(validate(LearnerSpec{k, {}, 0}).params == default_hyperparameters(k));
  }
  CHECK_THROWS_AS(parse_learner_kind("xgboost"), SpecError);
  CHECK(default_hyperparameters(LearnerKind::knn).at("k") == 5);
  CHECK(default_hyperparameters(LearnerKind::gradient_boosted_trees).at("eta") == 0.1);
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS(validate({LearnerKind::knn, {{"k", 0}}, 0}), SpecError);
  CHECK_THROWS_AS(validate({LearnerKind::knn, {{"k", 2.5}}, 0}), SpecError);
  CHECK_THROWS_AS(validate({LearnerKind::knn, {{"neighbours", 3}}, 0}), SpecError);
  CHECK_THROWS_AS(validate({LearnerKind::gradient_boosted_trees, {{"eta", 0.0}}, 0}), SpecError);
  CHECK_THROWS_AS(validate({LearnerKind::linear_svm, {{"lambda", -1}}, 0}), SpecError);
  CHECK(validate({LearnerKind::random_forest, {{"n_trees", 7}}, 3}).params.at("n_trees") == 7);
}

TEST_CASE("knn on hand-placed points") {
  Matrix x(5, 1);
  x << 0, 1, 2, 10, 11;
  std::vector<std::uint8_t> y{0, 0, 1, 2, 2};
  KnnModel m(x, y, 3);
  Matrix q(2, 1), p;
  q << 0.9, 10.4;
  m.predict_proba(q, p);
  // neighbours of 0.9: {1, 0, 2} -> 2/3 class 0, 1/3 class 1
  CHECK(p(0, 0) == doctest::Approx(2.0 / 3));
  CHECK(p(0, 1) == doctest::Approx(1.0 / 3));
  // neighbours of 10.4: {10, 11, 2}
  CHECK(p(1, 2) == doctest::Approx(2.0 / 3));
  CHECK(p(1, 1) == doctest::Approx(1.0 / 3));
}

TEST_CASE("knn ties go to the lower training index, k clamps to n") {
  Matrix x(2, 1);
  x << -1, 1;
  KnnModel m(x, {2, 1}, 1);
  Matrix q(1, 1), p;
  q << 0.0;
  m.predict_proba(q, p);
  CHECK(p(0, 2) == 1.0);
  KnnModel big(x, {2, 1}, 50);
  big.predict_proba(q, p);
  CHECK(p(0, 1) == 0.5);
  CHECK(p(0, 2) == 0.5);
}

TEST_CASE("knn agrees with the brute-force neighbour oracle") {
  const auto b = blobs(40, 3, 1.0, 2);
  const auto q = blobs(10, 3, 1.0, 3);
  const std::size_t k = 7;
  KnnModel m(b.x, b.yi, k);
  Matrix p;
  m.predict_proba(q.x, p);
  oracle::Dense train(static_cast<std::size_t>(b.x.rows()), std::vector<double>(3));
  for (Eigen::Index i = 0; i < b.x.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j) train[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = b.x(i, j);
  for (Eigen::Index i = 0; i < q.x.rows(); ++i) {
    std::vector<double> row{q.x(i, 0), q.x(i, 1), q.x(i, 2)};
    std::array<double, 3> votes{};
    for (auto n : oracle::nearest(train, row, k)) votes[b.yi[n]] += 1.0 / k;
    for (Eigen::Index c = 0; c < 3; ++c) CHECK(p(i, c) == doctest::Approx(votes[static_cast<std::size_t>(c)]));
  }
}

TEST_CASE("one-tree forest without bootstrap equals a single decision tree") {
  const auto b = blobs(60, 4, 1.5, 5);
  tree::GrowParams g;
  g.max_depth = 5;
  ForestModel::Options opt;
  opt.n_trees = 1;
  opt.bootstrap = false;
  opt.grow = g;
  opt.seed = 77;
  const auto forest = ForestModel::fit(b.x, b.yi, opt);
  const auto single = DecisionTreeModel::fit(b.x, b.yi, g, 77);
  CHECK(forest.trees()[0] == single.tree());
  Matrix pf, ps;
  forest.predict_proba(b.x, pf);
  single.predict_proba(b.x, ps);
  CHECK(pf == ps);
}

TEST_CASE("a deep tree memorizes distinct points") {
  const auto b = blobs(50, 3, 0.5, 6);
  tree::GrowParams g;
  g.max_depth = 64;
  const auto t = DecisionTreeModel::fit(b.x, b.yi, g, 1);
  Matrix p;
  t.predict_proba(b.x, p);
  CHECK(accuracy(p, b.y) == 1.0);
  check_rows_sum_to_one(p);
}

TEST_CASE("forest importance is normalized and finds the signal") {
  auto b = blobs(100, 4, 3.0, 7);
  b.x.col(3).setConstant(1.0);  // useless
  ForestModel::Options opt;
  opt.n_trees = 15;
  opt.grow.max_depth = 6;
  const auto f = ForestModel::fit(b.x, b.yi, opt);
  double s = 0;
  for (double v : f.importance()) s += v;
  CHECK(s == doctest::Approx(1.0));
  CHECK(f.importance()[3] == 0.0);
}

TEST_CASE("gradient boosting with zero rounds predicts the class frequencies") {
  Matrix x = Matrix::Zero(10, 2);
  std::vector<std::uint8_t> y{0, 0, 0, 0, 0, 1, 1, 1, 2, 2};
  GbtModel::Options opt;
  opt.rounds = 0;
  const auto m = GbtModel::fit(x, y, opt);
  Matrix p;
  m.predict_proba(x.topRows(1), p);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(0, 1) == doctest::Approx(0.3));
  CHECK(p(0, 2) == doctest::Approx(0.2));
  REQUIRE(m.train_loss().size() == 1);
  const double ce = -(0.5 * std::log(0.5) + 0.3 * std::log(0.3) + 0.2 * std::log(0.2));
  CHECK(m.train_loss()[0] == doctest::Approx(ce));
}

TEST_CASE("gradient boosting loss falls and the model fits") {
  const auto b = blobs(80, 4, 2.0, 8);
  GbtModel::Options opt;
  opt.rounds = 30;
  opt.max_depth = 3;
  const auto m = GbtModel::fit(b.x, b.yi, opt);
  REQUIRE(m.train_loss().size() == 31);
  for (std::size_t r = 1; r < m.train_loss().size(); ++r) CHECK(m.train_loss()[r] <= m.train_loss()[r - 1]);
  CHECK(m.trees().size() == 90);
  Matrix p;
  m.predict_proba(b.x, p);
  check_rows_sum_to_one(p);
  CHECK(accuracy(p, b.y) > 0.9);
}

TEST_CASE("one-round stump leaves follow the Newton step") {
  // One feature splitting the classes perfectly; lambda = 0, eta = 1.
  Matrix x(4, 1);
  x << 0, 0, 1, 1;
  std::vector<std::uint8_t> y{0, 0, 1, 1};
  GbtModel::Options opt;
  opt.rounds = 1;
  opt.max_depth = 1;
  opt.eta = 1.0;
  opt.lambda = 0.0;
  opt.min_child_weight = 0.0;
  const auto m = GbtModel::fit(x, y, opt);
  // Prior p = (0.5, 0.5, ~0); for class 0 on the left: g = p - 1 = -0.5,
  // h = 2p(1-p) = 0.5 -> leaf = -G/H = 1.
  const auto left = m.trees()[0].evaluate(std::vector<double>{0.0});
  const auto right = m.trees()[0].evaluate(std::vector<double>{1.0});
  CHECK(left[0] == doctest::Approx(1.0));
  CHECK(right[0] == doctest::Approx(-1.0));
}

TEST_CASE("linear SVM separates separable data") {
  const auto b = blobs(50, 3, 6.0, 9);
  const auto m = LinearModel::fit_svm(b.x, b.yi, {50, 1e-3, 1});
  Matrix p;
  m.predict_proba(b.x, p);
  CHECK(accuracy(p, b.y) == 1.0);
  check_rows_sum_to_one(p);
  // The decision function ranks the true class first on every row.
  const Matrix s = m.decision_function(b.x);
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index arg;
    s.row(i).maxCoeff(&arg);
    CHECK(static_cast<std::uint8_t>(arg) == b.yi[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("logistic regression reaches a stationary point") {
  const auto b = blobs(60, 2, 1.0, 10);
  const double lambda = 1e-2;
  const auto m = LinearModel::fit_logistic(b.x, b.yi, {3000, 0.5, lambda});
  // Gradient of mean CE + (lambda/2)||W||^2 should be near zero.
  Matrix p;
  m.predict_proba(b.x, p);
  Matrix r = p;
  for (Eigen::Index i = 0; i < r.rows(); ++i) r(i, b.yi[static_cast<std::size_t>(i)]) -= 1.0;
  const double n = static_cast<double>(b.x.rows());
  const Matrix gw = r.transpose() * b.x / n + lambda * m.weights();
  const Vector gb = r.colwise().sum().transpose() / n;
  CHECK(gw.cwiseAbs().maxCoeff() < 1e-4);
  CHECK(gb.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("MLP analytic gradient matches central differences") {
  const auto b = blobs(7, 5, 1.0, 11);
  const Matrix x = b.x.topRows(20);
  const std::vector<std::uint8_t> y(b.yi.begin(), b.yi.begin() + 20);
  auto m = MlpModel::initial(5, 8, 3);
  const double alpha = 0.1;
  std::vector<double> grad;
  m.loss_and_gradient(x, y, alpha, &grad);
  auto theta = m.parameters();
  REQUIRE(grad.size() == theta.size());
  REQUIRE(theta.size() == m.parameter_count());
  const double h = 1e-5;
  double worst = 0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto t = theta;
    t[i] = theta[i] + h;
    m.set_parameters(t);
    const double up = m.loss_and_gradient(x, y, alpha, nullptr);
    t[i] = theta[i] - h;
    m.set_parameters(t);
    const double down = m.loss_and_gradient(x, y, alpha, nullptr);
    const double fd = (up - down) / (2 * h);
    const double rel = std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("MLP learns blobs and is reproducible") {
  const auto b = blobs(60, 3, 5.0, 12);
  MlpModel::Options opt;
  opt.hidden = 16;
  opt.epochs = 30;
  opt.batch = 32;
  opt.seed = 4;
  const auto a = MlpModel::fit(b.x, b.yi, opt);
  const auto c = MlpModel::fit(b.x, b.yi, opt);
  CHECK(a.parameters() == c.parameters());
  Matrix p;
  a.predict_proba(b.x, p);
  CHECK(accuracy(p, b.y) > 0.95);
}

TEST_CASE("every learner round-trips through its packed image") {
  const auto b = blobs(30, 3, 2.0, 13);
  const auto t = FeatureTable::from_matrix(b.x, b.y);
  const std::vector<LearnerSpec> specs{
      {LearnerKind::knn, {}, 1},
      {LearnerKind::random_forest, {{"n_trees", 5}}, 1},
      {LearnerKind::gradient_boosted_trees, {{"n_rounds", 5}}, 1},
      {LearnerKind::linear_svm, {{"epochs", 5}}, 1},
      {LearnerKind::mlp, {{"epochs", 3}, {"hidden", 4}}, 1},
      {LearnerKind::logistic, {{"iterations", 10}}, 1}};
  for (const auto& s : specs) {
    const auto l = train(s, t);
    CHECK(l.kind() == s.kind);
    const auto image = l.model().pack();
    const auto back = unpack_model(s.kind, image);
    Matrix p1, p2;
    l.model().predict_proba(b.x, p1);
    back->predict_proba(b.x, p2);
    CHECK(p1 == p2);
    check_rows_sum_to_one(p1);
    CHECK(back->pack() == image);
    auto bad = image;
    bad.pop_back();
    CHECK_THROWS_AS(unpack_model(s.kind, bad), CorruptBundle);
  }
}

TEST_CASE("training and prediction errors") {
  Matrix x = Matrix::Random(6, 2);
  std::vector<ClassLabel> one(6, ClassLabel::normal);
  CHECK_THROWS_AS(train({LearnerKind::knn, {}, 0}, x, one), TrainError);
  std::vector<ClassLabel> two{ClassLabel::normal, ClassLabel::kr00k, ClassLabel::normal,
                              ClassLabel::kr00k, ClassLabel::normal, ClassLabel::kr00k};
  Matrix bad = x;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(train({LearnerKind::knn, {}, 0}, bad, two), TrainError);
  const auto l = train({LearnerKind::knn, {{"k", 1}}, 0}, x, two);
  CHECK_THROWS_AS(l.predict_proba(Matrix::Zero(1, 3)), PredictError);
  CHECK(l.fingerprint().rows == 6);
}

TEST_CASE("fingerprints depend on data, labels and ids") {
  const auto b = blobs(5, 2, 1.0, 14);
  std::vector<std::uint64_t> ids(15);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const auto h = fingerprint_hash(b.x, b.y, ids);
  CHECK(h == fingerprint_hash(b.x, b.y, ids));
  auto ids2 = ids;
  ids2[0] = 99;
  CHECK(h != fingerprint_hash(b.x, b.y, ids2));
  auto y2 = b.y;
  y2[0] = ClassLabel::krack;
  CHECK(h != fingerprint_hash(b.x, y2, ids));
}

TEST_CASE("softmax rows and argmax ties") {
  Matrix s(2, 3);
  s << 1000, 1000, 0, -5, 0, 5;
  softmax_rows(s);
  CHECK(s(0, 0) == doctest::Approx(0.5));
  CHECK(std::isfinite(s(0, 2)));
  const auto a = argmax_labels(s);
  CHECK(a[0] == ClassLabel::normal);
  CHECK(a[1] == ClassLabel::krack);
}
