#pragma once

// Concrete fitted models behind the TrainedLearner interface.

#include "wids/learners.hpp"
#include "wids/tree.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace wids {

class KnnModel final : public Model {
 public:
  KnnModel(Matrix x, std::vector<std::uint8_t> y, std::size_t k);

  LearnerKind kind() const noexcept override { return LearnerKind::knn; }
  std::size_t input_dim() const noexcept override { return static_cast<std::size_t>(x_.cols()); }
  void predict_proba(const Matrix& x, Matrix& out) const override;
  std::vector<double> pack() const override;
  static std::unique_ptr<KnnModel> unpack(std::span<const double> image);

  std::size_t k() const noexcept { return k_; }

 private:
  Matrix x_;
  std::vector<std::uint8_t> y_;
  std::size_t k_;
};

/// A single Gini tree; the building block of the forest.
class DecisionTreeModel final : public Model {
 public:
  DecisionTreeModel(tree::Tree t, std::size_t dim) : tree_(std::move(t)), dim_(dim) {}
  static DecisionTreeModel fit(const Matrix& x, std::span<const std::uint8_t> y,
                               const tree::GrowParams& params, std::uint64_t seed,
                               std::size_t max_bins = 256);

  LearnerKind kind() const noexcept override { return LearnerKind::random_forest; }
  std::size_t input_dim() const noexcept override { return dim_; }
  void predict_proba(const Matrix& x, Matrix& out) const override;
  std::vector<double> pack() const override;

  const tree::Tree& tree() const noexcept { return tree_; }

 private:
  tree::Tree tree_;
  std::size_t dim_;
};

class ForestModel final : public Model {
 public:
  ForestModel(std::vector<tree::Tree> trees, std::size_t dim, std::vector<double> importance)
      : trees_(std::move(trees)), dim_(dim), importance_(std::move(importance)) {}

  struct Options {
    std::size_t n_trees = 100;
    tree::GrowParams grow;
    bool bootstrap = true;
    std::size_t max_bins = 256;
    std::uint64_t seed = 0;
  };
  static ForestModel fit(const Matrix& x, std::span<const std::uint8_t> y, const Options& opt);

  LearnerKind kind() const noexcept override { return LearnerKind::random_forest; }
  std::size_t input_dim() const noexcept override { return dim_; }
  void predict_proba(const Matrix& x, Matrix& out) const override;
  std::vector<double> pack() const override;
  static std::unique_ptr<ForestModel> unpack(std::span<const double> image);

  const std::vector<tree::Tree>& trees() const noexcept { return trees_; }
  /// Mean impurity decrease per feature, normalized to sum 1 (all zero if
  /// no tree ever split).
  const std::vector<double>& importance() const noexcept { return importance_; }

 private:
  std::vector<tree::Tree> trees_;
  std::size_t dim_;
  std::vector<double> importance_;
};

class GbtModel final : public Model {
 public:
  struct Options {
    std::size_t rounds = 100;
    std::size_t max_depth = 6;
    double eta = 0.1;
    double lambda = 1.0;
    double gamma = 0.0;
    double min_child_weight = 1.0;
    std::size_t max_bins = 256;
  };

  GbtModel(std::vector<double> base_score, std::vector<tree::Tree> trees, std::size_t dim,
           std::vector<double> train_loss = {})
      : base_score_(std::move(base_score)), trees_(std::move(trees)), dim_(dim),
        train_loss_(std::move(train_loss)) {}

  static GbtModel fit(const Matrix& x, std::span<const std::uint8_t> y, const Options& opt);

  LearnerKind kind() const noexcept override { return LearnerKind::gradient_boosted_trees; }
  std::size_t input_dim() const noexcept override { return dim_; }
  void predict_proba(const Matrix& x, Matrix& out) const override;
  std::vector<double> pack() const override;
  static std::unique_ptr<GbtModel> unpack(std::span<const double> image);

  /// Log-prior initial scores per class.
  const std::vector<double>& base_score() const noexcept { return base_score_; }
  /// Trees in round-major, class-minor order.
  const std::vector<tree::Tree>& trees() const noexcept { return trees_; }
  /// Mean training log-loss before round 1 and after every round.
  const std::vector<double>& train_loss() const noexcept { return train_loss_; }

 private:
  std::vector<double> base_score_;
  std::vector<tree::Tree> trees_;
  std::size_t dim_;
  std::vector<double> train_loss_;
};

/// Linear scores W x + b followed by a softmax; shared by the one-vs-rest
/// SVM and multinomial logistic regression.
class LinearModel final : public Model {
 public:
  LinearModel(LearnerKind kind, Matrix weights, Vector bias)
      : kind_(kind), w_(std::move(weights)), b_(std::move(bias)) {}

  struct SvmOptions {
    std::size_t epochs = 50;
    double lambda = 1e-4;
    std::uint64_t seed = 0;
  };
  /// One-vs-rest Pegasos subgradient descent with step 1/(lambda t) and
  /// iterate averaging over the final epoch.
  static LinearModel fit_svm(const Matrix& x, std::span<const std::uint8_t> y,
                             const SvmOptions& opt);

  struct LogisticOptions {
    std::size_t iterations = 300;
    double step = 0.5;
    double lambda = 1e-4;
  };
  /// Full-batch gradient descent on the L2-regularized cross-entropy.
  static LinearModel fit_logistic(const Matrix& x, std::span<const std::uint8_t> y,
                                  const LogisticOptions& opt);

  LearnerKind kind() const noexcept override { return kind_; }
  std::size_t input_dim() const noexcept override { return static_cast<std::size_t>(w_.cols()); }
  void predict_proba(const Matrix& x, Matrix& out) const override;
  std::vector<double> pack() const override;
  static std::unique_ptr<LinearModel> unpack(LearnerKind kind, std::span<const double> image);

  /// n x 3 raw scores.
  Matrix decision_function(const Matrix& x) const;
  const Matrix& weights() const noexcept { return w_; }
  const Vector& bias() const noexcept { return b_; }

 private:
  LearnerKind kind_;
  Matrix w_;  ///< 3 x d
  Vector b_;  ///< 3
};

/// One tanh hidden layer, softmax output.
class MlpModel final : public Model {
 public:
  struct Options {
    std::size_t hidden = 64;
    std::size_t epochs = 50;
    std::size_t batch = 128;
    double step = 0.01;
    double momentum = 0.9;
    double alpha = 1e-4;  ///< L2 penalty on weights (not biases)
    std::uint64_t seed = 0;
  };

  MlpModel(Matrix w1, Vector b1, Matrix w2, Vector b2)
      : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {}

  /// Glorot-uniform initialization from `seed`.
  static MlpModel initial(std::size_t dim, std::size_t hidden, std::uint64_t seed);
  static MlpModel fit(const Matrix& x, std::span<const std::uint8_t> y, const Options& opt);

  LearnerKind kind() const noexcept override { return LearnerKind::mlp; }
  std::size_t input_dim() const noexcept override { return static_cast<std::size_t>(w1_.cols()); }
  void predict_proba(const Matrix& x, Matrix& out) const override;
  std::vector<double> pack() const override;
  static std::unique_ptr<MlpModel> unpack(std::span<const double> image);

  /// Parameters flattened as [w1 (row-major), b1, w2 (row-major), b2].
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);
  std::size_t parameter_count() const noexcept;

  /// Mean cross-entropy over the batch plus (alpha/2)*||W||^2 / n, and its
  /// analytic gradient in parameters() layout.
  double loss_and_gradient(const Matrix& x, std::span<const std::uint8_t> y, double alpha,
                           std::vector<double>* gradient) const;

  std::size_t hidden() const noexcept { return static_cast<std::size_t>(w1_.rows()); }

 private:
  Matrix w1_;  ///< hidden x d
  Vector b1_;
  Matrix w2_;  ///< 3 x hidden
  Vector b2_;
};

}  // namespace wids
