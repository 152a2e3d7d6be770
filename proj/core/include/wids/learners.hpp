#pragma once

#include "wids/table.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wids {

enum class LearnerKind : std::uint8_t {
  knn,
  random_forest,
  gradient_boosted_trees,
  linear_svm,
  mlp,
  logistic,  ///< multinomial logistic regression; used as the linear meta-classifier
};

std::string_view kind_name(LearnerKind k) noexcept;
LearnerKind parse_learner_kind(std::string_view name);

/// The five base learners in meta-feature block order.
inline constexpr std::array<LearnerKind, 5> kBaseLearners = {
    LearnerKind::knn, LearnerKind::random_forest, LearnerKind::gradient_boosted_trees,
    LearnerKind::linear_svm, LearnerKind::mlp};

using Hyperparameters = std::map<std::string, double>;

struct LearnerSpec {
  LearnerKind kind = LearnerKind::knn;
  Hyperparameters params;
  std::uint64_t seed = 0;

  bool operator==(const LearnerSpec&) const = default;
};

/// Documented defaults for a kind.
Hyperparameters default_hyperparameters(LearnerKind kind);
LearnerSpec default_spec(LearnerKind kind, std::uint64_t seed = 0);

/// Fills missing hyperparameters with defaults and range-checks the rest.
/// Unknown names or out-of-range values throw SpecError.
LearnerSpec validate(const LearnerSpec& spec);

/// Fitted parameters of one classifier.
class Model {
 public:
  virtual ~Model() = default;
  virtual LearnerKind kind() const noexcept = 0;
  virtual std::size_t input_dim() const noexcept = 0;
  /// Writes an n x 3 matrix of class probabilities into `out`.
  virtual void predict_proba(const Matrix& x, Matrix& out) const = 0;
  /// Flat little-endian-double image of the fitted parameters.
  virtual std::vector<double> pack() const = 0;
};

std::unique_ptr<Model> unpack_model(LearnerKind kind, std::span<const double> image);

/// Identity of the rows a learner was fitted on.
struct TrainingFingerprint {
  std::uint64_t hash = 0;
  std::size_t rows = 0;
  /// Sorted row ids; kept in memory for audits, not persisted.
  std::vector<std::uint64_t> row_ids;

  bool contains(std::uint64_t row_id) const;
};

std::uint64_t fingerprint_hash(const Matrix& x, std::span<const ClassLabel> y,
                               std::span<const std::uint64_t> row_ids);

class TrainedLearner {
 public:
  TrainedLearner() = default;
  TrainedLearner(LearnerSpec spec, std::shared_ptr<const Model> model, TrainingFingerprint fp)
      : spec_(std::move(spec)), model_(std::move(model)), fingerprint_(std::move(fp)) {}

  const LearnerSpec& spec() const noexcept { return spec_; }
  LearnerKind kind() const noexcept { return spec_.kind; }
  const Model& model() const { return *model_; }
  const TrainingFingerprint& fingerprint() const noexcept { return fingerprint_; }
  std::size_t input_dim() const noexcept { return model_->input_dim(); }

  /// n x 3 probabilities. Throws PredictError on a dimension mismatch.
  Matrix predict_proba(const Matrix& x) const;

 private:
  LearnerSpec spec_;
  std::shared_ptr<const Model> model_;
  TrainingFingerprint fingerprint_;
};

TrainedLearner train(const LearnerSpec& spec, const FeatureTable& t);
TrainedLearner train(const LearnerSpec& spec, const Matrix& x, std::span<const ClassLabel> y,
                     std::span<const std::uint64_t> row_ids = {});
Matrix predict_proba(const TrainedLearner& learner, const FeatureTable& t);

/// Row-wise argmax, ties to the lowest class index.
std::vector<ClassLabel> argmax_labels(const Matrix& proba);

/// Integer class indices 0..2 for internal use.
std::vector<std::uint8_t> to_indices(std::span<const ClassLabel> y);

/// Numerically stable in-place softmax of every row.
void softmax_rows(Matrix& scores);

}  // namespace wids
