#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "nudge/labels.hpp"

namespace nudge {

inline constexpr std::size_t kNumBaseModels = 3;

/// One label per base model, in model order.
using LabelTriple = std::array<SentimentLabel, kNumBaseModels>;
using ClassProbabilities = std::array<double, kNumClasses>;

struct PredictionRecord {
  std::string example_id;
  std::string model_id;
  SentimentLabel label = SentimentLabel::positive;
  /// Optional soft output; used only with FeatureEncoding::probabilities.
  std::optional<ClassProbabilities> probabilities;
};

enum class FeatureEncoding { one_hot, probabilities };
enum class StackMode { stack1, stack2 };

/// Label held by at least two models, else preds[tiebreaker_index].
SentimentLabel majority_vote(const LabelTriple& preds, std::size_t tiebreaker_index);

/// Concatenated one-hot blocks, block m = model m: length 9, exactly three ones.
Eigen::VectorXd encode_features(const LabelTriple& preds);

/// Row i = encode_features(preds[i]).
Eigen::MatrixXd encode_features(std::span<const LabelTriple> preds);

/*
 * Base-model predictions indexed by example id, with a fixed model order.
 * Lookups throw DataIntegrityError naming the example (and model) when a
 * prediction is missing.
 */
class BasePredictions {
 public:
  /// Throws DataIntegrityError on duplicate (example_id, model_id) pairs or
  /// records from a model not in model_ids.
  static BasePredictions from_records(std::span<const PredictionRecord> records,
                                      std::vector<std::string> model_ids);

  const std::vector<std::string>& model_ids() const noexcept { return model_ids_; }
  bool covers(std::string_view example_id) const;
  const LabelTriple& labels(std::string_view example_id) const;
  Eigen::VectorXd features(std::string_view example_id, FeatureEncoding encoding) const;
  /// Example ids that have a prediction from at least one model, sorted.
  std::vector<std::string> example_ids() const;
  /// Example ids missing a prediction from at least one model, sorted.
  std::vector<std::string> incomplete_ids() const;

 private:
  struct Entry {
    LabelTriple labels{};
    std::array<bool, kNumBaseModels> present{};
    std::array<std::optional<ClassProbabilities>, kNumBaseModels> probabilities{};
  };
  const Entry& complete_entry(std::string_view example_id) const;

  std::vector<std::string> model_ids_;
  std::unordered_map<std::string, Entry> entries_;
};

struct MetaHyperparams {
  double learning_rate = 0.1;
  std::uint64_t epochs = 1000;
  double l2_penalty = 1e-4;
  /// Unused by full-batch descent from zero weights; kept for stochastic variants.
  std::uint64_t seed = 0;
};

/// Multinomial logistic regression over [features; 1].
struct MetaLearnerModel {
  /// kNumClasses x (feature_dim + 1); the last column is the bias.
  Eigen::MatrixXd weights;
  Eigen::Index feature_dim = 0;
  MetaHyperparams hyperparams;
  std::uint64_t epochs_run = 0;
  double final_loss = 0.0;
  /// Training loss before each update, then after the last one.
  std::vector<double> loss_history;

  static MetaLearnerModel zeros(Eigen::Index feature_dim);
};

/// Appends a column of ones.
Eigen::MatrixXd with_bias(const Eigen::MatrixXd& features);

/// Row-wise softmax of logits, max-shifted.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

/// Mean cross-entropy plus (l2/2)·||W||² over the non-bias columns.
double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                    std::span<const SentimentLabel> labels, double l2_penalty);

/// Analytic gradient of softmax_loss with respect to the weights.
Eigen::MatrixXd softmax_loss_gradient(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                                      std::span<const SentimentLabel> labels, double l2_penalty);

/// Full-batch gradient descent from zero weights. Throws InvalidArgument on an
/// empty or mismatched training set, NumericalFailure on a non-finite loss.
MetaLearnerModel train_meta_learner(const Eigen::MatrixXd& features,
                                    std::span<const SentimentLabel> labels,
                                    const MetaHyperparams& hyperparams);

struct MetaPrediction {
  SentimentLabel label = SentimentLabel::positive;
  Eigen::Vector3d probabilities = Eigen::Vector3d::Zero();
};

/// Argmax of the class probabilities, ties to the lowest class index.
MetaPrediction predict_meta(const MetaLearnerModel& model, const Eigen::VectorXd& features);

struct StackOptions {
  std::size_t tiebreaker_index = 0;
  FeatureEncoding encoding = FeatureEncoding::one_hot;
};

/// Per-example stacked prediction. STACK2 requires a model.
std::vector<SentimentLabel> stack_predict(StackMode mode, const BasePredictions& base,
                                          std::span<const std::string> example_ids,
                                          const MetaLearnerModel* model = nullptr,
                                          const StackOptions& options = {});

/// Feature matrix for the given examples under an encoding.
Eigen::MatrixXd stack_features(const BasePredictions& base, std::span<const std::string> example_ids,
                               FeatureEncoding encoding);

}  // namespace nudge
