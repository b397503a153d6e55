#include "nudge/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "nudge/errors.hpp"

namespace nudge {

SentimentLabel majority_vote(const LabelTriple& preds, std::size_t tiebreaker_index) {
  if (tiebreaker_index >= kNumBaseModels) {
    throw InvalidArgument("majority_vote: tiebreaker_index must be 0, 1 or 2");
  }
  if (preds[0] == preds[1] || preds[0] == preds[2]) {
    return preds[0];
  }
  if (preds[1] == preds[2]) {
    return preds[1];
  }
  return preds[tiebreaker_index];
}

Eigen::VectorXd encode_features(const LabelTriple& preds) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kNumBaseModels * kNumClasses);
  for (std::size_t m = 0; m < kNumBaseModels; ++m) {
    x(static_cast<Eigen::Index>(m * kNumClasses + index_of(preds[m]))) = 1.0;
  }
  return x;
}

Eigen::MatrixXd encode_features(std::span<const LabelTriple> preds) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(preds.size()), kNumBaseModels * kNumClasses);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = encode_features(preds[i]).transpose();
  }
  return x;
}

BasePredictions BasePredictions::from_records(std::span<const PredictionRecord> records,
                                              std::vector<std::string> model_ids) {
  if (model_ids.size() != kNumBaseModels) {
    throw InvalidArgument("exactly 3 base models are required");
  }
  BasePredictions out;
  out.model_ids_ = std::move(model_ids);
  for (const auto& rec : records) {
    const auto it = std::find(out.model_ids_.begin(), out.model_ids_.end(), rec.model_id);
    if (it == out.model_ids_.end()) {
      throw DataIntegrityError("prediction for example '" + rec.example_id + "' names unknown model '" +
                               rec.model_id + "'");
    }
    const auto m = static_cast<std::size_t>(std::distance(out.model_ids_.begin(), it));
    auto& entry = out.entries_[rec.example_id];
    if (entry.present[m]) {
      throw DataIntegrityError("duplicate prediction for example '" + rec.example_id + "' from model '" +
                               rec.model_id + "'");
    }
    entry.present[m] = true;
    entry.labels[m] = rec.label;
    entry.probabilities[m] = rec.probabilities;
  }
  return out;
}

bool BasePredictions::covers(std::string_view example_id) const {
  const auto it = entries_.find(std::string(example_id));
  return it != entries_.end() &&
         std::all_of(it->second.present.begin(), it->second.present.end(), [](bool p) { return p; });
}

const BasePredictions::Entry& BasePredictions::complete_entry(std::string_view example_id) const {
  const auto it = entries_.find(std::string(example_id));
  if (it == entries_.end()) {
    throw DataIntegrityError("missing base predictions for example '" + std::string(example_id) + "'");
  }
  for (std::size_t m = 0; m < kNumBaseModels; ++m) {
    if (!it->second.present[m]) {
      throw DataIntegrityError("missing base prediction for example '" + std::string(example_id) +
                               "' from model '" + model_ids_[m] + "'");
    }
  }
  return it->second;
}

const LabelTriple& BasePredictions::labels(std::string_view example_id) const {
  return complete_entry(example_id).labels;
}

Eigen::VectorXd BasePredictions::features(std::string_view example_id, FeatureEncoding encoding) const {
  const Entry& entry = complete_entry(example_id);
  if (encoding == FeatureEncoding::one_hot) {
    return encode_features(entry.labels);
  }
  Eigen::VectorXd x(kNumBaseModels * kNumClasses);
  for (std::size_t m = 0; m < kNumBaseModels; ++m) {
    if (!entry.probabilities[m]) {
      throw DataIntegrityError("missing class probabilities for example '" + std::string(example_id) +
                               "' from model '" + model_ids_[m] + "'");
    }
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      x(static_cast<Eigen::Index>(m * kNumClasses + k)) = (*entry.probabilities[m])[k];
    }
  }
  return x;
}

std::vector<std::string> BasePredictions::example_ids() const {
  std::vector<std::string> ids;
  ids.reserve(entries_.size());
  for (const auto& [id, entry] : entries_) {
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> BasePredictions::incomplete_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, entry] : entries_) {
    if (!std::all_of(entry.present.begin(), entry.present.end(), [](bool p) { return p; })) {
      ids.push_back(id);
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

MetaLearnerModel MetaLearnerModel::zeros(Eigen::Index feature_dim) {
  MetaLearnerModel model;
  model.feature_dim = feature_dim;
  model.weights = Eigen::MatrixXd::Zero(kNumClasses, feature_dim + 1);
  return model;
}

Eigen::MatrixXd with_bias(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd out(features.rows(), features.cols() + 1);
  out.leftCols(features.cols()) = features;
  out.col(features.cols()).setOnes();
  return out;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  const Eigen::VectorXd shift = logits.rowwise().maxCoeff();
  Eigen::MatrixXd p = (logits.colwise() - shift).array().exp().matrix();
  const Eigen::VectorXd norm = p.rowwise().sum();
  return norm.asDiagonal().inverse() * p;
}

namespace {

void check_training_shapes(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                           std::span<const SentimentLabel> labels) {
  if (features.rows() == 0 || labels.empty()) {
    throw InvalidArgument("meta-learner: empty training set");
  }
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw InvalidArgument("meta-learner: feature rows and label count differ");
  }
  if (weights.rows() != static_cast<Eigen::Index>(kNumClasses) || weights.cols() != features.cols() + 1) {
    throw InvalidArgument("meta-learner: weight shape does not match features");
  }
}

Eigen::MatrixXd one_hot_targets(std::span<const SentimentLabel> labels) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(index_of(labels[i]))) = 1.0;
  }
  return y;
}

double loss_from_logits(const Eigen::MatrixXd& logits, std::span<const SentimentLabel> labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    const double lse = shift + std::log((logits.row(i).array() - shift).exp().sum());
    total += lse - logits(i, static_cast<Eigen::Index>(index_of(labels[static_cast<std::size_t>(i)])));
  }
  return total / static_cast<double>(logits.rows());
}

double l2_term(const Eigen::MatrixXd& weights, double l2_penalty) {
  return 0.5 * l2_penalty * weights.leftCols(weights.cols() - 1).squaredNorm();
}

// Gradient and loss on a precomputed design matrix [X, 1].
Eigen::MatrixXd gradient_on_design(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                                   const Eigen::MatrixXd& targets, double l2_penalty) {
  const Eigen::MatrixXd probs = softmax_rows(design * weights.transpose());
  Eigen::MatrixXd grad = (probs - targets).transpose() * design / static_cast<double>(design.rows());
  grad.leftCols(grad.cols() - 1) += l2_penalty * weights.leftCols(weights.cols() - 1);
  return grad;
}

}  // namespace

double softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                    std::span<const SentimentLabel> labels, double l2_penalty) {
  check_training_shapes(weights, features, labels);
  const Eigen::MatrixXd logits = with_bias(features) * weights.transpose();
  return loss_from_logits(logits, labels) + l2_term(weights, l2_penalty);
}

Eigen::MatrixXd softmax_loss_gradient(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& features,
                                      std::span<const SentimentLabel> labels, double l2_penalty) {
  check_training_shapes(weights, features, labels);
  return gradient_on_design(weights, with_bias(features), one_hot_targets(labels), l2_penalty);
}

MetaLearnerModel train_meta_learner(const Eigen::MatrixXd& features,
                                    std::span<const SentimentLabel> labels,
                                    const MetaHyperparams& hyperparams) {
  if (!(hyperparams.learning_rate > 0.0) || !std::isfinite(hyperparams.learning_rate)) {
    throw InvalidArgument("meta-learner: learning_rate must be positive");
  }
  if (!(hyperparams.l2_penalty >= 0.0)) {
    throw InvalidArgument("meta-learner: l2_penalty must be non-negative");
  }
  MetaLearnerModel model = MetaLearnerModel::zeros(features.cols());
  model.hyperparams = hyperparams;
  check_training_shapes(model.weights, features, labels);
  if (!features.allFinite()) {
    throw InvalidArgument("meta-learner: features contain non-finite values");
  }

  const Eigen::MatrixXd design = with_bias(features);
  const Eigen::MatrixXd targets = one_hot_targets(labels);
  model.loss_history.reserve(hyperparams.epochs + 1);

  auto current_loss = [&] {
    const double loss = loss_from_logits(design * model.weights.transpose(), labels) +
                        l2_term(model.weights, hyperparams.l2_penalty);
    if (!std::isfinite(loss)) {
      throw NumericalFailure("meta-learner: training loss became non-finite at epoch " +
                             std::to_string(model.epochs_run));
    }
    return loss;
  };

  for (std::uint64_t epoch = 0; epoch < hyperparams.epochs; ++epoch) {
    model.loss_history.push_back(current_loss());
    model.weights -= hyperparams.learning_rate *
                     gradient_on_design(model.weights, design, targets, hyperparams.l2_penalty);
    model.epochs_run = epoch + 1;
  }
  model.final_loss = current_loss();
  model.loss_history.push_back(model.final_loss);
  if (!model.weights.allFinite()) {
    throw NumericalFailure("meta-learner: weights became non-finite");
  }
  return model;
}

MetaPrediction predict_meta(const MetaLearnerModel& model, const Eigen::VectorXd& features) {
  if (features.size() != model.feature_dim) {
    throw InvalidArgument("predict_meta: expected " + std::to_string(model.feature_dim) +
                          " features, got " + std::to_string(features.size()));
  }
  Eigen::VectorXd augmented(features.size() + 1);
  augmented << features, 1.0;
  const Eigen::RowVectorXd logits = (model.weights * augmented).transpose();
  const Eigen::RowVectorXd probs = softmax_rows(logits);

  MetaPrediction out;
  out.probabilities = probs.transpose();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < probs.size(); ++k) {
    if (probs(k) > probs(best)) {
      best = k;
    }
  }
  out.label = label_from_index(static_cast<std::size_t>(best));
  return out;
}

Eigen::MatrixXd stack_features(const BasePredictions& base, std::span<const std::string> example_ids,
                               FeatureEncoding encoding) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(example_ids.size()), kNumBaseModels * kNumClasses);
  for (std::size_t i = 0; i < example_ids.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = base.features(example_ids[i], encoding).transpose();
  }
  return x;
}

std::vector<SentimentLabel> stack_predict(StackMode mode, const BasePredictions& base,
                                          std::span<const std::string> example_ids,
                                          const MetaLearnerModel* model, const StackOptions& options) {
  if (mode == StackMode::stack2 && model == nullptr) {
    throw InvalidArgument("stack_predict: STACK2 requires a trained meta-learner");
  }
  std::vector<SentimentLabel> out;
  out.reserve(example_ids.size());
  for (const auto& id : example_ids) {
    if (mode == StackMode::stack1) {
      out.push_back(majority_vote(base.labels(id), options.tiebreaker_index));
    } else {
      out.push_back(predict_meta(*model, base.features(id, options.encoding)).label);
    }
  }
  return out;
}

}  // namespace nudge
