#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nudge/ensemble.hpp"
#include "nudge/labels.hpp"

namespace nudge {

struct LabeledExample {
  std::string example_id;
  std::string text;
  std::optional<int> rating;
  SentimentLabel label = SentimentLabel::positive;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

struct SplitDataset {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> test;
  std::uint64_t split_seed = 0;
};

using ClassCounts = std::array<std::size_t, kNumClasses>;

ClassCounts class_counts(std::span<const LabeledExample> examples);

/// 4, 5 -> POSITIVE; 1, 2 -> NEGATIVE; 3 -> NEUTRAL. Throws InvalidArgument otherwise.
SentimentLabel rating_to_label(int rating);

/*
 * Reduces every class to the smallest class count. Within each class the
 * retained examples are a seeded uniform sample without replacement; the
 * output keeps the input order of the retained examples.
 */
std::vector<LabeledExample> downsample_balance(std::span<const LabeledExample> examples,
                                               std::uint64_t seed);

/// Number of test examples for a class of `count`: round-half-up of count * test_fraction.
std::size_t stratified_test_count(std::size_t count, double test_fraction) noexcept;

/*
 * Per-class seeded shuffle; the first stratified_test_count examples of each
 * class go to test, the rest to train. Both partitions keep input order.
 */
SplitDataset stratified_split(std::span<const LabeledExample> examples, double test_fraction,
                              std::uint64_t seed);

struct StackingPartitions {
  std::vector<LabeledExample> base_train;
  std::vector<LabeledExample> meta_train;
};

/// Stratified 75/25 split of a training set into base-model and meta-learner partitions.
StackingPartitions stacking_split(std::span<const LabeledExample> train, std::uint64_t seed,
                                  double meta_fraction = 0.25);

/// Placeholder reviews with exactly the requested per-class counts, seeded order.
std::vector<LabeledExample> generate_synthetic_reviews(const ClassCounts& counts, std::uint64_t seed);

struct SyntheticModelSpec {
  std::string model_id;
  double accuracy = 1.0;
  /// Row t gives relative weights of wrong labels when the truth is class t;
  /// the diagonal is ignored. Zero rows fall back to uniform.
  Eigen::Matrix3d confusion_bias = Eigen::Matrix3d::Ones();
};

/// Each model predicts the truth with its accuracy, else a wrong label drawn from its bias row.
std::vector<PredictionRecord> generate_synthetic_predictions(std::span<const LabeledExample> examples,
                                                             std::span<const SyntheticModelSpec> models,
                                                             std::uint64_t seed);

/*
 * Dataset CSV: example_id,review_headline,review_text,rating[,label].
 * Headline and text are joined with one space when both are non-empty; a
 * missing label is derived from the rating. Throws csv::ParseError with the
 * offending row number.
 */
std::vector<LabeledExample> read_examples_csv(std::istream& in);
void write_examples_csv(std::ostream& out, std::span<const LabeledExample> examples);

/// Prediction CSV: example_id,model_id,label[,p_positive,p_negative,p_neutral].
std::vector<PredictionRecord> read_predictions_csv(std::istream& in);
void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records);

}  // namespace nudge
