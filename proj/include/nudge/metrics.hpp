#pragma once

#include <array>
#include <cstdint>
#include <span>

#include <Eigen/Core>

#include "nudge/labels.hpp"

namespace nudge {

/// Rows are true labels, columns are predicted labels.
struct ConfusionMatrix {
  Eigen::Matrix<std::int64_t, 3, 3> counts = Eigen::Matrix<std::int64_t, 3, 3>::Zero();

  std::int64_t total() const { return counts.sum(); }
};

ConfusionMatrix confusion_matrix(std::span<const SentimentLabel> truth,
                                 std::span<const SentimentLabel> predicted);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

/*
 * Report-level precision and recall are macro averages over the three
 * classes; report-level f1 is the harmonic mean of those two averages.
 * The alternative reading, the mean of per-class F1, is kept in
 * macro_f1_mean. Empty denominators yield 0.
 */
struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double macro_f1_mean = 0.0;
  std::array<ClassMetrics, kNumClasses> per_class{};
  ConfusionMatrix confusion;
};

EvalReport evaluate(const ConfusionMatrix& confusion);

/// Throws InvalidArgument on length mismatch or empty input.
EvalReport evaluate(std::span<const SentimentLabel> truth, std::span<const SentimentLabel> predicted);

/// Harmonic mean, 0 when both inputs are 0.
double harmonic_mean(double x, double y) noexcept;

}  // namespace nudge
