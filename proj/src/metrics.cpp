#include "nudge/metrics.hpp"

#include "nudge/errors.hpp"

namespace nudge {

ConfusionMatrix confusion_matrix(std::span<const SentimentLabel> truth,
                                 std::span<const SentimentLabel> predicted) {
  if (truth.size() != predicted.size()) {
    throw InvalidArgument("evaluate: truth and predicted lengths differ (" +
                          std::to_string(truth.size()) + " vs " + std::to_string(predicted.size()) + ")");
  }
  if (truth.empty()) {
    throw InvalidArgument("evaluate: empty input");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    cm.counts(static_cast<Eigen::Index>(index_of(truth[i])),
              static_cast<Eigen::Index>(index_of(predicted[i]))) += 1;
  }
  return cm;
}

double harmonic_mean(double x, double y) noexcept {
  return (x + y) == 0.0 ? 0.0 : 2.0 * x * y / (x + y);
}

EvalReport evaluate(const ConfusionMatrix& confusion) {
  const auto& m = confusion.counts;
  const std::int64_t total = m.sum();
  if (total <= 0) {
    throw InvalidArgument("evaluate: empty confusion matrix");
  }
  EvalReport report;
  report.confusion = confusion;
  report.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);

  const Eigen::Matrix<std::int64_t, 1, 3> column_sums = m.colwise().sum();
  const Eigen::Matrix<std::int64_t, 3, 1> row_sums = m.rowwise().sum();
  for (Eigen::Index k = 0; k < 3; ++k) {
    auto& cls = report.per_class[static_cast<std::size_t>(k)];
    const auto hits = static_cast<double>(m(k, k));
    cls.precision = column_sums(k) == 0 ? 0.0 : hits / static_cast<double>(column_sums(k));
    cls.recall = row_sums(k) == 0 ? 0.0 : hits / static_cast<double>(row_sums(k));
    cls.f1 = harmonic_mean(cls.precision, cls.recall);
    cls.support = row_sums(k);
    report.precision += cls.precision / 3.0;
    report.recall += cls.recall / 3.0;
    report.macro_f1_mean += cls.f1 / 3.0;
  }
  report.f1 = harmonic_mean(report.precision, report.recall);
  return report;
}

EvalReport evaluate(std::span<const SentimentLabel> truth, std::span<const SentimentLabel> predicted) {
  return evaluate(confusion_matrix(truth, predicted));
}

}  // namespace nudge
