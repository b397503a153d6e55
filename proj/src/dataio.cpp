#include "nudge/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "nudge/csv.hpp"
#include "nudge/errors.hpp"
#include "nudge/format.hpp"
#include "nudge/random.hpp"

namespace nudge {

ClassCounts class_counts(std::span<const LabeledExample> examples) {
  ClassCounts counts{};
  for (const auto& ex : examples) {
    counts[index_of(ex.label)] += 1;
  }
  return counts;
}

SentimentLabel rating_to_label(int rating) {
  switch (rating) {
    case 1:
    case 2:
      return SentimentLabel::negative;
    case 3:
      return SentimentLabel::neutral;
    case 4:
    case 5:
      return SentimentLabel::positive;
    default:
      throw InvalidArgument("rating must be an integer in 1..5, got " + std::to_string(rating));
  }
}

namespace {

using IndexBuckets = std::array<std::vector<std::size_t>, kNumClasses>;

IndexBuckets bucket_by_class(std::span<const LabeledExample> examples) {
  IndexBuckets buckets;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    buckets[index_of(examples[i].label)].push_back(i);
  }
  return buckets;
}

void require_all_classes(const IndexBuckets& buckets, const char* op) {
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (buckets[k].empty()) {
      throw InvalidArgument(std::string(op) + ": class " + std::string(to_string(label_from_index(k))) +
                            " has no examples");
    }
  }
}

}  // namespace

std::vector<LabeledExample> downsample_balance(std::span<const LabeledExample> examples,
                                               std::uint64_t seed) {
  IndexBuckets buckets = bucket_by_class(examples);
  require_all_classes(buckets, "downsample_balance");
  std::size_t target = buckets[0].size();
  for (const auto& b : buckets) {
    target = std::min(target, b.size());
  }

  auto rng = RandomStream::substream(seed, Substream::shuffle);
  std::vector<bool> keep(examples.size(), false);
  for (auto& bucket : buckets) {
    shuffle(std::span<std::size_t>(bucket), rng);
    for (std::size_t j = 0; j < target; ++j) {
      keep[bucket[j]] = true;
    }
  }
  std::vector<LabeledExample> out;
  out.reserve(target * kNumClasses);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (keep[i]) {
      out.push_back(examples[i]);
    }
  }
  return out;
}

std::size_t stratified_test_count(std::size_t count, double test_fraction) noexcept {
  const double scaled = static_cast<double>(count) * test_fraction;
  // Round half up; the epsilon keeps exact halves (e.g. 2.5) from landing below.
  const double rounded = std::floor(scaled + 0.5 + 1e-9);
  return std::min(count, static_cast<std::size_t>(std::max(0.0, rounded)));
}

SplitDataset stratified_split(std::span<const LabeledExample> examples, double test_fraction,
                              std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("stratified_split: test_fraction must lie in (0, 1)");
  }
  IndexBuckets buckets = bucket_by_class(examples);
  require_all_classes(buckets, "stratified_split");

  auto rng = RandomStream::substream(seed, Substream::shuffle);
  std::vector<bool> to_test(examples.size(), false);
  for (auto& bucket : buckets) {
    shuffle(std::span<std::size_t>(bucket), rng);
    const std::size_t n_test = stratified_test_count(bucket.size(), test_fraction);
    for (std::size_t j = 0; j < n_test; ++j) {
      to_test[bucket[j]] = true;
    }
  }
  SplitDataset split;
  split.split_seed = seed;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (to_test[i] ? split.test : split.train).push_back(examples[i]);
  }
  return split;
}

StackingPartitions stacking_split(std::span<const LabeledExample> train, std::uint64_t seed,
                                  double meta_fraction) {
  SplitDataset inner = stratified_split(train, meta_fraction, derive_seed(seed, 0x57ac4ull));
  return StackingPartitions{std::move(inner.train), std::move(inner.test)};
}

std::vector<LabeledExample> generate_synthetic_reviews(const ClassCounts& counts, std::uint64_t seed) {
  auto rng = RandomStream::substream(seed, Substream::synthetic);
  std::vector<LabeledExample> out;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const SentimentLabel label = label_from_index(k);
    for (std::size_t j = 0; j < counts[k]; ++j) {
      LabeledExample ex;
      ex.label = label;
      switch (label) {
        case SentimentLabel::positive:
          ex.rating = 4 + static_cast<int>(rng.uniform_index(2));
          break;
        case SentimentLabel::negative:
          ex.rating = 1 + static_cast<int>(rng.uniform_index(2));
          break;
        case SentimentLabel::neutral:
          ex.rating = 3;
          break;
      }
      out.push_back(std::move(ex));
    }
  }
  shuffle(std::span<LabeledExample>(out), rng);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::string id = std::to_string(i + 1);
    out[i].example_id = "syn-" + std::string(id.size() < 6 ? 6 - id.size() : 0, '0') + id;
    out[i].text = "synthetic review " + std::to_string(i + 1) + " rated " + std::to_string(*out[i].rating);
  }
  return out;
}

std::vector<PredictionRecord> generate_synthetic_predictions(std::span<const LabeledExample> examples,
                                                             std::span<const SyntheticModelSpec> models,
                                                             std::uint64_t seed) {
  for (const auto& spec : models) {
    if (!(spec.accuracy >= 0.0 && spec.accuracy <= 1.0)) {
      throw InvalidArgument("synthetic model '" + spec.model_id + "': accuracy must lie in [0, 1]");
    }
    if (!spec.confusion_bias.allFinite() || (spec.confusion_bias.array() < 0.0).any()) {
      throw InvalidArgument("synthetic model '" + spec.model_id + "': confusion bias must be non-negative");
    }
  }
  std::vector<PredictionRecord> out;
  out.reserve(examples.size() * models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto& spec = models[m];
    RandomStream rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(Substream::synthetic)), m + 1));
    for (const auto& ex : examples) {
      const std::size_t truth = index_of(ex.label);
      std::size_t predicted = truth;
      if (!rng.bernoulli(spec.accuracy)) {
        std::array<double, kNumClasses> weights{};
        double total = 0.0;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
          weights[k] = k == truth ? 0.0 : spec.confusion_bias(static_cast<Eigen::Index>(truth),
                                                              static_cast<Eigen::Index>(k));
          total += weights[k];
        }
        if (total <= 0.0) {
          for (std::size_t k = 0; k < kNumClasses; ++k) {
            weights[k] = k == truth ? 0.0 : 1.0;
          }
          total = static_cast<double>(kNumClasses - 1);
        }
        double u = rng.uniform() * total;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
          if (weights[k] <= 0.0) {
            continue;
          }
          predicted = k;
          if (u < weights[k]) {
            break;
          }
          u -= weights[k];
        }
      }
      // Soft output: confidence in (0.5, 1] on the predicted label, rest split evenly.
      const double confidence = 0.5 + 0.5 * rng.uniform_open();
      ClassProbabilities probs{};
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        probs[k] = k == predicted ? confidence : (1.0 - confidence) / 2.0;
      }
      out.push_back(PredictionRecord{ex.example_id, spec.model_id, label_from_index(predicted), probs});
    }
  }
  return out;
}

namespace {

std::optional<int> parse_rating(const std::string& field, std::size_t row) {
  std::string_view s(field);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) {
    return std::nullopt;
  }
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || value < 1 || value > 5) {
    throw csv::ParseError(row, "rating must be an integer in 1..5, got '" + field + "'");
  }
  return value;
}

std::optional<double> parse_probability(const std::string& field, std::size_t row) {
  if (field.empty()) {
    return std::nullopt;
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || !(value >= 0.0 && value <= 1.0)) {
    throw csv::ParseError(row, "probability must be a number in [0, 1], got '" + field + "'");
  }
  return value;
}

}  // namespace

std::vector<LabeledExample> read_examples_csv(std::istream& in) {
  const csv::Table table = csv::Table::read(in);
  const std::size_t id_col = table.require_column("example_id");
  const auto headline_col = table.column("review_headline");
  const auto text_col = table.column("review_text");
  const auto rating_col = table.column("rating");
  const auto label_col = table.column("label");
  if (!rating_col && !label_col) {
    throw csv::ParseError(1, "dataset needs a 'rating' or 'label' column");
  }

  std::vector<LabeledExample> out;
  out.reserve(table.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table.row(i);
    const std::size_t row_no = table.row_number(i);
    LabeledExample ex;
    ex.example_id = row[id_col];
    if (ex.example_id.empty()) {
      throw csv::ParseError(row_no, "empty example_id");
    }
    if (!seen.insert(ex.example_id).second) {
      throw csv::ParseError(row_no, "duplicate example_id '" + ex.example_id + "'");
    }
    const std::string headline = headline_col ? row[*headline_col] : std::string();
    const std::string text = text_col ? row[*text_col] : std::string();
    ex.text = headline.empty() ? text : (text.empty() ? headline : headline + " " + text);

    if (rating_col) {
      ex.rating = parse_rating(row[*rating_col], row_no);
    }
    std::optional<SentimentLabel> label;
    if (label_col && !row[*label_col].empty()) {
      try {
        label = parse_label(row[*label_col]);
      } catch (const InvalidArgument& e) {
        throw csv::ParseError(row_no, e.what());
      }
    }
    if (ex.rating) {
      const SentimentLabel derived = rating_to_label(*ex.rating);
      if (label && *label != derived) {
        throw csv::ParseError(row_no, "label " + std::string(to_string(*label)) + " contradicts rating " +
                                          std::to_string(*ex.rating));
      }
      ex.label = derived;
    } else if (label) {
      ex.label = *label;
    } else {
      throw csv::ParseError(row_no, "row has neither rating nor label");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

void write_examples_csv(std::ostream& out, std::span<const LabeledExample> examples) {
  csv::write_row(out, {"example_id", "review_headline", "review_text", "rating", "label"});
  for (const auto& ex : examples) {
    csv::write_row(out, {ex.example_id, "", ex.text, ex.rating ? std::to_string(*ex.rating) : "",
                         std::string(to_string(ex.label))});
  }
}

std::vector<PredictionRecord> read_predictions_csv(std::istream& in) {
  const csv::Table table = csv::Table::read(in);
  const std::size_t id_col = table.require_column("example_id");
  const std::size_t model_col = table.require_column("model_id");
  const std::size_t label_col = table.require_column("label");
  const std::array<std::optional<std::size_t>, kNumClasses> prob_cols = {
      table.column("p_positive"), table.column("p_negative"), table.column("p_neutral")};

  std::vector<PredictionRecord> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table.row(i);
    const std::size_t row_no = table.row_number(i);
    PredictionRecord rec;
    rec.example_id = row[id_col];
    rec.model_id = row[model_col];
    if (rec.example_id.empty() || rec.model_id.empty()) {
      throw csv::ParseError(row_no, "empty example_id or model_id");
    }
    try {
      rec.label = parse_label(row[label_col]);
    } catch (const InvalidArgument& e) {
      throw csv::ParseError(row_no, e.what());
    }
    ClassProbabilities probs{};
    bool complete = true;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const auto p = prob_cols[k] ? parse_probability(row[*prob_cols[k]], row_no) : std::nullopt;
      complete = complete && p.has_value();
      probs[k] = p.value_or(0.0);
    }
    if (complete) {
      rec.probabilities = probs;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_predictions_csv(std::ostream& out, std::span<const PredictionRecord> records) {
  const bool soft = std::any_of(records.begin(), records.end(),
                                [](const PredictionRecord& r) { return r.probabilities.has_value(); });
  csv::Row header = {"example_id", "model_id", "label"};
  if (soft) {
    header.insert(header.end(), {"p_positive", "p_negative", "p_neutral"});
  }
  csv::write_row(out, header);
  for (const auto& rec : records) {
    csv::Row row = {rec.example_id, rec.model_id, std::string(to_string(rec.label))};
    if (soft) {
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        row.push_back(rec.probabilities ? format_double((*rec.probabilities)[k]) : "");
      }
    }
    csv::write_row(out, row);
  }
}

}  // namespace nudge
