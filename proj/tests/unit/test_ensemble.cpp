#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "nudge/ensemble.hpp"
#include "nudge/errors.hpp"
#include "nudge/random.hpp"
#include "support/oracles.hpp"

using namespace nudge;

namespace {

constexpr auto P = SentimentLabel::positive;
constexpr auto N = SentimentLabel::negative;
constexpr auto U = SentimentLabel::neutral;

LabelTriple triple(int a, int b, int c) {
  return {label_from_index(static_cast<std::size_t>(a)), label_from_index(static_cast<std::size_t>(b)),
          label_from_index(static_cast<std::size_t>(c))};
}

std::vector<double> flatten(const Eigen::MatrixXd& w) {
  std::vector<double> out;
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) out.push_back(w(r, c));
  }
  return out;
}

struct Batch {
  Eigen::MatrixXd x;
  std::vector<SentimentLabel> y;
};

Batch random_batch(RandomStream& rng, Eigen::Index rows, Eigen::Index dim) {
  Batch b{Eigen::MatrixXd(rows, dim), {}};
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) b.x(i, j) = rng.normal();
    b.y.push_back(label_from_index(rng.uniform_index(3)));
  }
  return b;
}

std::vector<std::vector<double>> rows_of(const Eigen::MatrixXd& x) {
  std::vector<std::vector<double>> out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.emplace_back();
    for (Eigen::Index j = 0; j < x.cols(); ++j) out.back().push_back(x(i, j));
  }
  return out;
}

std::vector<int> ints_of(const std::vector<SentimentLabel>& y) {
  std::vector<int> out;
  for (const auto l : y) out.push_back(static_cast<int>(index_of(l)));
  return out;
}

}  // namespace

TEST_SUITE("ensemble") {
  TEST_CASE("majority_vote examples") {
    CHECK(majority_vote({P, P, N}, 0) == P);
    CHECK(majority_vote({N, P, N}, 0) == N);
    CHECK(majority_vote({U, U, U}, 2) == U);
    CHECK(majority_vote({P, N, U}, 0) == P);
    CHECK(majority_vote({P, N, U}, 1) == N);
    CHECK(majority_vote({P, N, U}, 2) == U);
    CHECK_THROWS_AS(majority_vote({P, N, U}, 3), InvalidArgument);
  }

  TEST_CASE("majority_vote agrees with the counting rule on all 81 cases") {
    for (std::size_t t = 0; t < 3; ++t) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          for (int c = 0; c < 3; ++c) {
            const int expected = oracle::stack1_rule({a, b, c}, t);
            CHECK(static_cast<int>(index_of(majority_vote(triple(a, b, c), t))) == expected);
          }
        }
      }
    }
  }

  TEST_CASE("majority_vote is symmetric under label relabeling") {
    const std::array<std::array<int, 3>, 2> perms = {{{1, 2, 0}, {2, 0, 1}}};
    for (const auto& perm : perms) {
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          for (int c = 0; c < 3; ++c) {
            const auto base = index_of(majority_vote(triple(a, b, c), 0));
            const auto mapped = majority_vote(triple(perm[a], perm[b], perm[c]), 0);
            CHECK(index_of(mapped) == static_cast<std::size_t>(perm[base]));
          }
        }
      }
    }
  }

  TEST_CASE("one-hot encoding") {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) {
          const Eigen::VectorXd f = encode_features(triple(a, b, c));
          REQUIRE(f.size() == 9);
          CHECK(f.sum() == 3.0);
          CHECK(f(a) == 1.0);
          CHECK(f(3 + b) == 1.0);
          CHECK(f(6 + c) == 1.0);
          for (Eigen::Index j = 0; j < 9; ++j) CHECK((f(j) == 0.0 || f(j) == 1.0));
        }
      }
    }
    const std::vector<LabelTriple> batch = {triple(0, 1, 2), triple(2, 2, 2)};
    const Eigen::MatrixXd m = encode_features(batch);
    CHECK(m.rows() == 2);
    CHECK(m.row(1).transpose() == encode_features(batch[1]));
  }

  TEST_CASE("softmax rows are normalized and stable") {
    Eigen::MatrixXd logits(2, 3);
    logits << 1000.0, 1000.0, 1000.0, -5.0, 0.0, 5.0;
    const Eigen::MatrixXd p = softmax_rows(logits);
    CHECK(p.allFinite());
    CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));
    for (Eigen::Index r = 0; r < 2; ++r) CHECK(p.row(r).sum() == doctest::Approx(1.0));
    CHECK(p(1, 2) > p(1, 1));
  }

  TEST_CASE("loss matches the loop oracle") {
    RandomStream rng(21);
    const Batch batch = random_batch(rng, 15, 4);
    Eigen::MatrixXd w(3, 5);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    const double l2 = 0.3;
    CHECK(softmax_loss(w, batch.x, batch.y, l2) ==
          doctest::Approx(oracle::softmax_loss(flatten(w), rows_of(batch.x), ints_of(batch.y), l2)).epsilon(1e-12));
    // Zero weights: log(3) per example.
    CHECK(softmax_loss(Eigen::MatrixXd::Zero(3, 5), batch.x, batch.y, l2) == doctest::Approx(std::log(3.0)));
  }

  TEST_CASE("analytic gradient matches central differences") {
    RandomStream rng(31);
    for (int trial = 0; trial < 5; ++trial) {
      const Batch batch = random_batch(rng, 20, 9);
      Eigen::MatrixXd w(3, 10);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = 0.5 * rng.normal();
      const double l2 = trial % 2 == 0 ? 1e-4 : 0.5;

      const auto x = rows_of(batch.x);
      const auto y = ints_of(batch.y);
      const auto numeric = oracle::central_differences(
          [&](const std::vector<double>& flat) { return oracle::softmax_loss(flat, x, y, l2); }, flatten(w), 1e-5);
      const auto analytic = flatten(softmax_loss_gradient(w, batch.x, batch.y, l2));
      double diff = 0.0;
      double scale = 0.0;
      for (std::size_t i = 0; i < numeric.size(); ++i) {
        diff += (numeric[i] - analytic[i]) * (numeric[i] - analytic[i]);
        scale += numeric[i] * numeric[i] + analytic[i] * analytic[i];
      }
      CHECK(std::sqrt(diff) / std::sqrt(scale) < 1e-5);
    }
  }

  TEST_CASE("meta-learner fits a separable toy problem") {
    // Three labels perfectly determined by base model 1.
    std::vector<LabelTriple> preds;
    std::vector<SentimentLabel> truth;
    RandomStream rng(5);
    for (int i = 0; i < 300; ++i) {
      const auto t = label_from_index(static_cast<std::size_t>(i % 3));
      preds.push_back({label_from_index(rng.uniform_index(3)), t, label_from_index(rng.uniform_index(3))});
      truth.push_back(t);
    }
    const MetaHyperparams hp{0.5, 2000, 0.0, 0};
    const auto model = train_meta_learner(encode_features(preds), truth, hp);
    int correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      correct += predict_meta(model, encode_features(preds[i])).label == truth[i];
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(preds.size()) >= 0.999);
    CHECK(predict_meta(model, encode_features({P, N, U})).label == N);
    CHECK(model.loss_history.size() == hp.epochs + 1);
    CHECK(model.epochs_run == hp.epochs);
    CHECK(model.final_loss == model.loss_history.back());
  }

  TEST_CASE("identical base labels give near-perfect training accuracy") {
    std::vector<LabelTriple> preds;
    std::vector<SentimentLabel> truth;
    for (int i = 0; i < 90; ++i) {
      const auto t = label_from_index(static_cast<std::size_t>(i % 3));
      preds.push_back({t, t, t});
      truth.push_back(t);
    }
    const auto model = train_meta_learner(encode_features(preds), truth, {});
    int correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      correct += predict_meta(model, encode_features(preds[i])).label == truth[i];
    }
    CHECK(correct == 90);
  }

  TEST_CASE("loss is non-increasing at the default learning rate") {
    RandomStream rng(8);
    std::vector<LabelTriple> preds;
    std::vector<SentimentLabel> truth;
    for (int i = 0; i < 400; ++i) {
      const auto t = label_from_index(rng.uniform_index(3));
      LabelTriple p{};
      for (auto& l : p) l = rng.bernoulli(0.7) ? t : label_from_index(rng.uniform_index(3));
      preds.push_back(p);
      truth.push_back(t);
    }
    const auto model = train_meta_learner(encode_features(preds), truth, {0.1, 300, 1e-4, 0});
    CHECK(model.loss_history.front() == doctest::Approx(std::log(3.0)));
    for (std::size_t e = 1; e < model.loss_history.size(); ++e) {
      CHECK(model.loss_history[e] <= model.loss_history[e - 1] + 1e-12);
    }
  }

  TEST_CASE("predict_meta") {
    const auto zero = MetaLearnerModel::zeros(9);
    const auto pred = predict_meta(zero, encode_features({N, N, N}));
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(pred.probabilities(k) == doctest::Approx(1.0 / 3.0));
    CHECK(pred.label == P);  // ties to the lowest class index
    CHECK_THROWS_AS(predict_meta(zero, Eigen::VectorXd::Zero(4)), InvalidArgument);

    RandomStream rng(12);
    MetaLearnerModel model = MetaLearnerModel::zeros(9);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) model.weights.data()[i] = rng.normal();
    for (int a = 0; a < 3; ++a) {
      const Eigen::VectorXd f = encode_features(triple(a, (a + 1) % 3, 2));
      const auto p1 = predict_meta(model, f);
      CHECK(p1.probabilities.sum() == doctest::Approx(1.0));
      CHECK((p1.probabilities.array() >= 0.0).all());
      MetaLearnerModel scaled = model;
      scaled.weights *= 2.5;
      CHECK(predict_meta(scaled, f).label == p1.label);  // argmax is scale invariant
    }
  }

  TEST_CASE("training rejects bad input and divergence") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 2);
    const std::vector<SentimentLabel> y3 = {P, N, U};
    CHECK_THROWS_AS(train_meta_learner(x, y3, {}), InvalidArgument);
    CHECK_THROWS_AS(train_meta_learner(Eigen::MatrixXd(0, 2), std::vector<SentimentLabel>{}, {}), InvalidArgument);

    RandomStream rng(3);
    const Batch batch = random_batch(rng, 50, 9);
    Eigen::MatrixXd big = batch.x * 1e150;
    CHECK_THROWS_AS(train_meta_learner(big, batch.y, {1e150, 50, 0.0, 0}), NumericalFailure);
  }

  TEST_CASE("base predictions bookkeeping") {
    const std::vector<std::string> models = {"m1", "m2", "m3"};
    std::vector<PredictionRecord> records = {
        {"e1", "m1", P, {}}, {"e1", "m2", N, {}}, {"e1", "m3", N, {}}, {"e2", "m1", U, {}}, {"e2", "m3", U, {}},
    };
    const auto base = BasePredictions::from_records(records, models);
    CHECK(base.covers("e1"));
    CHECK_FALSE(base.covers("e2"));
    CHECK(base.labels("e1") == LabelTriple{P, N, N});
    CHECK_THROWS_WITH_AS(base.labels("e2"), doctest::Contains("e2"), DataIntegrityError);
    CHECK_THROWS_AS(base.labels("zzz"), DataIntegrityError);
    CHECK(base.example_ids() == std::vector<std::string>{"e1", "e2"});
    CHECK(base.incomplete_ids() == std::vector<std::string>{"e2"});

    const std::vector<std::string> ids = {"e1"};
    CHECK(stack_predict(StackMode::stack1, base, ids) == std::vector<SentimentLabel>{N});
    CHECK_THROWS_AS(stack_predict(StackMode::stack2, base, ids), InvalidArgument);
    CHECK_THROWS_AS(base.features("e1", FeatureEncoding::probabilities), DataIntegrityError);

    records.push_back({"e1", "m1", P, {}});
    CHECK_THROWS_AS(BasePredictions::from_records(records, models), DataIntegrityError);
    records.pop_back();
    records.push_back({"e3", "m9", P, {}});
    CHECK_THROWS_AS(BasePredictions::from_records(records, models), DataIntegrityError);
  }

  TEST_CASE("probability features") {
    const std::vector<std::string> models = {"m1", "m2", "m3"};
    const std::vector<PredictionRecord> records = {
        {"e1", "m1", P, ClassProbabilities{0.7, 0.2, 0.1}},
        {"e1", "m2", N, ClassProbabilities{0.1, 0.8, 0.1}},
        {"e1", "m3", U, ClassProbabilities{0.3, 0.3, 0.4}},
    };
    const auto base = BasePredictions::from_records(records, models);
    const Eigen::VectorXd f = base.features("e1", FeatureEncoding::probabilities);
    REQUIRE(f.size() == 9);
    CHECK(f(0) == 0.7);
    CHECK(f(4) == 0.8);
    CHECK(f(8) == 0.4);
    CHECK(base.features("e1", FeatureEncoding::one_hot) == encode_features({P, N, U}));
  }
}
