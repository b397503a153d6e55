#include <doctest.h>

#include <string>

#include "nudge/errors.hpp"
#include "nudge/serialization.hpp"

using namespace nudge;

TEST_SUITE("serialization") {
  TEST_CASE("arm JSON round trip") {
    BanditArm arm{"arm-\"x\"", BetaPosterior(12.5, 300.0), 311, 11};
    const Json j = to_json(arm);
    CHECK(j.at("a").get<double>() == 12.5);
    const BanditArm back = arm_from_json(Json::parse(j.dump()));
    CHECK(back.id == arm.id);
    CHECK(back.posterior == arm.posterior);
    CHECK(back.impressions == 311);
    CHECK(back.clicks == 11);

    Json bad = j;
    bad["clicks"] = 400;
    CHECK_THROWS_AS(arm_from_json(bad), InvalidArgument);
  }

  TEST_CASE("meta-learner JSON round trip is exact") {
    MetaLearnerModel model = MetaLearnerModel::zeros(9);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) {
      model.weights.data()[i] = 0.1 * static_cast<double>(i) - 1.0 / 3.0;
    }
    model.hyperparams.learning_rate = 0.25;
    model.hyperparams.epochs = 17;
    const MetaLearnerModel back = model_from_json(Json::parse(to_json(model).dump()));
    CHECK(back.feature_dim == 9);
    CHECK(back.weights == model.weights);
    CHECK(back.hyperparams.learning_rate == 0.25);
    CHECK(back.hyperparams.epochs == 17);

    Json bad = to_json(model);
    bad["feature_dim"] = 4;
    CHECK_THROWS_AS(model_from_json(bad), InvalidArgument);
  }

  TEST_CASE("bandit config parsing") {
    const auto cfg = parse_bandit_config(R"(
[experiment]
burn_in = 200
check_interval = 5
seed = 9

[[arms]]
id = "a"
true_ctr = 0.1

[[arms]]
id = "b"
true_ctr = 0.2
)");
    CHECK(cfg.experiment.burn_in == 200);
    CHECK(cfg.experiment.check_interval == 5);
    CHECK(cfg.experiment.seed == 9);
    CHECK(cfg.experiment.significance == 0.05);  // default kept
    CHECK(cfg.experiment.mc_samples == 10000);
    REQUIRE(cfg.arms.size() == 2);
    CHECK(cfg.arms[1].id == "b");
    CHECK(cfg.arms[1].true_ctr == 0.2);
  }

  TEST_CASE("bandit config errors") {
    CHECK_THROWS_AS(parse_bandit_config("[experiment\n"), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config("[experiment]\nburn_in = -3\n[[arms]]\nid='a'\ntrue_ctr=0.1\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_bandit_config("[experiment]\nsignificance = 'x'\n"), ConfigError);
    CHECK_THROWS_AS(parse_bandit_config("[[arms]]\ntrue_ctr = 0.1\n"), ConfigError);
    CHECK_THROWS_AS(load_bandit_config("/nonexistent/config.toml"), ConfigError);
  }

  TEST_CASE("shipped configs load") {
    const std::string dir = NUDGE_CONFIG_DIR;
    const auto two = load_bandit_config(dir + "/two_arm.toml");
    CHECK(two.arms.size() == 2);
    const auto three = load_bandit_config(dir + "/three_arm.toml");
    REQUIRE(three.arms.size() == 3);
    CHECK(three.arms[2].true_ctr == 0.044);
    CHECK(three.experiment.burn_in == 1500);
    CHECK(three.experiment.seed == 2022);
  }

  TEST_CASE("eval report JSON") {
    EvalReport r;
    r.accuracy = 0.5;
    r.confusion.counts(0, 1) = 3;
    const Json j = to_json(r);
    CHECK(j.at("accuracy").get<double>() == 0.5);
    CHECK(j.contains("f1"));
    CHECK(j.at("confusion_matrix").at(0).at(1).get<int>() == 3);
  }
}
