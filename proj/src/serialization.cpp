#include "nudge/serialization.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "nudge/errors.hpp"

namespace nudge {

Json to_json(const BanditArm& arm) {
  return Json{{"id", arm.id},
              {"a", arm.posterior.a()},
              {"b", arm.posterior.b()},
              {"impressions", arm.impressions},
              {"clicks", arm.clicks}};
}

BanditArm arm_from_json(const Json& j) {
  BanditArm arm;
  arm.id = j.at("id").get<std::string>();
  arm.posterior = BetaPosterior(j.at("a").get<double>(), j.at("b").get<double>());
  arm.impressions = j.at("impressions").get<std::uint64_t>();
  arm.clicks = j.at("clicks").get<std::uint64_t>();
  if (arm.clicks > arm.impressions) {
    throw InvalidArgument("arm '" + arm.id + "': clicks exceed impressions");
  }
  return arm;
}

Json to_json(const ExperimentConfig& c) {
  return Json{{"prior_a", c.prior_a},
              {"prior_b", c.prior_b},
              {"burn_in", c.burn_in},
              {"significance", c.significance},
              {"value_remaining_threshold", c.value_remaining_threshold},
              {"mc_samples", c.mc_samples},
              {"check_interval", c.check_interval},
              {"max_iterations", c.max_iterations},
              {"seed", c.seed},
              {"trajectory_stride", c.trajectory_stride}};
}

Json to_json(const ValueRemainingReport& report) {
  return Json{{"winner_index", report.winner_index},
              {"win_fractions", report.win_fractions},
              {"quantile_value_remaining", report.quantile_value_remaining},
              {"terminated", report.terminated}};
}

Json summary_json(const ExperimentResult& result, std::span<const ArmSpec> specs,
                  const ExperimentConfig& config) {
  Json arms = Json::array();
  for (std::size_t i = 0; i < result.final_arms.size(); ++i) {
    Json arm = to_json(result.final_arms[i]);
    arm["true_ctr"] = specs[i].true_ctr;
    arm["posterior_mean"] = result.final_arms[i].posterior.mean();
    arm["empirical_ctr"] = result.final_arms[i].empirical_ctr();
    arm["traffic_share"] = static_cast<double>(result.traffic[i]) / static_cast<double>(result.iterations_run);
    arms.push_back(std::move(arm));
  }
  return Json{{"winner_id", result.winner_id},
              {"iterations_run", result.iterations_run},
              {"terminated_early", result.terminated_early},
              {"traffic", result.traffic},
              {"clicks", result.clicks},
              {"arms", std::move(arms)},
              {"final_report", to_json(result.final_report)},
              {"config", to_json(config)}};
}

Json summary_json(const ReplicationSummary& s, std::span<const ArmSpec> specs,
                  const ExperimentConfig& config) {
  Json win_counts = Json::object();
  Json mean_share = Json::object();
  for (std::size_t i = 0; i < s.arm_ids.size(); ++i) {
    win_counts[s.arm_ids[i]] = s.win_counts[i];
    mean_share[s.arm_ids[i]] = s.mean_traffic_share(i);
  }
  Json runs = Json::array();
  for (std::size_t r = 0; r < s.n_runs; ++r) {
    std::vector<double> shares;
    for (std::size_t i = 0; i < s.arm_ids.size(); ++i) {
      shares.push_back(s.traffic_share(r, i));
    }
    runs.push_back(Json{{"seed", s.base_seed + r},
                        {"winner_id", s.winners[r]},
                        {"iterations_run", s.iterations_run[r]},
                        {"terminated_early", static_cast<bool>(s.terminated_early[r])},
                        {"traffic", s.traffic[r]},
                        {"clicks", s.clicks[r]},
                        {"traffic_share", shares}});
  }
  std::vector<std::uint64_t> sorted_iterations = s.iterations_run;
  std::sort(sorted_iterations.begin(), sorted_iterations.end());
  double mean_iterations = 0.0;
  for (const auto it : sorted_iterations) {
    mean_iterations += static_cast<double>(it) / static_cast<double>(s.n_runs);
  }
  Json arms = Json::array();
  for (const auto& spec : specs) {
    arms.push_back(Json{{"id", spec.id}, {"true_ctr", spec.true_ctr}});
  }
  return Json{{"n_runs", s.n_runs},
              {"base_seed", s.base_seed},
              {"arms", std::move(arms)},
              {"win_counts", std::move(win_counts)},
              {"terminated_early_count", s.terminated_early_count()},
              {"termination_iterations",
               Json{{"min", sorted_iterations.front()},
                    {"median", sorted_iterations[sorted_iterations.size() / 2]},
                    {"max", sorted_iterations.back()},
                    {"mean", mean_iterations}}},
              {"mean_traffic_share", std::move(mean_share)},
              {"runs", std::move(runs)},
              {"config", to_json(config)}};
}

Json to_json(const EvalReport& report) {
  Json per_class = Json::object();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& c = report.per_class[k];
    per_class[std::string(to_string(label_from_index(k)))] =
        Json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
  }
  Json confusion = Json::array();
  for (Eigen::Index r = 0; r < 3; ++r) {
    confusion.push_back(Json::array({report.confusion.counts(r, 0), report.confusion.counts(r, 1),
                                     report.confusion.counts(r, 2)}));
  }
  return Json{{"accuracy", report.accuracy},
              {"precision", report.precision},
              {"recall", report.recall},
              {"f1", report.f1},
              {"macro_f1_mean", report.macro_f1_mean},
              {"per_class", std::move(per_class)},
              {"confusion_matrix", std::move(confusion)}};
}

Json to_json(const MetaLearnerModel& model) {
  Json weights = Json::array();
  for (Eigen::Index r = 0; r < model.weights.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(model.weights.cols()));
    for (Eigen::Index c = 0; c < model.weights.cols(); ++c) {
      row[static_cast<std::size_t>(c)] = model.weights(r, c);
    }
    weights.push_back(std::move(row));
  }
  return Json{{"feature_dim", model.feature_dim},
              {"weights", std::move(weights)},
              {"hyperparams",
               Json{{"learning_rate", model.hyperparams.learning_rate},
                    {"epochs", model.hyperparams.epochs},
                    {"l2_penalty", model.hyperparams.l2_penalty},
                    {"seed", model.hyperparams.seed}}},
              {"final_loss", model.final_loss}};
}

MetaLearnerModel model_from_json(const Json& j) {
  const auto feature_dim = j.at("feature_dim").get<Eigen::Index>();
  MetaLearnerModel model = MetaLearnerModel::zeros(feature_dim);
  const auto& rows = j.at("weights");
  if (!rows.is_array() || rows.size() != kNumClasses) {
    throw InvalidArgument("model JSON: weights must have one row per class");
  }
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    const auto row = rows[r].get<std::vector<double>>();
    if (row.size() != static_cast<std::size_t>(feature_dim + 1)) {
      throw InvalidArgument("model JSON: weight row length must be feature_dim + 1");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      model.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
  }
  if (!model.weights.allFinite()) {
    throw InvalidArgument("model JSON: weights must be finite");
  }
  if (const auto it = j.find("hyperparams"); it != j.end()) {
    model.hyperparams.learning_rate = it->value("learning_rate", model.hyperparams.learning_rate);
    model.hyperparams.epochs = it->value("epochs", model.hyperparams.epochs);
    model.hyperparams.l2_penalty = it->value("l2_penalty", model.hyperparams.l2_penalty);
    model.hyperparams.seed = it->value("seed", model.hyperparams.seed);
  }
  model.final_loss = j.value("final_loss", 0.0);
  return model;
}

namespace {

template <class T>
void read_unsigned(const toml::table& table, std::string_view key, T& out) {
  const auto* node = table.get(key);
  if (node == nullptr) {
    return;
  }
  const auto value = node->value<std::int64_t>();
  if (!value || *value < 0) {
    throw ConfigError("[experiment] " + std::string(key) + " must be a non-negative integer");
  }
  out = static_cast<T>(*value);
}

void read_real(const toml::table& table, std::string_view key, double& out) {
  const auto* node = table.get(key);
  if (node == nullptr) {
    return;
  }
  // Integers are accepted for real-valued keys (e.g. prior_a = 1).
  const auto value = node->value<double>();
  if (!value) {
    throw ConfigError("[experiment] " + std::string(key) + " must be a number");
  }
  out = *value;
}

}  // namespace

BanditConfigFile parse_bandit_config(std::string_view toml_text, std::string_view source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }

  BanditConfigFile out;
  if (const auto* experiment = root["experiment"].as_table()) {
    auto& c = out.experiment;
    read_real(*experiment, "prior_a", c.prior_a);
    read_real(*experiment, "prior_b", c.prior_b);
    read_unsigned(*experiment, "burn_in", c.burn_in);
    read_real(*experiment, "significance", c.significance);
    read_real(*experiment, "value_remaining_threshold", c.value_remaining_threshold);
    read_unsigned(*experiment, "mc_samples", c.mc_samples);
    read_unsigned(*experiment, "check_interval", c.check_interval);
    read_unsigned(*experiment, "max_iterations", c.max_iterations);
    read_unsigned(*experiment, "seed", c.seed);
    read_unsigned(*experiment, "trajectory_stride", c.trajectory_stride);
  } else if (root.contains("experiment")) {
    throw ConfigError("'experiment' must be a table");
  }

  if (const auto* arms = root["arms"].as_array()) {
    for (std::size_t i = 0; i < arms->size(); ++i) {
      const auto* arm = arms->get(i)->as_table();
      if (arm == nullptr) {
        throw ConfigError("[[arms]] entry " + std::to_string(i + 1) + " must be a table");
      }
      ArmSpec spec;
      const auto id = (*arm)["id"].value<std::string>();
      const auto ctr = (*arm)["true_ctr"].value<double>();
      if (!id || !ctr) {
        throw ConfigError("[[arms]] entry " + std::to_string(i + 1) + " needs string 'id' and number 'true_ctr'");
      }
      spec.id = *id;
      spec.true_ctr = *ctr;
      out.arms.push_back(std::move(spec));
    }
  } else if (root.contains("arms")) {
    throw ConfigError("'arms' must be an array of tables");
  }

  try {
    validate_specs(out.arms);
    out.experiment.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

BanditConfigFile load_bandit_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_bandit_config(buffer.str(), path.string());
}

}  // namespace nudge
