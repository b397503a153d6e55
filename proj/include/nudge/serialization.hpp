#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "nudge/bandit.hpp"
#include "nudge/ensemble.hpp"
#include "nudge/metrics.hpp"
#include "nudge/simulation.hpp"

namespace nudge {

using Json = nlohmann::ordered_json;

/// {"id", "a", "b", "impressions", "clicks"}
Json to_json(const BanditArm& arm);
BanditArm arm_from_json(const Json& j);

Json to_json(const ExperimentConfig& config);
Json to_json(const ValueRemainingReport& report);

/// Run summary: winner, iteration count, per-arm traffic and final posteriors.
Json summary_json(const ExperimentResult& result, std::span<const ArmSpec> specs,
                  const ExperimentConfig& config);

/// Aggregate over replications: win counts, termination and traffic-share distributions.
Json summary_json(const ReplicationSummary& summary, std::span<const ArmSpec> specs,
                  const ExperimentConfig& config);

/// {"accuracy", "precision", "recall", "f1", "per_class", ...}
Json to_json(const EvalReport& report);

/// {"feature_dim", "weights" (row-major, one row per class), "hyperparams", ...}
Json to_json(const MetaLearnerModel& model);
MetaLearnerModel model_from_json(const Json& j);

/// Experiment section plus arm list, as read from a TOML file.
struct BanditConfigFile {
  ExperimentConfig experiment;
  std::vector<ArmSpec> arms;
};

/*
 * TOML layout:
 *
 *   [experiment]            # every ExperimentConfig field, all optional
 *   burn_in = 1500
 *   [[arms]]
 *   id = "arm1"
 *   true_ctr = 0.021
 *
 * Throws ConfigError on parse or validation failure.
 */
BanditConfigFile parse_bandit_config(std::string_view toml_text, std::string_view source = "<config>");
BanditConfigFile load_bandit_config(const std::filesystem::path& path);

}  // namespace nudge
