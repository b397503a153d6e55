#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nudge/bandit.hpp"

namespace nudge {

/// Ground-truth arm for a simulated experiment.
struct ArmSpec {
  std::string id;
  double true_ctr = 0.0;
};

struct TrajectoryPoint {
  std::uint64_t iteration = 0;
  std::vector<std::uint64_t> impressions;
  std::vector<std::uint64_t> clicks;
  std::vector<double> posterior_means;
  /// Present only on iterations where the stopping rule was evaluated.
  std::optional<double> quantile_value_remaining;

  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct ExperimentResult {
  std::vector<std::string> arm_ids;
  std::string winner_id;
  std::size_t winner_index = 0;
  std::uint64_t iterations_run = 0;
  std::vector<std::uint64_t> traffic;
  std::vector<std::uint64_t> clicks;
  std::vector<BanditArm> final_arms;
  ValueRemainingReport final_report;
  std::vector<TrajectoryPoint> trajectory;
  bool terminated_early = false;

  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

/// Throws InvalidArgument unless there are >= 2 uniquely named arms with CTRs in (0, 1).
void validate_specs(std::span<const ArmSpec> specs);

/*
 * One user per iteration: Thompson-select an arm, draw a Bernoulli click at
 * the arm's true CTR, update its posterior. From burn_in onward, every
 * check_interval-th iteration evaluates value remaining and may stop.
 *
 * Selection, click, and Monte-Carlo draws use separate substreams of
 * config.seed, so mc_samples does not perturb the arrival sequence.
 */
ExperimentResult run_experiment(std::span<const ArmSpec> specs, const ExperimentConfig& config);

struct ReplicationSummary {
  std::uint64_t n_runs = 0;
  std::uint64_t base_seed = 0;
  std::vector<std::string> arm_ids;
  std::vector<std::uint64_t> win_counts;
  /// Per run, in seed order.
  std::vector<std::string> winners;
  std::vector<std::uint64_t> iterations_run;
  std::vector<bool> terminated_early;
  std::vector<std::vector<std::uint64_t>> traffic;
  std::vector<std::vector<std::uint64_t>> clicks;

  double traffic_share(std::size_t run, std::size_t arm) const;
  double mean_traffic_share(std::size_t arm) const;
  std::uint64_t terminated_early_count() const;
};

/// Runs seeds base_seed .. base_seed + n_runs - 1. Trajectories are not retained.
ReplicationSummary run_replications(std::span<const ArmSpec> specs, const ExperimentConfig& config,
                                    std::uint64_t n_runs, std::uint64_t base_seed);

/// CSV: iteration,arm_id,impressions,clicks,posterior_mean,quantile_value_remaining
void write_trajectory_csv(std::ostream& out, const ExperimentResult& result);

}  // namespace nudge
