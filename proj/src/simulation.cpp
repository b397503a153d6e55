#include "nudge/simulation.hpp"

#include <algorithm>
#include <ostream>
#include <set>

#include "nudge/csv.hpp"
#include "nudge/errors.hpp"
#include "nudge/format.hpp"

namespace nudge {

void validate_specs(std::span<const ArmSpec> specs) {
  if (specs.size() < 2) {
    throw InvalidArgument("at least 2 arms required");
  }
  std::set<std::string> seen;
  for (const auto& spec : specs) {
    if (spec.id.empty()) {
      throw InvalidArgument("arm id must not be empty");
    }
    if (!seen.insert(spec.id).second) {
      throw InvalidArgument("duplicate arm id '" + spec.id + "'");
    }
    if (!(spec.true_ctr > 0.0 && spec.true_ctr < 1.0)) {
      throw InvalidArgument("arm '" + spec.id + "': true_ctr must lie in (0, 1)");
    }
  }
}

namespace {

TrajectoryPoint snapshot(std::uint64_t iteration, std::span<const BanditArm> arms) {
  TrajectoryPoint point;
  point.iteration = iteration;
  point.impressions.reserve(arms.size());
  point.clicks.reserve(arms.size());
  point.posterior_means.reserve(arms.size());
  for (const auto& arm : arms) {
    point.impressions.push_back(arm.impressions);
    point.clicks.push_back(arm.clicks);
    point.posterior_means.push_back(arm.posterior.mean());
  }
  return point;
}

}  // namespace

ExperimentResult run_experiment(std::span<const ArmSpec> specs, const ExperimentConfig& config) {
  validate_specs(specs);
  config.validate();

  const BetaPosterior prior = config.prior();
  std::vector<BanditArm> arms;
  arms.reserve(specs.size());
  for (const auto& spec : specs) {
    arms.push_back(make_arm(spec.id, prior));
  }

  auto selection_rng = RandomStream::substream(config.seed, Substream::selection);
  auto click_rng = RandomStream::substream(config.seed, Substream::clicks);
  auto mc_rng = RandomStream::substream(config.seed, Substream::value_remaining);

  ExperimentResult result;
  std::optional<ValueRemainingReport> last_report;
  std::uint64_t last_report_iteration = 0;
  std::uint64_t iteration = 0;

  while (iteration < config.max_iterations) {
    ++iteration;
    const std::size_t chosen = thompson_select(arms, selection_rng);
    const bool clicked = click_rng.bernoulli(specs[chosen].true_ctr);
    arms[chosen] = record_outcome(std::move(arms[chosen]), clicked);

    const bool check = iteration >= config.burn_in && iteration % config.check_interval == 0;
    const bool record = config.trajectory_stride > 0 && iteration % config.trajectory_stride == 0;
    std::optional<double> quantile;
    if (check) {
      last_report = value_remaining(arms, config.significance, config.mc_samples, mc_rng);
      last_report_iteration = iteration;
      quantile = last_report->quantile_value_remaining;
      last_report->terminated = should_terminate(iteration, *last_report, config);
    }
    if (check || record) {
      auto point = snapshot(iteration, arms);
      point.quantile_value_remaining = quantile;
      result.trajectory.push_back(std::move(point));
    }
    if (check && last_report->terminated) {
      result.terminated_early = true;
      break;
    }
  }

  if (!last_report || last_report_iteration != iteration) {
    // Ran to the cap without a check on the final iteration: evaluate once more
    // so the winner reflects the final posteriors.
    last_report = value_remaining(arms, config.significance, config.mc_samples, mc_rng);
    last_report->terminated = false;
  }

  result.arm_ids.reserve(arms.size());
  for (const auto& arm : arms) {
    result.arm_ids.push_back(arm.id);
    result.traffic.push_back(arm.impressions);
    result.clicks.push_back(arm.clicks);
  }
  result.iterations_run = iteration;
  result.final_report = *last_report;
  result.winner_index = last_report->winner_index;
  result.winner_id = arms[result.winner_index].id;
  result.final_arms = std::move(arms);
  return result;
}

double ReplicationSummary::traffic_share(std::size_t run, std::size_t arm) const {
  const auto total = iterations_run.at(run);
  return total == 0 ? 0.0 : static_cast<double>(traffic.at(run).at(arm)) / static_cast<double>(total);
}

double ReplicationSummary::mean_traffic_share(std::size_t arm) const {
  if (n_runs == 0) {
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t r = 0; r < n_runs; ++r) {
    sum += traffic_share(r, arm);
  }
  return sum / static_cast<double>(n_runs);
}

std::uint64_t ReplicationSummary::terminated_early_count() const {
  return static_cast<std::uint64_t>(std::count(terminated_early.begin(), terminated_early.end(), true));
}

ReplicationSummary run_replications(std::span<const ArmSpec> specs, const ExperimentConfig& config,
                                    std::uint64_t n_runs, std::uint64_t base_seed) {
  if (n_runs < 1) {
    throw InvalidArgument("n_runs must be at least 1");
  }
  validate_specs(specs);
  config.validate();

  ReplicationSummary summary;
  summary.n_runs = n_runs;
  summary.base_seed = base_seed;
  for (const auto& spec : specs) {
    summary.arm_ids.push_back(spec.id);
  }
  summary.win_counts.assign(specs.size(), 0);

  ExperimentConfig run_config = config;
  run_config.trajectory_stride = 0;
  for (std::uint64_t r = 0; r < n_runs; ++r) {
    run_config.seed = base_seed + r;
    ExperimentResult result = run_experiment(specs, run_config);
    summary.win_counts[result.winner_index] += 1;
    summary.winners.push_back(result.winner_id);
    summary.iterations_run.push_back(result.iterations_run);
    summary.terminated_early.push_back(result.terminated_early);
    summary.traffic.push_back(std::move(result.traffic));
    summary.clicks.push_back(std::move(result.clicks));
  }
  return summary;
}

void write_trajectory_csv(std::ostream& out, const ExperimentResult& result) {
  out << "iteration,arm_id,impressions,clicks,posterior_mean,quantile_value_remaining\n";
  for (const auto& point : result.trajectory) {
    for (std::size_t i = 0; i < result.arm_ids.size(); ++i) {
      out << point.iteration << ',' << csv::escape(result.arm_ids[i]) << ',' << point.impressions[i] << ','
          << point.clicks[i] << ',' << format_double(point.posterior_means[i]) << ',';
      if (point.quantile_value_remaining) {
        out << format_double(*point.quantile_value_remaining);
      }
      out << '\n';
    }
  }
}

}  // namespace nudge
