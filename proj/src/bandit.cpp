#include "nudge/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nudge/errors.hpp"

namespace nudge {

BetaPosterior::BetaPosterior(double a, double b) : a_(a), b_(b) {
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidArgument("Beta posterior parameters must be positive and finite (a=" +
                          std::to_string(a) + ", b=" + std::to_string(b) + ")");
  }
}

BanditArm make_arm(std::string id, const BetaPosterior& prior) {
  return BanditArm{std::move(id), prior, 0, 0};
}

void ExperimentConfig::validate() const {
  if (!(prior_a > 0.0) || !(prior_b > 0.0)) {
    throw InvalidArgument("prior_a and prior_b must be positive");
  }
  if (!(significance > 0.0 && significance < 1.0)) {
    throw InvalidArgument("significance must lie in (0, 1)");
  }
  if (!(value_remaining_threshold > 0.0 && value_remaining_threshold < 1.0)) {
    throw InvalidArgument("value_remaining_threshold must lie in (0, 1)");
  }
  if (mc_samples < 1000) {
    throw InvalidArgument("mc_samples must be at least 1000");
  }
  if (check_interval < 1) {
    throw InvalidArgument("check_interval must be positive");
  }
  if (max_iterations < 1) {
    throw InvalidArgument("max_iterations must be positive");
  }
  if (burn_in >= max_iterations) {
    throw InvalidArgument("burn_in must be smaller than max_iterations");
  }
}

std::size_t thompson_select(std::span<const BanditArm> arms, RandomStream& rng) {
  if (arms.empty()) {
    throw InvalidArgument("thompson_select: arm list is empty");
  }
  std::size_t best = 0;
  double best_theta = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < arms.size(); ++i) {
    const double theta = arms[i].posterior.sample(rng);
    if (theta > best_theta) {
      best_theta = theta;
      best = i;
    }
  }
  return best;
}

BanditArm record_outcome(BanditArm arm, bool clicked) {
  arm.impressions += 1;
  if (clicked) {
    arm.clicks += 1;
  }
  arm.posterior.observe(clicked);
  return arm;
}

std::size_t quantile_index(double q, std::size_t n) noexcept {
  if (n == 0) {
    return 0;
  }
  // The tolerance absorbs representation error in q * n (0.95 * 10000 is
  // 9500 mathematically but not necessarily in binary).
  const double scaled = q * static_cast<double>(n);
  const double rank = std::ceil(scaled - 1e-9 * std::max(1.0, scaled));
  if (rank <= 1.0) {
    return 0;
  }
  return std::min(static_cast<std::size_t>(rank) - 1, n - 1);
}

Eigen::MatrixXd sample_posteriors(std::span<const BanditArm> arms, std::uint64_t mc_samples,
                                  RandomStream& rng) {
  const auto rows = static_cast<Eigen::Index>(mc_samples);
  const auto cols = static_cast<Eigen::Index>(arms.size());
  Eigen::MatrixXd draws(rows, cols);
  for (Eigen::Index d = 0; d < rows; ++d) {
    for (Eigen::Index i = 0; i < cols; ++i) {
      draws(d, i) = arms[static_cast<std::size_t>(i)].posterior.sample(rng);
    }
  }
  return draws;
}

Eigen::VectorXd relative_value_remaining(const Eigen::MatrixXd& draws, std::size_t winner) {
  const auto w = static_cast<Eigen::Index>(winner);
  const Eigen::VectorXd best = draws.rowwise().maxCoeff();
  const Eigen::VectorXd gap = best - draws.col(w);
  Eigen::VectorXd out(draws.rows());
  for (Eigen::Index d = 0; d < draws.rows(); ++d) {
    // A zero gap stays zero even when θ_w underflows to 0.
    out(d) = gap(d) == 0.0 ? 0.0 : gap(d) / draws(d, w);
  }
  return out;
}

ValueRemainingReport value_remaining(std::span<const BanditArm> arms, double significance,
                                     std::uint64_t mc_samples, RandomStream& rng) {
  if (arms.size() < 2) {
    throw InvalidArgument("value_remaining: at least 2 arms required");
  }
  if (mc_samples < 1) {
    throw InvalidArgument("value_remaining: mc_samples must be positive");
  }
  if (!(significance > 0.0 && significance < 1.0)) {
    throw InvalidArgument("value_remaining: significance must lie in (0, 1)");
  }

  const Eigen::MatrixXd draws = sample_posteriors(arms, mc_samples, rng);

  std::vector<std::uint64_t> wins(arms.size(), 0);
  for (Eigen::Index d = 0; d < draws.rows(); ++d) {
    Eigen::Index argmax = 0;
    draws.row(d).maxCoeff(&argmax);
    wins[static_cast<std::size_t>(argmax)] += 1;
  }

  ValueRemainingReport report;
  report.winner_index = static_cast<std::size_t>(
      std::distance(wins.begin(), std::max_element(wins.begin(), wins.end())));
  report.win_fractions.reserve(arms.size());
  for (const auto count : wins) {
    report.win_fractions.push_back(static_cast<double>(count) / static_cast<double>(mc_samples));
  }

  Eigen::VectorXd remaining = relative_value_remaining(draws, report.winner_index);
  const std::size_t k = quantile_index(1.0 - significance, static_cast<std::size_t>(remaining.size()));
  auto* first = remaining.data();
  std::nth_element(first, first + k, first + remaining.size());
  report.quantile_value_remaining = first[k];
  return report;
}

bool should_terminate(std::uint64_t iteration, const ValueRemainingReport& report,
                      const ExperimentConfig& config) noexcept {
  return iteration >= config.burn_in &&
         report.quantile_value_remaining < config.value_remaining_threshold;
}

}  // namespace nudge
