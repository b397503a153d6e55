#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nudge/random.hpp"

namespace nudge {

/// Conjugate Beta(a, b) belief over an arm's click-through rate.
class BetaPosterior {
 public:
  BetaPosterior() = default;
  /// Throws InvalidArgument unless a > 0 and b > 0.
  BetaPosterior(double a, double b);

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  double mean() const noexcept { return a_ / (a_ + b_); }

  void observe(bool clicked) noexcept {
    if (clicked) {
      a_ += 1.0;
    } else {
      b_ += 1.0;
    }
  }

  double sample(RandomStream& rng) const { return rng.beta(a_, b_); }

  friend bool operator==(const BetaPosterior&, const BetaPosterior&) = default;

 private:
  double a_ = 1.0;
  double b_ = 1.0;
};

struct BanditArm {
  std::string id;
  BetaPosterior posterior;
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;

  double empirical_ctr() const noexcept {
    return impressions == 0 ? 0.0 : static_cast<double>(clicks) / static_cast<double>(impressions);
  }

  friend bool operator==(const BanditArm&, const BanditArm&) = default;
};

BanditArm make_arm(std::string id, const BetaPosterior& prior);

/// Stopping-rule and run parameters. Defaults follow the reference experiment.
struct ExperimentConfig {
  double prior_a = 1.0;
  double prior_b = 1.0;
  std::uint64_t burn_in = 1500;
  double significance = 0.05;
  double value_remaining_threshold = 0.01;
  std::uint64_t mc_samples = 10000;
  std::uint64_t check_interval = 1;
  std::uint64_t max_iterations = 100000;
  std::uint64_t seed = 2022;
  /// Trajectory sampling: 0 records check points only, k records every k-th
  /// iteration plus every check point.
  std::uint64_t trajectory_stride = 1;

  BetaPosterior prior() const { return BetaPosterior(prior_a, prior_b); }

  /// Throws InvalidArgument naming the first violated constraint.
  void validate() const;
};

struct ValueRemainingReport {
  std::size_t winner_index = 0;
  std::vector<double> win_fractions;
  double quantile_value_remaining = 0.0;
  bool terminated = false;

  friend bool operator==(const ValueRemainingReport&, const ValueRemainingReport&) = default;
};

/// Samples one θ per arm, in arm order, and returns the argmax (ties to lowest index).
std::size_t thompson_select(std::span<const BanditArm> arms, RandomStream& rng);

BanditArm record_outcome(BanditArm arm, bool clicked);

/// Zero-based index of the empirical q-quantile in a sorted sample of size n:
/// ceil(q * n) - 1, clamped to [0, n - 1].
std::size_t quantile_index(double q, std::size_t n) noexcept;

/// Draws mc_samples x arms posterior samples; row d holds draw d.
Eigen::MatrixXd sample_posteriors(std::span<const BanditArm> arms, std::uint64_t mc_samples,
                                  RandomStream& rng);

/// Relative value remaining (max_i θ_i - θ_w) / θ_w of each row against column w.
Eigen::VectorXd relative_value_remaining(const Eigen::MatrixXd& draws, std::size_t winner);

/*
 * Monte-Carlo value-remaining estimate.
 *
 * The winner is the arm that is the per-draw argmax most often (ties to the
 * lowest index). The reported quantile is the type-1 empirical
 * (1 - significance)-quantile of the per-draw relative value remaining.
 * `terminated` is left false; the stopping decision belongs to
 * should_terminate.
 */
ValueRemainingReport value_remaining(std::span<const BanditArm> arms, double significance,
                                     std::uint64_t mc_samples, RandomStream& rng);

/// True iff iteration >= burn_in and the quantile is strictly below the threshold.
bool should_terminate(std::uint64_t iteration, const ValueRemainingReport& report,
                      const ExperimentConfig& config) noexcept;

}  // namespace nudge
