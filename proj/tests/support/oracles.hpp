#pragma once

// Reference implementations used only by tests. None of these call into the
// library code they check: Beta draws come from <random>, quantiles from a
// full sort, vote rules from label counting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

namespace nudge::oracle {

struct BetaParams {
  double a;
  double b;
};

inline double draw_beta(std::mt19937_64& gen, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(gen);
  const double y = gb(gen);
  return x / (x + y);
}

struct ValueRemainingOracle {
  std::size_t winner = 0;
  std::vector<double> win_fractions;
  double quantile = 0.0;
};

/// Brute force: store every draw, count wins, full sort, index ceil(q n) - 1.
inline ValueRemainingOracle brute_force_value_remaining(const std::vector<BetaParams>& arms, double significance,
                                                        std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<std::vector<double>> draws(samples, std::vector<double>(arms.size()));
  std::vector<std::size_t> wins(arms.size(), 0);
  for (std::size_t d = 0; d < samples; ++d) {
    std::size_t best = 0;
    for (std::size_t i = 0; i < arms.size(); ++i) {
      draws[d][i] = draw_beta(gen, arms[i].a, arms[i].b);
      if (draws[d][i] > draws[d][best]) {
        best = i;
      }
    }
    wins[best] += 1;
  }
  ValueRemainingOracle out;
  for (std::size_t i = 0; i < arms.size(); ++i) {
    if (wins[i] > wins[out.winner]) {
      out.winner = i;
    }
    out.win_fractions.push_back(static_cast<double>(wins[i]) / static_cast<double>(samples));
  }
  std::vector<double> remaining;
  remaining.reserve(samples);
  for (const auto& row : draws) {
    const double best = *std::max_element(row.begin(), row.end());
    remaining.push_back((best - row[out.winner]) / row[out.winner]);
  }
  std::sort(remaining.begin(), remaining.end());
  const double rank = std::ceil((1.0 - significance) * static_cast<double>(samples) - 1e-9);
  const auto idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  out.quantile = remaining[std::min(idx, samples - 1)];
  return out;
}

/// Label-counting form of the Stack1 rule over label indices 0..2.
inline int stack1_rule(const std::array<int, 3>& preds, std::size_t tiebreaker) {
  std::array<int, 3> counts{};
  for (const int p : preds) {
    counts[static_cast<std::size_t>(p)] += 1;
  }
  for (int label = 0; label < 3; ++label) {
    if (counts[static_cast<std::size_t>(label)] >= 2) {
      return label;
    }
  }
  return preds[tiebreaker];
}

/*
 * Expected Stack1 accuracy for independent base models with the given
 * accuracies and errors spread uniformly over the two wrong labels:
 * enumerate all 27 outcome triples with truth fixed at label 0.
 */
inline double stack1_expected_accuracy(const std::array<double, 3>& accuracy, std::size_t tiebreaker) {
  double total = 0.0;
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      for (int c = 0; c < 3; ++c) {
        const std::array<int, 3> preds = {a, b, c};
        double p = 1.0;
        for (std::size_t m = 0; m < 3; ++m) {
          p *= preds[m] == 0 ? accuracy[m] : (1.0 - accuracy[m]) / 2.0;
        }
        if (stack1_rule(preds, tiebreaker) == 0) {
          total += p;
        }
      }
    }
  }
  return total;
}

/// Central differences of a scalar function of a flat parameter vector.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double eps) {
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

/// Softmax cross-entropy with L2 on non-bias weights, written with plain loops.
/// weights is row-major: classes x (dim + 1), last column bias.
inline double softmax_loss(const std::vector<double>& weights, const std::vector<std::vector<double>>& x,
                           const std::vector<int>& y, double l2) {
  const std::size_t classes = 3;
  const std::size_t cols = x.front().size() + 1;
  double loss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::array<double, 3> logits{};
    for (std::size_t k = 0; k < classes; ++k) {
      double z = weights[k * cols + cols - 1];
      for (std::size_t j = 0; j + 1 < cols; ++j) {
        z += weights[k * cols + j] * x[i][j];
      }
      logits[k] = z;
    }
    const double m = *std::max_element(logits.begin(), logits.end());
    double s = 0.0;
    for (const double z : logits) {
      s += std::exp(z - m);
    }
    loss += m + std::log(s) - logits[static_cast<std::size_t>(y[i])];
  }
  loss /= static_cast<double>(x.size());
  double reg = 0.0;
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t j = 0; j + 1 < cols; ++j) {
      reg += weights[k * cols + j] * weights[k * cols + j];
    }
  }
  return loss + 0.5 * l2 * reg;
}

}  // namespace nudge::oracle
