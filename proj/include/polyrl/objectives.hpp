#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "polyrl/types.hpp"

namespace polyrl {

enum class ObjectiveKind { kPolychromic, kPassAtN, kMeanReward };

std::string_view objective_name(ObjectiveKind kind) noexcept;
ObjectiveKind parse_objective(std::string_view name);

// Fraction of distinct non-degenerate clusters in the set. Degenerate members
// drop out of the numerator only; the denominator stays n.
double diversity(std::span<const ClusterAssignment> members, std::size_t n);

double mean_reward_score(std::span<const double> rewards);

// mean(rewards) * diversity(clusters)
double polychromic_score(std::span<const double> rewards,
                         std::span<const ClusterAssignment> clusters);

double pass_at_n_score(std::span<const double> rewards);

/// Symmetric set objective over n generations.
class SetObjective {
 public:
  SetObjective(ObjectiveKind kind, std::size_t arity);

  ObjectiveKind kind() const noexcept { return kind_; }
  std::size_t arity() const noexcept { return arity_; }
  bool needs_clusters() const noexcept { return kind_ == ObjectiveKind::kPolychromic; }

  /// `clusters` may be empty for objectives that ignore diversity.
  double score(std::span<const double> rewards,
               std::span<const ClusterAssignment> clusters) const;

 private:
  ObjectiveKind kind_;
  std::size_t arity_;
};

/// Per-generation DivRL bonus (N/c - 1)/(N - 1), where c is the size of the
/// generation's own cluster. Degenerate generations share cluster 100.
double divrl_bonus(std::size_t i, std::span<const ClusterAssignment> clusters);

struct PassAtNMarginals {
  double correct;
  double incorrect;
};

/// Closed-form marginal set advantages of the pass@n objective when a correct
/// generation is drawn with probability p.
PassAtNMarginals analytic_passn_marginals(double p, std::size_t n);

}  // namespace polyrl
