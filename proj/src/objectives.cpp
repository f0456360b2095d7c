#include "polyrl/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polyrl {

std::string_view objective_name(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::kPolychromic: return "polychromic";
    case ObjectiveKind::kPassAtN: return "pass_at_n";
    case ObjectiveKind::kMeanReward: return "mean_reward";
  }
  return "unknown";
}

ObjectiveKind parse_objective(std::string_view name) {
  if (name == "polychromic") return ObjectiveKind::kPolychromic;
  if (name == "pass_at_n" || name == "pass@n") return ObjectiveKind::kPassAtN;
  if (name == "mean_reward") return ObjectiveKind::kMeanReward;
  throw Error(ErrorCode::kInvalidParams, "unknown objective '" + std::string(name) + "'");
}

double diversity(std::span<const ClusterAssignment> members, std::size_t n) {
  if (members.empty()) {
    throw Error(ErrorCode::kMissingClusters, "diversity needs cluster assignments");
  }
  if (members.size() != n) {
    throw Error(ErrorCode::kLengthMismatch, "diversity: expected " + std::to_string(n) +
                                                " members, got " + std::to_string(members.size()));
  }
  // n is small (set size), a sorted scratch buffer beats a hash set here.
  std::vector<int> ids;
  ids.reserve(n);
  for (const auto& c : members) {
    if (!c.is_degenerate()) ids.push_back(c.id());
  }
  std::sort(ids.begin(), ids.end());
  const auto distinct = static_cast<std::size_t>(
      std::unique(ids.begin(), ids.end()) - ids.begin());
  return static_cast<double>(distinct) / static_cast<double>(n);
}

double mean_reward_score(std::span<const double> rewards) {
  if (rewards.empty()) throw Error(ErrorCode::kEmptyInput, "empty set");
  return std::accumulate(rewards.begin(), rewards.end(), 0.0) /
         static_cast<double>(rewards.size());
}

double polychromic_score(std::span<const double> rewards,
                         std::span<const ClusterAssignment> clusters) {
  if (clusters.empty()) {
    throw Error(ErrorCode::kMissingClusters, "polychromic objective needs clusters");
  }
  if (clusters.size() != rewards.size()) {
    throw Error(ErrorCode::kLengthMismatch, "rewards and clusters differ in length");
  }
  return mean_reward_score(rewards) * diversity(clusters, rewards.size());
}

double pass_at_n_score(std::span<const double> rewards) {
  if (rewards.empty()) throw Error(ErrorCode::kEmptyInput, "empty set");
  return *std::max_element(rewards.begin(), rewards.end());
}

SetObjective::SetObjective(ObjectiveKind kind, std::size_t arity)
    : kind_(kind), arity_(arity) {
  if (arity == 0) throw Error(ErrorCode::kInvalidParams, "objective arity must be positive");
}

double SetObjective::score(std::span<const double> rewards,
                           std::span<const ClusterAssignment> clusters) const {
  if (rewards.size() != arity_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "objective arity " + std::to_string(arity_) + " but set has " +
                    std::to_string(rewards.size()) + " members");
  }
  switch (kind_) {
    case ObjectiveKind::kPolychromic: return polychromic_score(rewards, clusters);
    case ObjectiveKind::kPassAtN: return pass_at_n_score(rewards);
    case ObjectiveKind::kMeanReward: return mean_reward_score(rewards);
  }
  throw Error(ErrorCode::kInternal, "unhandled objective kind");
}

double divrl_bonus(std::size_t i, std::span<const ClusterAssignment> clusters) {
  if (clusters.empty()) throw Error(ErrorCode::kMissingClusters, "divrl bonus needs clusters");
  const auto n = clusters.size();
  if (n < 2) throw Error(ErrorCode::kDegenerateN, "divrl bonus needs N >= 2");
  if (i >= n) throw Error(ErrorCode::kDimensionMismatch, "generation index out of range");
  const auto own = clusters[i].id();
  const auto c = std::count_if(clusters.begin(), clusters.end(),
                               [own](const ClusterAssignment& a) { return a.id() == own; });
  const double big_n = static_cast<double>(n);
  return (big_n / static_cast<double>(c) - 1.0) / (big_n - 1.0);
}

PassAtNMarginals analytic_passn_marginals(double p, std::size_t n) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidParams, "p must lie in [0, 1]");
  if (n == 0) throw Error(ErrorCode::kInvalidParams, "n must be positive");
  const double q = 1.0 - p;
  const double qn = std::pow(q, static_cast<double>(n));
  const double qn1 = std::pow(q, static_cast<double>(n - 1));
  return {qn, qn - qn1};
}

}  // namespace polyrl
