#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polyrl/clustering.hpp"
#include "polyrl/objectives.hpp"
#include "polyrl/rng.hpp"
#include "polyrl/types.hpp"

namespace polyrl {

/// Softmax policy over a finite generation space: pi = softmax(logits / T).
class TabularPolicy {
 public:
  explicit TabularPolicy(std::vector<double> logits, double temperature = 1.0);

  std::size_t size() const noexcept { return logits_.size(); }
  const std::vector<double>& logits() const noexcept { return logits_; }
  double temperature() const noexcept { return temperature_; }

  std::vector<double> probabilities() const;
  std::vector<double> log_probabilities() const;
  /// d log pi(action) / d logits = (e_action - pi) / T
  std::vector<double> logprob_grad(std::size_t action) const;
  double entropy() const;

  std::size_t draw(Rng& rng) const;
  TabularPolicy with_logits(std::vector<double> logits) const;

 private:
  std::vector<double> logits_;
  double temperature_;
};

enum class TaskKind { kPolynomial, kMultiplication, kBandit };

std::string_view task_kind_name(TaskKind kind) noexcept;
TaskKind parse_task_kind(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::kPolynomial;

  // polynomial: y = sum_k coeffs[k] * x^(deg - k), x in [-bound, bound]
  std::vector<long long> coeffs{1, 3, 7};
  int bound = 2;
  int distractors = 0;  // wrong y values per x
  int gibberish = 0;    // degenerate actions (cluster 100)

  // multiplication: (base ± offset) splits of each operand
  long long lhs = 343;
  long long rhs = 67;
  int round_to = 5;
  int max_offset = 7;
  int slips = 1;  // arithmetic-slip variants per template

  // bandit: explicit tables
  std::vector<double> rewards;
  std::vector<int> clusters;
  std::vector<std::string> renders;
};

class SyntheticTask {
 public:
  SyntheticTask(TaskKind kind, Prompt prompt, std::vector<Generation> space,
                std::vector<double> rewards, std::vector<int> labels);

  TaskKind kind() const noexcept { return kind_; }
  const Prompt& prompt() const noexcept { return prompt_; }
  std::size_t size() const noexcept { return space_.size(); }
  const Generation& generation(std::size_t a) const { return space_.at(a); }
  double reward(std::size_t a) const { return rewards_.at(a); }
  /// Strategy label; equal labels mean the same cluster, 100 is degenerate.
  int label(std::size_t a) const { return labels_.at(a); }
  const std::vector<double>& rewards() const noexcept { return rewards_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  std::vector<ClusterAssignment> cluster_table() const;

  /// Deterministic rule-based judge for this task's strategy labels.
  RuleJudge rule_judge() const;

  /// N i.i.d. draws with rewards filled in, no clusters.
  GenerationBatch sample(const TabularPolicy& policy, std::size_t n, Rng& rng) const;

 private:
  TaskKind kind_;
  Prompt prompt_;
  std::vector<Generation> space_;
  std::vector<double> rewards_;
  std::vector<int> labels_;
};

SyntheticTask make_task(const TaskSpec& spec);

/// Expected number of distinct non-degenerate clusters represented among the
/// correct (or incorrect) generations in `n` draws.
double expected_distinct_clusters(const TabularPolicy& policy, const SyntheticTask& task,
                                  std::size_t n, bool correct);

// ---- exact enumeration oracles -------------------------------------------

inline constexpr std::uint64_t kDefaultEnumerationBound = 2'000'000;

/// Scores an ordered tuple of actions.
using TupleScore = std::function<double(std::span<const std::size_t>)>;

TupleScore make_tuple_score(const SyntheticTask& task, const SetObjective& objective);

/// E over n i.i.d. draws of score(tuple).
double exact_expected_objective(const TabularPolicy& policy, const TupleScore& score,
                                std::size_t n,
                                std::uint64_t bound = kDefaultEnumerationBound);

/// Same expectation for an arbitrary distribution over actions, which may put
/// zero mass on some of them.
double exact_expected_objective(std::span<const double> probs, const TupleScore& score,
                                std::size_t n,
                                std::uint64_t bound = kDefaultEnumerationBound);

/// Gradient of exact_expected_objective with respect to the logits.
std::vector<double> exact_setrl_gradient(const TabularPolicy& policy, const TupleScore& score,
                                         std::size_t n,
                                         std::uint64_t bound = kDefaultEnumerationBound);

/// E[f(y, Y_2..n)] - E[f(Y_1..n)] for every action y.
std::vector<double> exact_marginal_advantages(const TabularPolicy& policy, const TupleScore& score,
                                              std::size_t n,
                                              std::uint64_t bound = kDefaultEnumerationBound);

std::vector<double> exact_marginal_advantages(std::span<const double> probs,
                                              const TupleScore& score, std::size_t n,
                                              std::uint64_t bound = kDefaultEnumerationBound);

double exact_marginal_advantage(const TabularPolicy& policy, const TupleScore& score,
                                std::size_t n, std::size_t y,
                                std::uint64_t bound = kDefaultEnumerationBound);

/// Standard-RL advantage r(y) - E[r] and the gradient of E[r].
std::vector<double> exact_standard_advantages(const TabularPolicy& policy,
                                              std::span<const double> rewards);
std::vector<double> exact_standard_gradient(const TabularPolicy& policy,
                                            std::span<const double> rewards);

}  // namespace polyrl
