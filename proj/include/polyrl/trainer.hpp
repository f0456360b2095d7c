#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "polyrl/clustering.hpp"
#include "polyrl/objectives.hpp"
#include "polyrl/policy_sim.hpp"
#include "polyrl/rng.hpp"
#include "polyrl/types.hpp"

namespace polyrl {

enum class Algorithm { kGrpo, kDivrl, kPepo };

std::string_view algorithm_name(Algorithm algo) noexcept;
Algorithm parse_algorithm(std::string_view name);

struct AdvantageVector {
  std::vector<double> values;
  Algorithm algorithm = Algorithm::kGrpo;
};

/// r_i - mean(r); no standard-deviation scaling.
AdvantageVector grpo_advantages(std::span<const double> rewards);

/// Shaped rewards r_i + lambda * divrl_bonus(i), mean-centred.
AdvantageVector divrl_advantages(std::span<const double> rewards,
                                 std::span<const ClusterAssignment> clusters, double lambda);

/// Marginal set advantages over the subsets selected by `hp` (all of them
/// when hp.num_sets is 0 or C(N, n)). Not rescaled by the scaling factor.
AdvantageVector pepo_advantages(const GenerationBatch& batch, const HyperParams& hp,
                                std::uint64_t subset_seed,
                                ObjectiveKind objective = ObjectiveKind::kPolychromic);

/// How the per-generation surrogate is normalised by length: GRPO divides by
/// each generation's own length, PEPO by the maximum response length. Atomic
/// generations have length 1, so both constants are 1 here.
enum class LengthNorm { kPerGeneration, kMaxLength };

LengthNorm length_norm_for(Algorithm algo) noexcept;

/// One group of rollouts for a prompt plus the advantages assigned to it.
struct RolloutGroup {
  GenerationBatch batch;
  AdvantageVector advantages;
};

/// Gradient of the clipped surrogate
///   1/G sum_g 1/N sum_i 1/T_i min(w_i A_i, clip(w_i, 1-eps_low, 1+eps_high) A_i)
/// at `current`, where w_i = pi_current(y_i) / pi_old(y_i).
std::vector<double> surrogate_gradient(const TabularPolicy& current, const TabularPolicy& old,
                                       std::span<const RolloutGroup> groups, const HyperParams& hp,
                                       LengthNorm norm);

struct TrainState {
  TabularPolicy policy;
  std::size_t step = 0;
  Rng sample_rng;
  Rng subset_rng;
  HyperParams hp;
};

TrainState make_train_state(TabularPolicy policy, const HyperParams& hp);

/// hp.inner_epochs ascent steps of size hp.learning_rate on the clipped
/// surrogate, all against the policy that generated `groups`.
TrainState clipped_update(const TrainState& state, std::span<const RolloutGroup> groups,
                          LengthNorm norm);

struct LogitShiftReport {
  double deviation = 0.0;              // population std-dev of the residual across actions
  std::vector<double> residual;        // delta log pi - predicted shift
  std::vector<double> delta_log_prob;  // actual one-step change of log pi
  /// First-order constant C = sum_j pi_j grad_j / T; the residual equals
  /// -alpha * C up to second order in alpha.
  double first_order_constant = 0.0;
  /// max_y |residual(y) + alpha * C|.
  double second_order_gap = 0.0;
};

/// One exact-gradient ascent step on the set objective; compares the change
/// in log pi(y) against alpha * n * pi(y) * marginal_advantage(y) / T^2.
LogitShiftReport verify_logit_shift(const TabularPolicy& policy, const TupleScore& score,
                                    std::size_t n, double alpha,
                                    std::uint64_t bound = kDefaultEnumerationBound);

/// Same check for standard RL against alpha * pi(y) * A(y) / T^2.
LogitShiftReport verify_standard_logit_shift(const TabularPolicy& policy,
                                             std::span<const double> rewards, double alpha);

struct ExperimentRecord {
  std::size_t step = 0;
  double accuracy = 0.0;  // fraction of groups with at least one correct rollout
  double distinct_correct_clusters = 0.0;
  double distinct_incorrect_clusters = 0.0;
  double mean_advantage = 0.0;
  double mean_abs_advantage = 0.0;
  double policy_entropy = 0.0;
  double expected_correct_clusters = 0.0;  // exact, under the pre-update policy
};

struct TrainConfig {
  Algorithm algorithm = Algorithm::kPepo;
  HyperParams hp;
  std::size_t steps = 0;
  std::size_t judge_concurrency = 1;
};

using RecordSink = std::function<void(const ExperimentRecord&)>;

/// Seeded training loop: sample -> reward -> cluster -> advantages -> update.
/// Emits one record per step and returns the final state.
TrainState train(const TrainConfig& cfg, const SyntheticTask& task, Judge& judge,
                 TabularPolicy initial, const RecordSink& sink);

}  // namespace polyrl
