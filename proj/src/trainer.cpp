#include "polyrl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polyrl/eval_metrics.hpp"
#include "polyrl/set_engine.hpp"

namespace polyrl {

std::string_view algorithm_name(Algorithm algo) noexcept {
  switch (algo) {
    case Algorithm::kGrpo: return "grpo";
    case Algorithm::kDivrl: return "divrl";
    case Algorithm::kPepo: return "pepo";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "grpo") return Algorithm::kGrpo;
  if (name == "divrl") return Algorithm::kDivrl;
  if (name == "pepo") return Algorithm::kPepo;
  throw Error(ErrorCode::kConfigInvalid, "unknown algorithm '" + std::string(name) + "'");
}

AdvantageVector grpo_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw Error(ErrorCode::kDegenerateN, "group advantages need N >= 2");
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) /
                      static_cast<double>(rewards.size());
  AdvantageVector out{{}, Algorithm::kGrpo};
  out.values.reserve(rewards.size());
  for (double r : rewards) out.values.push_back(r - mean);
  return out;
}

AdvantageVector divrl_advantages(std::span<const double> rewards,
                                 std::span<const ClusterAssignment> clusters, double lambda) {
  if (rewards.size() < 2) throw Error(ErrorCode::kDegenerateN, "group advantages need N >= 2");
  if (clusters.empty()) throw Error(ErrorCode::kMissingClusters, "DivRL needs cluster assignments");
  if (clusters.size() != rewards.size()) {
    throw Error(ErrorCode::kLengthMismatch, "rewards and clusters differ in length");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kInvalidParams, "lambda must be non-negative");
  std::vector<double> shaped(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    shaped[i] = lambda == 0.0 ? rewards[i] : rewards[i] + lambda * divrl_bonus(i, clusters);
  }
  auto out = grpo_advantages(shaped);
  out.algorithm = Algorithm::kDivrl;
  return out;
}

AdvantageVector pepo_advantages(const GenerationBatch& batch, const HyperParams& hp,
                                std::uint64_t subset_seed, ObjectiveKind objective) {
  validate_batch(batch);
  const auto big_n = batch.size();
  const auto n = hp.set_size;
  if (n >= big_n) throw Error(ErrorCode::kSetSizeTooLarge, "set size must be < N");
  const auto total = binomial(big_n, n);
  auto subsets = (hp.all_sets() || hp.num_sets == total)
                     ? enumerate_subsets(big_n, n)
                     : sample_subsets(big_n, n, hp.num_sets, subset_seed);
  const auto coll = score_sets(batch, std::move(subsets), SetObjective(objective, n));
  return {marginal_advantages(coll, big_n).values, Algorithm::kPepo};
}

LengthNorm length_norm_for(Algorithm algo) noexcept {
  return algo == Algorithm::kPepo ? LengthNorm::kMaxLength : LengthNorm::kPerGeneration;
}

namespace {

// Every generation is a single atomic action.
constexpr double kTokensPerGeneration = 1.0;

double length_divisor(LengthNorm norm, std::span<const RolloutGroup> groups) {
  if (norm == LengthNorm::kPerGeneration) return kTokensPerGeneration;
  double t_max = 0.0;
  for (const auto& g : groups) {
    if (!g.batch.generations.empty()) t_max = std::max(t_max, kTokensPerGeneration);
  }
  return t_max > 0.0 ? t_max : 1.0;
}

}  // namespace

std::vector<double> surrogate_gradient(const TabularPolicy& current, const TabularPolicy& old,
                                       std::span<const RolloutGroup> groups, const HyperParams& hp,
                                       LengthNorm norm) {
  if (current.size() != old.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "current and old policies differ in size");
  }
  std::vector<double> grad(current.size(), 0.0);
  if (groups.empty()) return grad;
  const auto lp_new = current.log_probabilities();
  const auto lp_old = old.log_probabilities();
  const auto p_new = current.probabilities();
  const double inv_t = 1.0 / current.temperature();
  const double divisor = length_divisor(norm, groups);

  for (const auto& g : groups) {
    const auto& gens = g.batch.generations;
    const auto& adv = g.advantages.values;
    if (adv.size() != gens.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "one advantage per generation required");
    }
    const double scale = 1.0 / (static_cast<double>(groups.size()) *
                                static_cast<double>(gens.size()) * divisor);
    for (std::size_t i = 0; i < gens.size(); ++i) {
      const double a = adv[i];
      if (a == 0.0) continue;
      const auto y = gens[i].action_index;
      if (y >= current.size()) throw Error(ErrorCode::kDimensionMismatch, "action out of range");
      const double ratio = std::exp(lp_new[y] - lp_old[y]);
      // The min() picks the clipped branch, whose gradient is zero.
      if (a > 0.0 && ratio > 1.0 + hp.clip_high) continue;
      if (a < 0.0 && ratio < 1.0 - hp.clip_low) continue;
      const double w = scale * ratio * a * inv_t;
      for (std::size_t j = 0; j < grad.size(); ++j) grad[j] -= w * p_new[j];
      grad[y] += w;
    }
  }
  return grad;
}

TrainState make_train_state(TabularPolicy policy, const HyperParams& hp) {
  validate_hyperparams(hp);
  return TrainState{std::move(policy), 0, Rng(mix_seed(hp.seed) ^ 0x5a3c), Rng(mix_seed(hp.seed) ^ 0xc3a5),
                    hp};
}

TrainState clipped_update(const TrainState& state, std::span<const RolloutGroup> groups,
                          LengthNorm norm) {
  TrainState next = state;
  const auto& old = state.policy;
  bool any = false;
  for (const auto& g : groups) {
    for (double a : g.advantages.values) any = any || a != 0.0;
  }
  if (any) {
    for (std::size_t epoch = 0; epoch < state.hp.inner_epochs; ++epoch) {
      const auto grad = surrogate_gradient(next.policy, old, groups, state.hp, norm);
      auto logits = next.policy.logits();
      for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += state.hp.learning_rate * grad[j];
      next.policy = next.policy.with_logits(std::move(logits));
    }
  }
  ++next.step;
  return next;
}

namespace {

LogitShiftReport shift_report(const TabularPolicy& policy, const std::vector<double>& grad,
                              const std::vector<double>& predicted_per_alpha, double alpha) {
  auto logits = policy.logits();
  for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += alpha * grad[j];
  const auto after = policy.with_logits(std::move(logits));
  const auto lp0 = policy.log_probabilities();
  const auto lp1 = after.log_probabilities();

  LogitShiftReport rep;
  rep.residual.resize(lp0.size());
  rep.delta_log_prob.resize(lp0.size());
  for (std::size_t y = 0; y < lp0.size(); ++y) {
    rep.delta_log_prob[y] = lp1[y] - lp0[y];
    rep.residual[y] = rep.delta_log_prob[y] - alpha * predicted_per_alpha[y];
  }
  const double mean = std::accumulate(rep.residual.begin(), rep.residual.end(), 0.0) /
                      static_cast<double>(rep.residual.size());
  double var = 0.0;
  for (double r : rep.residual) var += (r - mean) * (r - mean);
  rep.deviation = std::sqrt(var / static_cast<double>(rep.residual.size()));
  const auto p = policy.probabilities();
  for (std::size_t j = 0; j < p.size(); ++j) rep.first_order_constant += p[j] * grad[j];
  rep.first_order_constant /= policy.temperature();
  for (double r : rep.residual) {
    rep.second_order_gap = std::max(rep.second_order_gap, std::abs(r + alpha * rep.first_order_constant));
  }
  return rep;
}

}  // namespace

LogitShiftReport verify_logit_shift(const TabularPolicy& policy, const TupleScore& score,
                                    std::size_t n, double alpha, std::uint64_t bound) {
  const auto grad = exact_setrl_gradient(policy, score, n, bound);
  const auto marg = exact_marginal_advantages(policy, score, n, bound);
  const auto p = policy.probabilities();
  const double t2 = policy.temperature() * policy.temperature();
  std::vector<double> predicted(p.size());
  for (std::size_t y = 0; y < p.size(); ++y) {
    predicted[y] = static_cast<double>(n) * p[y] * marg[y] / t2;
  }
  return shift_report(policy, grad, predicted, alpha);
}

LogitShiftReport verify_standard_logit_shift(const TabularPolicy& policy,
                                             std::span<const double> rewards, double alpha) {
  const auto grad = exact_standard_gradient(policy, rewards);
  const auto adv = exact_standard_advantages(policy, rewards);
  const auto p = policy.probabilities();
  const double t2 = policy.temperature() * policy.temperature();
  std::vector<double> predicted(p.size());
  for (std::size_t y = 0; y < p.size(); ++y) predicted[y] = p[y] * adv[y] / t2;
  return shift_report(policy, grad, predicted, alpha);
}

TrainState train(const TrainConfig& cfg, const SyntheticTask& task, Judge& judge,
                 TabularPolicy initial, const RecordSink& sink) {
  if (initial.size() != task.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "initial policy does not match the task");
  }
  auto state = make_train_state(std::move(initial), cfg.hp);
  const auto norm = length_norm_for(cfg.algorithm);
  const auto groups_per_step = cfg.hp.prompts_per_batch;

  for (std::size_t s = 0; s < cfg.steps; ++s) {
    std::vector<GenerationBatch> batches;
    batches.reserve(groups_per_step);
    for (std::size_t g = 0; g < groups_per_step; ++g) {
      batches.push_back(task.sample(state.policy, cfg.hp.rollouts, state.sample_rng));
    }
    auto assignments = cluster_batches(judge, batches, cfg.judge_concurrency);

    std::vector<RolloutGroup> groups;
    groups.reserve(batches.size());
    ExperimentRecord rec;
    rec.step = state.step;
    rec.policy_entropy = state.policy.entropy();
    rec.expected_correct_clusters =
        expected_distinct_clusters(state.policy, task, cfg.hp.rollouts, true);
    std::size_t adv_count = 0;
    for (std::size_t g = 0; g < batches.size(); ++g) {
      auto& batch = batches[g];
      batch.clusters = std::move(assignments[g]);
      const auto rewards = batch.reward_values();
      const auto& clusters = *batch.clusters;

      AdvantageVector adv;
      switch (cfg.algorithm) {
        case Algorithm::kGrpo: adv = grpo_advantages(rewards); break;
        case Algorithm::kDivrl: adv = divrl_advantages(rewards, clusters, cfg.hp.divrl_lambda); break;
        case Algorithm::kPepo: adv = pepo_advantages(batch, cfg.hp, state.subset_rng.next()); break;
      }

      const auto counts = cluster_diagnostics(rewards, clusters);
      rec.distinct_correct_clusters += static_cast<double>(counts.distinct_correct);
      rec.distinct_incorrect_clusters += static_cast<double>(counts.distinct_incorrect);
      const bool hit = std::any_of(rewards.begin(), rewards.end(), [](double r) { return r >= 0.5; });
      rec.accuracy += hit ? 1.0 : 0.0;
      for (double a : adv.values) {
        rec.mean_advantage += a;
        rec.mean_abs_advantage += std::abs(a);
      }
      adv_count += adv.values.size();
      groups.push_back({std::move(batch), std::move(adv)});
    }
    const double ng = static_cast<double>(groups.size());
    rec.accuracy /= ng;
    rec.distinct_correct_clusters /= ng;
    rec.distinct_incorrect_clusters /= ng;
    rec.mean_advantage /= static_cast<double>(adv_count);
    rec.mean_abs_advantage /= static_cast<double>(adv_count);
    // Centred sums leave rounding noise around zero; keep output stable.
    if (std::abs(rec.mean_advantage) < 1e-12) rec.mean_advantage = 0.0;

    state = clipped_update(state, groups, norm);
    if (sink) sink(rec);
  }
  return state;
}

}  // namespace polyrl
