#include "polyrl/types.hpp"

#include <cmath>

#include "polyrl/set_engine.hpp"

namespace polyrl {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "OK";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kEmptyBatch: return "EMPTY_BATCH";
    case ErrorCode::kSetSizeTooLarge: return "SET_SIZE_TOO_LARGE";
    case ErrorCode::kKOutOfRange: return "K_OUT_OF_RANGE";
    case ErrorCode::kMissingClusters: return "MISSING_CLUSTERS";
    case ErrorCode::kDegenerateN: return "DEGENERATE_N";
    case ErrorCode::kDimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::kTooManyResponses: return "TOO_MANY_RESPONSES";
    case ErrorCode::kMalformedJson: return "MALFORMED_JSON";
    case ErrorCode::kWrongKeyCount: return "WRONG_KEY_COUNT";
    case ErrorCode::kMissingClusterId: return "MISSING_CLUSTER_ID";
    case ErrorCode::kJudgeUnavailable: return "JUDGE_UNAVAILABLE";
    case ErrorCode::kEnumerationTooLarge: return "ENUMERATION_TOO_LARGE";
    case ErrorCode::kInvalidParams: return "INVALID_PARAMS";
    case ErrorCode::kConfigInvalid: return "CONFIG_INVALID";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kKExceedsN: return "K_EXCEEDS_N";
    case ErrorCode::kEmptyInput: return "EMPTY_INPUT";
    case ErrorCode::kInternal: return "INTERNAL";
  }
  return "UNKNOWN";
}

RewardValue::RewardValue(double v) : value_(v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw Error(ErrorCode::kInvalidParams,
                "reward must lie in [0, 1], got " + std::to_string(v));
  }
}

ClusterAssignment::ClusterAssignment(int id) : id_(id) {
  if (id < 0) {
    throw Error(ErrorCode::kInvalidParams, "cluster id must be non-negative");
  }
}

std::vector<ClusterAssignment> make_clusters(const std::vector<int>& ids) {
  std::vector<ClusterAssignment> out;
  out.reserve(ids.size());
  for (int id : ids) out.emplace_back(id);
  return out;
}

std::vector<double> GenerationBatch::reward_values() const {
  std::vector<double> out;
  out.reserve(rewards.size());
  for (auto r : rewards) out.push_back(r.value());
  return out;
}

const std::vector<ClusterAssignment>& GenerationBatch::require_clusters() const {
  if (!clusters) {
    throw Error(ErrorCode::kMissingClusters, "batch has not been clustered");
  }
  return *clusters;
}

void validate_batch(const GenerationBatch& batch) {
  const auto n = batch.generations.size();
  if (n == 0) {
    throw Error(ErrorCode::kEmptyBatch, "batch has no generations");
  }
  if (batch.rewards.size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                "batch has " + std::to_string(n) + " generations but " +
                    std::to_string(batch.rewards.size()) + " rewards");
  }
  if (batch.clusters && batch.clusters->size() != n) {
    throw Error(ErrorCode::kLengthMismatch,
                "batch has " + std::to_string(n) + " generations but " +
                    std::to_string(batch.clusters->size()) + " clusters");
  }
}

void validate_hyperparams(const HyperParams& hp) {
  auto bad = [](const std::string& msg) {
    throw Error(ErrorCode::kInvalidParams, msg);
  };
  if (hp.rollouts == 0 || hp.set_size == 0) bad("rollouts and set_size must be positive");
  if (hp.set_size >= hp.rollouts) {
    throw Error(ErrorCode::kSetSizeTooLarge, "set_size must be < rollouts");
  }
  if (!hp.all_sets()) {
    const auto total = binomial(hp.rollouts, hp.set_size);
    if (hp.num_sets <= 1 || hp.num_sets > total) {
      throw Error(ErrorCode::kKOutOfRange,
                  "num_sets must lie in (1, " + std::to_string(total) + "]");
    }
  }
  if (!(hp.learning_rate > 0.0) || !std::isfinite(hp.learning_rate)) bad("learning rate must be positive");
  if (!(hp.clip_low >= 0.0) || !(hp.clip_high >= 0.0)) bad("clip ratios must be non-negative");
  if (!(hp.temperature > 0.0)) bad("temperature must be positive");
  if (!(hp.divrl_lambda >= 0.0)) bad("lambda must be non-negative");
  if (hp.prompts_per_batch == 0) bad("prompts_per_batch must be positive");
  if (hp.inner_epochs == 0) bad("inner_epochs must be positive");
}

}  // namespace polyrl
