#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace polyrl {

enum class ErrorCode : int {
  kOk = 0,
  kLengthMismatch,
  kEmptyBatch,
  kSetSizeTooLarge,
  kKOutOfRange,
  kMissingClusters,
  kDegenerateN,
  kDimensionMismatch,
  kTooManyResponses,
  kMalformedJson,
  kWrongKeyCount,
  kMissingClusterId,
  kJudgeUnavailable,
  kEnumerationTooLarge,
  kInvalidParams,
  kConfigInvalid,
  kIoError,
  kKExceedsN,
  kEmptyInput,
  kInternal,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. Every failure surfaced by the
/// library is one of these; the C API translates them into status codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr int kDegenerateCluster = 100;

struct Prompt {
  std::string id;
  std::string payload;
};

struct Generation {
  std::string token_string;
  std::string answer;
  std::size_t action_index = 0;
};

/// Reward in [0, 1]. Not assumed binary.
class RewardValue {
 public:
  RewardValue() = default;
  explicit RewardValue(double v);
  double value() const noexcept { return value_; }
  friend bool operator==(RewardValue, RewardValue) = default;

 private:
  double value_ = 0.0;
};

class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  explicit ClusterAssignment(int id);
  int id() const noexcept { return id_; }
  bool is_degenerate() const noexcept { return id_ == kDegenerateCluster; }
  friend bool operator==(ClusterAssignment, ClusterAssignment) = default;

 private:
  int id_ = 1;
};

std::vector<ClusterAssignment> make_clusters(const std::vector<int>& ids);

struct GenerationBatch {
  Prompt prompt;
  std::vector<Generation> generations;
  std::vector<RewardValue> rewards;
  std::optional<std::vector<ClusterAssignment>> clusters;

  std::size_t size() const noexcept { return generations.size(); }
  std::vector<double> reward_values() const;
  /// Throws kMissingClusters when clustering has not run yet.
  const std::vector<ClusterAssignment>& require_clusters() const;
};

void validate_batch(const GenerationBatch& batch);

struct HyperParams {
  std::size_t rollouts = 8;
  std::size_t set_size = 4;
  /// 0 means all C(rollouts, set_size) subsets.
  std::uint64_t num_sets = 70;
  double learning_rate = 0.1;
  double clip_low = 0.20;
  double clip_high = 0.28;
  double temperature = 1.0;
  double divrl_lambda = 0.5;
  std::uint64_t seed = 0;
  std::size_t prompts_per_batch = 4;
  std::size_t inner_epochs = 1;

  bool all_sets() const noexcept { return num_sets == 0; }
};

void validate_hyperparams(const HyperParams& hp);

}  // namespace polyrl
