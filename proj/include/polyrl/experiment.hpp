#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "polyrl/clustering.hpp"
#include "polyrl/eval_metrics.hpp"
#include "polyrl/policy_sim.hpp"
#include "polyrl/trainer.hpp"

namespace polyrl {

enum class JudgeKind { kExact, kRule, kMock, kRemote };

std::string_view judge_kind_name(JudgeKind kind) noexcept;
JudgeKind parse_judge_kind(std::string_view name);

/// exact: the task's own strategy labels. rule: parsed-answer identity.
/// mock: scripted ids. remote: LM judge over HTTP.
struct JudgeSpec {
  JudgeKind kind = JudgeKind::kExact;
  std::vector<std::vector<int>> script;
  RemoteJudgeConfig remote;
  std::size_t max_concurrency = 4;
};

enum class InitKind { kUniform, kRandom, kLogits };

struct InitSpec {
  InitKind kind = InitKind::kUniform;
  double scale = 1.0;         // kRandom: logits uniform in [-scale, scale]
  std::uint64_t seed = 0;     // kRandom
  std::vector<double> logits;  // kLogits
};

struct EvalSpec {
  std::vector<std::size_t> k{1, 2, 4, 8};
  std::size_t samples = 64;  // prompts drawn from the final policy
};

struct ExperimentConfig {
  TaskSpec task;
  Algorithm algorithm = Algorithm::kPepo;
  HyperParams hp;
  InitSpec init;
  JudgeSpec judge;
  std::size_t steps = 200;
  std::string out;
  EvalSpec eval;
};

/// Parses a JSON config. Missing fields keep their defaults; unknown names and
/// out-of-range values raise kConfigInvalid.
ExperimentConfig parse_experiment_config(std::string_view json_text);

/// Full config as JSON, defaults included. The API key is never written.
std::string experiment_config_json(const ExperimentConfig& cfg);

TabularPolicy make_initial_policy(const InitSpec& init, const SyntheticTask& task,
                                  double temperature);

/// Environment variable holding the remote judge's API key.
inline constexpr const char* kJudgeApiKeyEnv = "POLYRL_JUDGE_API_KEY";

/// The remote judge takes its API key from kJudgeApiKeyEnv when the spec has
/// none.
std::unique_ptr<Judge> make_judge(const JudgeSpec& spec, const SyntheticTask& task);

struct EvalSummary {
  std::vector<EvalRow> rows;
  double initial_expected_correct_clusters = 0.0;
  double final_expected_correct_clusters = 0.0;
  double initial_entropy = 0.0;
  double final_entropy = 0.0;
};

std::string eval_summary_json(const EvalSummary& summary);

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  TabularPolicy initial_policy{{0.0}};
  TabularPolicy final_policy{{0.0}};
  EvalSummary summary;
};

/// Trains and evaluates. When cfg.out is non-empty, writes config.json,
/// metrics.csv, metrics.jsonl, policy.json and eval_summary.json there.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
/// Same, with an explicit judge (used when the caller owns the judge).
ExperimentResult run_experiment(const ExperimentConfig& cfg, Judge& judge);

std::string metrics_csv(const std::vector<ExperimentRecord>& records);
std::string metrics_jsonl(const std::vector<ExperimentRecord>& records);

// ---- verification suite -----------------------------------------------------

struct VerificationOptions {
  std::uint64_t seed = 7;
  std::size_t estimator_draws = 200000;
  std::size_t random_instances = 20;
  /// Test hook: multiplies the scaling factor used by the unbiasedness check.
  double scaling_factor_multiplier = 1.0;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
  std::string to_json() const;
  std::string to_text() const;
};

VerificationReport run_verification_suite(const VerificationOptions& opts);

}  // namespace polyrl
