#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "polyrl/types.hpp"

namespace polyrl {

struct JudgeRequest {
  std::string context;
  std::vector<std::string> responses;
};

struct JudgeEntry {
  std::string chain_of_thought;
  int cluster_id = 1;
};

/// assignments[i] corresponds to key "i+1" of the judge's JSON answer.
struct JudgeResult {
  std::vector<JudgeEntry> assignments;

  std::vector<ClusterAssignment> clusters() const;
};

/// Version tag of the embedded instruction template.
inline constexpr std::string_view kJudgeTemplateVersion = "v1";

/// Raw instruction block, with `{n_responses}` placeholders and doubled
/// braces as escapes.
std::string_view judge_instruction_template();

/// Renders a template: `{n_responses}` is substituted, `{{`/`}}` collapse to
/// single braces.
std::string render_instruction(std::string_view tmpl, std::size_t n_responses);

/// Instruction block followed by a blank line and the instance suffix.
std::string build_judge_prompt(const JudgeRequest& req);
std::string build_judge_prompt(const JudgeRequest& req, std::string_view instruction_template);

/// Parses and validates the judge's JSON. Ids outside {1..N} and 100 are
/// remapped onto unused ids in 1..N, preserving which responses share a
/// cluster.
JudgeResult parse_judge_response(std::string_view raw, std::size_t n);

/// Relabels ids to 1, 2, ... in order of first appearance; 100 is kept.
std::vector<int> canonical_ids(std::span<const int> ids);

class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::vector<ClusterAssignment> assign(const GenerationBatch& batch) = 0;
};

/// Clusters by exact parsed-answer identity.
class AnswerJudge final : public Judge {
 public:
  std::vector<ClusterAssignment> assign(const GenerationBatch& batch) override;
};

/// Clusters by a deterministic per-generation label (e.g. a task's strategy
/// template). Labels equal to 100 mark degenerate generations.
class RuleJudge final : public Judge {
 public:
  using LabelFn = std::function<int(const Generation&)>;
  explicit RuleJudge(LabelFn label) : label_(std::move(label)) {}
  std::vector<ClusterAssignment> assign(const GenerationBatch& batch) override;

 private:
  LabelFn label_;
};

/// Returns scripted assignments verbatim, cycling through the script.
class MockJudge final : public Judge {
 public:
  explicit MockJudge(std::vector<std::vector<int>> script);
  std::vector<ClusterAssignment> assign(const GenerationBatch& batch) override;
  std::size_t calls() const;

 private:
  std::vector<std::vector<int>> script_;
  mutable std::mutex mu_;
  std::size_t next_ = 0;
};

struct RemoteJudgeConfig {
  std::string endpoint;  // full URL of a chat-completions style endpoint
  std::string model;
  std::string api_key;
  double temperature = 0.0;
  int retries = 3;
  bool fallback = true;
  std::chrono::milliseconds timeout{60000};
  std::chrono::milliseconds retry_backoff{200};
};

/// LM judge over HTTP. After `retries` failed attempts it either puts every
/// generation in one non-degenerate cluster (fallback) or throws
/// kJudgeUnavailable.
class RemoteJudge final : public Judge {
 public:
  explicit RemoteJudge(RemoteJudgeConfig cfg);
  std::vector<ClusterAssignment> assign(const GenerationBatch& batch) override;

  /// Sends one prompt and returns the message content of the first choice.
  std::string complete(const std::string& prompt) const;

 private:
  RemoteJudgeConfig cfg_;
};

/// Validates the batch and returns one assignment per generation.
std::vector<ClusterAssignment> cluster(Judge& judge, const GenerationBatch& batch);

/// Clusters several batches with at most `max_concurrency` judge calls in
/// flight; results come back in batch order.
std::vector<std::vector<ClusterAssignment>> cluster_batches(Judge& judge,
                                                            std::span<const GenerationBatch> batches,
                                                            std::size_t max_concurrency = 4);

}  // namespace polyrl
