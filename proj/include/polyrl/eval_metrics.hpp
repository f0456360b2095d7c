#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "polyrl/types.hpp"

namespace polyrl {

/// Exact non-negative rational.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// 1 - C(N - c, k) / C(N, k), in lowest terms.
Rational pass_at_k_exact(std::size_t n, std::size_t c, std::size_t k);
double pass_at_k(std::size_t n, std::size_t c, std::size_t k);

struct MajorityVote {
  bool is_correct = false;
  double vote_share = 0.0;
  std::string winner;
};

/// Plurality answer; ties go to the lexicographically smallest answer.
MajorityVote majority_at_k(std::span<const std::string> answers, const std::string& correct);

struct ClusterCounts {
  std::size_t distinct_correct = 0;
  std::size_t distinct_incorrect = 0;
};

/// Distinct non-degenerate clusters among correct (reward >= 0.5) and
/// incorrect generations.
ClusterCounts cluster_diagnostics(std::span<const double> rewards,
                                  std::span<const ClusterAssignment> clusters);
ClusterCounts cluster_diagnostics(const GenerationBatch& batch);

struct BranchProfile {
  std::vector<std::size_t> counts;
};

/// counts[t] = number of distinct length-(t+1) prefixes among sequences that
/// are at least t+1 tokens long.
BranchProfile branching_profile(std::span<const std::vector<std::string>> sequences);
/// Character-level convenience overload.
BranchProfile branching_profile(std::span<const std::string> strings);

/// Splits on whitespace.
std::vector<std::string> whitespace_tokens(const std::string& text);

// ---- corpus evaluation ----------------------------------------------------

struct EvalGeneration {
  std::string text;
  std::string answer;
  double reward = 0.0;
};

struct EvalSample {
  std::string prompt_id;
  std::string correct_answer;
  std::vector<EvalGeneration> generations;
};

/// One JSON object per line: {"prompt_id", "correct_answer"?, "generations":
/// [{"text", "answer", "reward"}]}.
std::vector<EvalSample> read_eval_corpus(const std::string& path);

struct EvalRow {
  std::size_t k = 0;
  double pass_at_k = 0.0;
  double majority_accuracy = 0.0;
  double vote_share = 0.0;
  double mean_branches = 0.0;  // mean over positions of the whitespace-token branch profile
};

/// Averages over prompts; majority@k and branching use the first k generations.
std::vector<EvalRow> evaluate_corpus(std::span<const EvalSample> corpus,
                                     std::span<const std::size_t> ks);

std::string eval_rows_csv(std::span<const EvalRow> rows);

}  // namespace polyrl
