#include "polyrl/eval_metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "polyrl/set_engine.hpp"

namespace polyrl {

namespace {

void check_pass_args(std::size_t n, std::size_t c, std::size_t k) {
  if (k > n) {
    throw Error(ErrorCode::kKExceedsN,
                "k = " + std::to_string(k) + " exceeds N = " + std::to_string(n));
  }
  if (k == 0) throw Error(ErrorCode::kInvalidParams, "k must be positive");
  if (c > n) throw Error(ErrorCode::kInvalidParams, "correct count exceeds N");
}

}  // namespace

Rational pass_at_k_exact(std::size_t n, std::size_t c, std::size_t k) {
  check_pass_args(n, c, k);
  const auto total = binomial(n, k);
  const auto miss = binomial(n - c, k);
  Rational r{total - miss, total};
  const auto g = std::gcd(r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  if (r.num == 0) r.den = 1;
  return r;
}

double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  check_pass_args(n, c, k);
  if (n <= 60) return pass_at_k_exact(n, c, k).value();
  if (n - c < k) return 1.0;
  // 1 - prod_{i = N-c+1}^{N} (1 - k / i)
  double miss = 1.0;
  for (std::size_t i = n - c + 1; i <= n; ++i) {
    miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  }
  return 1.0 - miss;
}

MajorityVote majority_at_k(std::span<const std::string> answers, const std::string& correct) {
  if (answers.empty()) throw Error(ErrorCode::kEmptyInput, "majority vote over zero answers");
  std::map<std::string, std::size_t> votes;  // ordered: first max is the smallest answer
  for (const auto& a : answers) ++votes[a];
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  MajorityVote out;
  out.winner = best->first;
  out.vote_share = static_cast<double>(best->second) / static_cast<double>(answers.size());
  out.is_correct = best->first == correct;
  return out;
}

ClusterCounts cluster_diagnostics(std::span<const double> rewards,
                                  std::span<const ClusterAssignment> clusters) {
  if (clusters.empty() && !rewards.empty()) {
    throw Error(ErrorCode::kMissingClusters, "cluster diagnostics need cluster assignments");
  }
  if (clusters.size() != rewards.size()) {
    throw Error(ErrorCode::kLengthMismatch, "rewards and clusters differ in length");
  }
  std::set<int> good;
  std::set<int> bad;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (clusters[i].is_degenerate()) continue;
    (rewards[i] >= 0.5 ? good : bad).insert(clusters[i].id());
  }
  return {good.size(), bad.size()};
}

ClusterCounts cluster_diagnostics(const GenerationBatch& batch) {
  validate_batch(batch);
  const auto rewards = batch.reward_values();
  return cluster_diagnostics(rewards, batch.require_clusters());
}

BranchProfile branching_profile(std::span<const std::vector<std::string>> sequences) {
  if (sequences.empty()) throw Error(ErrorCode::kEmptyInput, "branching profile of zero sequences");
  std::size_t longest = 0;
  for (const auto& s : sequences) {
    if (s.empty()) throw Error(ErrorCode::kEmptyInput, "branching profile of an empty sequence");
    longest = std::max(longest, s.size());
  }
  BranchProfile out;
  out.counts.reserve(longest);
  // Prefix ids: sequences sharing an id at depth t share their first t+1 tokens.
  std::vector<std::size_t> prefix_id(sequences.size(), 0);
  for (std::size_t t = 0; t < longest; ++t) {
    std::map<std::pair<std::size_t, std::string>, std::size_t> next_ids;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
      if (sequences[s].size() <= t) continue;
      auto [it, _] = next_ids.try_emplace({prefix_id[s], sequences[s][t]}, next_ids.size());
      prefix_id[s] = it->second;
    }
    out.counts.push_back(next_ids.size());
  }
  return out;
}

BranchProfile branching_profile(std::span<const std::string> strings) {
  std::vector<std::vector<std::string>> seqs;
  seqs.reserve(strings.size());
  for (const auto& s : strings) {
    std::vector<std::string> toks;
    toks.reserve(s.size());
    for (char ch : s) toks.emplace_back(1, ch);
    seqs.push_back(std::move(toks));
  }
  return branching_profile(seqs);
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(std::move(tok));
  return out;
}

std::vector<EvalSample> read_eval_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open corpus " + path);
  std::vector<EvalSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto doc = nlohmann::json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      throw Error(ErrorCode::kMalformedJson, path + ":" + std::to_string(line_no) + ": not a JSON object");
    }
    try {
      EvalSample s;
      s.prompt_id = doc.value("prompt_id", std::to_string(line_no));
      s.correct_answer = doc.value("correct_answer", std::string{});
      for (const auto& g : doc.at("generations")) {
        EvalGeneration eg;
        eg.text = g.value("text", std::string{});
        eg.answer = g.value("answer", std::string{});
        eg.reward = g.value("reward", 0.0);
        RewardValue{eg.reward};
        s.generations.push_back(std::move(eg));
      }
      if (s.generations.empty()) {
        throw Error(ErrorCode::kEmptyInput, path + ":" + std::to_string(line_no) + ": no generations");
      }
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kMalformedJson, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<EvalRow> evaluate_corpus(std::span<const EvalSample> corpus,
                                     std::span<const std::size_t> ks) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "empty evaluation corpus");
  std::vector<EvalRow> rows;
  for (auto k : ks) {
    EvalRow row;
    row.k = k;
    for (const auto& s : corpus) {
      const auto n = s.generations.size();
      const auto c = static_cast<std::size_t>(std::count_if(
          s.generations.begin(), s.generations.end(), [](const auto& g) { return g.reward >= 0.5; }));
      row.pass_at_k += pass_at_k(n, c, k);

      std::vector<std::string> answers;
      std::vector<std::vector<std::string>> seqs;
      for (std::size_t i = 0; i < k; ++i) {
        answers.push_back(s.generations[i].answer);
        auto toks = whitespace_tokens(s.generations[i].text);
        if (toks.empty()) toks.emplace_back();
        seqs.push_back(std::move(toks));
      }
      auto vote = majority_at_k(answers, s.correct_answer);
      if (s.correct_answer.empty()) {
        vote.is_correct = std::any_of(s.generations.begin(), s.generations.begin() + k,
                                      [&](const auto& g) { return g.answer == vote.winner && g.reward >= 0.5; });
      }
      row.majority_accuracy += vote.is_correct ? 1.0 : 0.0;
      row.vote_share += vote.vote_share;
      const auto prof = branching_profile(seqs);
      row.mean_branches += std::accumulate(prof.counts.begin(), prof.counts.end(), 0.0) /
                           static_cast<double>(prof.counts.size());
    }
    const double m = static_cast<double>(corpus.size());
    row.pass_at_k /= m;
    row.majority_accuracy /= m;
    row.vote_share /= m;
    row.mean_branches /= m;
    rows.push_back(row);
  }
  return rows;
}

std::string eval_rows_csv(std::span<const EvalRow> rows) {
  std::string out = "k,pass_at_k,majority_accuracy,vote_share,mean_branches\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g,%.10g,%.10g\n", r.k, r.pass_at_k,
                  r.majority_accuracy, r.vote_share, r.mean_branches);
    out += buf;
  }
  return out;
}

}  // namespace polyrl
