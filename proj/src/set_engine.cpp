#include "polyrl/set_engine.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "polyrl/rng.hpp"

namespace polyrl {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n - k + i) / i stays integral at every step.
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(result, i);
    const std::uint64_t r = result / g;
    const std::uint64_t d = i / g;
    if (r > std::numeric_limits<std::uint64_t>::max() / (num / d)) {
      throw Error(ErrorCode::kInvalidParams, "binomial coefficient overflows 64 bits");
    }
    result = r * (num / d);
  }
  return result;
}

namespace {

void check_sizes(std::size_t big_n, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kInvalidParams, "set size must be positive");
  if (n >= big_n) {
    throw Error(ErrorCode::kSetSizeTooLarge,
                "set size " + std::to_string(n) + " must be < N = " + std::to_string(big_n));
  }
}

void check_k(std::size_t big_n, std::size_t n, std::uint64_t k) {
  check_sizes(big_n, n);
  const auto total = binomial(big_n, n);
  if (k <= 1 || k > total) {
    throw Error(ErrorCode::kKOutOfRange, "K = " + std::to_string(k) + " outside (1, " +
                                             std::to_string(total) + "]");
  }
}

}  // namespace

std::vector<IndexSet> enumerate_subsets(std::size_t big_n, std::size_t n) {
  check_sizes(big_n, n);
  std::vector<IndexSet> out;
  out.reserve(binomial(big_n, n));
  IndexSet cur(n);
  std::iota(cur.begin(), cur.end(), std::size_t{0});
  while (true) {
    out.push_back(cur);
    // Advance to the next combination in lexicographic order.
    std::size_t pos = n;
    while (pos > 0 && cur[pos - 1] == big_n - n + pos - 1) --pos;
    if (pos == 0) break;
    ++cur[pos - 1];
    for (std::size_t j = pos; j < n; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

IndexSet unrank_subset(std::size_t big_n, std::size_t n, std::uint64_t rank) {
  check_sizes(big_n, n);
  if (rank >= binomial(big_n, n)) throw Error(ErrorCode::kInvalidParams, "subset rank out of range");
  IndexSet out;
  out.reserve(n);
  std::size_t candidate = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    while (true) {
      const auto with = binomial(big_n - candidate - 1, n - pos - 1);
      if (rank < with) break;
      rank -= with;
      ++candidate;
    }
    out.push_back(candidate++);
  }
  return out;
}

std::vector<IndexSet> sample_subsets(std::size_t big_n, std::size_t n, std::uint64_t k,
                                     std::uint64_t seed) {
  check_k(big_n, n, k);
  const auto total = binomial(big_n, n);
  // Floyd's algorithm: k distinct ranks, each k-subset of ranks equally likely.
  Rng rng(seed);
  std::set<std::uint64_t> ranks;
  for (std::uint64_t j = total - k; j < total; ++j) {
    const auto t = rng.below(j + 1);
    if (!ranks.insert(t).second) ranks.insert(j);
  }
  std::vector<IndexSet> out;
  out.reserve(k);
  for (auto r : ranks) out.push_back(unrank_subset(big_n, n, r));
  return out;
}

SubsetCollection score_sets(std::size_t big_n, std::vector<IndexSet> subsets,
                            const SubsetScorer& scorer) {
  if (subsets.empty()) throw Error(ErrorCode::kKOutOfRange, "no subsets to score");
  SubsetCollection coll;
  coll.membership.assign(big_n, {});
  coll.scores.reserve(subsets.size());
  for (std::size_t j = 0; j < subsets.size(); ++j) {
    for (auto i : subsets[j]) {
      if (i >= big_n) throw Error(ErrorCode::kDimensionMismatch, "subset index out of range");
      coll.membership[i].push_back(j);
    }
    coll.scores.push_back(scorer(subsets[j]));
  }
  coll.baseline = std::accumulate(coll.scores.begin(), coll.scores.end(), 0.0) /
                  static_cast<double>(coll.scores.size());
  coll.set_advantages.reserve(coll.scores.size());
  for (double s : coll.scores) coll.set_advantages.push_back(s - coll.baseline);
  coll.indices = std::move(subsets);
  return coll;
}

SubsetCollection score_sets(const GenerationBatch& batch, std::vector<IndexSet> subsets,
                            const SetObjective& objective) {
  validate_batch(batch);
  const auto rewards = batch.reward_values();
  const std::vector<ClusterAssignment>* clusters = nullptr;
  if (objective.needs_clusters()) clusters = &batch.require_clusters();

  std::vector<double> r(objective.arity());
  std::vector<ClusterAssignment> c;
  auto scorer = [&](const IndexSet& set) {
    if (set.size() != objective.arity()) {
      throw Error(ErrorCode::kDimensionMismatch, "subset size differs from objective arity");
    }
    c.clear();
    for (std::size_t m = 0; m < set.size(); ++m) {
      r[m] = rewards[set[m]];
      if (clusters) c.push_back((*clusters)[set[m]]);
    }
    return objective.score(r, c);
  };
  return score_sets(batch.size(), std::move(subsets), scorer);
}

MarginalAdvantages marginal_advantages(const SubsetCollection& coll, std::size_t big_n) {
  MarginalAdvantages out;
  out.values.assign(big_n, 0.0);
  for (std::size_t j = 0; j < coll.indices.size(); ++j) {
    for (auto i : coll.indices[j]) {
      if (i >= big_n) throw Error(ErrorCode::kDimensionMismatch, "subset index out of range");
      out.values[i] += coll.set_advantages[j];
    }
  }
  return out;
}

double scaling_factor(std::size_t big_n, std::size_t n, std::uint64_t k) {
  check_sizes(big_n, n);
  const auto total = binomial(big_n, n);
  if (k == 0) k = total;
  check_k(big_n, n, k);
  const double full = static_cast<double>(total - binomial(big_n - 1, n - 1));
  if (k == total) return full;
  // K_all / C(K_all, K) * (1/K) * C(K_all - 2, K - 2) reduces to
  // (K - 1) / (K_all - 1).
  return static_cast<double>(k - 1) / static_cast<double>(total - 1) * full;
}

std::vector<double> estimate_gradient(std::span<const std::vector<double>> logprob_grads,
                                      const MarginalAdvantages& marg) {
  if (logprob_grads.size() != marg.values.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one log-prob gradient per generation required");
  }
  if (logprob_grads.empty()) return {};
  const auto dim = logprob_grads.front().size();
  std::vector<double> g(dim, 0.0);
  for (std::size_t i = 0; i < logprob_grads.size(); ++i) {
    if (logprob_grads[i].size() != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "log-prob gradients differ in dimension");
    }
    const double a = marg.values[i];
    if (a == 0.0) continue;
    for (std::size_t d = 0; d < dim; ++d) g[d] += logprob_grads[i][d] * a;
  }
  return g;
}

}  // namespace polyrl
