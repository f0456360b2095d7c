#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "polyrl/objectives.hpp"
#include "polyrl/types.hpp"

namespace polyrl {

/// Exact C(n, k). Throws kInvalidParams on 64-bit overflow.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Sorted, distinct member indices into a batch.
using IndexSet = std::vector<std::size_t>;

/// All C(N, n) index sets in lexicographic order.
std::vector<IndexSet> enumerate_subsets(std::size_t big_n, std::size_t n);

/// The index set of lexicographic rank `rank` among all n-subsets of {0..N-1}.
IndexSet unrank_subset(std::size_t big_n, std::size_t n, std::uint64_t rank);

/// K distinct index sets drawn uniformly without replacement, returned in
/// lexicographic order. Deterministic in `seed`.
std::vector<IndexSet> sample_subsets(std::size_t big_n, std::size_t n, std::uint64_t k,
                                     std::uint64_t seed);

struct SubsetCollection {
  std::vector<IndexSet> indices;
  std::vector<double> scores;
  double baseline = 0.0;
  std::vector<double> set_advantages;
  /// membership[i] lists the positions in `indices` of subsets containing i.
  std::vector<std::vector<std::size_t>> membership;
};

struct MarginalAdvantages {
  std::vector<double> values;
};

using SubsetScorer = std::function<double(const IndexSet&)>;

/// Scores every subset with `scorer` and mean-centres the scores.
SubsetCollection score_sets(std::size_t big_n, std::vector<IndexSet> subsets,
                            const SubsetScorer& scorer);

SubsetCollection score_sets(const GenerationBatch& batch, std::vector<IndexSet> subsets,
                            const SetObjective& objective);

/// values[i] = sum of set advantages over subsets containing i; 0 when i is in
/// none of them.
MarginalAdvantages marginal_advantages(const SubsetCollection& coll, std::size_t big_n);

/// Constant M such that E[estimator] = M * true set-RL gradient. K = 0 or
/// K = C(N, n) selects the full-enumeration factor.
double scaling_factor(std::size_t big_n, std::size_t n, std::uint64_t k);

/// sum_i grad log pi(y_i) * marginal[i]. `logprob_grads[i]` is the gradient for
/// generation i; all must share one dimension.
std::vector<double> estimate_gradient(std::span<const std::vector<double>> logprob_grads,
                                      const MarginalAdvantages& marg);

}  // namespace polyrl
