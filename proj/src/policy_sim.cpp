#include "polyrl/policy_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace polyrl {

TabularPolicy::TabularPolicy(std::vector<double> logits, double temperature)
    : logits_(std::move(logits)), temperature_(temperature) {
  if (logits_.empty()) throw Error(ErrorCode::kInvalidParams, "policy needs at least one action");
  if (!(temperature_ > 0.0) || !std::isfinite(temperature_)) {
    throw Error(ErrorCode::kInvalidParams, "temperature must be positive and finite");
  }
  for (double l : logits_) {
    if (!std::isfinite(l)) throw Error(ErrorCode::kInvalidParams, "logits must be finite");
  }
}

std::vector<double> TabularPolicy::log_probabilities() const {
  const double top = *std::max_element(logits_.begin(), logits_.end()) / temperature_;
  double z = 0.0;
  for (double l : logits_) z += std::exp(l / temperature_ - top);
  const double log_z = top + std::log(z);
  std::vector<double> out(logits_.size());
  for (std::size_t a = 0; a < logits_.size(); ++a) out[a] = logits_[a] / temperature_ - log_z;
  return out;
}

std::vector<double> TabularPolicy::probabilities() const {
  const double top = *std::max_element(logits_.begin(), logits_.end()) / temperature_;
  std::vector<double> p(logits_.size());
  double z = 0.0;
  for (std::size_t a = 0; a < logits_.size(); ++a) {
    p[a] = std::exp(logits_[a] / temperature_ - top);
    z += p[a];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> TabularPolicy::logprob_grad(std::size_t action) const {
  if (action >= size()) throw Error(ErrorCode::kDimensionMismatch, "action out of range");
  auto g = probabilities();
  for (double& v : g) v = -v / temperature_;
  g[action] += 1.0 / temperature_;
  return g;
}

double TabularPolicy::entropy() const {
  const auto p = probabilities();
  const auto lp = log_probabilities();
  double h = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] > 0.0) h -= p[a] * lp[a];
  }
  return h;
}

std::size_t TabularPolicy::draw(Rng& rng) const {
  const auto p = probabilities();
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    acc += p[a];
    if (u < acc) return a;
  }
  // Rounding left u above the final partial sum; return the last action with mass.
  for (std::size_t a = p.size(); a-- > 0;) {
    if (p[a] > 0.0) return a;
  }
  return p.size() - 1;
}

TabularPolicy TabularPolicy::with_logits(std::vector<double> logits) const {
  if (logits.size() != logits_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "logit vector changes the action count");
  }
  return TabularPolicy(std::move(logits), temperature_);
}

double expected_distinct_clusters(const TabularPolicy& policy, const SyntheticTask& task,
                                  std::size_t n, bool correct) {
  if (policy.size() != task.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "policy and task sizes differ");
  }
  const auto p = policy.probabilities();
  std::vector<std::pair<int, double>> mass;  // label -> probability mass
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (task.label(a) == kDegenerateCluster) continue;
    if ((task.reward(a) >= 0.5) != correct) continue;
    auto it = std::find_if(mass.begin(), mass.end(),
                           [&](const auto& m) { return m.first == task.label(a); });
    if (it == mass.end()) {
      mass.emplace_back(task.label(a), p[a]);
    } else {
      it->second += p[a];
    }
  }
  double total = 0.0;
  for (const auto& [label, q] : mass) {
    total += 1.0 - std::pow(1.0 - q, static_cast<double>(n));
  }
  return total;
}

// ---- exact enumeration ----------------------------------------------------

namespace {

std::uint64_t checked_power(std::size_t base, std::size_t exp, std::uint64_t bound) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && v > bound / base) {
      throw Error(ErrorCode::kEnumerationTooLarge, "enumeration exceeds the configured bound of " +
                                                       std::to_string(bound) + " tuples");
    }
    v *= base;
  }
  if (v > bound) {
    throw Error(ErrorCode::kEnumerationTooLarge,
                "enumeration exceeds the configured bound of " + std::to_string(bound) + " tuples");
  }
  return v;
}

/// Calls visit(tuple, probability) for every ordered tuple of length `len`
/// whose first `prefix.size()` entries are fixed to `prefix`. Order is
/// lexicographic so sums are reproducible.
template <typename Visit>
void for_each_tuple(const std::vector<double>& p, std::span<const std::size_t> prefix,
                    std::size_t len, Visit&& visit) {
  const std::size_t free = len - prefix.size();
  std::vector<std::size_t> tuple(len, 0);
  std::copy(prefix.begin(), prefix.end(), tuple.begin());
  std::vector<std::size_t> digits(free, 0);
  const std::size_t k = p.size();
  while (true) {
    double prob = 1.0;
    for (std::size_t d = 0; d < free; ++d) {
      tuple[prefix.size() + d] = digits[d];
      prob *= p[digits[d]];
    }
    visit(std::span<const std::size_t>(tuple), prob);
    std::size_t pos = free;
    while (pos > 0) {
      if (++digits[pos - 1] < k) break;
      digits[pos - 1] = 0;
      --pos;
    }
    if (pos == 0) break;
  }
}

void check_distribution(std::span<const double> probs) {
  if (probs.empty()) throw Error(ErrorCode::kInvalidParams, "empty distribution");
  double total = 0.0;
  for (double q : probs) {
    if (!(q >= 0.0) || !std::isfinite(q)) {
      throw Error(ErrorCode::kInvalidParams, "probabilities must be finite and non-negative");
    }
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorCode::kInvalidParams, "probabilities must sum to 1");
}

}  // namespace

TupleScore make_tuple_score(const SyntheticTask& task, const SetObjective& objective) {
  const auto table = task.cluster_table();
  return [rewards = task.rewards(), table, objective](std::span<const std::size_t> tuple) {
    std::vector<double> r(tuple.size());
    std::vector<ClusterAssignment> c;
    if (objective.needs_clusters()) c.resize(tuple.size());
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      r[i] = rewards[tuple[i]];
      if (!c.empty()) c[i] = table[tuple[i]];
    }
    return objective.score(r, c);
  };
}

double exact_expected_objective(std::span<const double> probs, const TupleScore& score,
                                std::size_t n, std::uint64_t bound) {
  if (n == 0) throw Error(ErrorCode::kInvalidParams, "set size must be positive");
  check_distribution(probs);
  checked_power(probs.size(), n, bound);
  const std::vector<double> p(probs.begin(), probs.end());
  double total = 0.0;
  for_each_tuple(p, {}, n, [&](std::span<const std::size_t> t, double prob) {
    total += prob * score(t);
  });
  return total;
}

double exact_expected_objective(const TabularPolicy& policy, const TupleScore& score,
                                std::size_t n, std::uint64_t bound) {
  return exact_expected_objective(policy.probabilities(), score, n, bound);
}

std::vector<double> exact_setrl_gradient(const TabularPolicy& policy, const TupleScore& score,
                                         std::size_t n, std::uint64_t bound) {
  if (n == 0) throw Error(ErrorCode::kInvalidParams, "set size must be positive");
  checked_power(policy.size(), n, bound);
  const auto p = policy.probabilities();
  // grad_j = (1/T) * (E[f * count_j] - n * p_j * E[f])
  std::vector<double> weighted(p.size(), 0.0);
  double expected = 0.0;
  for_each_tuple(p, {}, n, [&](std::span<const std::size_t> t, double prob) {
    const double w = prob * score(t);
    expected += w;
    for (auto a : t) weighted[a] += w;
  });
  std::vector<double> g(p.size());
  const double nn = static_cast<double>(n);
  for (std::size_t j = 0; j < p.size(); ++j) {
    g[j] = (weighted[j] - nn * p[j] * expected) / policy.temperature();
  }
  return g;
}

std::vector<double> exact_marginal_advantages(std::span<const double> probs,
                                              const TupleScore& score, std::size_t n,
                                              std::uint64_t bound) {
  const double base = exact_expected_objective(probs, score, n, bound);
  const std::vector<double> p(probs.begin(), probs.end());
  std::vector<double> out(p.size());
  for (std::size_t y = 0; y < p.size(); ++y) {
    const std::size_t prefix[] = {y};
    double cond = 0.0;
    for_each_tuple(p, prefix, n, [&](std::span<const std::size_t> t, double prob) {
      cond += prob * score(t);
    });
    out[y] = cond - base;
  }
  return out;
}

std::vector<double> exact_marginal_advantages(const TabularPolicy& policy, const TupleScore& score,
                                              std::size_t n, std::uint64_t bound) {
  return exact_marginal_advantages(policy.probabilities(), score, n, bound);
}

double exact_marginal_advantage(const TabularPolicy& policy, const TupleScore& score,
                                std::size_t n, std::size_t y, std::uint64_t bound) {
  if (y >= policy.size()) throw Error(ErrorCode::kDimensionMismatch, "action out of range");
  const double base = exact_expected_objective(policy, score, n, bound);
  const auto p = policy.probabilities();
  const std::size_t prefix[] = {y};
  double cond = 0.0;
  for_each_tuple(p, prefix, n, [&](std::span<const std::size_t> t, double prob) {
    cond += prob * score(t);
  });
  return cond - base;
}

std::vector<double> exact_standard_advantages(const TabularPolicy& policy,
                                              std::span<const double> rewards) {
  if (rewards.size() != policy.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one reward per action required");
  }
  const auto p = policy.probabilities();
  const double mean = std::inner_product(p.begin(), p.end(), rewards.begin(), 0.0);
  std::vector<double> out(p.size());
  for (std::size_t a = 0; a < p.size(); ++a) out[a] = rewards[a] - mean;
  return out;
}

std::vector<double> exact_standard_gradient(const TabularPolicy& policy,
                                            std::span<const double> rewards) {
  auto adv = exact_standard_advantages(policy, rewards);
  const auto p = policy.probabilities();
  for (std::size_t a = 0; a < p.size(); ++a) adv[a] *= p[a] / policy.temperature();
  return adv;
}

}  // namespace polyrl
