#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "polyrl/experiment.hpp"
#include "polyrl/set_engine.hpp"

namespace polyrl {

bool VerificationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string VerificationReport::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"passed", c.passed},
                   {"measured", c.measured},
                   {"tolerance", c.tolerance},
                   {"detail", c.detail}});
  }
  nlohmann::json doc = {{"all_passed", all_passed()}, {"checks", arr}};
  return doc.dump(2) + "\n";
}

std::string VerificationReport::to_text() const {
  std::string out;
  char buf[512];
  for (const auto& c : checks) {
    std::snprintf(buf, sizeof buf, "%s %-28s measured=%.6g tolerance=%.6g  %s\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.tolerance,
                  c.detail.c_str());
    out += buf;
  }
  return out;
}

namespace {

std::vector<double> random_logits(Rng& rng, std::size_t size, double scale) {
  std::vector<double> v(size);
  for (double& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return v;
}

SyntheticTask random_bandit(Rng& rng, std::size_t size, bool binary) {
  TaskSpec spec;
  spec.kind = TaskKind::kBandit;
  for (std::size_t a = 0; a < size; ++a) {
    spec.rewards.push_back(binary ? static_cast<double>(rng.below(2)) : rng.uniform());
    const auto c = rng.below(size + 1);
    spec.clusters.push_back(c == size ? kDegenerateCluster : static_cast<int>(c) + 1);
  }
  return make_task(spec);
}

CheckResult unbiasedness(const VerificationOptions& opts, std::uint64_t k, const char* name) {
  TaskSpec spec;
  spec.kind = TaskKind::kBandit;
  spec.rewards = {1, 1, 0, 1, 0};
  spec.clusters = {1, 2, 3, 1, kDegenerateCluster};
  const auto task = make_task(spec);
  constexpr std::size_t kN = 5;
  constexpr std::size_t kSet = 3;
  Rng rng(opts.seed);
  const TabularPolicy policy(random_logits(rng, task.size(), 1.0));
  const SetObjective objective(ObjectiveKind::kPolychromic, kSet);
  const auto exact = exact_setrl_gradient(policy, make_tuple_score(task, objective), kSet);
  const double m = scaling_factor(kN, kSet, k) * opts.scaling_factor_multiplier;

  const auto dim = task.size();
  std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
  const auto table = task.cluster_table();
  for (std::size_t d = 0; d < opts.estimator_draws; ++d) {
    auto batch = task.sample(policy, kN, rng);
    std::vector<ClusterAssignment> c;
    for (const auto& g : batch.generations) c.push_back(table[g.action_index]);
    batch.clusters = std::move(c);
    auto subsets = k == 0 ? enumerate_subsets(kN, kSet) : sample_subsets(kN, kSet, k, rng.next());
    const auto coll = score_sets(batch, std::move(subsets), objective);
    const auto marg = marginal_advantages(coll, kN);
    std::vector<double> g(dim, 0.0);
    for (std::size_t i = 0; i < kN; ++i) {
      const auto lg = policy.logprob_grad(batch.generations[i].action_index);
      for (std::size_t j = 0; j < dim; ++j) g[j] += lg[j] * marg.values[i];
    }
    for (std::size_t j = 0; j < dim; ++j) {
      sum[j] += g[j];
      sum_sq[j] += g[j] * g[j];
    }
  }
  const double draws = static_cast<double>(opts.estimator_draws);
  double worst = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double mean = sum[j] / draws;
    const double var = std::max(sum_sq[j] / draws - mean * mean, 0.0);
    const double se = std::sqrt(var / draws);
    const double diff = std::abs(mean - m * exact[j]);
    worst = std::max(worst, se > 0.0 ? diff / se : (diff > 1e-12 ? HUGE_VAL : 0.0));
  }
  char detail[128];
  std::snprintf(detail, sizeof detail, "max |mean - M*grad| / SE over %zu draws, M=%.6g",
                opts.estimator_draws, m);
  return {name, worst < 4.0, worst, 4.0, detail};
}

TabularPolicy shift_policy(const VerificationOptions& opts, const SyntheticTask& task) {
  Rng rng(opts.seed ^ 0x51f7);
  return TabularPolicy(random_logits(rng, task.size(), 1.0));
}

SyntheticTask shift_task() {
  TaskSpec spec;
  spec.kind = TaskKind::kBandit;
  spec.rewards = {1, 1, 0, 1};
  spec.clusters = {1, 2, 1, 3};
  return make_task(spec);
}

std::vector<CheckResult> logit_shift(const VerificationOptions& opts) {
  const auto task = shift_task();
  const auto policy = shift_policy(opts, task);
  const auto score = make_tuple_score(task, SetObjective(ObjectiveKind::kPolychromic, 3));
  const auto big = verify_logit_shift(policy, score, 3, 1e-2);
  const auto small = verify_logit_shift(policy, score, 3, 1e-3);
  const double ratio = small.deviation > 0.0 ? big.deviation / small.deviation : HUGE_VAL;
  const double gap_ratio =
      small.second_order_gap > 0.0 ? big.second_order_gap / small.second_order_gap : HUGE_VAL;
  return {{"logit_shift_alpha_1e-3", small.deviation < 1e-5, small.deviation, 1e-5,
           "std-dev of residual across actions"},
          {"logit_shift_ratio", ratio >= 50.0 && ratio <= 200.0, ratio, 200.0,
           "deviation(1e-2)/deviation(1e-3), accepted in [50, 200]"},
          {"logit_shift_second_order", gap_ratio >= 50.0 && gap_ratio <= 200.0, gap_ratio, 200.0,
           "gap to -alpha*C, ratio between alpha=1e-2 and 1e-3, accepted in [50, 200]"}};
}

CheckResult passn_analytic() {
  TaskSpec spec;
  spec.kind = TaskKind::kBandit;
  spec.rewards = {1, 0};
  spec.clusters = {1, 2};
  const auto task = make_task(spec);
  double worst = 0.0;
  for (double p : {0.0, 0.25, 0.5, 1.0}) {
    for (std::size_t n : {2u, 3u}) {
      const auto score = make_tuple_score(task, SetObjective(ObjectiveKind::kPassAtN, n));
      const std::vector<double> probs{p, 1.0 - p};
      const auto marg = exact_marginal_advantages(probs, score, n);
      const auto want = analytic_passn_marginals(p, n);
      worst = std::max({worst, std::abs(marg[0] - want.correct), std::abs(marg[1] - want.incorrect)});
    }
  }
  return {"passn_analytic", worst < 1e-12, worst, 1e-12, "p in {0, .25, .5, 1}, n in {2, 3}"};
}

std::vector<CheckResult> mean_reward_collapse(const VerificationOptions& opts) {
  Rng rng(opts.seed ^ 0x3c11);
  double worst_adv = 0.0;
  double worst_shift = 0.0;
  for (std::size_t inst = 0; inst < opts.random_instances; ++inst) {
    const auto size = 2 + rng.below(4);
    const auto task = random_bandit(rng, size, false);
    const TabularPolicy policy(random_logits(rng, size, 1.5));
    const std::size_t n = 1 + rng.below(3);
    const auto score = make_tuple_score(task, SetObjective(ObjectiveKind::kMeanReward, n));
    const auto marg = exact_marginal_advantages(policy, score, n);
    const auto std_adv = exact_standard_advantages(policy, task.rewards());
    for (std::size_t y = 0; y < size; ++y) {
      worst_adv = std::max(worst_adv, std::abs(marg[y] - std_adv[y] / static_cast<double>(n)));
    }
    const auto set_shift = verify_logit_shift(policy, score, n, 1e-3).delta_log_prob;
    const auto std_shift = verify_standard_logit_shift(policy, task.rewards(), 1e-3).delta_log_prob;
    for (std::size_t y = 0; y < size; ++y) {
      worst_shift = std::max(worst_shift, std::abs(set_shift[y] - std_shift[y]));
    }
  }
  return {{"mean_reward_marginal", worst_adv < 1e-12, worst_adv, 1e-12, "vs (r(y) - E[r]) / n"},
          {"mean_reward_logit_shift", worst_shift < 1e-12, worst_shift, 1e-12,
           "set-RL vs standard-RL one-step shift"}};
}

CheckResult finite_difference(const VerificationOptions& opts) {
  Rng rng(opts.seed ^ 0xfd);
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (std::size_t inst = 0; inst < std::max<std::size_t>(opts.random_instances / 2, 10); ++inst) {
    const auto size = 2 + rng.below(4);
    const auto task = random_bandit(rng, size, true);
    const TabularPolicy policy(random_logits(rng, size, 1.5), 0.5 + rng.uniform());
    for (auto kind : {ObjectiveKind::kPolychromic, ObjectiveKind::kPassAtN, ObjectiveKind::kMeanReward}) {
      const std::size_t n = 2 + rng.below(2);
      const auto score = make_tuple_score(task, SetObjective(kind, n));
      const auto g = exact_setrl_gradient(policy, score, n);
      double num = 0.0, den = 0.0;
      for (std::size_t j = 0; j < size; ++j) {
        auto up = policy.logits();
        auto down = policy.logits();
        up[j] += kStep;
        down[j] -= kStep;
        const double fd = (exact_expected_objective(policy.with_logits(up), score, n) -
                           exact_expected_objective(policy.with_logits(down), score, n)) /
                          (2.0 * kStep);
        num += (g[j] - fd) * (g[j] - fd);
        den += g[j] * g[j];
      }
      // A vanishing gradient is compared absolutely.
      const double err = den > 1e-16 ? std::sqrt(num / den) : std::sqrt(num);
      worst = std::max(worst, err);
    }
  }
  return {"finite_difference", worst < 1e-5, worst, 1e-5, "relative L2 error, three objectives"};
}

std::vector<CheckResult> set_invariants(const VerificationOptions& opts) {
  Rng rng(opts.seed ^ 0x2e70);
  double worst_sum = 0.0;
  double worst_perm = 0.0;
  const std::size_t batches = 1000;
  for (std::size_t b = 0; b < batches; ++b) {
    const auto big_n = 2 + rng.below(9);
    const auto n = 1 + rng.below(big_n - 1);
    GenerationBatch batch;
    std::vector<int> ids;
    for (std::size_t i = 0; i < big_n; ++i) {
      batch.generations.push_back({"g" + std::to_string(i), "", i});
      batch.rewards.emplace_back(static_cast<double>(rng.below(2)));
      const auto c = rng.below(big_n + 1);
      ids.push_back(c == big_n ? kDegenerateCluster : static_cast<int>(c) + 1);
    }
    batch.clusters = make_clusters(ids);
    const SetObjective objective(ObjectiveKind::kPolychromic, n);
    const auto marg = marginal_advantages(score_sets(batch, enumerate_subsets(big_n, n), objective), big_n);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(marg.values.begin(), marg.values.end(), 0.0)));

    std::vector<std::size_t> perm(big_n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = big_n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    GenerationBatch shuffled;
    std::vector<ClusterAssignment> sc;
    for (auto p : perm) {
      shuffled.generations.push_back(batch.generations[p]);
      shuffled.rewards.push_back(batch.rewards[p]);
      sc.push_back((*batch.clusters)[p]);
    }
    shuffled.clusters = std::move(sc);
    const auto marg2 =
        marginal_advantages(score_sets(shuffled, enumerate_subsets(big_n, n), objective), big_n);
    for (std::size_t i = 0; i < big_n; ++i) {
      worst_perm = std::max(worst_perm, std::abs(marg2.values[i] - marg.values[perm[i]]));
    }
  }
  return {{"zero_sum", worst_sum < 1e-10, worst_sum, 1e-10, "sum of marginals, 1000 batches"},
          {"permutation_symmetry", worst_perm < 1e-10, worst_perm, 1e-10,
           "marginals follow a batch permutation"}};
}

CheckResult decomposition(const VerificationOptions& opts) {
  Rng rng(opts.seed ^ 0xdec0);
  double worst = 0.0;
  for (std::size_t inst = 0; inst < opts.random_instances; ++inst) {
    const auto size = 2 + rng.below(5);
    const auto task = random_bandit(rng, size, false);
    const TabularPolicy policy(random_logits(rng, size, 1.5));
    const std::size_t n = 2 + rng.below(2);
    const auto p = policy.probabilities();
    const auto table = task.cluster_table();
    const auto score = make_tuple_score(task, SetObjective(ObjectiveKind::kPolychromic, n));
    const auto marg = exact_marginal_advantages(policy, score, n);

    // Moments over the free tail of a tuple whose first `fixed` slots are set.
    struct Moments {
      double r = 0, d = 0, rd = 0;
    };
    auto moments = [&](std::vector<std::size_t> prefix) {
      Moments m;
      const auto free = n - prefix.size();
      std::vector<std::size_t> digits(free, 0);
      std::vector<std::size_t> tuple = prefix;
      tuple.resize(n);
      while (true) {
        double prob = 1.0;
        for (std::size_t i = 0; i < free; ++i) {
          tuple[prefix.size() + i] = digits[i];
          prob *= p[digits[i]];
        }
        double rbar = 0.0;
        std::vector<ClusterAssignment> c;
        for (auto a : tuple) {
          rbar += task.reward(a);
          c.push_back(table[a]);
        }
        rbar /= static_cast<double>(n);
        const double d = diversity(c, n);
        m.r += prob * rbar;
        m.d += prob * d;
        m.rd += prob * rbar * d;
        std::size_t pos = free;
        while (pos > 0 && ++digits[pos - 1] == size) digits[--pos] = 0;
        if (pos == 0) break;
      }
      return m;
    };
    const auto all = moments({});
    double er = 0.0;
    for (std::size_t a = 0; a < size; ++a) er += p[a] * task.reward(a);
    // Cov(r(Y1), d) over full tuples.
    double e_r1_d = 0.0;
    for (std::size_t a = 0; a < size; ++a) e_r1_d += p[a] * task.reward(a) * moments({a}).d;
    const double cov_full = e_r1_d - er * all.d;
    for (std::size_t y = 0; y < size; ++y) {
      const auto cond = moments({y});
      const double nn = static_cast<double>(n);
      const double term1 = (task.reward(y) / nn + (nn - 1.0) / nn * er) * cond.d;
      const double term2 = cond.rd - cond.r * cond.d;
      const double four = term1 - er * all.d + term2 - cov_full;
      worst = std::max(worst, std::abs(four - marg[y]));
    }
  }
  return {"polychromic_decomposition", worst < 1e-10, worst, 1e-10, "four-term form vs exact marginal"};
}

}  // namespace

VerificationReport run_verification_suite(const VerificationOptions& opts) {
  if (opts.estimator_draws < 2 || opts.random_instances == 0) {
    throw Error(ErrorCode::kInvalidParams, "verification needs >= 2 draws and >= 1 instance");
  }
  VerificationReport rep;
  rep.checks.push_back(unbiasedness(opts, 0, "unbiased_all_sets"));
  rep.checks.push_back(unbiasedness(opts, 4, "unbiased_sampled_k4"));
  for (auto& c : logit_shift(opts)) rep.checks.push_back(std::move(c));
  rep.checks.push_back(passn_analytic());
  for (auto& c : mean_reward_collapse(opts)) rep.checks.push_back(std::move(c));
  rep.checks.push_back(finite_difference(opts));
  for (auto& c : set_invariants(opts)) rep.checks.push_back(std::move(c));
  rep.checks.push_back(decomposition(opts));
  return rep;
}

}  // namespace polyrl
