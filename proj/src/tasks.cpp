#include <cstdlib>
#include <sstream>

#include "polyrl/policy_sim.hpp"

namespace polyrl {

std::string_view task_kind_name(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::kPolynomial: return "polynomial";
    case TaskKind::kMultiplication: return "multiplication";
    case TaskKind::kBandit: return "bandit";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "polynomial") return TaskKind::kPolynomial;
  if (name == "multiplication") return TaskKind::kMultiplication;
  if (name == "bandit" || name == "multi_solution_bandit") return TaskKind::kBandit;
  throw Error(ErrorCode::kInvalidParams, "unknown task kind '" + std::string(name) + "'");
}

SyntheticTask::SyntheticTask(TaskKind kind, Prompt prompt, std::vector<Generation> space,
                             std::vector<double> rewards, std::vector<int> labels)
    : kind_(kind),
      prompt_(std::move(prompt)),
      space_(std::move(space)),
      rewards_(std::move(rewards)),
      labels_(std::move(labels)) {
  if (space_.empty()) throw Error(ErrorCode::kInvalidParams, "task has an empty generation space");
  if (rewards_.size() != space_.size() || labels_.size() != space_.size()) {
    throw Error(ErrorCode::kInvalidParams, "task tables differ in length");
  }
  for (std::size_t a = 0; a < space_.size(); ++a) {
    space_[a].action_index = a;
    RewardValue{rewards_[a]};  // range check
    if (labels_[a] < 0) throw Error(ErrorCode::kInvalidParams, "cluster labels must be non-negative");
  }
}

std::vector<ClusterAssignment> SyntheticTask::cluster_table() const {
  return make_clusters(labels_);
}

RuleJudge SyntheticTask::rule_judge() const {
  return RuleJudge([labels = labels_](const Generation& g) { return labels.at(g.action_index); });
}

GenerationBatch SyntheticTask::sample(const TabularPolicy& policy, std::size_t n, Rng& rng) const {
  if (policy.size() != size()) {
    throw Error(ErrorCode::kDimensionMismatch, "policy has " + std::to_string(policy.size()) +
                                                   " actions, task has " + std::to_string(size()));
  }
  GenerationBatch batch;
  batch.prompt = prompt_;
  batch.generations.reserve(n);
  batch.rewards.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = policy.draw(rng);
    batch.generations.push_back(space_[a]);
    batch.rewards.emplace_back(rewards_[a]);
  }
  return batch;
}

namespace {

// Non-degenerate labels live far from the reserved id 100.
constexpr int kLabelBase = 1000;

long long eval_poly(const std::vector<long long>& coeffs, long long x) {
  long long y = 0;
  for (auto c : coeffs) y = y * x + c;
  return y;
}

std::string poly_text(const std::vector<long long>& coeffs) {
  std::ostringstream os;
  const auto deg = coeffs.size() - 1;
  bool first = true;
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const auto c = coeffs[k];
    const auto power = deg - k;
    if (c == 0) continue;
    const auto mag = std::llabs(c);
    if (first) {
      if (c < 0) os << '-';
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    if (mag != 1 || power == 0) os << mag;
    if (power >= 1) os << 'x';
    if (power >= 2) os << '^' << power;
    first = false;
  }
  if (first) os << '0';
  return os.str();
}

std::string pair_text(long long x, long long y) {
  return "(" + std::to_string(x) + ", " + std::to_string(y) + ")";
}

const char* const kGibberish[] = {
    "asdf qwer zxcv 9999 ----", "I think the answer is probably 0.", "??? !!! ...",
    "lorem ipsum dolor", "x = y = z",
};

void add_gibberish(int count, std::vector<Generation>& space, std::vector<double>& rewards,
                   std::vector<int>& labels) {
  for (int g = 0; g < count; ++g) {
    std::string text = kGibberish[g % std::size(kGibberish)];
    if (g >= static_cast<int>(std::size(kGibberish))) text += " #" + std::to_string(g);
    space.push_back({text, text, 0});
    rewards.push_back(0.0);
    labels.push_back(kDegenerateCluster);
  }
}

SyntheticTask make_polynomial(const TaskSpec& spec) {
  if (spec.coeffs.empty() || spec.bound < 0 || spec.distractors < 0 || spec.gibberish < 0) {
    throw Error(ErrorCode::kInvalidParams, "polynomial task needs coefficients, bound >= 0, "
                                           "distractors >= 0, gibberish >= 0");
  }
  if (spec.bound > 1000 || spec.distractors > 100 || spec.gibberish > 100) {
    throw Error(ErrorCode::kInvalidParams, "polynomial task parameters exceed supported bounds");
  }
  Prompt prompt{"polynomial", "Find a pair (x, y) of integers with y = " + poly_text(spec.coeffs) + "."};
  std::vector<Generation> space;
  std::vector<double> rewards;
  std::vector<int> labels;
  for (long long x = -spec.bound; x <= spec.bound; ++x) {
    const auto y = eval_poly(spec.coeffs, x);
    for (int d = 0; d <= spec.distractors; ++d) {
      // 0, +1, -1, +2, -2, ...
      const long long delta = d == 0 ? 0 : (d % 2 == 1 ? (d + 1) / 2 : -(d / 2));
      const auto text = pair_text(x, y + delta);
      space.push_back({text, text, 0});
      rewards.push_back(delta == 0 ? 1.0 : 0.0);
      // Answer identity: every distinct pair is its own cluster.
      labels.push_back(kLabelBase + static_cast<int>(labels.size()));
    }
  }
  add_gibberish(spec.gibberish, space, rewards, labels);
  return SyntheticTask(TaskKind::kPolynomial, std::move(prompt), std::move(space),
                       std::move(rewards), std::move(labels));
}

struct Split {
  long long base;
  long long offset;  // operand = base + offset, offset != 0
};

std::vector<Split> splits_of(long long v, int round_to, int max_offset) {
  std::vector<Split> out;
  const long long lo = v - max_offset;
  const long long hi = v + max_offset;
  long long first = lo - ((lo % round_to) + round_to) % round_to;
  if (first < lo) first += round_to;
  for (long long base = first; base <= hi; base += round_to) {
    if (base == v || base <= 0) continue;
    out.push_back({base, v - base});
  }
  return out;
}

std::string split_text(const Split& s) {
  return "(" + std::to_string(s.base) + (s.offset < 0 ? "-" : "+") +
         std::to_string(std::llabs(s.offset)) + ")";
}

// (a + da)(b + db) = a*b + a*db + da*b + da*db, written with explicit signs.
std::string expansion_text(const Split& p, const Split& q, const long long terms[4]) {
  const long long mags[4][2] = {{p.base, q.base},
                                {p.base, std::llabs(q.offset)},
                                {std::llabs(p.offset), q.base},
                                {std::llabs(p.offset), std::llabs(q.offset)}};
  std::ostringstream os;
  for (int t = 0; t < 4; ++t) {
    if (t == 0) {
      if (terms[0] < 0) os << '-';
    } else {
      os << (terms[t] < 0 ? " - " : " + ");
    }
    os << mags[t][0] << '*' << mags[t][1];
  }
  return os.str();
}

SyntheticTask make_multiplication(const TaskSpec& spec) {
  if (spec.lhs <= 0 || spec.rhs <= 0 || spec.round_to <= 0 || spec.max_offset <= 0 ||
      spec.slips < 0 || spec.slips > 3 || spec.gibberish < 0 || spec.gibberish > 100) {
    throw Error(ErrorCode::kInvalidParams, "multiplication task parameters out of range");
  }
  const auto lsplits = splits_of(spec.lhs, spec.round_to, spec.max_offset);
  const auto rsplits = splits_of(spec.rhs, spec.round_to, spec.max_offset);
  if (lsplits.empty() || rsplits.empty()) {
    throw Error(ErrorCode::kInvalidParams, "no decomposition templates for these operands");
  }
  const long long product = spec.lhs * spec.rhs;
  Prompt prompt{"multiplication", "Compute " + std::to_string(spec.lhs) + " x " +
                                      std::to_string(spec.rhs) +
                                      " by decomposing the operands and distributing."};
  std::vector<Generation> space;
  std::vector<double> rewards;
  std::vector<int> labels;
  int family = 0;
  for (const auto& p : lsplits) {
    for (const auto& q : rsplits) {
      const long long terms[4] = {p.base * q.base, p.base * q.offset, p.offset * q.base,
                                  p.offset * q.offset};
      for (int variant = 0; variant <= spec.slips; ++variant) {
        long long shown[4] = {terms[0], terms[1], terms[2], terms[3]};
        // Slip k flips the sign of term 4 - k.
        if (variant > 0) shown[4 - variant] = -shown[4 - variant];
        if (variant > 0 && shown[4 - variant] == terms[4 - variant]) continue;
        const long long total = shown[0] + shown[1] + shown[2] + shown[3];
        const std::string text = split_text(p) + split_text(q) + " = " +
                                 expansion_text(p, q, shown) + " = " + std::to_string(total);
        space.push_back({text, std::to_string(total), 0});
        rewards.push_back(total == product ? 1.0 : 0.0);
        // Slips share the cluster of their template.
        labels.push_back(kLabelBase + family);
      }
      ++family;
    }
  }
  add_gibberish(spec.gibberish, space, rewards, labels);
  return SyntheticTask(TaskKind::kMultiplication, std::move(prompt), std::move(space),
                       std::move(rewards), std::move(labels));
}

SyntheticTask make_bandit(const TaskSpec& spec) {
  const auto n = spec.rewards.size();
  if (n == 0 || spec.clusters.size() != n || (!spec.renders.empty() && spec.renders.size() != n)) {
    throw Error(ErrorCode::kInvalidParams,
                "bandit task needs equally long reward and cluster tables (and renders if given)");
  }
  std::vector<Generation> space;
  for (std::size_t a = 0; a < n; ++a) {
    std::string text = spec.renders.empty() ? "action-" + std::to_string(a) : spec.renders[a];
    space.push_back({text, text, a});
  }
  std::vector<int> labels;
  for (int c : spec.clusters) {
    if (c < 0) throw Error(ErrorCode::kInvalidParams, "bandit cluster ids must be non-negative");
    labels.push_back(c);
  }
  return SyntheticTask(TaskKind::kBandit, Prompt{"bandit", "Pick an action."}, std::move(space),
                       spec.rewards, std::move(labels));
}

}  // namespace

SyntheticTask make_task(const TaskSpec& spec) {
  switch (spec.kind) {
    case TaskKind::kPolynomial: return make_polynomial(spec);
    case TaskKind::kMultiplication: return make_multiplication(spec);
    case TaskKind::kBandit: return make_bandit(spec);
  }
  throw Error(ErrorCode::kInvalidParams, "unknown task kind");
}

}  // namespace polyrl
