#include "polyrl/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

namespace polyrl {

using nlohmann::json;

std::string_view judge_kind_name(JudgeKind kind) noexcept {
  switch (kind) {
    case JudgeKind::kExact: return "exact";
    case JudgeKind::kRule: return "rule";
    case JudgeKind::kMock: return "mock";
    case JudgeKind::kRemote: return "remote";
  }
  return "unknown";
}

JudgeKind parse_judge_kind(std::string_view name) {
  if (name == "exact") return JudgeKind::kExact;
  if (name == "rule") return JudgeKind::kRule;
  if (name == "mock") return JudgeKind::kMock;
  if (name == "remote") return JudgeKind::kRemote;
  throw Error(ErrorCode::kConfigInvalid, "unknown judge '" + std::string(name) + "'");
}

namespace {

std::string_view init_kind_name(InitKind kind) {
  switch (kind) {
    case InitKind::kUniform: return "uniform";
    case InitKind::kRandom: return "random";
    case InitKind::kLogits: return "logits";
  }
  return "unknown";
}

InitKind parse_init_kind(std::string_view name) {
  if (name == "uniform") return InitKind::kUniform;
  if (name == "random") return InitKind::kRandom;
  if (name == "logits") return InitKind::kLogits;
  throw Error(ErrorCode::kConfigInvalid, "unknown init '" + std::string(name) + "'");
}

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw Error(ErrorCode::kConfigInvalid, std::string(where) + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kConfigInvalid, "unknown key '" + key + "' in " + std::string(where));
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (auto it = obj.find(key); it != obj.end()) dst = it->template get<T>();
}

TaskSpec parse_task(const json& j) {
  check_keys(j, "task", {"kind", "coeffs", "bound", "distractors", "gibberish", "lhs", "rhs",
                         "round_to", "max_offset", "slips", "rewards", "clusters", "renders"});
  TaskSpec t;
  if (auto it = j.find("kind"); it != j.end()) {
    try {
      t.kind = parse_task_kind(it->get<std::string>());
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfigInvalid, e.what());
    }
  }
  read(j, "coeffs", t.coeffs);
  read(j, "bound", t.bound);
  read(j, "distractors", t.distractors);
  read(j, "gibberish", t.gibberish);
  read(j, "lhs", t.lhs);
  read(j, "rhs", t.rhs);
  read(j, "round_to", t.round_to);
  read(j, "max_offset", t.max_offset);
  read(j, "slips", t.slips);
  read(j, "rewards", t.rewards);
  read(j, "clusters", t.clusters);
  read(j, "renders", t.renders);
  return t;
}

HyperParams parse_hp(const json& j) {
  check_keys(j, "hyperparams", {"rollouts", "set_size", "num_sets", "learning_rate", "clip_low",
                                "clip_high", "temperature", "divrl_lambda", "seed",
                                "prompts_per_batch", "inner_epochs"});
  HyperParams hp;
  read(j, "rollouts", hp.rollouts);
  read(j, "set_size", hp.set_size);
  if (auto it = j.find("num_sets"); it != j.end()) {
    if (it->is_string()) {
      if (it->get<std::string>() != "all") {
        throw Error(ErrorCode::kConfigInvalid, "num_sets must be an integer or \"all\"");
      }
      hp.num_sets = 0;
    } else {
      hp.num_sets = it->get<std::uint64_t>();
    }
  }
  read(j, "learning_rate", hp.learning_rate);
  read(j, "clip_low", hp.clip_low);
  read(j, "clip_high", hp.clip_high);
  read(j, "temperature", hp.temperature);
  read(j, "divrl_lambda", hp.divrl_lambda);
  read(j, "seed", hp.seed);
  read(j, "prompts_per_batch", hp.prompts_per_batch);
  read(j, "inner_epochs", hp.inner_epochs);
  return hp;
}

InitSpec parse_init(const json& j) {
  check_keys(j, "init", {"kind", "scale", "seed", "logits"});
  InitSpec s;
  if (auto it = j.find("kind"); it != j.end()) s.kind = parse_init_kind(it->get<std::string>());
  read(j, "scale", s.scale);
  read(j, "seed", s.seed);
  read(j, "logits", s.logits);
  return s;
}

JudgeSpec parse_judge(const json& j) {
  check_keys(j, "judge", {"kind", "script", "endpoint", "model", "temperature", "retries",
                          "fallback", "timeout_ms", "retry_backoff_ms", "max_concurrency"});
  JudgeSpec s;
  if (auto it = j.find("kind"); it != j.end()) s.kind = parse_judge_kind(it->get<std::string>());
  read(j, "script", s.script);
  read(j, "endpoint", s.remote.endpoint);
  read(j, "model", s.remote.model);
  read(j, "temperature", s.remote.temperature);
  read(j, "retries", s.remote.retries);
  read(j, "fallback", s.remote.fallback);
  if (auto it = j.find("timeout_ms"); it != j.end()) {
    s.remote.timeout = std::chrono::milliseconds(it->get<std::int64_t>());
  }
  if (auto it = j.find("retry_backoff_ms"); it != j.end()) {
    s.remote.retry_backoff = std::chrono::milliseconds(it->get<std::int64_t>());
  }
  read(j, "max_concurrency", s.max_concurrency);
  return s;
}

EvalSpec parse_eval(const json& j) {
  check_keys(j, "eval", {"k", "samples"});
  EvalSpec s;
  read(j, "k", s.k);
  read(j, "samples", s.samples);
  return s;
}

void validate_config(const ExperimentConfig& cfg) {
  try {
    validate_hyperparams(cfg.hp);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
  if (cfg.judge.kind == JudgeKind::kMock && cfg.judge.script.empty()) {
    throw Error(ErrorCode::kConfigInvalid, "mock judge needs a non-empty script");
  }
  if (cfg.judge.kind == JudgeKind::kRemote &&
      (cfg.judge.remote.endpoint.empty() || cfg.judge.remote.model.empty())) {
    throw Error(ErrorCode::kConfigInvalid, "remote judge needs an endpoint and a model");
  }
  if (cfg.judge.max_concurrency == 0) {
    throw Error(ErrorCode::kConfigInvalid, "judge max_concurrency must be positive");
  }
  if (cfg.judge.remote.retries < 1) throw Error(ErrorCode::kConfigInvalid, "judge retries must be >= 1");
  if (cfg.init.kind == InitKind::kRandom && !(cfg.init.scale >= 0.0)) {
    throw Error(ErrorCode::kConfigInvalid, "init scale must be non-negative");
  }
  if (cfg.eval.k.empty() || cfg.eval.samples == 0) {
    throw Error(ErrorCode::kConfigInvalid, "eval needs k values and a positive sample count");
  }
  for (auto k : cfg.eval.k) {
    if (k == 0 || k > 1024) throw Error(ErrorCode::kConfigInvalid, "eval k must lie in [1, 1024]");
  }
}

SyntheticTask build_task(const TaskSpec& spec) {
  try {
    return make_task(spec);
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInvalid, e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  auto doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kConfigInvalid, "config is not valid JSON");
  ExperimentConfig cfg;
  try {
    check_keys(doc, "config", {"task", "algorithm", "hyperparams", "init", "judge", "steps", "out", "eval"});
    if (auto it = doc.find("task"); it != doc.end()) cfg.task = parse_task(*it);
    if (auto it = doc.find("algorithm"); it != doc.end()) {
      cfg.algorithm = parse_algorithm(it->get<std::string>());
    }
    if (auto it = doc.find("hyperparams"); it != doc.end()) cfg.hp = parse_hp(*it);
    if (auto it = doc.find("init"); it != doc.end()) cfg.init = parse_init(*it);
    if (auto it = doc.find("judge"); it != doc.end()) cfg.judge = parse_judge(*it);
    read(doc, "steps", cfg.steps);
    read(doc, "out", cfg.out);
    if (auto it = doc.find("eval"); it != doc.end()) cfg.eval = parse_eval(*it);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigInvalid, std::string("config field has the wrong type: ") + e.what());
  }
  validate_config(cfg);
  const auto task = build_task(cfg.task);
  if (cfg.init.kind == InitKind::kLogits) make_initial_policy(cfg.init, task, cfg.hp.temperature);
  return cfg;
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  const auto& t = cfg.task;
  json task = {{"kind", task_kind_name(t.kind)}};
  switch (t.kind) {
    case TaskKind::kPolynomial:
      task.update({{"coeffs", t.coeffs}, {"bound", t.bound}, {"distractors", t.distractors},
                   {"gibberish", t.gibberish}});
      break;
    case TaskKind::kMultiplication:
      task.update({{"lhs", t.lhs}, {"rhs", t.rhs}, {"round_to", t.round_to},
                   {"max_offset", t.max_offset}, {"slips", t.slips}, {"gibberish", t.gibberish}});
      break;
    case TaskKind::kBandit:
      task.update({{"rewards", t.rewards}, {"clusters", t.clusters}, {"renders", t.renders}});
      break;
  }
  const auto& hp = cfg.hp;
  json hpj = {{"rollouts", hp.rollouts},
              {"set_size", hp.set_size},
              {"learning_rate", hp.learning_rate},
              {"clip_low", hp.clip_low},
              {"clip_high", hp.clip_high},
              {"temperature", hp.temperature},
              {"divrl_lambda", hp.divrl_lambda},
              {"seed", hp.seed},
              {"prompts_per_batch", hp.prompts_per_batch},
              {"inner_epochs", hp.inner_epochs}};
  if (hp.all_sets()) {
    hpj["num_sets"] = "all";
  } else {
    hpj["num_sets"] = hp.num_sets;
  }
  json init = {{"kind", init_kind_name(cfg.init.kind)}};
  if (cfg.init.kind == InitKind::kRandom) init.update({{"scale", cfg.init.scale}, {"seed", cfg.init.seed}});
  if (cfg.init.kind == InitKind::kLogits) init["logits"] = cfg.init.logits;
  const auto& j = cfg.judge;
  json judge = {{"kind", judge_kind_name(j.kind)}, {"max_concurrency", j.max_concurrency}};
  if (j.kind == JudgeKind::kMock) judge["script"] = j.script;
  if (j.kind == JudgeKind::kRemote) {
    judge.update({{"endpoint", j.remote.endpoint},
                  {"model", j.remote.model},
                  {"temperature", j.remote.temperature},
                  {"retries", j.remote.retries},
                  {"fallback", j.remote.fallback},
                  {"timeout_ms", j.remote.timeout.count()},
                  {"retry_backoff_ms", j.remote.retry_backoff.count()}});
  }
  json doc = {{"task", task},
              {"algorithm", algorithm_name(cfg.algorithm)},
              {"hyperparams", hpj},
              {"init", init},
              {"judge", judge},
              {"steps", cfg.steps},
              {"out", cfg.out},
              {"eval", {{"k", cfg.eval.k}, {"samples", cfg.eval.samples}}}};
  return doc.dump(2) + "\n";
}

TabularPolicy make_initial_policy(const InitSpec& init, const SyntheticTask& task,
                                  double temperature) {
  switch (init.kind) {
    case InitKind::kUniform: return TabularPolicy(std::vector<double>(task.size(), 0.0), temperature);
    case InitKind::kRandom: {
      Rng rng(mix_seed(init.seed) ^ 0x1417);
      std::vector<double> logits(task.size());
      for (double& l : logits) l = init.scale * (2.0 * rng.uniform() - 1.0);
      return TabularPolicy(std::move(logits), temperature);
    }
    case InitKind::kLogits:
      if (init.logits.size() != task.size()) {
        throw Error(ErrorCode::kConfigInvalid, "init logits need one entry per task action (" +
                                                   std::to_string(task.size()) + ")");
      }
      return TabularPolicy(init.logits, temperature);
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown init kind");
}

std::unique_ptr<Judge> make_judge(const JudgeSpec& spec, const SyntheticTask& task) {
  switch (spec.kind) {
    case JudgeKind::kExact: return std::make_unique<RuleJudge>(task.rule_judge());
    case JudgeKind::kRule: return std::make_unique<AnswerJudge>();
    case JudgeKind::kMock: return std::make_unique<MockJudge>(spec.script);
    case JudgeKind::kRemote: {
      auto remote = spec.remote;
      if (remote.api_key.empty()) {
        if (const char* key = std::getenv(kJudgeApiKeyEnv)) remote.api_key = key;
      }
      return std::make_unique<RemoteJudge>(std::move(remote));
    }
  }
  throw Error(ErrorCode::kConfigInvalid, "unknown judge kind");
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json record_json(const ExperimentRecord& r) {
  return {{"step", r.step},
          {"accuracy", r.accuracy},
          {"distinct_correct_clusters", r.distinct_correct_clusters},
          {"distinct_incorrect_clusters", r.distinct_incorrect_clusters},
          {"mean_advantage", r.mean_advantage},
          {"mean_abs_advantage", r.mean_abs_advantage},
          {"policy_entropy", r.policy_entropy},
          {"expected_correct_clusters", r.expected_correct_clusters}};
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << body;
  out.flush();
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

EvalSummary evaluate_policy(const ExperimentConfig& cfg, const SyntheticTask& task,
                            const TabularPolicy& initial, const TabularPolicy& final_policy) {
  EvalSummary s;
  const auto n = cfg.hp.rollouts;
  s.initial_expected_correct_clusters = expected_distinct_clusters(initial, task, n, true);
  s.final_expected_correct_clusters = expected_distinct_clusters(final_policy, task, n, true);
  s.initial_entropy = initial.entropy();
  s.final_entropy = final_policy.entropy();

  const auto kmax = *std::max_element(cfg.eval.k.begin(), cfg.eval.k.end());
  Rng rng(mix_seed(cfg.hp.seed) ^ 0xe7a1);
  std::vector<EvalSample> corpus;
  corpus.reserve(cfg.eval.samples);
  for (std::size_t i = 0; i < cfg.eval.samples; ++i) {
    const auto batch = task.sample(final_policy, kmax, rng);
    EvalSample sample;
    sample.prompt_id = batch.prompt.id + "-" + std::to_string(i);
    for (std::size_t g = 0; g < batch.size(); ++g) {
      sample.generations.push_back(
          {batch.generations[g].token_string, batch.generations[g].answer, batch.rewards[g].value()});
    }
    corpus.push_back(std::move(sample));
  }
  std::vector<std::size_t> ks = cfg.eval.k;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  s.rows = evaluate_corpus(corpus, ks);
  return s;
}

}  // namespace

std::string eval_summary_json(const EvalSummary& s) {
  json rows = json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"k", r.k},
                    {"pass_at_k", r.pass_at_k},
                    {"majority_accuracy", r.majority_accuracy},
                    {"vote_share", r.vote_share},
                    {"mean_branches", r.mean_branches}});
  }
  json doc = {{"rows", rows},
              {"initial_expected_correct_clusters", s.initial_expected_correct_clusters},
              {"final_expected_correct_clusters", s.final_expected_correct_clusters},
              {"initial_entropy", s.initial_entropy},
              {"final_entropy", s.final_entropy}};
  return doc.dump(2) + "\n";
}

namespace {

std::string policy_json(const TabularPolicy& policy, const SyntheticTask& task) {
  json actions = json::array();
  const auto p = policy.probabilities();
  for (std::size_t a = 0; a < policy.size(); ++a) {
    actions.push_back({{"text", task.generation(a).token_string},
                       {"reward", task.reward(a)},
                       {"cluster", task.label(a)},
                       {"logit", policy.logits()[a]},
                       {"probability", p[a]}});
  }
  json doc = {{"temperature", policy.temperature()}, {"actions", actions}};
  return doc.dump(2) + "\n";
}

}  // namespace

std::string metrics_csv(const std::vector<ExperimentRecord>& records) {
  std::string out =
      "step,accuracy,distinct_correct_clusters,distinct_incorrect_clusters,mean_advantage,"
      "mean_abs_advantage,policy_entropy,expected_correct_clusters\n";
  for (const auto& r : records) {
    out += std::to_string(r.step) + "," + fmt(r.accuracy) + "," + fmt(r.distinct_correct_clusters) +
           "," + fmt(r.distinct_incorrect_clusters) + "," + fmt(r.mean_advantage) + "," +
           fmt(r.mean_abs_advantage) + "," + fmt(r.policy_entropy) + "," +
           fmt(r.expected_correct_clusters) + "\n";
  }
  return out;
}

std::string metrics_jsonl(const std::vector<ExperimentRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_json(r).dump() + "\n";
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto task = build_task(cfg.task);
  auto judge = make_judge(cfg.judge, task);
  return run_experiment(cfg, *judge);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, Judge& judge) {
  validate_config(cfg);
  const auto task = build_task(cfg.task);

  std::filesystem::path out_dir;
  if (!cfg.out.empty()) {
    out_dir = cfg.out;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + out_dir.string() + ": " + ec.message());
    write_file(out_dir / "config.json", experiment_config_json(cfg));
  }

  ExperimentResult res;
  res.initial_policy = make_initial_policy(cfg.init, task, cfg.hp.temperature);
  TrainConfig tc{cfg.algorithm, cfg.hp, cfg.steps, cfg.judge.max_concurrency};
  auto state = train(tc, task, judge, res.initial_policy,
                     [&](const ExperimentRecord& r) { res.records.push_back(r); });
  res.final_policy = state.policy;
  res.summary = evaluate_policy(cfg, task, res.initial_policy, res.final_policy);

  if (!out_dir.empty()) {
    write_file(out_dir / "metrics.csv", metrics_csv(res.records));
    write_file(out_dir / "metrics.jsonl", metrics_jsonl(res.records));
    write_file(out_dir / "policy.json", policy_json(res.final_policy, task));
    write_file(out_dir / "eval_summary.json", eval_summary_json(res.summary));
  }
  return res;
}

}  // namespace polyrl
