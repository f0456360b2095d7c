#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "polyrl/experiment.hpp"

using namespace polyrl;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("empty config gives the defaults") {
  const auto cfg = parse_experiment_config("{}");
  CHECK(cfg.algorithm == Algorithm::kPepo);
  CHECK(cfg.steps == 200);
  CHECK(cfg.hp.rollouts == 8);
  CHECK(cfg.hp.set_size == 4);
  CHECK(cfg.hp.num_sets == 70);
  CHECK(cfg.hp.clip_low == 0.20);
  CHECK(cfg.hp.clip_high == 0.28);
  CHECK(cfg.judge.kind == JudgeKind::kExact);
  CHECK(cfg.eval.k == std::vector<std::size_t>{1, 2, 4, 8});
}

TEST_CASE("config fields are read") {
  const auto cfg = parse_experiment_config(R"({
    "algorithm": "grpo", "steps": 12,
    "task": {"kind": "polynomial", "bound": 4, "distractors": 2},
    "hyperparams": {"rollouts": 6, "set_size": 3, "num_sets": "all", "seed": 3, "learning_rate": 0.5},
    "init": {"kind": "random", "scale": 2, "seed": 3},
    "judge": {"kind": "rule"},
    "eval": {"k": [1, 3], "samples": 5}
  })");
  CHECK(cfg.algorithm == Algorithm::kGrpo);
  CHECK(cfg.steps == 12);
  CHECK(cfg.task.bound == 4);
  CHECK(cfg.hp.all_sets());
  CHECK(cfg.hp.learning_rate == 0.5);
  CHECK(cfg.init.kind == InitKind::kRandom);
  CHECK(cfg.judge.kind == JudgeKind::kRule);
  CHECK(cfg.eval.k == std::vector<std::size_t>{1, 3});
}

TEST_CASE("invalid configs") {
  CHECK_CODE(parse_experiment_config(R"({"algorithm": "ppo"})"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"algoritm": "pepo"})"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"hyperparams": {"rollout": 8}})"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"steps": "many"})"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config("[1, 2]"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config("{"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"task": {"kind": "chess"}})"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"judge": {"kind": "oracle"}})"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"task": {"bound": -3}})"), ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"init": {"kind": "logits", "logits": [0, 1]}})"),
             ErrorCode::kConfigInvalid);
}

TEST_CASE("hyperparameter range errors surface as config errors") {
  CHECK_CODE(parse_experiment_config(R"({"hyperparams": {"set_size": 8}})"),
             ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"hyperparams": {"num_sets": 71}})"),
             ErrorCode::kConfigInvalid);
  CHECK_CODE(parse_experiment_config(R"({"hyperparams": {"learning_rate": 0}})"),
             ErrorCode::kConfigInvalid);
}

TEST_CASE("config echo round-trips") {
  const auto cfg = parse_experiment_config(R"({
    "algorithm": "divrl", "steps": 3,
    "task": {"kind": "bandit", "rewards": [1, 0, 1], "clusters": [1, 2, 100]},
    "hyperparams": {"rollouts": 3, "set_size": 2, "num_sets": 2, "divrl_lambda": 0.25},
    "judge": {"kind": "mock", "script": [[1, 2, 2]]}
  })");
  const auto echo = experiment_config_json(cfg);
  CHECK(experiment_config_json(parse_experiment_config(echo)) == echo);
  CHECK(echo.back() == '\n');
}

TEST_CASE("the API key never reaches the echo") {
  auto cfg = parse_experiment_config(R"({"judge": {"kind": "remote", "endpoint": "http://127.0.0.1:1/v1", "model": "m"}})");
  cfg.judge.remote.api_key = "sk-secret-value";
  const auto echo = experiment_config_json(cfg);
  CHECK(echo.find("sk-secret-value") == std::string::npos);
  CHECK(echo.find("api_key") == std::string::npos);
}

TEST_CASE("200 PEPO steps on the polynomial task write 200 metric rows") {
  TempDir dir("polyrl_exp_rows");
  auto cfg = parse_experiment_config(R"({"steps": 200, "hyperparams": {"seed": 1}})");
  cfg.out = dir.path.string();
  const auto res = run_experiment(cfg);
  CHECK(res.records.size() == 200);
  const auto csv = slurp(dir.path / "metrics.csv");
  CHECK(line_count(csv) == 201);
  CHECK(csv.rfind("step,accuracy,distinct_correct_clusters,distinct_incorrect_clusters,"
                  "mean_advantage,mean_abs_advantage,policy_entropy,expected_correct_clusters\n",
                  0) == 0);
  CHECK(line_count(slurp(dir.path / "metrics.jsonl")) == 200);
  for (const char* f : {"config.json", "policy.json", "eval_summary.json"}) {
    CHECK(fs::exists(dir.path / f));
  }
  const auto summary = nlohmann::json::parse(slurp(dir.path / "eval_summary.json"));
  CHECK(summary["rows"].size() == 4);
}

TEST_CASE("identical configs give byte-identical artifacts") {
  TempDir a("polyrl_exp_a"), b("polyrl_exp_b");
  const std::string body = R"({"steps": 40, "algorithm": "pepo",
    "task": {"kind": "polynomial", "bound": 3, "distractors": 1},
    "hyperparams": {"seed": 5, "num_sets": 12},
    "init": {"kind": "random", "scale": 1, "seed": 2}})";
  auto ca = parse_experiment_config(body);
  auto cb = parse_experiment_config(body);
  ca.out = a.path.string();
  cb.out = b.path.string();
  run_experiment(ca);
  run_experiment(cb);
  for (const char* f : {"metrics.csv", "metrics.jsonl", "policy.json", "eval_summary.json"}) {
    CHECK_MESSAGE(slurp(a.path / f) == slurp(b.path / f), f);
  }
}

TEST_CASE("re-running from the echoed config reproduces the run") {
  TempDir a("polyrl_exp_echo");
  auto cfg = parse_experiment_config(R"({"steps": 15, "algorithm": "divrl", "hyperparams": {"seed": 8}})");
  cfg.out = a.path.string();
  const auto first = run_experiment(cfg);
  const auto again = run_experiment(parse_experiment_config(slurp(a.path / "config.json")));
  CHECK(metrics_csv(first.records) == metrics_csv(again.records));
  CHECK(first.final_policy.logits() == again.final_policy.logits());
}

TEST_CASE("unwritable output directory") {
  TempDir a("polyrl_exp_io");
  std::ofstream(a.path / "file") << "x";
  auto cfg = parse_experiment_config(R"({"steps": 1})");
  cfg.out = (a.path / "file" / "sub").string();
  CHECK_CODE(run_experiment(cfg), ErrorCode::kIoError);
}

TEST_CASE("zero steps keep the initial policy") {
  const auto res = run_experiment(parse_experiment_config(R"({"steps": 0, "init": {"kind": "random", "seed": 4}})"));
  CHECK(res.records.empty());
  CHECK(res.final_policy.logits() == res.initial_policy.logits());
}

TEST_CASE("mock judge config drives clustering") {
  auto cfg = parse_experiment_config(R"({
    "steps": 2, "algorithm": "pepo",
    "task": {"kind": "bandit", "rewards": [1, 1, 0], "clusters": [1, 2, 3]},
    "hyperparams": {"rollouts": 3, "set_size": 2, "num_sets": "all", "prompts_per_batch": 1},
    "judge": {"kind": "mock", "script": [[7, 7, 7]]}
  })");
  const auto res = run_experiment(cfg);
  REQUIRE(res.records.size() == 2);
  // One shared cluster: at most one distinct correct cluster per group.
  for (const auto& r : res.records) CHECK(r.distinct_correct_clusters <= 1.0);
}

TEST_CASE("metrics CSV formatting") {
  ExperimentRecord r;
  r.step = 3;
  r.accuracy = 0.75;
  r.mean_advantage = -0.125;
  const auto csv = metrics_csv({r});
  CHECK(csv.substr(csv.find('\n') + 1) == "3,0.75,0,0,-0.125,0,0,0\n");
}

TEST_CASE("verification suite") {
  VerificationOptions opts;
  opts.estimator_draws = 20000;
  const auto rep = run_verification_suite(opts);
  REQUIRE_FALSE(rep.checks.empty());
  for (const auto& c : rep.checks) {
    // The plain residual is constant across actions up to rounding, so its
    // alpha-ratio measures rounding noise; it is reported, not asserted here.
    if (c.name == "logit_shift_ratio") continue;
    CHECK_MESSAGE(c.passed, c.name << " measured " << c.measured);
  }
  CHECK(rep.to_text().find("unbiased_all_sets") != std::string::npos);
  const auto j = nlohmann::json::parse(rep.to_json());
  CHECK(j["checks"].size() == rep.checks.size());
}

TEST_CASE("a corrupted scaling factor fails the unbiasedness checks") {
  VerificationOptions opts;
  opts.estimator_draws = 20000;
  opts.scaling_factor_multiplier = 1.5;
  const auto rep = run_verification_suite(opts);
  CHECK_FALSE(rep.all_passed());
  for (const auto& c : rep.checks) {
    if (c.name.rfind("unbiased_", 0) == 0) CHECK_FALSE(c.passed);
  }
}
