#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "polyrl/polyrl.h"

namespace {

template <typename F>
std::string fetch(F&& call) {
  size_t len = 0;
  REQUIRE(call(nullptr, &len) == POLYRL_ERR_BUFFER_TOO_SMALL);
  std::string buf(len, '\0');
  REQUIRE(call(buf.data(), &len) == POLYRL_OK);
  CHECK(buf.back() == '\0');
  buf.pop_back();
  return buf;
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(polyrl_version()) == "0.1.0");
  CHECK(std::string(polyrl_status_name(POLYRL_OK)) == "OK");
  CHECK(std::string(polyrl_status_name(POLYRL_ERR_CONFIG_INVALID)) == "CONFIG_INVALID");
  CHECK(std::string(polyrl_status_name(POLYRL_ERR_INVALID_HANDLE)) == "INVALID_HANDLE");
  CHECK(std::string(polyrl_status_name(999)) == "UNKNOWN");
}

TEST_CASE("marginal advantages through the C API") {
  const double r[] = {1, 1, 0};
  const int c[] = {1, 2, 1};
  double out[3];
  REQUIRE(polyrl_marginal_advantages(r, c, 3, 2, 0, 0, "polychromic", out) == POLYRL_OK);
  CHECK(out[0] == doctest::Approx(1.0 / 12));
  CHECK(out[1] == doctest::Approx(1.0 / 3));
  CHECK(out[2] == doctest::Approx(-5.0 / 12));
  CHECK(std::string(polyrl_last_error()).empty());

  CHECK(polyrl_marginal_advantages(r, c, 3, 3, 0, 0, "polychromic", out) ==
        POLYRL_ERR_SET_SIZE_TOO_LARGE);
  CHECK_FALSE(std::string(polyrl_last_error()).empty());
  CHECK(polyrl_marginal_advantages(r, nullptr, 3, 2, 0, 0, "polychromic", out) ==
        POLYRL_ERR_MISSING_CLUSTERS);
  CHECK(polyrl_marginal_advantages(r, nullptr, 3, 2, 0, 0, "mean_reward", out) == POLYRL_OK);
  CHECK(polyrl_marginal_advantages(r, c, 3, 2, 0, 0, "bogus", out) == POLYRL_ERR_INVALID_PARAMS);
  CHECK(polyrl_marginal_advantages(nullptr, c, 3, 2, 0, 0, "polychromic", out) ==
        POLYRL_ERR_NULL_POINTER);
}

TEST_CASE("scalar helpers") {
  double v = 0;
  REQUIRE(polyrl_scaling_factor(8, 4, 70, &v) == POLYRL_OK);
  CHECK(v == doctest::Approx(35.0));
  REQUIRE(polyrl_scaling_factor(5, 3, 4, &v) == POLYRL_OK);
  CHECK(v == doctest::Approx(4.0 / 3));
  CHECK(polyrl_scaling_factor(5, 3, 11, &v) == POLYRL_ERR_K_OUT_OF_RANGE);

  const int ids[] = {1, 100, 100, 2};
  REQUIRE(polyrl_diversity(ids, 4, &v) == POLYRL_OK);
  CHECK(v == 0.5);
  const int cl[] = {1, 1, 2, 3, 4, 5, 6, 7};
  REQUIRE(polyrl_divrl_bonus(cl, 8, 0, &v) == POLYRL_OK);
  CHECK(v == doctest::Approx(3.0 / 7));
  CHECK(polyrl_divrl_bonus(cl, 1, 0, &v) == POLYRL_ERR_DEGENERATE_N);
  REQUIRE(polyrl_pass_at_k(4, 2, 2, &v) == POLYRL_OK);
  CHECK(v == doctest::Approx(5.0 / 6));
  CHECK(polyrl_pass_at_k(4, 2, 5, &v) == POLYRL_ERR_K_EXCEEDS_N);

  const double r[] = {1, 0, 0, 1};
  double adv[4];
  REQUIRE(polyrl_grpo_advantages(r, 4, adv) == POLYRL_OK);
  CHECK(adv[0] == 0.5);
  CHECK(adv[1] == -0.5);
  const int same[] = {3, 3};
  const double r2[] = {1, 0};
  REQUIRE(polyrl_divrl_advantages(r2, same, 2, 0.5, adv) == POLYRL_OK);
  CHECK(adv[0] == 0.5);
  CHECK(adv[1] == -0.5);
}

TEST_CASE("task and policy handles") {
  polyrl_task_t task = nullptr;
  REQUIRE(polyrl_task_create(&task, R"({"kind": "polynomial", "bound": 2})") == POLYRL_OK);
  size_t n = 0;
  REQUIRE(polyrl_task_size(task, &n) == POLYRL_OK);
  CHECK(n == 5);
  double reward = -1;
  int cluster = -1;
  const auto text = fetch([&](char* o, size_t* l) {
    return polyrl_task_action(task, 3, &reward, &cluster, o, l);
  });
  CHECK(text == "(1, 11)");
  CHECK(reward == 1.0);

  const double logits[] = {0, 0, 0, 0, 0};
  polyrl_policy_t policy = nullptr;
  REQUIRE(polyrl_policy_create(&policy, logits, 5, 1.0) == POLYRL_OK);
  double probs[5];
  REQUIRE(polyrl_policy_probabilities(policy, probs, 5) == POLYRL_OK);
  for (double p : probs) CHECK(p == doctest::Approx(0.2));
  CHECK(polyrl_policy_probabilities(policy, probs, 4) == POLYRL_ERR_DIMENSION_MISMATCH);

  double expected = 0;
  REQUIRE(polyrl_exact_expected_objective(policy, task, "mean_reward", 2, &expected) == POLYRL_OK);
  CHECK(expected == doctest::Approx(1.0));
  double grad[5], marg[5];
  REQUIRE(polyrl_exact_setrl_gradient(policy, task, "polychromic", 2, grad, 5) == POLYRL_OK);
  REQUIRE(polyrl_exact_marginal_advantages(policy, task, "polychromic", 2, marg, 5) == POLYRL_OK);
  // Symmetric policy over five interchangeable correct actions.
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(grad[i]) < 1e-14);
    CHECK(std::abs(marg[i]) < 1e-14);
  }

  // Handles are type-checked.
  CHECK(polyrl_task_size(reinterpret_cast<polyrl_task_t>(policy), &n) == POLYRL_ERR_INVALID_HANDLE);
  CHECK(polyrl_task_size(nullptr, &n) == POLYRL_ERR_NULL_POINTER);
  CHECK(polyrl_policy_destroy(policy) == POLYRL_OK);
  CHECK(polyrl_task_destroy(task) == POLYRL_OK);
  CHECK(polyrl_task_create(&task, R"({"kind": "chess"})") == POLYRL_ERR_CONFIG_INVALID);
}

TEST_CASE("judge prompt and parsing") {
  const char* responses[] = {"alpha", "beta"};
  const auto prompt = fetch([&](char* o, size_t* l) {
    return polyrl_judge_prompt("ctx", responses, 2, o, l);
  });
  const std::string tail = "**Responses:**\n1. alpha\n2. beta";
  CHECK(prompt.substr(prompt.size() - tail.size()) == tail);

  // A buffer one byte short is rejected with the required size.
  size_t len = prompt.size();
  std::string small(len, '\0');
  CHECK(polyrl_judge_prompt("ctx", responses, 2, small.data(), &len) == POLYRL_ERR_BUFFER_TOO_SMALL);
  CHECK(len == prompt.size() + 1);

  int ids[3];
  REQUIRE(polyrl_judge_parse(R"({"1":{"cluster_id":7},"2":{"cluster_id":7},"3":{"cluster_id":100}})", 3,
                             ids) == POLYRL_OK);
  CHECK(ids[0] == 1);
  CHECK(ids[1] == 1);
  CHECK(ids[2] == 100);
  CHECK(polyrl_judge_parse(R"({"1":{"cluster_id":1}})", 3, ids) == POLYRL_ERR_WRONG_KEY_COUNT);
  CHECK(polyrl_judge_parse("nope", 1, ids) == POLYRL_ERR_MALFORMED_JSON);
}

TEST_CASE("experiments through the C API") {
  const auto defaults = fetch([](char* o, size_t* l) { return polyrl_default_config(o, l); });
  CHECK(nlohmann::json::parse(defaults)["algorithm"] == "pepo");

  const char* cfg = R"({"steps": 7, "algorithm": "grpo", "hyperparams": {"seed": 2}})";
  const auto normalized = fetch([&](char* o, size_t* l) { return polyrl_config_normalize(cfg, o, l); });
  CHECK(nlohmann::json::parse(normalized)["steps"] == 7);

  polyrl_experiment_t exp = nullptr;
  REQUIRE(polyrl_experiment_run(&exp, cfg) == POLYRL_OK);
  size_t steps = 0;
  REQUIRE(polyrl_experiment_steps(exp, &steps) == POLYRL_OK);
  CHECK(steps == 7);
  const auto csv = fetch([&](char* o, size_t* l) { return polyrl_experiment_metrics_csv(exp, o, l); });
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);
  const auto summary =
      nlohmann::json::parse(fetch([&](char* o, size_t* l) { return polyrl_experiment_summary_json(exp, o, l); }));
  CHECK(summary.contains("final_entropy"));
  double logits[5];
  CHECK(polyrl_experiment_final_logits(exp, logits, 5) == POLYRL_OK);
  CHECK(polyrl_experiment_final_logits(exp, logits, 4) == POLYRL_ERR_DIMENSION_MISMATCH);
  CHECK(polyrl_experiment_destroy(exp) == POLYRL_OK);

  exp = nullptr;
  CHECK(polyrl_experiment_run(&exp, R"({"algorithm": "ppo"})") == POLYRL_ERR_CONFIG_INVALID);
  CHECK(exp == nullptr);
  CHECK(std::string(polyrl_last_error()).find("ppo") != std::string::npos);
}

TEST_CASE("verification report through the C API") {
  polyrl_report_t rep = nullptr;
  REQUIRE(polyrl_verify(&rep, 7, 5000, 1.0) == POLYRL_OK);
  const auto j = nlohmann::json::parse(fetch([&](char* o, size_t* l) { return polyrl_report_json(rep, o, l); }));
  CHECK(j["checks"].size() > 5);
  const auto text = fetch([&](char* o, size_t* l) { return polyrl_report_text(rep, o, l); });
  CHECK(text.find("passn_analytic") != std::string::npos);
  int passed = -1;
  CHECK(polyrl_report_passed(rep, &passed) == POLYRL_OK);
  CHECK((passed == 0 || passed == 1));
  CHECK(polyrl_report_destroy(rep) == POLYRL_OK);
}

TEST_CASE("corpus evaluation through the C API") {
  const std::string path = std::string(POLYRL_EXAMPLES_DIR) + "/corpus.jsonl";
  const size_t ks[] = {1, 2};
  const auto csv = fetch([&](char* o, size_t* l) { return polyrl_eval_corpus(path.c_str(), ks, 2, o, l); });
  CHECK(csv.rfind("k,pass_at_k,", 0) == 0);
  size_t len = 0;
  CHECK(polyrl_eval_corpus("/missing.jsonl", ks, 2, nullptr, &len) == POLYRL_ERR_IO_ERROR);
}
