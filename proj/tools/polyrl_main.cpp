// Command-line front end. Talks to the library only through polyrl.h.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polyrl/polyrl.h"

namespace {

using nlohmann::json;

struct CliFailure {
  int status;
  std::string message;
};

void check(int status) {
  if (status != POLYRL_OK) throw CliFailure{status, polyrl_last_error()};
}

template <typename F>
std::string fetch(F&& call) {
  size_t len = 0;
  int rc = call(nullptr, &len);
  if (rc != POLYRL_ERR_BUFFER_TOO_SMALL) check(rc);
  std::string buf(len, '\0');
  check(call(buf.data(), &len));
  buf.resize(len - 1);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliFailure{POLYRL_ERR_IO_ERROR, "cannot read " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << body)) throw CliFailure{POLYRL_ERR_IO_ERROR, "cannot write " + path};
}

struct TrainFlags {
  std::string config;
  std::optional<std::string> task, algo, judge, out, endpoint, model;
  std::optional<std::size_t> rollouts, set_size, steps;
  std::optional<std::string> num_sets;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, lambda;
};

json build_config(const TrainFlags& f) {
  json cfg = json::object();
  if (!f.config.empty()) {
    cfg = json::parse(read_text(f.config), nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object()) {
      throw CliFailure{POLYRL_ERR_CONFIG_INVALID, f.config + " is not a JSON object"};
    }
  }
  auto section = [&](const char* name) -> json& {
    if (!cfg.contains(name)) cfg[name] = json::object();
    return cfg[name];
  };
  if (f.task) section("task") = json{{"kind", *f.task}};
  if (f.algo) cfg["algorithm"] = *f.algo;
  if (f.rollouts) section("hyperparams")["rollouts"] = *f.rollouts;
  if (f.set_size) section("hyperparams")["set_size"] = *f.set_size;
  if (f.num_sets) {
    if (*f.num_sets == "all") {
      section("hyperparams")["num_sets"] = "all";
    } else {
      try {
        section("hyperparams")["num_sets"] = std::stoull(*f.num_sets);
      } catch (const std::exception&) {
        throw CliFailure{POLYRL_ERR_CONFIG_INVALID, "--num-sets takes an integer or 'all'"};
      }
    }
  }
  if (f.seed) section("hyperparams")["seed"] = *f.seed;
  if (f.lr) section("hyperparams")["learning_rate"] = *f.lr;
  if (f.lambda) section("hyperparams")["divrl_lambda"] = *f.lambda;
  if (f.steps) cfg["steps"] = *f.steps;
  if (f.out) cfg["out"] = *f.out;
  if (f.judge) {
    auto& j = section("judge");
    if (j.value("kind", std::string{}) != *f.judge) j = json{{"kind", *f.judge}};
  }
  if (f.endpoint) section("judge")["endpoint"] = *f.endpoint;
  if (f.model) section("judge")["model"] = *f.model;
  return cfg;
}

int run_train(const TrainFlags& f, bool dry_run) {
  const std::string cfg = build_config(f).dump();
  if (dry_run) {
    std::cout << fetch([&](char* o, size_t* l) { return polyrl_config_normalize(cfg.c_str(), o, l); });
    return 0;
  }
  polyrl_experiment_t exp = nullptr;
  check(polyrl_experiment_run(&exp, cfg.c_str()));
  std::unique_ptr<polyrl_experiment_st, int (*)(polyrl_experiment_t)> guard(exp, polyrl_experiment_destroy);
  size_t steps = 0;
  check(polyrl_experiment_steps(exp, &steps));
  const auto summary = json::parse(fetch([&](char* o, size_t* l) { return polyrl_experiment_summary_json(exp, o, l); }));
  std::printf("steps=%zu expected_correct_clusters %.4f -> %.4f entropy %.4f -> %.4f\n", steps,
              summary["initial_expected_correct_clusters"].get<double>(),
              summary["final_expected_correct_clusters"].get<double>(),
              summary["initial_entropy"].get<double>(), summary["final_entropy"].get<double>());
  for (const auto& row : summary["rows"]) {
    std::printf("k=%-4zu pass@k=%.4f majority=%.4f vote_share=%.4f\n", row["k"].get<std::size_t>(),
                row["pass_at_k"].get<double>(), row["majority_accuracy"].get<double>(),
                row["vote_share"].get<double>());
  }
  return 0;
}

int run_verify(std::uint64_t seed, std::size_t draws, double multiplier, const std::string& out) {
  polyrl_report_t rep = nullptr;
  check(polyrl_verify(&rep, seed, draws, multiplier));
  std::unique_ptr<polyrl_report_st, int (*)(polyrl_report_t)> guard(rep, polyrl_report_destroy);
  std::cout << fetch([&](char* o, size_t* l) { return polyrl_report_text(rep, o, l); });
  if (!out.empty()) write_text(out, fetch([&](char* o, size_t* l) { return polyrl_report_json(rep, o, l); }));
  int passed = 0;
  check(polyrl_report_passed(rep, &passed));
  return passed ? 0 : 1;
}

int run_eval(const std::string& corpus, const std::vector<std::size_t>& ks, const std::string& out) {
  const auto csv = fetch([&](char* o, size_t* l) {
    return polyrl_eval_corpus(corpus.c_str(), ks.data(), ks.size(), o, l);
  });
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_text(out, csv);
  }
  return 0;
}

int run_judge_prompt(const std::string& context, const std::vector<std::string>& responses) {
  std::vector<const char*> ptrs;
  for (const auto& r : responses) ptrs.push_back(r.c_str());
  std::cout << fetch([&](char* o, size_t* l) {
    return polyrl_judge_prompt(context.c_str(), ptrs.data(), ptrs.size(), o, l);
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Set reinforcement learning with polychromic objectives on tabular policies."};
  app.set_version_flag("--version", polyrl_version());
  app.require_subcommand(1);

  TrainFlags tf;
  bool dry_run = false;
  auto* train = app.add_subcommand("train", "Run a seeded training experiment");
  train->add_option("--config", tf.config, "JSON experiment config")->check(CLI::ExistingFile);
  train->add_option("--task", tf.task, "polynomial | multiplication | bandit");
  train->add_option("--algo", tf.algo, "grpo | divrl | pepo");
  train->add_option("--rollouts", tf.rollouts, "Rollouts per prompt (N)");
  train->add_option("--set-size", tf.set_size, "Set size (n)");
  train->add_option("--num-sets", tf.num_sets, "Sets per prompt (K) or 'all'");
  train->add_option("--steps", tf.steps, "Training steps");
  train->add_option("--seed", tf.seed, "Experiment seed");
  train->add_option("--lr", tf.lr, "Learning rate");
  train->add_option("--lambda", tf.lambda, "DivRL bonus weight");
  train->add_option("--judge", tf.judge, "exact | rule | mock | remote");
  train->add_option("--judge-endpoint", tf.endpoint, "Remote judge URL");
  train->add_option("--judge-model", tf.model, "Remote judge model name");
  train->add_option("--out", tf.out, "Output directory");
  train->add_flag("--dry-run", dry_run, "Print the resolved config and exit");

  std::uint64_t vseed = 7;
  std::size_t vdraws = 0;
  double vmult = 1.0;
  std::string vout;
  auto* verify = app.add_subcommand("verify", "Run the oracle-equivalence suite");
  verify->add_option("--seed", vseed, "Suite seed");
  verify->add_option("--draws", vdraws, "Estimator draws for the unbiasedness checks");
  verify->add_option("--out", vout, "Write the JSON report here");
  verify->add_option("--scaling-multiplier", vmult, "Corrupt the scaling factor (mutation check)")
      ->group("");

  std::string corpus, eout;
  std::vector<std::size_t> ks{1, 2, 4, 8};
  auto* eval = app.add_subcommand("eval", "Evaluate a JSONL corpus of sampled generations");
  eval->add_option("--corpus", corpus, "JSONL corpus")->required()->check(CLI::ExistingFile);
  eval->add_option("--k", ks, "k values")->delimiter(',');
  eval->add_option("--out", eout, "CSV output path (default stdout)");

  std::string context;
  std::vector<std::string> responses;
  auto* jp = app.add_subcommand("judge-prompt", "Print the clustering prompt for a set of responses");
  jp->add_option("--context", context, "Problem text")->required();
  jp->add_option("--response", responses, "Response text (repeatable)")->required();

  auto* defaults = app.add_subcommand("config", "Print the default experiment config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(tf, dry_run);
    if (*verify) return run_verify(vseed, vdraws, vmult, vout);
    if (*eval) return run_eval(corpus, ks, eout);
    if (*jp) return run_judge_prompt(context, responses);
    if (*defaults) {
      std::cout << fetch([](char* o, size_t* l) { return polyrl_default_config(o, l); });
      return 0;
    }
  } catch (const CliFailure& e) {
    std::cerr << json{{"error", polyrl_status_name(e.status)}, {"message", e.message}}.dump() << "\n";
    return e.status;
  }
  return 0;
}
