#include "polyrl/polyrl.h"

#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "polyrl/eval_metrics.hpp"
#include "polyrl/experiment.hpp"
#include "polyrl/set_engine.hpp"

struct polyrl_task_st {
  std::uint32_t magic = 0x7a5c0001;
  polyrl::SyntheticTask task;
};

struct polyrl_policy_st {
  std::uint32_t magic = 0x7a5c0002;
  polyrl::TabularPolicy policy;
};

struct polyrl_experiment_st {
  std::uint32_t magic = 0x7a5c0003;
  polyrl::ExperimentResult result;
};

struct polyrl_report_st {
  std::uint32_t magic = 0x7a5c0004;
  polyrl::VerificationReport report;
};

namespace {

thread_local std::string g_last_error;

constexpr std::uint32_t kTaskMagic = 0x7a5c0001;
constexpr std::uint32_t kPolicyMagic = 0x7a5c0002;
constexpr std::uint32_t kExperimentMagic = 0x7a5c0003;
constexpr std::uint32_t kReportMagic = 0x7a5c0004;

struct CapiError {
  int status;
  std::string message;
};

int fail(int status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename F>
int guard(F&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const CapiError& e) {
    return fail(e.status, e.message);
  } catch (const polyrl::Error& e) {
    return fail(static_cast<int>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(POLYRL_ERR_MALFORMED_JSON, e.what());
  } catch (const std::bad_alloc&) {
    return fail(POLYRL_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(POLYRL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(POLYRL_ERR_INTERNAL, "unknown exception");
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw CapiError{POLYRL_ERR_NULL_POINTER, std::string(what) + " is NULL"};
}

template <typename H>
H& deref(H* h, std::uint32_t magic, const char* what) {
  require(h, what);
  if (h->magic != magic) throw CapiError{POLYRL_ERR_INVALID_HANDLE, std::string("invalid ") + what};
  return *h;
}

int write_string(const std::string& s, char* out, size_t* len) {
  require(len, "len");
  const size_t need = s.size() + 1;
  const size_t cap = *len;
  *len = need;
  if (out == nullptr || cap < need) {
    return fail(POLYRL_ERR_BUFFER_TOO_SMALL, "buffer needs " + std::to_string(need) + " bytes");
  }
  std::memcpy(out, s.c_str(), need);
  return POLYRL_OK;
}

polyrl::ObjectiveKind objective_of(const char* name) {
  require(name, "objective");
  return polyrl::parse_objective(name);
}

polyrl::GenerationBatch make_batch(const double* rewards, const int* clusters, size_t big_n) {
  require(rewards, "rewards");
  polyrl::GenerationBatch batch;
  for (size_t i = 0; i < big_n; ++i) {
    batch.generations.push_back({"", "", i});
    batch.rewards.emplace_back(rewards[i]);
  }
  if (clusters != nullptr) batch.clusters = polyrl::make_clusters({clusters, clusters + big_n});
  return batch;
}

std::vector<polyrl::ClusterAssignment> cluster_vector(const int* clusters, size_t n) {
  require(clusters, "clusters");
  return polyrl::make_clusters({clusters, clusters + n});
}

void copy_out(const std::vector<double>& v, double* out, size_t size) {
  require(out, "out");
  if (size != v.size()) {
    throw CapiError{POLYRL_ERR_DIMENSION_MISMATCH,
                    "output holds " + std::to_string(size) + " values, need " + std::to_string(v.size())};
  }
  std::copy(v.begin(), v.end(), out);
}

polyrl::TupleScore tuple_score(polyrl_task_t task, const char* objective, size_t n) {
  auto& t = deref(task, kTaskMagic, "task");
  return polyrl::make_tuple_score(t.task, polyrl::SetObjective(objective_of(objective), n));
}

}  // namespace

extern "C" {

const char* polyrl_version(void) { return "0.1.0"; }

const char* polyrl_status_name(int status) {
  switch (status) {
    case POLYRL_ERR_NULL_POINTER: return "NULL_POINTER";
    case POLYRL_ERR_BUFFER_TOO_SMALL: return "BUFFER_TOO_SMALL";
    case POLYRL_ERR_INVALID_HANDLE: return "INVALID_HANDLE";
    default: break;
  }
  if (status < 0 || status > static_cast<int>(polyrl::ErrorCode::kInternal)) return "UNKNOWN";
  // Names are string literals, so the view is NUL-terminated.
  return polyrl::error_code_name(static_cast<polyrl::ErrorCode>(status)).data();
}

const char* polyrl_last_error(void) { return g_last_error.c_str(); }

int polyrl_marginal_advantages(const double* rewards, const int* clusters, size_t big_n, size_t n,
                               uint64_t k, uint64_t seed, const char* objective, double* out) {
  return guard([&]() -> int {
    require(out, "out");
    const auto batch = make_batch(rewards, clusters, big_n);
    polyrl::validate_batch(batch);
    const auto total = polyrl::binomial(big_n, n);
    if (k > total) throw polyrl::Error(polyrl::ErrorCode::kKOutOfRange, "K exceeds C(N, n)");
    auto subsets = (k == 0 || k == total) ? polyrl::enumerate_subsets(big_n, n)
                                          : polyrl::sample_subsets(big_n, n, k, seed);
    const auto coll =
        polyrl::score_sets(batch, std::move(subsets), polyrl::SetObjective(objective_of(objective), n));
    const auto marg = polyrl::marginal_advantages(coll, big_n);
    std::copy(marg.values.begin(), marg.values.end(), out);
    return POLYRL_OK;
  });
}

int polyrl_grpo_advantages(const double* rewards, size_t big_n, double* out) {
  return guard([&]() -> int {
    require(rewards, "rewards");
    require(out, "out");
    const auto adv = polyrl::grpo_advantages({rewards, big_n});
    std::copy(adv.values.begin(), adv.values.end(), out);
    return POLYRL_OK;
  });
}

int polyrl_divrl_advantages(const double* rewards, const int* clusters, size_t big_n, double lambda,
                            double* out) {
  return guard([&]() -> int {
    require(rewards, "rewards");
    require(out, "out");
    if (clusters == nullptr) {
      throw polyrl::Error(polyrl::ErrorCode::kMissingClusters, "DivRL needs cluster assignments");
    }
    const auto c = cluster_vector(clusters, big_n);
    const auto adv = polyrl::divrl_advantages({rewards, big_n}, c, lambda);
    std::copy(adv.values.begin(), adv.values.end(), out);
    return POLYRL_OK;
  });
}

int polyrl_scaling_factor(size_t big_n, size_t n, uint64_t k, double* out) {
  return guard([&]() -> int {
    require(out, "out");
    *out = polyrl::scaling_factor(big_n, n, k);
    return POLYRL_OK;
  });
}

int polyrl_diversity(const int* clusters, size_t n, double* out) {
  return guard([&]() -> int {
    require(out, "out");
    if (clusters == nullptr) {
      throw polyrl::Error(polyrl::ErrorCode::kMissingClusters, "diversity needs cluster assignments");
    }
    *out = polyrl::diversity(cluster_vector(clusters, n), n);
    return POLYRL_OK;
  });
}

int polyrl_divrl_bonus(const int* clusters, size_t big_n, size_t i, double* out) {
  return guard([&]() -> int {
    require(out, "out");
    if (clusters == nullptr) {
      throw polyrl::Error(polyrl::ErrorCode::kMissingClusters, "bonus needs cluster assignments");
    }
    if (i >= big_n) throw polyrl::Error(polyrl::ErrorCode::kInvalidParams, "index out of range");
    *out = polyrl::divrl_bonus(i, cluster_vector(clusters, big_n));
    return POLYRL_OK;
  });
}

int polyrl_pass_at_k(size_t big_n, size_t c, size_t k, double* out) {
  return guard([&]() -> int {
    require(out, "out");
    *out = polyrl::pass_at_k(big_n, c, k);
    return POLYRL_OK;
  });
}

int polyrl_task_create(polyrl_task_t* task, const char* task_json) {
  return guard([&]() -> int {
    require(task, "task");
    require(task_json, "task_json");
    *task = nullptr;
    const std::string doc = std::string("{\"task\": ") + task_json + "}";
    auto cfg = polyrl::parse_experiment_config(doc);
    *task = new polyrl_task_st{kTaskMagic, polyrl::make_task(cfg.task)};
    return POLYRL_OK;
  });
}

int polyrl_task_destroy(polyrl_task_t task) {
  return guard([&]() -> int {
    if (task == nullptr) return POLYRL_OK;
    deref(task, kTaskMagic, "task").magic = 0;
    delete task;
    return POLYRL_OK;
  });
}

int polyrl_task_size(polyrl_task_t task, size_t* size) {
  return guard([&]() -> int {
    require(size, "size");
    *size = deref(task, kTaskMagic, "task").task.size();
    return POLYRL_OK;
  });
}

int polyrl_task_action(polyrl_task_t task, size_t action, double* reward, int* cluster, char* text,
                       size_t* text_len) {
  return guard([&]() -> int {
    const auto& t = deref(task, kTaskMagic, "task").task;
    if (action >= t.size()) throw polyrl::Error(polyrl::ErrorCode::kInvalidParams, "action out of range");
    if (reward != nullptr) *reward = t.reward(action);
    if (cluster != nullptr) *cluster = t.label(action);
    if (text_len == nullptr) return POLYRL_OK;
    return write_string(t.generation(action).token_string, text, text_len);
  });
}

int polyrl_policy_create(polyrl_policy_t* policy, const double* logits, size_t size,
                         double temperature) {
  return guard([&]() -> int {
    require(policy, "policy");
    require(logits, "logits");
    *policy = nullptr;
    *policy = new polyrl_policy_st{
        kPolicyMagic, polyrl::TabularPolicy({logits, logits + size}, temperature)};
    return POLYRL_OK;
  });
}

int polyrl_policy_destroy(polyrl_policy_t policy) {
  return guard([&]() -> int {
    if (policy == nullptr) return POLYRL_OK;
    deref(policy, kPolicyMagic, "policy").magic = 0;
    delete policy;
    return POLYRL_OK;
  });
}

int polyrl_policy_probabilities(polyrl_policy_t policy, double* out, size_t size) {
  return guard([&]() -> int {
    copy_out(deref(policy, kPolicyMagic, "policy").policy.probabilities(), out, size);
    return POLYRL_OK;
  });
}

int polyrl_exact_expected_objective(polyrl_policy_t policy, polyrl_task_t task,
                                    const char* objective, size_t n, double* out) {
  return guard([&]() -> int {
    require(out, "out");
    const auto& p = deref(policy, kPolicyMagic, "policy").policy;
    *out = polyrl::exact_expected_objective(p, tuple_score(task, objective, n), n);
    return POLYRL_OK;
  });
}

int polyrl_exact_setrl_gradient(polyrl_policy_t policy, polyrl_task_t task, const char* objective,
                                size_t n, double* out, size_t size) {
  return guard([&]() -> int {
    const auto& p = deref(policy, kPolicyMagic, "policy").policy;
    copy_out(polyrl::exact_setrl_gradient(p, tuple_score(task, objective, n), n), out, size);
    return POLYRL_OK;
  });
}

int polyrl_exact_marginal_advantages(polyrl_policy_t policy, polyrl_task_t task,
                                     const char* objective, size_t n, double* out, size_t size) {
  return guard([&]() -> int {
    const auto& p = deref(policy, kPolicyMagic, "policy").policy;
    copy_out(polyrl::exact_marginal_advantages(p, tuple_score(task, objective, n), n), out, size);
    return POLYRL_OK;
  });
}

int polyrl_judge_prompt(const char* context, const char* const* responses, size_t count, char* out,
                        size_t* len) {
  return guard([&]() -> int {
    require(context, "context");
    if (count > 0) require(responses, "responses");
    polyrl::JudgeRequest req{context, {}};
    for (size_t i = 0; i < count; ++i) {
      require(responses[i], "response");
      req.responses.emplace_back(responses[i]);
    }
    return write_string(polyrl::build_judge_prompt(req), out, len);
  });
}

int polyrl_judge_parse(const char* raw, size_t count, int* cluster_ids) {
  return guard([&]() -> int {
    require(raw, "raw");
    require(cluster_ids, "cluster_ids");
    const auto res = polyrl::parse_judge_response(raw, count);
    for (size_t i = 0; i < count; ++i) cluster_ids[i] = res.assignments[i].cluster_id;
    return POLYRL_OK;
  });
}

int polyrl_default_config(char* out, size_t* len) {
  return guard([&]() -> int { return write_string(polyrl::experiment_config_json({}), out, len); });
}

int polyrl_config_normalize(const char* config_json, char* out, size_t* len) {
  return guard([&]() -> int {
    require(config_json, "config_json");
    return write_string(polyrl::experiment_config_json(polyrl::parse_experiment_config(config_json)),
                        out, len);
  });
}

int polyrl_experiment_run(polyrl_experiment_t* exp, const char* config_json) {
  return guard([&]() -> int {
    require(exp, "exp");
    require(config_json, "config_json");
    *exp = nullptr;
    const auto cfg = polyrl::parse_experiment_config(config_json);
    auto h = std::make_unique<polyrl_experiment_st>();
    h->result = polyrl::run_experiment(cfg);
    *exp = h.release();
    return POLYRL_OK;
  });
}

int polyrl_experiment_destroy(polyrl_experiment_t exp) {
  return guard([&]() -> int {
    if (exp == nullptr) return POLYRL_OK;
    deref(exp, kExperimentMagic, "experiment").magic = 0;
    delete exp;
    return POLYRL_OK;
  });
}

int polyrl_experiment_steps(polyrl_experiment_t exp, size_t* steps) {
  return guard([&]() -> int {
    require(steps, "steps");
    *steps = deref(exp, kExperimentMagic, "experiment").result.records.size();
    return POLYRL_OK;
  });
}

int polyrl_experiment_metrics_csv(polyrl_experiment_t exp, char* out, size_t* len) {
  return guard([&]() -> int {
    const auto& h = deref(exp, kExperimentMagic, "experiment");
    return write_string(polyrl::metrics_csv(h.result.records), out, len);
  });
}

int polyrl_experiment_summary_json(polyrl_experiment_t exp, char* out, size_t* len) {
  return guard([&]() -> int {
    const auto& s = deref(exp, kExperimentMagic, "experiment").result.summary;
    return write_string(polyrl::eval_summary_json(s), out, len);
  });
}

int polyrl_experiment_final_logits(polyrl_experiment_t exp, double* out, size_t size) {
  return guard([&]() -> int {
    copy_out(deref(exp, kExperimentMagic, "experiment").result.final_policy.logits(), out, size);
    return POLYRL_OK;
  });
}

int polyrl_verify(polyrl_report_t* report, uint64_t seed, size_t draws,
                  double scaling_factor_multiplier) {
  return guard([&]() -> int {
    require(report, "report");
    *report = nullptr;
    polyrl::VerificationOptions opts;
    opts.seed = seed;
    if (draws != 0) opts.estimator_draws = draws;
    opts.scaling_factor_multiplier = scaling_factor_multiplier;
    auto h = std::make_unique<polyrl_report_st>();
    h->report = polyrl::run_verification_suite(opts);
    *report = h.release();
    return POLYRL_OK;
  });
}

int polyrl_report_destroy(polyrl_report_t report) {
  return guard([&]() -> int {
    if (report == nullptr) return POLYRL_OK;
    deref(report, kReportMagic, "report").magic = 0;
    delete report;
    return POLYRL_OK;
  });
}

int polyrl_report_passed(polyrl_report_t report, int* all_passed) {
  return guard([&]() -> int {
    require(all_passed, "all_passed");
    *all_passed = deref(report, kReportMagic, "report").report.all_passed() ? 1 : 0;
    return POLYRL_OK;
  });
}

int polyrl_report_json(polyrl_report_t report, char* out, size_t* len) {
  return guard([&]() -> int { return write_string(deref(report, kReportMagic, "report").report.to_json(), out, len); });
}

int polyrl_report_text(polyrl_report_t report, char* out, size_t* len) {
  return guard([&]() -> int { return write_string(deref(report, kReportMagic, "report").report.to_text(), out, len); });
}

int polyrl_eval_corpus(const char* path, const size_t* ks, size_t k_count, char* out, size_t* len) {
  return guard([&]() -> int {
    require(path, "path");
    if (k_count == 0) throw polyrl::Error(polyrl::ErrorCode::kInvalidParams, "no k values given");
    require(ks, "ks");
    const auto corpus = polyrl::read_eval_corpus(path);
    const auto rows = polyrl::evaluate_corpus(corpus, {ks, k_count});
    return write_string(polyrl::eval_rows_csv(rows), out, len);
  });
}

}  // extern "C"
