#include "polyrl/clustering.hpp"

#include <algorithm>
#include <future>
#include <map>
#include <set>

#include <json.hpp>

#include "judge_template.inc"

namespace polyrl {

using nlohmann::json;

std::vector<ClusterAssignment> JudgeResult::clusters() const {
  std::vector<ClusterAssignment> out;
  out.reserve(assignments.size());
  for (const auto& a : assignments) out.emplace_back(a.cluster_id);
  return out;
}

std::string_view judge_instruction_template() { return kJudgeInstructionTemplate; }

std::string render_instruction(std::string_view tmpl, std::size_t n_responses) {
  static constexpr std::string_view kPlaceholder = "{n_responses}";
  const auto n_text = std::to_string(n_responses);
  std::string out;
  out.reserve(tmpl.size() + 64);
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl.compare(i, kPlaceholder.size(), kPlaceholder) == 0) {
      out += n_text;
      i += kPlaceholder.size();
    } else if ((tmpl[i] == '{' || tmpl[i] == '}') && i + 1 < tmpl.size() && tmpl[i + 1] == tmpl[i]) {
      out += tmpl[i];
      i += 2;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

namespace {

void check_response_count(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::kEmptyInput, "judge request has no responses");
  if (n >= static_cast<std::size_t>(kDegenerateCluster)) {
    throw Error(ErrorCode::kTooManyResponses,
                "judge protocol requires fewer than 100 responses, got " + std::to_string(n));
  }
}

}  // namespace

std::string build_judge_prompt(const JudgeRequest& req, std::string_view instruction_template) {
  check_response_count(req.responses.size());
  std::string tmpl(instruction_template);
  while (!tmpl.empty() && tmpl.back() == '\n') tmpl.pop_back();

  std::string out = render_instruction(tmpl, req.responses.size());
  out += "\n\n**Context:**\n";
  out += req.context;
  out += "\n\n**Responses:**";
  for (std::size_t i = 0; i < req.responses.size(); ++i) {
    out += '\n';
    out += std::to_string(i + 1);
    out += ". ";
    out += req.responses[i];
  }
  return out;
}

std::string build_judge_prompt(const JudgeRequest& req) {
  return build_judge_prompt(req, judge_instruction_template());
}

JudgeResult parse_judge_response(std::string_view raw, std::size_t n) {
  check_response_count(n);
  // Tolerate code fences or stray prose around the object.
  const auto first = raw.find('{');
  const auto last = raw.rfind('}');
  if (first == std::string_view::npos || last == std::string_view::npos || last < first) {
    throw Error(ErrorCode::kMalformedJson, "judge response contains no JSON object");
  }
  json doc = json::parse(raw.substr(first, last - first + 1), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw Error(ErrorCode::kMalformedJson, "judge response is not a JSON object");
  }
  if (doc.size() != n) {
    throw Error(ErrorCode::kWrongKeyCount, "expected " + std::to_string(n) + " keys, got " +
                                               std::to_string(doc.size()));
  }

  JudgeResult result;
  result.assignments.resize(n);
  std::vector<long long> raw_ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = std::to_string(i + 1);
    const auto it = doc.find(key);
    if (it == doc.end()) throw Error(ErrorCode::kWrongKeyCount, "missing key \"" + key + "\"");
    if (!it->is_object()) throw Error(ErrorCode::kMissingClusterId, "entry " + key + " is not an object");
    const auto id = it->find("cluster_id");
    if (id == it->end() || !id->is_number()) {
      throw Error(ErrorCode::kMissingClusterId, "entry " + key + " has no integer cluster_id");
    }
    if (id->is_number_float()) {
      const double v = id->get<double>();
      if (v != static_cast<double>(static_cast<long long>(v))) {
        throw Error(ErrorCode::kMissingClusterId, "entry " + key + " has a fractional cluster_id");
      }
      raw_ids[i] = static_cast<long long>(v);
    } else {
      raw_ids[i] = id->get<long long>();
    }
    if (const auto cot = it->find("chain_of_thought"); cot != it->end() && cot->is_string()) {
      result.assignments[i].chain_of_thought = cot->get<std::string>();
    }
  }

  auto in_range = [n](long long id) {
    return id == kDegenerateCluster || (id >= 1 && id <= static_cast<long long>(n));
  };
  std::set<long long> used;
  for (auto id : raw_ids) {
    if (in_range(id)) used.insert(id);
  }
  std::map<long long, int> remap;
  int fresh = 1;
  for (std::size_t i = 0; i < n; ++i) {
    long long id = raw_ids[i];
    if (!in_range(id)) {
      auto [slot, inserted] = remap.try_emplace(id, 0);
      if (inserted) {
        while (used.count(fresh)) ++fresh;
        slot->second = fresh;
        used.insert(fresh);
      }
      id = slot->second;
    }
    result.assignments[i].cluster_id = static_cast<int>(id);
  }
  return result;
}

std::vector<int> canonical_ids(std::span<const int> ids) {
  std::map<int, int> seen;
  std::vector<int> out;
  out.reserve(ids.size());
  int next = 1;
  for (int id : ids) {
    if (id == kDegenerateCluster) {
      out.push_back(kDegenerateCluster);
      continue;
    }
    auto [it, inserted] = seen.try_emplace(id, next);
    if (inserted) {
      ++next;
      if (next == kDegenerateCluster) ++next;
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<ClusterAssignment> AnswerJudge::assign(const GenerationBatch& batch) {
  std::map<std::string, int> seen;
  std::vector<int> ids;
  ids.reserve(batch.size());
  for (const auto& g : batch.generations) {
    auto [it, _] = seen.try_emplace(g.answer, static_cast<int>(seen.size()));
    ids.push_back(it->second);
  }
  return make_clusters(canonical_ids(ids));
}

std::vector<ClusterAssignment> RuleJudge::assign(const GenerationBatch& batch) {
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (const auto& g : batch.generations) labels.push_back(label_(g));
  return make_clusters(canonical_ids(labels));
}

MockJudge::MockJudge(std::vector<std::vector<int>> script) : script_(std::move(script)) {
  if (script_.empty()) throw Error(ErrorCode::kInvalidParams, "mock judge needs a script");
}

std::vector<ClusterAssignment> MockJudge::assign(const GenerationBatch& batch) {
  std::vector<int> ids;
  {
    std::lock_guard lock(mu_);
    ids = script_[next_ % script_.size()];
    ++next_;
  }
  if (ids.size() != batch.size()) {
    throw Error(ErrorCode::kLengthMismatch, "mock script entry has " + std::to_string(ids.size()) +
                                                " ids for a batch of " + std::to_string(batch.size()));
  }
  return make_clusters(ids);
}

std::size_t MockJudge::calls() const {
  std::lock_guard lock(mu_);
  return next_;
}

std::vector<ClusterAssignment> cluster(Judge& judge, const GenerationBatch& batch) {
  validate_batch(batch);
  auto out = judge.assign(batch);
  if (out.size() != batch.size()) {
    throw Error(ErrorCode::kLengthMismatch, "judge returned the wrong number of assignments");
  }
  return out;
}

std::vector<std::vector<ClusterAssignment>> cluster_batches(Judge& judge,
                                                            std::span<const GenerationBatch> batches,
                                                            std::size_t max_concurrency) {
  std::vector<std::vector<ClusterAssignment>> out(batches.size());
  if (max_concurrency <= 1) {
    for (std::size_t b = 0; b < batches.size(); ++b) out[b] = cluster(judge, batches[b]);
    return out;
  }
  for (std::size_t start = 0; start < batches.size(); start += max_concurrency) {
    const auto stop = std::min(batches.size(), start + max_concurrency);
    std::vector<std::future<std::vector<ClusterAssignment>>> wave;
    wave.reserve(stop - start);
    for (std::size_t b = start; b < stop; ++b) {
      wave.push_back(std::async(std::launch::async,
                                [&judge, &batch = batches[b]] { return cluster(judge, batch); }));
    }
    for (std::size_t b = start; b < stop; ++b) out[b] = wave[b - start].get();
  }
  return out;
}

}  // namespace polyrl
