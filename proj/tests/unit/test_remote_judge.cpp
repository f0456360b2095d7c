#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "helpers.hpp"
#include "polyrl/clustering.hpp"
#include "polyrl/objectives.hpp"
#include "polyrl/set_engine.hpp"
#include "polyrl/trainer.hpp"

using namespace polyrl;
using nlohmann::json;

namespace {

/// Local chat-completions stand-in. `reply` decides each response.
class FakeJudgeServer {
 public:
  using Reply = std::function<void(const httplib::Request&, httplib::Response&, int call)>;

  explicit FakeJudgeServer(Reply reply) : reply_(std::move(reply)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      int call;
      {
        std::lock_guard lock(mu_);
        call = calls_++;
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
      }
      reply_(req, res, call);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeJudgeServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }
  std::string body(std::size_t i) const {
    std::lock_guard lock(mu_);
    return bodies_.at(i);
  }
  std::string auth(std::size_t i) const {
    std::lock_guard lock(mu_);
    return auth_.at(i);
  }

 private:
  Reply reply_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  int calls_ = 0;
  std::vector<std::string> bodies_, auth_;
};

std::string completion(const std::string& content) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", content}}}}})}}
      .dump();
}

RemoteJudgeConfig config_for(const FakeJudgeServer& s) {
  RemoteJudgeConfig c;
  c.endpoint = s.endpoint();
  c.model = "judge-model";
  c.api_key = "test-key";
  c.retry_backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(5000);
  return c;
}

GenerationBatch four_answers() {
  GenerationBatch b;
  b.prompt = {"p", "Find x."};
  for (const char* a : {"x = 1", "x = 1 again", "x = 2", "gibberish"}) {
    b.generations.push_back({a, a, 0});
    b.rewards.emplace_back(1.0);
  }
  b.rewards[3] = RewardValue(0.0);
  return b;
}

}  // namespace

TEST_CASE("remote judge sends the protocol prompt and parses the reply") {
  FakeJudgeServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.set_content(completion(
                        "```json\n{\"1\": {\"chain_of_thought\": \"a\", \"cluster_id\": 1},"
                        " \"2\": {\"chain_of_thought\": \"a\", \"cluster_id\": 1},"
                        " \"3\": {\"chain_of_thought\": \"b\", \"cluster_id\": 2},"
                        " \"4\": {\"chain_of_thought\": \"junk\", \"cluster_id\": 100}}\n```"),
                    "application/json");
  });
  RemoteJudge judge(config_for(server));
  const auto batch = four_answers();
  const auto out = cluster(judge, batch);
  std::vector<int> ids;
  for (const auto& c : out) ids.push_back(c.id());
  CHECK(ids == std::vector<int>{1, 1, 2, 100});
  REQUIRE(server.calls() == 1);

  const auto body = json::parse(server.body(0));
  CHECK(body["model"] == "judge-model");
  CHECK(body["temperature"] == 0.0);
  REQUIRE(body["messages"].size() == 1);
  CHECK(body["messages"][0]["role"] == "user");
  JudgeRequest req{batch.prompt.payload, {}};
  for (const auto& g : batch.generations) req.responses.push_back(g.token_string);
  CHECK(body["messages"][0]["content"] == build_judge_prompt(req));
  CHECK(server.auth(0) == "Bearer test-key");
}

TEST_CASE("malformed replies are retried") {
  FakeJudgeServer server([](const httplib::Request&, httplib::Response& res, int call) {
    if (call == 0) {
      res.set_content(completion("I cannot decide."), "application/json");
    } else {
      res.set_content(completion(R"({"1":{"cluster_id":3},"2":{"cluster_id":3},"3":{"cluster_id":1},"4":{"cluster_id":2}})"),
                      "application/json");
    }
  });
  RemoteJudge judge(config_for(server));
  const auto out = cluster(judge, four_answers());
  CHECK(server.calls() == 2);
  CHECK(out[0].id() == 3);
  CHECK(out[3].id() == 2);
}

TEST_CASE("outage falls back to one shared cluster with no diversity credit") {
  FakeJudgeServer server([](const httplib::Request&, httplib::Response& res, int) {
    res.status = 500;
    res.set_content("overloaded", "text/plain");
  });
  RemoteJudge judge(config_for(server));
  auto batch = four_answers();
  const auto out = cluster(judge, batch);
  CHECK(server.calls() == 3);
  for (const auto& c : out) CHECK(c.id() == 1);

  for (std::size_t i = 0; i < out.size(); ++i) CHECK(divrl_bonus(i, out) == 0.0);
  for (const auto& s : enumerate_subsets(4, 2)) {
    const std::vector<ClusterAssignment> members{out[s[0]], out[s[1]]};
    CHECK(diversity(members, 2) == 0.5);
  }
  batch.clusters = out;
  const std::vector<double> r = batch.reward_values();
  CHECK(divrl_advantages(r, out, 0.5).values == grpo_advantages(r).values);
}

TEST_CASE("outage without fallback raises JUDGE_UNAVAILABLE") {
  FakeJudgeServer server([](const httplib::Request&, httplib::Response& res, int) { res.status = 503; });
  auto cfg = config_for(server);
  cfg.fallback = false;
  cfg.retries = 2;
  RemoteJudge judge(cfg);
  CHECK_CODE(cluster(judge, four_answers()), ErrorCode::kJudgeUnavailable);
  CHECK(server.calls() == 2);
}

TEST_CASE("unreachable endpoint") {
  RemoteJudgeConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  cfg.model = "m";
  cfg.retries = 1;
  cfg.fallback = false;
  cfg.timeout = std::chrono::milliseconds(500);
  RemoteJudge judge(cfg);
  CHECK_CODE(cluster(judge, four_answers()), ErrorCode::kJudgeUnavailable);
  cfg.fallback = true;
  RemoteJudge lenient(cfg);
  for (const auto& c : cluster(lenient, four_answers())) CHECK(c.id() == 1);
}

TEST_CASE("remote judge configuration errors") {
  RemoteJudgeConfig cfg;
  CHECK_CODE(RemoteJudge{cfg}, ErrorCode::kConfigInvalid);
  cfg.endpoint = "localhost/v1";
  cfg.model = "m";
  CHECK_CODE(RemoteJudge{cfg}, ErrorCode::kConfigInvalid);
  cfg.endpoint = "http://localhost/v1";
  cfg.model = "";
  CHECK_CODE(RemoteJudge{cfg}, ErrorCode::kConfigInvalid);
}

TEST_CASE("concurrent batches through the remote judge keep order") {
  std::atomic<int> in_flight{0}, peak{0};
  FakeJudgeServer server([&](const httplib::Request& req, httplib::Response& res, int) {
    const int now = ++in_flight;
    int p = peak.load();
    while (now > p && !peak.compare_exchange_weak(p, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    // Even batch numbers get two clusters, odd ones share one.
    const auto content = json::parse(req.body)["messages"][0]["content"].get<std::string>();
    const auto pos = content.rfind("\n1. item ");
    const int tag = content[pos + 9] - '0';
    json reply;
    reply["1"] = {{"cluster_id", 5}};
    reply["2"] = {{"cluster_id", tag % 2 == 0 ? 9 : 5}};
    res.set_content(completion(reply.dump()), "application/json");
    --in_flight;
  });
  RemoteJudge judge(config_for(server));
  std::vector<GenerationBatch> batches;
  for (int t = 0; t < 6; ++t) {
    GenerationBatch b;
    b.prompt = {"p", "ctx"};
    for (int i = 0; i < 2; ++i) {
      b.generations.push_back({"item " + std::to_string(t), "a", 0});
      b.rewards.emplace_back(1.0);
    }
    batches.push_back(b);
  }
  const auto out = cluster_batches(judge, batches, 2);
  for (int t = 0; t < 6; ++t) {
    CHECK(out[t][0].id() == 1);
    CHECK(out[t][1].id() == (t % 2 == 0 ? 2 : 1));
  }
  CHECK(peak.load() <= 2);
}
