#include <thread>

#include "polyrl/clustering.hpp"

#ifdef POLYRL_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

namespace polyrl {

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigInvalid, "judge endpoint must be an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteJudge::RemoteJudge(RemoteJudgeConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.endpoint.empty()) throw Error(ErrorCode::kConfigInvalid, "remote judge needs an endpoint");
  if (cfg_.model.empty()) throw Error(ErrorCode::kConfigInvalid, "remote judge needs a model name");
  if (cfg_.retries < 1) throw Error(ErrorCode::kConfigInvalid, "remote judge needs retries >= 1");
  split_url(cfg_.endpoint);
}

std::string RemoteJudge::complete(const std::string& prompt) const {
  const auto url = split_url(cfg_.endpoint);
  httplib::Client client(url.origin);
  const auto secs = cfg_.timeout.count() / 1000;
  const auto usecs = (cfg_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

  nlohmann::json body = {
      {"model", cfg_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg_.temperature},
  };
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::kJudgeUnavailable,
                "judge request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kJudgeUnavailable, "judge returned HTTP " + std::to_string(res->status));
  }
  auto doc = nlohmann::json::parse(res->body, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kMalformedJson, "judge reply is not JSON");
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kMalformedJson, "judge reply has no choices[0].message.content");
  }
}

std::vector<ClusterAssignment> RemoteJudge::assign(const GenerationBatch& batch) {
  JudgeRequest req;
  req.context = batch.prompt.payload;
  req.responses.reserve(batch.size());
  for (const auto& g : batch.generations) req.responses.push_back(g.token_string);
  const auto prompt = build_judge_prompt(req);

  std::string last_error;
  for (int attempt = 0; attempt < cfg_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.retry_backoff * attempt);
    try {
      return parse_judge_response(complete(prompt), batch.size()).clusters();
    } catch (const Error& e) {
      // Unparseable replies are retried the same as transport failures.
      last_error = e.what();
    }
  }
  if (cfg_.fallback) {
    return std::vector<ClusterAssignment>(batch.size(), ClusterAssignment(1));
  }
  throw Error(ErrorCode::kJudgeUnavailable,
              "judge failed after " + std::to_string(cfg_.retries) + " attempts: " + last_error);
}

}  // namespace polyrl
