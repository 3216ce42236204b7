#include "webvln/llm_client.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <semaphore>

#include <json.hpp>

#include "webvln/error.hpp"
#include "webvln/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace webvln {

LlmConfig LlmConfig::with_env_overrides() const {
  LlmConfig c = *this;
  if (const char* v = std::getenv("LLM_ENDPOINT"); v && *v) c.endpoint = v;
  if (const char* v = std::getenv("LLM_API_KEY"); v && *v) c.api_key = v;
  if (const char* v = std::getenv("LLM_MODEL"); v && *v) c.model = v;
  return c;
}

namespace detail {

class JsonPoster {
 public:
  explicit JsonPoster(const LlmConfig& cfg) : config(cfg), slots(std::max(1, cfg.max_in_flight)) {
    const auto scheme_end = cfg.endpoint.find("://");
    if (scheme_end == std::string::npos) {
      fail(ErrorCode::kInvalidArgument, "ClientError", "endpoint must be an absolute URL: '" + cfg.endpoint + "'");
    }
    const auto path_start = cfg.endpoint.find('/', scheme_end + 3);
    base = cfg.endpoint.substr(0, path_start);
    path = path_start == std::string::npos ? "/" : cfg.endpoint.substr(path_start);
  }

  json post(const json& body) {
    slots.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{slots};

    httplib::Client cli(base);
    cli.set_connection_timeout(config.timeout_seconds);
    cli.set_read_timeout(config.timeout_seconds);
    httplib::Headers headers;
    if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res) {
      fail(ErrorCode::kClient, "ClientError", "request to " + config.endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      fail(ErrorCode::kClient, "ClientError", config.endpoint + " returned HTTP " + std::to_string(res->status));
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      fail(ErrorCode::kClient, "ClientError", std::string("malformed reply: ") + e.what());
    }
  }

  static std::string text_of(const json& reply) {
    if (!reply.contains("text") || !reply.at("text").is_string()) {
      fail(ErrorCode::kClient, "ClientError", "reply has no string field 'text'");
    }
    return reply.at("text").get<std::string>();
  }

  LlmConfig config;
  std::string base;
  std::string path;
  std::counting_semaphore<1024> slots;
};

}  // namespace detail

HttpLlmClient::HttpLlmClient(LlmConfig config)
    : poster_(std::make_unique<detail::JsonPoster>(config)), model_(config.model) {}
HttpLlmClient::~HttpLlmClient() = default;

std::string HttpLlmClient::complete(const std::string& prompt) {
  return detail::JsonPoster::text_of(poster_->post(json{{"model", model_}, {"prompt", prompt}}));
}

MockLlmClient::MockLlmClient(const std::string& dir) : dir_(dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::kIo, "IoError", "mock directory '" + dir + "' does not exist");
  const fs::path index = fs::path(dir) / "index.json";
  if (fs::exists(index)) {
    const json j = json::parse(read_file(index.string()));
    for (const auto& [key, file] : j.items()) index_.emplace_back(key, file.get<std::string>());
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".txt" && e.path().filename() != "default.txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) sequence_.push_back(read_file(f.string()));
  }
  const fs::path def = fs::path(dir) / "default.txt";
  if (fs::exists(def)) {
    fallback_ = read_file(def.string());
    has_fallback_ = true;
  }
}

std::string MockLlmClient::complete(const std::string& prompt) {
  std::lock_guard lock(mu_);
  prompts_.push_back(prompt);
  for (const auto& [needle, file] : index_) {
    if (prompt.find(needle) != std::string::npos) return read_file((fs::path(dir_) / file).string());
  }
  if (!sequence_.empty()) {
    std::string r = std::move(sequence_.front());
    sequence_.pop_front();
    return r;
  }
  if (has_fallback_) return fallback_;
  fail(ErrorCode::kClient, "ClientError", "mock client in '" + dir_ + "' has no response for this prompt");
}

std::string ScriptedLlmClient::complete(const std::string& prompt) {
  prompts_.push_back(prompt);
  if (replies_.empty()) fail(ErrorCode::kClient, "ClientError", "scripted client exhausted");
  std::string r = std::move(replies_.front());
  replies_.pop_front();
  return r;
}

std::unique_ptr<LlmClient> make_llm_client(const LlmConfig& config) {
  const LlmConfig c = config.with_env_overrides();
  if (!c.mock_dir.empty()) return std::make_unique<MockLlmClient>(c.mock_dir);
  if (c.endpoint.empty()) {
    fail(ErrorCode::kInvalidArgument, "ClientError", "no LLM endpoint configured (set LLM_ENDPOINT or a mock dir)");
  }
  return std::make_unique<HttpLlmClient>(c);
}

SidecarCaptioner::SidecarCaptioner(const std::string& captions_json_path) {
  const json j = json::parse(read_file(captions_json_path));
  for (const auto& [k, v] : j.items()) captions_[k] = v.get<std::string>();
}

std::string SidecarCaptioner::caption(const std::string& image_path) {
  if (auto it = captions_.find(image_path); it != captions_.end()) return it->second;
  if (auto it = captions_.find(fs::path(image_path).filename().string()); it != captions_.end()) return it->second;
  return {};
}

HttpCaptioner::HttpCaptioner(LlmConfig config)
    : poster_(std::make_unique<detail::JsonPoster>(config)), model_(config.model) {}
HttpCaptioner::~HttpCaptioner() = default;

std::string HttpCaptioner::caption(const std::string& image_path) {
  const std::string bytes = read_file(image_path);
  return detail::JsonPoster::text_of(
      poster_->post(json{{"model", model_}, {"image_base64", httplib::detail::base64_encode(bytes)}}));
}

}  // namespace webvln
