#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace webvln {

namespace detail {
class JsonPoster;
}

// Text-completion backend used by QA generation and the LLM agent.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Throws Error{kClient, "ClientError"} on transport or protocol failure.
  virtual std::string complete(const std::string& prompt) = 0;
};

struct LlmConfig {
  std::string endpoint;  // http(s)://host[:port]/path
  std::string model = "gpt-3.5-turbo";
  std::string api_key;
  std::string mock_dir;  // when set, canned responses are served from here
  int max_in_flight = 4;
  int timeout_seconds = 60;

  // LLM_ENDPOINT, LLM_API_KEY and LLM_MODEL override the stored values.
  LlmConfig with_env_overrides() const;
};

// POSTs {"model", "prompt"} as JSON and reads {"text"} from the reply.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(LlmConfig config);
  ~HttpLlmClient() override;
  std::string complete(const std::string& prompt) override;

 private:
  std::unique_ptr<detail::JsonPoster> poster_;
  std::string model_;
};

// Canned responses from a directory. If `index.json` exists it maps prompt
// substrings to response files (first match in key order wins); otherwise the
// directory's *.txt files are served in name order, one per call.
// `default.txt` answers anything unmatched.
class MockLlmClient final : public LlmClient {
 public:
  explicit MockLlmClient(const std::string& dir);
  std::string complete(const std::string& prompt) override;
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> index_;
  std::deque<std::string> sequence_;
  std::string fallback_;
  bool has_fallback_ = false;
  std::vector<std::string> prompts_;
  std::mutex mu_;
};

// In-memory scripted replies, consumed in order.
class ScriptedLlmClient final : public LlmClient {
 public:
  explicit ScriptedLlmClient(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}
  std::string complete(const std::string& prompt) override;
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::deque<std::string> replies_;
  std::vector<std::string> prompts_;
};

std::unique_ptr<LlmClient> make_llm_client(const LlmConfig& config);

class Captioner {
 public:
  virtual ~Captioner() = default;
  virtual std::string caption(const std::string& image_path) = 0;
};

// Reads `<site>/captions.json` ({asset path or file name: caption}).
class SidecarCaptioner final : public Captioner {
 public:
  explicit SidecarCaptioner(const std::string& captions_json_path);
  explicit SidecarCaptioner(std::map<std::string, std::string> captions) : captions_(std::move(captions)) {}
  std::string caption(const std::string& image_path) override;

 private:
  std::map<std::string, std::string> captions_;
};

// POSTs {"model", "image_base64"} and reads {"text"}.
class HttpCaptioner final : public Captioner {
 public:
  explicit HttpCaptioner(LlmConfig config);
  ~HttpCaptioner() override;
  std::string caption(const std::string& image_path) override;

 private:
  std::unique_ptr<detail::JsonPoster> poster_;
  std::string model_;
};

}  // namespace webvln
