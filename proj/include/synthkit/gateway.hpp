#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace synthkit {

struct SamplingProfile {
  double temperature = 1.0;
  double top_p = 1.0;
  int max_tokens = 2048;
  int n = 1;
};

namespace profiles {
// Question/answer generation, document generation, and evaluation sampling.
inline constexpr SamplingProfile QA_GEN{1.0, 1.0, 2048, 1};
inline constexpr SamplingProfile DOC_GEN{0.7, 0.95, 4096, 1};
inline constexpr SamplingProfile EVAL{0.1, 0.95, 512, 8};
}  // namespace profiles

struct ChatRequest {
  std::string request_id;
  std::string model;
  std::string prompt;  // sent as a single user message
  SamplingProfile profile;
};

struct ChatResponse {
  std::string request_id;
  std::vector<std::string> texts;  // length == profile.n on success
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct EmbeddingResponse {
  std::vector<std::vector<double>> vectors;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Throws GatewayError on transport failure (after retries, for HTTP).
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  // One vector per input text, order preserved. texts must be non-empty.
  virtual EmbeddingResponse embed(const std::string& model, const std::vector<std::string>& texts) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;
  int initial_delay_ms = 1000;
  double factor = 2.0;
  double jitter = 0.2;  // +/- fraction of the delay
};

struct EndpointConfig {
  std::string url;  // e.g. http://localhost:8000/v1
  std::string api_key_env_var;
  std::string chat_path = "/chat/completions";
  std::string embeddings_path = "/embeddings";
  RetryPolicy retry;
  int timeout_sec = 300;
};

// OpenAI-compatible chat-completions and embeddings over HTTP JSON. Retries
// network errors, 429 and 5xx with jittered exponential backoff.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(EndpointConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  EmbeddingResponse embed(const std::string& model, const std::vector<std::string>& texts) override;

 private:
  std::string post_json(const std::string& path, const std::string& body, const std::string& what);

  EndpointConfig config_;
  std::string api_key_;
};

// Hermetic backend for tests and dry runs. Responses are a pure function of
// (prompt, profile, seed): the prompt's template kind is recognized and the
// reply is generated in the matching format. Specific replies can be pinned
// via fixtures keyed by (template kind, prompt hash).
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed, int embedding_dim = 64);

  ChatResponse complete(const ChatRequest& request) override;
  EmbeddingResponse embed(const std::string& model, const std::vector<std::string>& texts) override;

  static std::uint64_t prompt_hash(std::string_view prompt);
  void set_fixture(int prompt_kind, std::uint64_t source_hash, std::vector<std::string> texts);
  // Requests whose prompt contains the marker fail with GatewayError.
  void fail_on_marker(std::string marker);
  // Deterministic per-request sleep in [0, max_ms), for scheduling tests.
  void set_latency_jitter_ms(int max_ms);

  int max_concurrent_observed() const { return max_concurrent_.load(); }
  int total_requests() const { return total_requests_.load(); }

 private:
  std::string generate_text(int kind, const ChatRequest& request, int sample_index) const;

  std::uint64_t seed_;
  int embedding_dim_;
  std::map<std::pair<int, std::uint64_t>, std::vector<std::string>> fixtures_;
  std::string fail_marker_;
  int latency_jitter_ms_ = 0;
  mutable std::mutex mu_;
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_concurrent_{0};
  std::atomic<int> total_requests_{0};
};

struct BatchOptions {
  int max_in_flight = 4;
  bool strict = false;  // abort the whole batch on the first per-item error
};

struct BatchItem {
  std::optional<ChatResponse> response;
  std::string error;
  bool ok() const { return response.has_value(); }
};

// Dispatches requests with bounded concurrency; results come back in request
// order regardless of completion order. Per-item failures land in their slot
// unless strict mode is set.
std::vector<BatchItem> run_batch(Backend& backend, const std::vector<ChatRequest>& requests,
                                 const BatchOptions& options = {});

}  // namespace synthkit
