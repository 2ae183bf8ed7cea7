#include "synthkit/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/prompts.hpp"
#include "synthkit/tokenizer.hpp"
#include "synthkit/util.hpp"

namespace synthkit {

namespace {

// Split "http://host:port/v1" into client base and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint url missing scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status < 600); }

std::int64_t ws_count(std::string_view text) {
  WhitespaceTokenizer tok;
  return tok.count(text);
}

}  // namespace

HttpBackend::HttpBackend(EndpointConfig config) : config_(std::move(config)) {
  if (!config_.api_key_env_var.empty()) {
    if (const char* key = std::getenv(config_.api_key_env_var.c_str())) api_key_ = key;
  }
}

std::string HttpBackend::post_json(const std::string& path, const std::string& body,
                                   const std::string& what) {
  auto [base, prefix] = split_url(config_.url);
  std::string full_path = prefix + path;
  Rng rng(fnv1a64(what) ^ fnv1a64(body));

  std::string last_error;
  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    httplib::Client client(base);
    client.set_connection_timeout(config_.timeout_sec);
    client.set_read_timeout(config_.timeout_sec);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(full_path, headers, body, "application/json");
    if (res && res->status == 200) return res->body;
    if (res && !retryable_status(res->status)) {
      throw GatewayError(what + " failed: HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : "connection error: " + httplib::to_string(res.error());
    if (attempt < config_.retry.max_attempts) {
      double delay = config_.retry.initial_delay_ms * std::pow(config_.retry.factor, attempt - 1);
      delay *= 1.0 + config_.retry.jitter * (2.0 * rng.next_double() - 1.0);
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<std::int64_t>(delay)));
    }
  }
  throw GatewayError(what + " failed after " + std::to_string(config_.retry.max_attempts) +
                     " attempts; last error: " + last_error);
}

ChatResponse HttpBackend::complete(const ChatRequest& request) {
  nlohmann::json body;
  body["model"] = request.model;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.profile.temperature;
  body["top_p"] = request.profile.top_p;
  body["max_tokens"] = request.profile.max_tokens;
  body["n"] = request.profile.n;

  std::string raw = post_json(config_.chat_path, body.dump(), "chat completion " + request.request_id);

  ChatResponse response;
  response.request_id = request.request_id;
  try {
    nlohmann::json j = nlohmann::json::parse(raw);
    for (const auto& choice : j.at("choices")) {
      response.texts.push_back(choice.at("message").at("content").get<std::string>());
    }
    if (j.contains("usage")) {
      response.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      response.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError("malformed chat completion body for " + request.request_id + ": " + e.what());
  }
  if (static_cast<int>(response.texts.size()) != request.profile.n) {
    throw GatewayError("chat completion " + request.request_id + " returned " +
                       std::to_string(response.texts.size()) + " texts, expected " +
                       std::to_string(request.profile.n));
  }
  return response;
}

EmbeddingResponse HttpBackend::embed(const std::string& model, const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed requires at least one text");
  nlohmann::json body;
  body["model"] = model;
  body["input"] = texts;

  std::string raw = post_json(config_.embeddings_path, body.dump(), "embedding batch");

  EmbeddingResponse response;
  try {
    nlohmann::json j = nlohmann::json::parse(raw);
    response.vectors.resize(texts.size());
    std::size_t fallback_index = 0;
    for (const auto& item : j.at("data")) {
      std::size_t index = item.contains("index") ? item["index"].get<std::size_t>() : fallback_index;
      ++fallback_index;
      if (index >= response.vectors.size()) throw GatewayError("embedding index out of range");
      response.vectors[index] = item.at("embedding").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(std::string("malformed embeddings body: ") + e.what());
  }
  std::size_t dim = response.vectors.empty() ? 0 : response.vectors.front().size();
  for (const auto& v : response.vectors) {
    if (v.size() != dim || v.empty()) throw GatewayError("embedding dimensions inconsistent across batch");
  }
  return response;
}

MockBackend::MockBackend(std::uint64_t seed, int embedding_dim)
    : seed_(seed), embedding_dim_(embedding_dim) {}

std::uint64_t MockBackend::prompt_hash(std::string_view prompt) { return fnv1a64(prompt); }

void MockBackend::set_fixture(int prompt_kind, std::uint64_t source_hash,
                              std::vector<std::string> texts) {
  std::lock_guard<std::mutex> lock(mu_);
  fixtures_[{prompt_kind, source_hash}] = std::move(texts);
}

void MockBackend::fail_on_marker(std::string marker) {
  std::lock_guard<std::mutex> lock(mu_);
  fail_marker_ = std::move(marker);
}

void MockBackend::set_latency_jitter_ms(int max_ms) {
  std::lock_guard<std::mutex> lock(mu_);
  latency_jitter_ms_ = max_ms;
}

namespace {

const char* kSyllables[] = {"ka", "ro", "mi", "ten", "sol", "ver", "lun", "pex",
                            "dor", "ash", "bel", "cor", "fen", "gal", "hid", "jor"};

std::string mock_word(Rng& rng, bool capitalize = false) {
  int parts = 2 + static_cast<int>(rng.bounded(2));
  std::string word;
  for (int i = 0; i < parts; ++i) word += kSyllables[rng.bounded(std::size(kSyllables))];
  if (capitalize) word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

std::string mock_sentence(Rng& rng, int min_words = 8, int max_words = 14) {
  int count = min_words + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(max_words - min_words + 1)));
  std::string s = mock_word(rng, true);
  for (int i = 1; i < count; ++i) s += " " + mock_word(rng);
  return s + ".";
}

std::string extract_between(std::string_view text, std::string_view begin, std::string_view end) {
  auto b = text.find(begin);
  if (b == std::string_view::npos) return "";
  b += begin.size();
  auto e = text.find(end, b);
  if (e == std::string_view::npos) e = text.size();
  return trim(text.substr(b, e - b));
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

}  // namespace

std::string MockBackend::generate_text(int kind, const ChatRequest& request, int sample_index) const {
  std::string profile_key = std::to_string(request.profile.temperature) + "/" +
                            std::to_string(request.profile.top_p) + "/" +
                            std::to_string(request.profile.max_tokens) + "/" +
                            std::to_string(request.profile.n);
  Rng rng(splitmix64(seed_ ^ fnv1a64(request.prompt) ^ fnv1a64(profile_key) ^
                     static_cast<std::uint64_t>(sample_index) * 0x9e3779b97f4a7c15ull));

  switch (static_cast<PromptKind>(kind)) {
    case PromptKind::QaGeneration: {
      std::string out;
      for (int i = 0; i < 3; ++i) {
        if (i > 0) out += "\n";
        out += "Question: What role does " + mock_word(rng) + " " + mock_word(rng) +
               " play in the article?\n";
        out += "Answer: It concerns " + mock_word(rng) + " " + mock_word(rng) + ".";
      }
      return out;
    }
    case PromptKind::QaResponse:
      return "Explanation: " + mock_sentence(rng) + "\nAnswer: " + mock_word(rng) + " " + mock_word(rng) + ".";
    case PromptKind::EgExtract: {
      nlohmann::json j;
      j["summary"] = mock_sentence(rng);
      std::vector<std::string> entities;
      int count = 3 + static_cast<int>(rng.bounded(3));
      for (int i = 0; i < count; ++i) entities.push_back(mock_word(rng, true));
      std::sort(entities.begin(), entities.end());
      entities.erase(std::unique(entities.begin(), entities.end()), entities.end());
      if (entities.size() < 2) entities.push_back(entities.front() + "two");
      j["entities"] = entities;
      return j.dump();
    }
    case PromptKind::ArStrategy: {
      std::string out;
      for (int i = 0; i < 3; ++i) {
        if (i > 0) out += "\n";
        out += "## " + mock_word(rng, true) + " " + mock_word(rng) + " review\n";
        out += mock_sentence(rng);
      }
      return out;
    }
    case PromptKind::Mcqa: {
      char letter = static_cast<char>('A' + rng.bounded(4));
      return "Explanation: " + mock_sentence(rng) + "\nAnswer: " + std::string(1, letter);
    }
    case PromptKind::FreeForm:
      return "Explanation: " + mock_sentence(rng) + "\nAnswer: " + mock_word(rng) + " " + mock_word(rng) + ".";
    case PromptKind::Judge: {
      std::string gold = extract_between(request.prompt, "### Gold answer\n", "\n\n### Candidate answer");
      std::string candidate =
          extract_between(request.prompt, "### Candidate answer\n", "\n\nDecide whether");
      bool match = !gold.empty() && iequals(gold, candidate);
      return std::string("Explanation: Compared the candidate with the reference.\nVerdict: ") +
             (match ? "CORRECT" : "INCORRECT");
    }
    case PromptKind::Wrap:
    case PromptKind::EgLink:
    case PromptKind::ArRewrite:
    case PromptKind::FocalRewrite:
    case PromptKind::Unknown:
      break;
  }
  return mock_sentence(rng) + " " + mock_sentence(rng) + " " + mock_sentence(rng);
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  total_requests_.fetch_add(1);
  int now = in_flight_.fetch_add(1) + 1;
  int prev_max = max_concurrent_.load();
  while (now > prev_max && !max_concurrent_.compare_exchange_weak(prev_max, now)) {
  }

  std::string fail_marker;
  int latency = 0;
  {
    std::lock_guard<std::mutex> lock(mu_);
    fail_marker = fail_marker_;
    latency = latency_jitter_ms_;
  }
  if (latency > 0) {
    Rng rng(splitmix64(seed_ ^ fnv1a64(request.request_id)));
    std::this_thread::sleep_for(std::chrono::milliseconds(rng.bounded(static_cast<std::uint64_t>(latency))));
  }

  struct InFlightGuard {
    std::atomic<int>& counter;
    ~InFlightGuard() { counter.fetch_sub(1); }
  } guard{in_flight_};

  if (!fail_marker.empty() && request.prompt.find(fail_marker) != std::string::npos) {
    throw GatewayError("mock failure injected for request '" + request.request_id + "'");
  }

  int kind = static_cast<int>(classify_prompt(request.prompt));
  ChatResponse response;
  response.request_id = request.request_id;

  std::vector<std::string> fixture;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = fixtures_.find({kind, prompt_hash(request.prompt)});
    if (it != fixtures_.end()) fixture = it->second;
  }
  for (int i = 0; i < request.profile.n; ++i) {
    if (!fixture.empty()) {
      response.texts.push_back(fixture[static_cast<std::size_t>(i) % fixture.size()]);
    } else {
      response.texts.push_back(generate_text(kind, request, i));
    }
  }
  response.prompt_tokens = ws_count(request.prompt);
  for (const auto& t : response.texts) response.completion_tokens += ws_count(t);
  return response;
}

EmbeddingResponse MockBackend::embed(const std::string& model, const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed requires at least one text");
  EmbeddingResponse response;
  response.vectors.reserve(texts.size());
  for (const auto& text : texts) {
    Rng rng(splitmix64(seed_ ^ fnv1a64("embed") ^ fnv1a64(model) ^ fnv1a64(text)));
    std::vector<double> v(static_cast<std::size_t>(embedding_dim_));
    double norm2 = 0.0;
    for (auto& x : v) {
      x = rng.gaussian();
      norm2 += x * x;
    }
    double norm = std::sqrt(norm2);
    if (norm > 0) {
      for (auto& x : v) x /= norm;
    }
    response.vectors.push_back(std::move(v));
  }
  return response;
}

std::vector<BatchItem> run_batch(Backend& backend, const std::vector<ChatRequest>& requests,
                                 const BatchOptions& options) {
  if (options.max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
  std::vector<BatchItem> results(requests.size());
  if (requests.empty()) return results;

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= requests.size()) break;
      try {
        results[idx].response = backend.complete(requests[idx]);
      } catch (const std::exception& e) {
        results[idx].error = e.what();
      }
    }
  };

  std::size_t worker_count = std::min<std::size_t>(static_cast<std::size_t>(options.max_in_flight),
                                                   requests.size());
  std::vector<std::thread> workers;
  workers.reserve(worker_count);
  for (std::size_t i = 0; i < worker_count; ++i) workers.emplace_back(worker);
  for (auto& w : workers) w.join();

  if (options.strict) {
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].ok()) {
        throw GatewayError("batch aborted: request '" + requests[i].request_id +
                           "' failed: " + results[i].error);
      }
    }
  }
  return results;
}

}  // namespace synthkit
