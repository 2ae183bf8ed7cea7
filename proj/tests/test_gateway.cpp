#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "synthkit/errors.hpp"
#include "synthkit/gateway.hpp"
#include "synthkit/prompts.hpp"

using namespace synthkit;

namespace {

ChatRequest make_req(const std::string& id, const std::string& prompt,
                     SamplingProfile profile = profiles::QA_GEN) {
  return ChatRequest{id, "test-model", prompt, profile};
}

// In-process OpenAI-style server for exercising the HTTP path.
class TestServer {
 public:
  explicit TestServer(httplib::Server::Handler chat_handler) {
    server_.Post("/v1/chat/completions", std::move(chat_handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

EndpointConfig fast_retry_config(const std::string& url, int attempts) {
  EndpointConfig config;
  config.url = url;
  config.retry.max_attempts = attempts;
  config.retry.initial_delay_ms = 1;
  config.retry.jitter = 0.0;
  config.timeout_sec = 5;
  return config;
}

}  // namespace

TEST_CASE("sampling presets match the documented values") {
  CHECK(profiles::QA_GEN.temperature == 1.0);
  CHECK(profiles::QA_GEN.top_p == 1.0);
  CHECK(profiles::QA_GEN.max_tokens == 2048);
  CHECK(profiles::QA_GEN.n == 1);

  CHECK(profiles::DOC_GEN.temperature == 0.7);
  CHECK(profiles::DOC_GEN.top_p == 0.95);
  CHECK(profiles::DOC_GEN.max_tokens == 4096);
  CHECK(profiles::DOC_GEN.n == 1);

  CHECK(profiles::EVAL.temperature == 0.1);
  CHECK(profiles::EVAL.top_p == 0.95);
  CHECK(profiles::EVAL.max_tokens == 512);
  CHECK(profiles::EVAL.n == 8);
}

TEST_CASE("mock backend is deterministic in (prompt, profile, seed)") {
  MockBackend a(42), b(42), c(43);
  auto r1 = a.complete(make_req("r1", "hello world"));
  auto r2 = b.complete(make_req("other-id", "hello world"));
  auto r3 = c.complete(make_req("r1", "hello world"));
  CHECK(r1.texts == r2.texts);
  CHECK(r1.texts != r3.texts);

  SamplingProfile other = profiles::QA_GEN;
  other.temperature = 0.5;
  auto r4 = a.complete(make_req("r1", "hello world", other));
  CHECK(r1.texts != r4.texts);
}

TEST_CASE("mock backend honors n and reports token usage") {
  MockBackend mock(1);
  auto response = mock.complete(make_req("e", "### Question\nQ?\n\n### Choices\nA. x\nB. y", profiles::EVAL));
  CHECK(response.texts.size() == 8);
  CHECK(response.prompt_tokens > 0);
  CHECK(response.completion_tokens > 0);
}

TEST_CASE("mock fixtures pin specific prompts") {
  MockBackend mock(1);
  std::string prompt = "pinned prompt";
  mock.set_fixture(static_cast<int>(PromptKind::Unknown), MockBackend::prompt_hash(prompt),
                   {"exact reply"});
  auto response = mock.complete(make_req("f", prompt));
  REQUIRE(response.texts.size() == 1);
  CHECK(response.texts[0] == "exact reply");
}

TEST_CASE("mock embeddings are deterministic, unit-norm and text-keyed") {
  MockBackend mock(9, 32);
  auto r = mock.embed("embed-model", {"alpha", "beta", "alpha"});
  REQUIRE(r.vectors.size() == 3);
  CHECK(r.vectors[0].size() == 32);
  CHECK(r.vectors[0] == r.vectors[2]);
  CHECK(r.vectors[0] != r.vectors[1]);
  double norm2 = 0;
  for (double x : r.vectors[0]) norm2 += x * x;
  CHECK(norm2 == doctest::Approx(1.0));
  CHECK_THROWS_AS(mock.embed("embed-model", {}), ValidationError);
}

TEST_CASE("http backend parses chat completions") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    CHECK(body["model"] == "test-model");
    CHECK(body["messages"][0]["role"] == "user");
    nlohmann::json reply;
    reply["choices"] = nlohmann::json::array();
    for (int i = 0; i < body["n"].get<int>(); ++i) {
      reply["choices"].push_back({{"message", {{"role", "assistant"}, {"content", "ok " + std::to_string(i)}}}});
    }
    reply["usage"] = {{"prompt_tokens", 11}, {"completion_tokens", 4}};
    res.set_content(reply.dump(), "application/json");
  });
  HttpBackend backend(fast_retry_config(server.url(), 2));
  SamplingProfile profile = profiles::QA_GEN;
  profile.n = 3;
  auto response = backend.complete(make_req("h1", "hi", profile));
  CHECK(response.texts == std::vector<std::string>{"ok 0", "ok 1", "ok 2"});
  CHECK(response.prompt_tokens == 11);
  CHECK(response.completion_tokens == 4);
}

TEST_CASE("http backend retries 5xx and reports the attempt count") {
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    hits.fetch_add(1);
    res.status = 500;
    res.set_content("overloaded", "text/plain");
  });
  HttpBackend backend(fast_retry_config(server.url(), 2));
  CHECK_THROWS_WITH_AS(backend.complete(make_req("r", "hi")), doctest::Contains("after 2 attempts"),
                       GatewayError);
  CHECK(hits.load() == 2);
}

TEST_CASE("http backend does not retry client errors") {
  std::atomic<int> hits{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    hits.fetch_add(1);
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  HttpBackend backend(fast_retry_config(server.url(), 5));
  CHECK_THROWS_WITH_AS(backend.complete(make_req("r", "hi")), doctest::Contains("HTTP 400"),
                       GatewayError);
  CHECK(hits.load() == 1);
}

TEST_CASE("http backend rejects malformed bodies and wrong text counts") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    if (body["n"] == 2) {
      res.set_content(R"({"choices":[{"message":{"content":"only one"}}]})", "application/json");
    } else {
      res.set_content("not json at all", "application/json");
    }
  });
  HttpBackend backend(fast_retry_config(server.url(), 1));
  CHECK_THROWS_WITH_AS(backend.complete(make_req("r", "hi")), doctest::Contains("malformed"),
                       GatewayError);
  SamplingProfile profile = profiles::QA_GEN;
  profile.n = 2;
  CHECK_THROWS_WITH_AS(backend.complete(make_req("r", "hi", profile)), doctest::Contains("expected 2"),
                       GatewayError);
}

TEST_CASE("run_batch preserves request order under concurrency") {
  MockBackend mock(3);
  mock.set_latency_jitter_ms(8);
  std::vector<ChatRequest> requests;
  for (int i = 0; i < 10; ++i) {
    requests.push_back(make_req("req-" + std::to_string(i), "prompt " + std::to_string(i)));
  }
  BatchOptions options;
  options.max_in_flight = 3;
  auto results = run_batch(mock, requests, options);
  REQUIRE(results.size() == 10);
  for (int i = 0; i < 10; ++i) {
    REQUIRE(results[static_cast<std::size_t>(i)].ok());
    CHECK(results[static_cast<std::size_t>(i)].response->request_id == "req-" + std::to_string(i));
  }
  CHECK(mock.max_concurrent_observed() <= 3);
}

TEST_CASE("run_batch of one request matches complete") {
  MockBackend mock(3);
  auto direct = mock.complete(make_req("solo", "one prompt"));
  auto batch = run_batch(mock, {make_req("solo", "one prompt")});
  REQUIRE(batch.size() == 1);
  REQUIRE(batch[0].ok());
  CHECK(batch[0].response->texts == direct.texts);
}

TEST_CASE("run_batch isolates failures unless strict") {
  MockBackend mock(3);
  mock.fail_on_marker("poison");
  std::vector<ChatRequest> requests{make_req("good-1", "fine"), make_req("bad", "poison pill"),
                                    make_req("good-2", "also fine")};
  auto results = run_batch(mock, requests);
  CHECK(results[0].ok());
  CHECK_FALSE(results[1].ok());
  CHECK(results[1].error.find("bad") != std::string::npos);
  CHECK(results[2].ok());

  BatchOptions strict;
  strict.strict = true;
  CHECK_THROWS_WITH_AS(run_batch(mock, requests, strict), doctest::Contains("'bad'"), GatewayError);
}

TEST_CASE("run_batch validates max_in_flight") {
  MockBackend mock(3);
  BatchOptions bad;
  bad.max_in_flight = 0;
  CHECK_THROWS_AS(run_batch(mock, {}, bad), ValidationError);
}

TEST_CASE("http backend rejects ragged embedding batches and sends auth headers") {
  std::string seen_auth;
  httplib::Server server;
  server.Post("/v1/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    res.set_content(R"({"data":[{"index":0,"embedding":[1.0,2.0]},{"index":1,"embedding":[1.0]}]})",
                    "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("SYNTHKIT_TEST_KEY", "sekret", 1);
  EndpointConfig config = fast_retry_config("http://127.0.0.1:" + std::to_string(port) + "/v1", 1);
  config.api_key_env_var = "SYNTHKIT_TEST_KEY";
  HttpBackend backend(config);
  CHECK_THROWS_WITH_AS(backend.embed("e", {"a", "b"}), doctest::Contains("inconsistent"),
                       GatewayError);
  CHECK(seen_auth == "Bearer sekret");

  server.stop();
  thread.join();
}
