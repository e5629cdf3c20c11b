#include <doctest.h>

#include <atomic>
#include <chrono>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <thread>

#include "pdalign/comparisons.hpp"
#include "pdalign/errors.hpp"
#include "pdalign/generation_client.hpp"

using namespace pdalign;

namespace {

// Loopback completion server for exercising the HTTP client.
class TestServer {
 public:
  using Handler = std::function<void(const httplib::Request&,
                                     httplib::Response&)>;

  explicit TestServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/complete",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handler_(req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~TestServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/complete";
  }

 private:
  httplib::Server server_;
  Handler handler_;
  int port_ = 0;
  std::thread thread_;
};

HttpClientConfig fast_config(const std::string& url) {
  HttpClientConfig config;
  config.url = url;
  config.backoff_initial_ms = 1;
  config.timeout_sec = 5;
  return config;
}

}  // namespace

TEST_CASE("truncate_tokens keeps the first N whitespace-delimited tokens") {
  CHECK(truncate_tokens("one two three", 2) == "one two");
  CHECK(truncate_tokens("one two three", 3) == "one two three");
  CHECK(truncate_tokens("one two three", 10) == "one two three");
  CHECK(truncate_tokens("  a\n\nb  c", 2) == "  a\n\nb");
  CHECK(truncate_tokens("\n\n\n", 5) == "\n\n\n");  // no tokens: unchanged
  CHECK(truncate_tokens("x", 0) == "");
}

TEST_CASE("http client: success path and token cap") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    const auto j = nlohmann::json::parse(req.body);
    REQUIRE(j.contains("prompt"));
    REQUIRE(j.at("max_tokens").get<int>() == 80);
    std::string long_reply;
    for (int i = 0; i < 100; ++i) {
      long_reply += "w" + std::to_string(i) + " ";
    }
    res.set_content(nlohmann::json{{"completion", long_reply}}.dump(),
                    "application/json");
  });
  HttpGenerationClient client(fast_config(server.url()));
  const auto result = client.complete("What is the difference?", 80);
  REQUIRE(result.ok);
  // 80 tokens survive the cap.
  int tokens = 0;
  bool in = false;
  for (char c : result.text) {
    if (!isspace(static_cast<unsigned char>(c)) && !in) {
      in = true;
      ++tokens;
    } else if (isspace(static_cast<unsigned char>(c))) {
      in = false;
    }
  }
  CHECK(tokens == 80);
}

TEST_CASE("http client: configurable request/response field names") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    const auto j = nlohmann::json::parse(req.body);
    REQUIRE(j.contains("input"));
    REQUIRE(j.contains("n_tokens"));
    res.set_content(nlohmann::json{{"text", "a reply"}}.dump(),
                    "application/json");
  });
  auto config = fast_config(server.url());
  config.prompt_field = "input";
  config.max_tokens_field = "n_tokens";
  config.completion_field = "text";
  HttpGenerationClient client(config);
  const auto result = client.complete("p", 80);
  REQUIRE(result.ok);
  CHECK(result.text == "a reply");
}

TEST_CASE("http client: retries transient failures, then succeeds") {
  std::atomic<int> calls{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    if (calls.fetch_add(1) < 2) {
      res.status = 500;
      return;
    }
    res.set_content(nlohmann::json{{"completion", "recovered"}}.dump(),
                    "application/json");
  });
  HttpGenerationClient client(fast_config(server.url()));
  const auto result = client.complete("p", 80);
  REQUIRE(result.ok);
  CHECK(result.text == "recovered");
  CHECK(calls.load() == 3);
}

TEST_CASE("http client: retry budget exhaustion reports the error") {
  std::atomic<int> calls{0};
  TestServer server([&](const httplib::Request&, httplib::Response& res) {
    calls.fetch_add(1);
    res.status = 503;
  });
  HttpGenerationClient client(fast_config(server.url()));
  const auto result = client.complete("p", 80);
  CHECK_FALSE(result.ok);
  CHECK(calls.load() == 3);  // default attempt budget
  CHECK(result.error.find("503") != std::string::npos);
}

TEST_CASE("http client: malformed response body counts as a failure") {
  TestServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json", "text/plain");
  });
  HttpGenerationClient client(fast_config(server.url()));
  const auto result = client.complete("p", 80);
  CHECK_FALSE(result.ok);
}

TEST_CASE("generate_dataset: transport failures become records, run continues") {
  std::atomic<int> calls{0};
  TestServer server([&](const httplib::Request& req, httplib::Response& res) {
    calls.fetch_add(1);
    const auto j = nlohmann::json::parse(req.body);
    const std::string prompt = j.at("prompt").get<std::string>();
    // Fail every request mentioning item "bad-item" in a caption.
    if (prompt.find("bad-item") != std::string::npos) {
      res.status = 500;
      return;
    }
    res.set_content(
        nlohmann::json{{"completion", "The first is larger."}}.dump(),
        "application/json");
  });
  HttpGenerationClient client(fast_config(server.url()));
  CaptionMap captions = {{"a", "a photo of a cat"},
                         {"b", "a photo of bad-item"},
                         {"c", "a photo of a dog"}};
  const std::vector<IdPair> pairs = {{"a", "c"}, {"a", "b"}, {"c", "a"}};
  const auto records = generate_dataset(client, pairs, captions, {});
  REQUIRE(records.size() == 3);
  CHECK(records[0].filter_status.usable());
  CHECK(records[1].filter_status ==
        FilterStatus{FilterState::Rejected, "transport"});
  CHECK(records[2].filter_status.usable());
  CHECK(records[0].difference_text == "The first is larger.");
}

TEST_CASE("generate_dataset: output order tracks input order under concurrency") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    const auto j = nlohmann::json::parse(req.body);
    const std::string prompt = j.at("prompt").get<std::string>();
    // Earlier pairs answer slower, so arrival order inverts input order.
    const auto pos = prompt.find("caption number ");
    int idx = 0;
    if (pos != std::string::npos) {
      idx = std::atoi(prompt.c_str() + pos + 15);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(
        std::max(0, 8 * (8 - idx))));
    res.set_content(
        nlohmann::json{{"completion", "Reply for pair " +
                                          std::to_string(idx) + "."}}.dump(),
        "application/json");
  });
  HttpGenerationClient client(fast_config(server.url()));
  CaptionMap captions;
  std::vector<IdPair> pairs;
  captions["base"] = "plain base caption";
  for (int i = 1; i <= 8; ++i) {
    const std::string id = "item" + std::to_string(i);
    captions[id] = "caption number " + std::to_string(i);
    pairs.emplace_back("base", id);
  }
  GenerateOptions options;
  options.max_inflight = 4;
  const auto records = generate_dataset(client, pairs, captions, options);
  REQUIRE(records.size() == 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(records[i].difference_text ==
          "Reply for pair " + std::to_string(i + 1) + ".");
  }

  // Assembly is independent of the concurrency level entirely.
  GenerateOptions serial;
  serial.max_inflight = 1;
  CHECK(generate_dataset(client, pairs, captions, serial) == records);
}

TEST_CASE("http client config validation") {
  HttpClientConfig no_scheme;
  no_scheme.url = "127.0.0.1:80/x";
  CHECK_THROWS_AS(HttpGenerationClient{no_scheme}, ConfigError);
  auto config = fast_config("http://127.0.0.1:9/x");
  config.max_attempts = 0;
  CHECK_THROWS_AS(HttpGenerationClient{config}, ConfigError);
}
