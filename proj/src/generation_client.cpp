#include "pdalign/generation_client.hpp"

#include <cctype>
#include <chrono>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <thread>

#include "pdalign/errors.hpp"

namespace pdalign {

std::string truncate_tokens(const std::string& text, int max_tokens) {
  if (max_tokens <= 0) return "";
  int tokens = 0;
  bool in_token = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const bool ws = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!ws && !in_token) {
      in_token = true;
      ++tokens;
    } else if (ws && in_token) {
      in_token = false;
      if (tokens == max_tokens) return text.substr(0, i);
    }
  }
  return text;
}

HttpGenerationClient::HttpGenerationClient(HttpClientConfig config)
    : config_(std::move(config)) {
  const auto scheme_end = config_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("client url must include a scheme: " + config_.url);
  }
  const auto path_start = config_.url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    host_base_ = config_.url;
    path_ = "/";
  } else {
    host_base_ = config_.url.substr(0, path_start);
    path_ = config_.url.substr(path_start);
  }
  if (config_.max_attempts < 1) {
    throw ConfigError("max_attempts must be >= 1");
  }
}

GenerationResult HttpGenerationClient::complete(const std::string& prompt,
                                                int max_tokens) {
  nlohmann::json body;
  body[config_.prompt_field] = prompt;
  body[config_.max_tokens_field] = max_tokens;
  const std::string payload =
      body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          config_.backoff_initial_ms * (1LL << (attempt - 1))));
    }
    // A fresh connection per call keeps this trivially thread-safe.
    httplib::Client cli(host_base_);
    cli.set_connection_timeout(config_.timeout_sec, 0);
    cli.set_read_timeout(config_.timeout_sec, 0);
    auto res = cli.Post(path_, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      const auto it = j.find(config_.completion_field);
      if (it == j.end() || !it->is_string()) {
        last_error =
            "response missing string field: " + config_.completion_field;
        continue;
      }
      GenerationResult out;
      out.ok = true;
      out.text = truncate_tokens(it->get<std::string>(), max_tokens);
      return out;
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("bad response json: ") + e.what();
      continue;
    }
  }
  GenerationResult out;
  out.error = last_error;
  return out;
}

}  // namespace pdalign
