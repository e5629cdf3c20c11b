#pragma once

#include <string>

namespace pdalign {

struct GenerationResult {
  bool ok = false;
  std::string text;   // token-capped completion when ok
  std::string error;  // transport diagnostic otherwise
};

// Pluggable text-generation service. Implementations must be safe to call
// from multiple threads at once; the pipeline fans out up to its
// configured number of in-flight requests.
class GenerationClient {
 public:
  virtual ~GenerationClient() = default;
  virtual GenerationResult complete(const std::string& prompt,
                                    int max_tokens) = 0;
};

// Keeps everything up to and including the max_tokens-th whitespace
// delimited token, preserving the original bytes (so newline runs survive
// for the downstream filter).
std::string truncate_tokens(const std::string& text, int max_tokens);

struct HttpClientConfig {
  std::string url;  // e.g. http://127.0.0.1:8080/v1/complete
  // Field names are configurable to adapt to common completion APIs.
  std::string prompt_field = "prompt";
  std::string max_tokens_field = "max_tokens";
  std::string completion_field = "completion";
  int max_attempts = 3;
  int backoff_initial_ms = 1000;  // doubles after each failed attempt
  int timeout_sec = 30;
};

// JSON-over-HTTP client: POSTs {prompt_field: ..., max_tokens_field: n}
// and reads completion_field from the JSON response. Retries with
// exponential backoff; enforces the token cap client-side.
class HttpGenerationClient : public GenerationClient {
 public:
  explicit HttpGenerationClient(HttpClientConfig config);

  GenerationResult complete(const std::string& prompt,
                            int max_tokens) override;

 private:
  HttpClientConfig config_;
  std::string host_base_;  // scheme://host:port
  std::string path_;
};

}  // namespace pdalign
