#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace scdf {

// Connection and sampling settings for a chat-completions style endpoint.
struct EndpointConfig {
  std::string base_url;  // e.g. "https://api.openai.com/v1"
  std::string model;
  std::string api_key_env;  // name of the env var holding the key; empty = no auth
  int max_parallelism = 4;
  int timeout_ms = 120000;
  int max_retries = 3;
  int initial_backoff_ms = 500;
  int max_backoff_ms = 16000;
  double requests_per_second = 0.0;  // 0 = unlimited
  std::optional<double> temperature;
  int n_samples = 1;

  static EndpointConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Append-only JSONL log of every request/response pair. Thread-safe.
class TranscriptLog {
 public:
  explicit TranscriptLog(const std::filesystem::path& path);
  void append(const nlohmann::json& entry);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

// Spaces request start times at least 1/rate apart across threads.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second);
  void acquire();

 private:
  std::mutex mu_;
  std::chrono::steady_clock::duration interval_{};
  std::chrono::steady_clock::time_point next_{};
};

struct ChatResponse {
  std::vector<std::string> contents;  // one per returned choice
  int attempts = 0;
  long latency_ms = 0;
};

// Issues chat-completions requests, retrying transient failures (transport
// errors, HTTP 429/5xx, unparseable bodies) with capped exponential backoff.
// Safe to call from multiple threads.
class ChatClient {
 public:
  explicit ChatClient(EndpointConfig config, std::shared_ptr<TranscriptLog> transcript = {});

  const EndpointConfig& config() const { return config_; }

  // Throws EndpointUnavailable once retries are exhausted or on a
  // non-retryable HTTP status.
  ChatResponse complete(std::string_view prompt, int n_choices = 1,
                        std::string_view tag = {});

 private:
  ChatResponse request_once(const std::string& body, std::string_view tag, int attempt,
                            bool& retryable, std::string& error);

  EndpointConfig config_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  std::shared_ptr<TranscriptLog> transcript_;
  std::shared_ptr<RateLimiter> limiter_;
};

}  // namespace scdf
