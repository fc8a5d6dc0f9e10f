#include "scdf/chat_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

#include "scdf/errors.hpp"

namespace scdf {

using nlohmann::json;

EndpointConfig EndpointConfig::from_json(const json& j) {
  EndpointConfig c;
  c.base_url = j.at("base_url").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  if (j.contains("api_key")) {
    // Only "${VAR}" references are accepted; keys never live in config files.
    const auto ref = j.at("api_key").get<std::string>();
    if (ref.size() < 4 || ref.rfind("${", 0) != 0 || ref.back() != '}') {
      throw InputError("endpoint config: api_key must be an environment reference like ${OPENAI_API_KEY}");
    }
    c.api_key_env = ref.substr(2, ref.size() - 3);
  }
  c.max_parallelism = j.value("max_parallelism", c.max_parallelism);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.initial_backoff_ms = j.value("initial_backoff_ms", c.initial_backoff_ms);
  c.max_backoff_ms = j.value("max_backoff_ms", c.max_backoff_ms);
  c.requests_per_second = j.value("requests_per_second", c.requests_per_second);
  if (j.contains("temperature") && !j.at("temperature").is_null()) {
    c.temperature = j.at("temperature").get<double>();
  }
  c.n_samples = j.value("n_samples", c.n_samples);
  if (c.max_parallelism < 1 || c.max_retries < 0 || c.n_samples < 1 || c.timeout_ms <= 0) {
    throw InputError("endpoint config: max_parallelism, n_samples and timeout_ms must be "
                     "positive and max_retries non-negative");
  }
  return c;
}

json EndpointConfig::to_json() const {
  return {{"base_url", base_url},
          {"model", model},
          {"api_key_env", api_key_env},
          {"max_parallelism", max_parallelism},
          {"timeout_ms", timeout_ms},
          {"max_retries", max_retries},
          {"initial_backoff_ms", initial_backoff_ms},
          {"max_backoff_ms", max_backoff_ms},
          {"requests_per_second", requests_per_second},
          {"temperature", temperature ? json(*temperature) : json(nullptr)},
          {"n_samples", n_samples}};
}

TranscriptLog::TranscriptLog(const std::filesystem::path& path)
    : out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw InputError(fmt::format("cannot open transcript '{}'", path.string()));
}

void TranscriptLog::append(const json& entry) {
  std::lock_guard lock(mu_);
  out_ << entry.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  out_.flush();
}

RateLimiter::RateLimiter(double requests_per_second) {
  if (requests_per_second > 0.0) {
    interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / requests_per_second));
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

ChatClient::ChatClient(EndpointConfig config, std::shared_ptr<TranscriptLog> transcript)
    : config_(std::move(config)),
      transcript_(std::move(transcript)),
      limiter_(std::make_shared<RateLimiter>(config_.requests_per_second)) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw InputError(fmt::format("base_url '{}' has no scheme", config_.base_url));
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.base_url.substr(0, path_start);
  std::string prefix =
      path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";

  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw InputError(
          fmt::format("environment variable {} is not set", config_.api_key_env));
    }
    api_key_ = key;
  }
}

ChatResponse ChatClient::request_once(const std::string& body, std::string_view tag,
                                      int attempt, bool& retryable, std::string& error) {
  limiter_->acquire();
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto started = std::chrono::steady_clock::now();
  auto result = client.Post(path_, headers, body, "application/json");
  const long latency = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                             std::chrono::steady_clock::now() - started)
                                             .count());

  json log_entry = {{"tag", std::string(tag)}, {"attempt", attempt}, {"latency_ms", latency}};
  ChatResponse response;
  response.latency_ms = latency;
  retryable = false;
  error.clear();

  if (!result) {
    retryable = true;
    error = fmt::format("transport error: {}", httplib::to_string(result.error()));
  } else {
    log_entry["status"] = result->status;
    log_entry["response"] = result->body;
    if (result->status == 429 || result->status >= 500) {
      retryable = true;
      error = fmt::format("HTTP {}", result->status);
    } else if (result->status != 200) {
      error = fmt::format("HTTP {}: {}", result->status, result->body.substr(0, 200));
    } else {
      try {
        const auto parsed = json::parse(result->body);
        for (const auto& choice : parsed.at("choices")) {
          response.contents.push_back(choice.at("message").at("content").get<std::string>());
        }
        if (response.contents.empty()) throw std::runtime_error("no choices");
      } catch (const std::exception& e) {
        retryable = true;
        error = fmt::format("malformed response body: {}", e.what());
        response.contents.clear();
      }
    }
  }
  if (!error.empty()) log_entry["error"] = error;
  if (transcript_) {
    log_entry["request"] = json::parse(body);
    transcript_->append(log_entry);
  }
  return response;
}

ChatResponse ChatClient::complete(std::string_view prompt, int n_choices, std::string_view tag) {
  ChatResponse total;
  const auto started = std::chrono::steady_clock::now();
  int backoff_ms = config_.initial_backoff_ms;
  int failures = 0;

  while (static_cast<int>(total.contents.size()) < n_choices) {
    const int wanted = n_choices - static_cast<int>(total.contents.size());
    json request = {{"model", config_.model},
                    {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})}};
    if (config_.temperature) request["temperature"] = *config_.temperature;
    if (wanted > 1) request["n"] = wanted;
    const std::string body = request.dump(-1, ' ', false, json::error_handler_t::replace);

    bool retryable = false;
    std::string error;
    ChatResponse r = request_once(body, tag, total.attempts, retryable, error);
    ++total.attempts;
    if (error.empty()) {
      for (auto& c : r.contents) {
        if (static_cast<int>(total.contents.size()) < n_choices) {
          total.contents.push_back(std::move(c));
        }
      }
      failures = 0;
      backoff_ms = config_.initial_backoff_ms;
      continue;
    }
    if (!retryable || ++failures > config_.max_retries) {
      throw EndpointUnavailable(fmt::format("{} after {} attempt(s): {}", config_.base_url,
                                            total.attempts, error));
    }
    spdlog::debug("retrying {} in {} ms: {}", tag, backoff_ms, error);
    std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
    backoff_ms = std::min(backoff_ms * 2, config_.max_backoff_ms);
  }

  total.latency_ms = static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                           std::chrono::steady_clock::now() - started)
                                           .count());
  return total;
}

}  // namespace scdf
