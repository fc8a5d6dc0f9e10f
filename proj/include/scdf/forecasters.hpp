#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scdf/chat_client.hpp"
#include "scdf/dataset.hpp"
#include "scdf/promptkit.hpp"

namespace scdf {

struct Forecast {
  std::string question_id;
  double probability = 0.0;
  std::string reasoning;
  std::string backend;
  std::optional<long> latency_ms;
};

nlohmann::json to_json(const Forecast& f);
Forecast forecast_from_json(const nlohmann::json& j);
std::vector<Forecast> read_forecasts_jsonl(const std::filesystem::path& path);

// One sampled completion for a question, kept for group-relative scoring.
struct Rollout {
  std::string question_id;
  int rollout_index = 0;
  double probability = 0.5;
  std::string reasoning;
  // False when the completion had no usable answer and `probability` holds
  // the fallback value.
  bool parsed = true;
};

nlohmann::json to_json(const Rollout& r);
Rollout rollout_from_json(const nlohmann::json& j);

// --- Toy policy -------------------------------------------------------------

struct FeatureConfig {
  std::vector<std::string> keywords = {"strike", "tariff",   "sanction", "shortage",
                                       "flood",  "port",     "shutdown"};
  int months_cap = 12;
  // Keyword counts look at articles published in the last `news_window_months`
  // months up to and including the prediction month.
  int news_window_months = 1;

  static FeatureConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct FeatureVector {
  double current_level = 0.0;
  double last_change = 0.0;
  double change_over_sigma = 0.0;
  double months_since_event = 0.0;
  // Number of in-window articles mentioning each keyword bucket.
  std::vector<double> news_signal_counts;
  double bias = 1.0;

  std::vector<double> values() const;
};

std::vector<std::string> feature_names(const FeatureConfig& config);

// Keyword matching is on whole lowercase words; plural forms "<kw>s" and
// "<kw>es" also count, so "ports" matches "port" but "report" does not.
FeatureVector featurize(const ForecastingQuestion& q, const FeatureConfig& config);

struct ToyPolicy {
  std::vector<double> weights;
  std::vector<std::string> feature_names;
  FeatureConfig features;

  nlohmann::json to_json() const;
  static ToyPolicy from_json(const nlohmann::json& j);
};

double logistic(double z);

// p = logistic(w . x). Throws InputError on dimension mismatch.
double toy_forecast(std::span<const double> weights, std::span<const double> x);
double toy_forecast(const ToyPolicy& policy, const FeatureVector& x);

// --- Backends ---------------------------------------------------------------

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string backend() const = 0;
  virtual Forecast forecast(const ForecastingQuestion& q) = 0;
};

Forecast constant_forecast(double rate, const ForecastingQuestion& q);

class ConstantForecaster : public Forecaster {
 public:
  explicit ConstantForecaster(double rate);
  std::string backend() const override { return "historical_baseline"; }
  Forecast forecast(const ForecastingQuestion& q) override { return constant_forecast(rate_, q); }

 private:
  double rate_;
};

class ToyForecaster : public Forecaster {
 public:
  explicit ToyForecaster(ToyPolicy policy) : policy_(std::move(policy)) {}
  std::string backend() const override { return "toy_policy"; }
  Forecast forecast(const ForecastingQuestion& q) override;

 private:
  ToyPolicy policy_;
};

// Prompts a chat endpoint with the rendered question and parses the answer.
// With n_samples > 1 the forecast probability is the mean over parseable
// samples and rollouts() exposes every sample.
class RemoteForecaster : public Forecaster {
 public:
  RemoteForecaster(std::shared_ptr<ChatClient> client, PromptTemplate prompt_template = {});

  std::string backend() const override;
  // Throws EndpointUnavailable or AnswerUnparseable.
  Forecast forecast(const ForecastingQuestion& q) override;

  // Unparseable samples are kept with probability `fallback` and parsed=false.
  std::vector<Rollout> rollouts(const ForecastingQuestion& q, int n, double fallback = 0.5);

 private:
  std::shared_ptr<ChatClient> client_;
  PromptTemplate template_;
};

Forecast remote_forecast(const ForecastingQuestion& q, ChatClient& client,
                         const PromptTemplate& prompt_template = {});

}  // namespace scdf
