#include "scdf/forecasters.hpp"

#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "scdf/errors.hpp"
#include "text_util.hpp"

namespace scdf {

using nlohmann::json;

json to_json(const Forecast& f) {
  return {{"question_id", f.question_id},
          {"probability", f.probability},
          {"reasoning", f.reasoning},
          {"backend", f.backend},
          {"latency_ms", f.latency_ms ? json(*f.latency_ms) : json(nullptr)}};
}

Forecast forecast_from_json(const json& j) {
  Forecast f;
  f.question_id = j.at("question_id").get<std::string>();
  f.probability = j.at("probability").get<double>();
  if (!(f.probability >= 0.0 && f.probability <= 1.0)) {
    throw InputError(fmt::format("forecast {}: probability {} outside [0, 1]", f.question_id,
                                 f.probability));
  }
  f.reasoning = j.value("reasoning", "");
  f.backend = j.value("backend", "unknown");
  if (j.contains("latency_ms") && !j.at("latency_ms").is_null()) {
    f.latency_ms = j.at("latency_ms").get<long>();
  }
  return f;
}

std::vector<Forecast> read_forecasts_jsonl(const std::filesystem::path& path) {
  std::vector<Forecast> out;
  size_t line_no = 0;
  for (const auto& line : detail::read_lines(path)) {
    ++line_no;
    try {
      out.push_back(forecast_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

json to_json(const Rollout& r) {
  return {{"question_id", r.question_id},
          {"rollout_index", r.rollout_index},
          {"probability", r.probability},
          {"reasoning", r.reasoning},
          {"parsed", r.parsed}};
}

Rollout rollout_from_json(const json& j) {
  Rollout r;
  r.question_id = j.at("question_id").get<std::string>();
  r.rollout_index = j.at("rollout_index").get<int>();
  r.probability = j.at("probability").get<double>();
  r.reasoning = j.value("reasoning", "");
  r.parsed = j.value("parsed", true);
  return r;
}

FeatureConfig FeatureConfig::from_json(const json& j) {
  FeatureConfig c;
  if (j.contains("keywords")) c.keywords = j.at("keywords").get<std::vector<std::string>>();
  c.months_cap = j.value("months_cap", c.months_cap);
  c.news_window_months = j.value("news_window_months", c.news_window_months);
  for (auto& kw : c.keywords) kw = detail::to_lower(kw);
  if (c.months_cap < 1 || c.news_window_months < 1) {
    throw InputError("feature config: months_cap and news_window_months must be >= 1");
  }
  return c;
}

json FeatureConfig::to_json() const {
  return {{"keywords", keywords},
          {"months_cap", months_cap},
          {"news_window_months", news_window_months}};
}

std::vector<double> FeatureVector::values() const {
  std::vector<double> v = {current_level, last_change, change_over_sigma, months_since_event};
  v.insert(v.end(), news_signal_counts.begin(), news_signal_counts.end());
  v.push_back(bias);
  return v;
}

std::vector<std::string> feature_names(const FeatureConfig& config) {
  std::vector<std::string> names = {"current_level", "last_change", "change_over_sigma",
                                    "months_since_event"};
  for (const auto& kw : config.keywords) names.push_back("kw_" + kw);
  names.push_back("bias");
  return names;
}

namespace {

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

bool mentions(const std::vector<std::string>& words, const std::string& keyword) {
  for (const auto& w : words) {
    if (w == keyword || w == keyword + "s" || w == keyword + "es") return true;
  }
  return false;
}

}  // namespace

FeatureVector featurize(const ForecastingQuestion& q, const FeatureConfig& config) {
  FeatureVector x;
  x.current_level = q.current_index;
  x.last_change = q.prior_change;
  x.change_over_sigma = q.sigma > 0.0 ? q.prior_change / q.sigma : 0.0;
  x.months_since_event = std::min(q.months_since_shock, config.months_cap);
  x.news_signal_counts.assign(config.keywords.size(), 0.0);

  const Date horizon = Date::last_day_of(q.month);
  MonthStamp window_start = q.month;
  for (int i = 1; i < config.news_window_months; ++i) window_start = window_start.prev();

  for (const auto& article : q.news) {
    if (article.published > horizon || article.published.month_stamp() < window_start) continue;
    const auto words = words_of(article.title + " " + article.text);
    for (size_t k = 0; k < config.keywords.size(); ++k) {
      if (mentions(words, config.keywords[k])) x.news_signal_counts[k] += 1.0;
    }
  }
  return x;
}

json ToyPolicy::to_json() const {
  return {{"weights", weights}, {"feature_names", feature_names}, {"features", features.to_json()}};
}

ToyPolicy ToyPolicy::from_json(const json& j) {
  ToyPolicy p;
  p.weights = j.at("weights").get<std::vector<double>>();
  p.feature_names = j.value("feature_names", std::vector<std::string>{});
  p.features = j.contains("features") ? FeatureConfig::from_json(j.at("features")) : FeatureConfig{};
  const size_t expected = scdf::feature_names(p.features).size();
  if (p.weights.size() != expected) {
    throw InputError(fmt::format("policy has {} weights, feature config implies {}",
                                 p.weights.size(), expected));
  }
  for (double w : p.weights) {
    if (!std::isfinite(w)) throw InputError("policy weights must be finite");
  }
  return p;
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double toy_forecast(std::span<const double> weights, std::span<const double> x) {
  if (weights.size() != x.size()) {
    throw InputError(fmt::format("policy has {} weights but features have {} entries",
                                 weights.size(), x.size()));
  }
  double z = 0.0;
  for (size_t i = 0; i < x.size(); ++i) z += weights[i] * x[i];
  return logistic(z);
}

double toy_forecast(const ToyPolicy& policy, const FeatureVector& x) {
  const auto values = x.values();
  return toy_forecast(policy.weights, values);
}

Forecast constant_forecast(double rate, const ForecastingQuestion& q) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw InputError(fmt::format("constant rate {} outside [0, 1]", rate));
  }
  return Forecast{q.id, rate, "", "historical_baseline", std::nullopt};
}

ConstantForecaster::ConstantForecaster(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw InputError(fmt::format("constant rate {} outside [0, 1]", rate));
  }
}

Forecast ToyForecaster::forecast(const ForecastingQuestion& q) {
  return Forecast{q.id, toy_forecast(policy_, featurize(q, policy_.features)), "", backend(),
                  std::nullopt};
}

RemoteForecaster::RemoteForecaster(std::shared_ptr<ChatClient> client,
                                   PromptTemplate prompt_template)
    : client_(std::move(client)), template_(std::move(prompt_template)) {}

std::string RemoteForecaster::backend() const { return client_->config().model; }

Forecast RemoteForecaster::forecast(const ForecastingQuestion& q) {
  const int n = client_->config().n_samples;
  if (n <= 1) return remote_forecast(q, *client_, template_);

  const auto prompt = template_.render(q);
  const auto response = client_->complete(prompt.text, n, q.id);
  double sum = 0.0;
  int parsed = 0;
  std::string reasoning;
  for (const auto& content : response.contents) {
    try {
      const auto answer = parse_answer(content);
      if (parsed == 0) reasoning = answer.reasoning;
      sum += answer.probability;
      ++parsed;
    } catch (const AnswerParseError&) {
    }
  }
  if (parsed == 0) {
    throw AnswerUnparseable(fmt::format("{}: none of {} samples had a usable answer", q.id, n),
                            response.contents.empty() ? "" : response.contents.front());
  }
  return Forecast{q.id, sum / parsed, reasoning, backend(), response.latency_ms};
}

std::vector<Rollout> RemoteForecaster::rollouts(const ForecastingQuestion& q, int n,
                                                double fallback) {
  const auto prompt = template_.render(q);
  const auto response = client_->complete(prompt.text, n, q.id);
  std::vector<Rollout> out;
  for (size_t i = 0; i < response.contents.size(); ++i) {
    Rollout r{q.id, static_cast<int>(i), fallback, response.contents[i], false};
    try {
      const auto answer = parse_answer(response.contents[i]);
      r.probability = answer.probability;
      r.reasoning = answer.reasoning;
      r.parsed = true;
    } catch (const AnswerParseError&) {
    }
    out.push_back(std::move(r));
  }
  return out;
}

Forecast remote_forecast(const ForecastingQuestion& q, ChatClient& client,
                         const PromptTemplate& prompt_template) {
  const auto prompt = prompt_template.render(q);
  const auto response = client.complete(prompt.text, 1, q.id);
  const std::string& content = response.contents.front();
  try {
    const auto answer = parse_answer(content);
    return Forecast{q.id, answer.probability, answer.reasoning, client.config().model,
                    response.latency_ms};
  } catch (const AnswerParseError& e) {
    throw AnswerUnparseable(fmt::format("{}: {}", q.id, e.what()), content);
  }
}

}  // namespace scdf
