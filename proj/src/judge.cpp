#include "scdf/judge.hpp"

#include <numeric>
#include <vector>

#include <fmt/format.h>

#include "scdf/errors.hpp"
#include "text_util.hpp"

namespace scdf {

using nlohmann::json;

namespace {

constexpr std::string_view kPromptHead =
    R"(You are evaluating reasoning traces from a forecasting model.
Your task is to detect whether specific probabilistic reasoning
behaviors are present.
Be strict and literal. Only mark a behavior as present if it is
clearly demonstrated.

Analyze the following reasoning trace:

)";

constexpr std::string_view kPromptTail = R"(

Return JSON:
{
  "base_rate": 0 or 1,
  "statistical_model": 0 or 1,
  "explicit_forecasting_model": 0 or 1,
  "evidence_linkage": 0 or 1,
  "probabilistic_synthesis": 0 or 1,
  "uncertainty_refinement": 0 or 1
}
)";

// End of the balanced {...} starting at `open`, honoring JSON strings.
size_t matching_brace(std::string_view text, size_t open) {
  int depth = 0;
  bool in_string = false;
  for (size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::string_view::npos;
}

int binary_value(const json& v, std::string_view key) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer() || v.is_number_unsigned()) {
    const auto n = v.get<long long>();
    if (n == 0 || n == 1) return static_cast<int>(n);
  }
  throw NonBinaryValue(fmt::format("key '{}' has non-binary value {}", key, v.dump()));
}

}  // namespace

int RubricAnnotation::total() const { return std::accumulate(flags.begin(), flags.end(), 0); }

std::string render_judge_prompt(std::string_view reasoning_trace) {
  if (detail::trim(reasoning_trace).empty()) throw EmptyTrace("reasoning trace is empty");
  std::string out;
  out.reserve(kPromptHead.size() + reasoning_trace.size() + kPromptTail.size());
  out += kPromptHead;
  out += reasoning_trace;
  out += kPromptTail;
  return out;
}

RubricAnnotation parse_judge_json(std::string_view text) {
  std::vector<std::string> partial_missing;
  for (size_t open = text.find('{'); open != std::string_view::npos;
       open = text.find('{', open + 1)) {
    const size_t close = matching_brace(text, open);
    if (close == std::string_view::npos) continue;
    const json obj = json::parse(text.substr(open, close - open + 1), nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) continue;

    std::vector<std::string> missing;
    for (auto key : kBehaviorKeys) {
      if (!obj.contains(std::string(key))) missing.emplace_back(key);
    }
    if (!missing.empty()) {
      if (missing.size() < kBehaviorCount && partial_missing.empty()) partial_missing = missing;
      continue;
    }
    RubricAnnotation a;
    for (size_t i = 0; i < kBehaviorCount; ++i) {
      a.flags[i] = binary_value(obj.at(std::string(kBehaviorKeys[i])), kBehaviorKeys[i]);
    }
    return a;
  }
  if (!partial_missing.empty()) {
    throw MissingKeys(fmt::format("judge output lacks key(s): {}", fmt::join(partial_missing, ", ")));
  }
  throw MissingKeys("judge output contains no JSON object with the rubric keys");
}

RubricSummary aggregate_rubric(std::span<const RubricAnnotation> annotations) {
  if (annotations.empty()) throw InputError("no annotations to aggregate");
  RubricSummary s;
  s.n_traces = static_cast<int>(annotations.size());
  std::array<long, kBehaviorCount> counts{};
  long total = 0;
  for (const auto& a : annotations) {
    for (size_t i = 0; i < kBehaviorCount; ++i) counts[i] += a.flags[i];
    total += a.total();
  }
  for (size_t i = 0; i < kBehaviorCount; ++i) {
    s.frequency[i] = static_cast<double>(counts[i]) / s.n_traces;
  }
  s.mean_total_score = static_cast<double>(total) / s.n_traces;
  return s;
}

json to_json(const RubricAnnotation& a) {
  json j = json::object();
  for (size_t i = 0; i < kBehaviorCount; ++i) j[std::string(kBehaviorKeys[i])] = a.flags[i];
  return j;
}

RubricAnnotation annotation_from_json(const json& j) {
  RubricAnnotation a;
  for (size_t i = 0; i < kBehaviorCount; ++i) {
    const std::string key(kBehaviorKeys[i]);
    if (!j.contains(key)) throw MissingKeys(fmt::format("annotation lacks key '{}'", key));
    a.flags[i] = binary_value(j.at(key), key);
  }
  return a;
}

json to_json(const RubricSummary& s) {
  json freq = json::object();
  for (size_t i = 0; i < kBehaviorCount; ++i) freq[std::string(kBehaviorKeys[i])] = s.frequency[i];
  return {{"frequency", std::move(freq)},
          {"mean_total_score", s.mean_total_score},
          {"n_traces", s.n_traces}};
}

void require_deterministic_judge(const EndpointConfig& config) {
  if (!config.temperature || *config.temperature != 0.0) {
    throw InputError("judge endpoint must set temperature to 0");
  }
}

RubricAnnotation judge_trace(ChatClient& client, std::string_view reasoning_trace,
                             std::string_view tag) {
  require_deterministic_judge(client.config());
  const auto prompt = render_judge_prompt(reasoning_trace);
  const auto response = client.complete(prompt, 1, tag);
  return parse_judge_json(response.contents.front());
}

}  // namespace scdf
