#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "scdf/chat_client.hpp"

namespace scdf {

enum class Behavior {
  kBaseRate,
  kStatisticalModel,
  kExplicitForecastingModel,
  kEvidenceLinkage,
  kProbabilisticSynthesis,
  kUncertaintyRefinement,
};

inline constexpr size_t kBehaviorCount = 6;

// JSON keys in judge output, in rubric order.
inline constexpr std::array<std::string_view, kBehaviorCount> kBehaviorKeys = {
    "base_rate",        "statistical_model",       "explicit_forecasting_model",
    "evidence_linkage", "probabilistic_synthesis", "uncertainty_refinement"};

struct RubricAnnotation {
  std::array<int, kBehaviorCount> flags{};

  int operator[](Behavior b) const { return flags[static_cast<size_t>(b)]; }
  int total() const;
};

struct RubricSummary {
  std::array<double, kBehaviorCount> frequency{};
  double mean_total_score = 0.0;
  int n_traces = 0;
};

// The rubric prompt with `reasoning_trace` inserted. Throws EmptyTrace.
std::string render_judge_prompt(std::string_view reasoning_trace);

// First JSON object in `text` carrying all six keys. Values may be 0/1 or
// true/false. Throws MissingKeys or NonBinaryValue.
RubricAnnotation parse_judge_json(std::string_view text);

// Throws InputError for an empty list.
RubricSummary aggregate_rubric(std::span<const RubricAnnotation> annotations);

nlohmann::json to_json(const RubricAnnotation& a);
RubricAnnotation annotation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RubricSummary& s);

// Judge requests must decode deterministically; throws InputError unless
// the endpoint pins temperature to 0.
void require_deterministic_judge(const EndpointConfig& config);

// Renders, dispatches and parses one trace.
RubricAnnotation judge_trace(ChatClient& client, std::string_view reasoning_trace,
                             std::string_view tag = {});

}  // namespace scdf
