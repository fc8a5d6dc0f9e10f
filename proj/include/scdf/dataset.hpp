#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scdf/calendar.hpp"
#include "scdf/index_core.hpp"

namespace scdf {

struct NewsArticle {
  std::string id;
  Date published;
  std::string title;
  std::string text;
  std::vector<EntityId> entities;
  // Which form `text` holds: "text", "summary" or "headline".
  std::string representation = "text";
  // Set when an upstream retrieval step assigned this article to a specific
  // prediction month. Such articles are attached to that month's questions
  // as-is and are then subject to the look-ahead check rather than filtered.
  std::optional<MonthStamp> retrieved_for;

  bool tagged_with(const EntityId& entity) const;
};

enum class Split { kTrain, kTest, kUnresolved };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

struct ForecastingQuestion {
  std::string id;
  EntityId entity{EntityKind::kProduct, "unset"};
  MonthStamp month;
  double current_index = 0.0;
  double prior_change = 0.0;
  double sigma = 0.0;
  // Months since the last threshold-crossing increase at or before `month`,
  // capped at DatasetConfig::shock_lookback_cap.
  int months_since_shock = 0;
  std::optional<double> next_index;
  std::optional<int> label;
  Split split = Split::kUnresolved;
  std::vector<NewsArticle> news;
};

std::string make_question_id(const EntityId& entity, const MonthStamp& month);

struct DatasetConfig {
  MonthStamp start{2022, 1};
  int max_articles = 8;
  bool strict_threshold = false;
  std::optional<MonthStamp> sigma_window_start;
  int shock_lookback_cap = 12;
  // entity key -> keys of related entities whose articles are also relevant.
  std::map<std::string, std::vector<std::string>> related;
};

// Articles tagged with `entity` (or any entity in `related_keys`) and
// available at the end of `month`, most recent first, at most `max_articles`.
std::vector<NewsArticle> attach_news_context(const EntityId& entity, const MonthStamp& month,
                                             std::span<const NewsArticle> corpus,
                                             int max_articles,
                                             std::span<const std::string> related_keys = {});

// Throws EmptyDataset when no question can be formed.
std::vector<ForecastingQuestion> build_questions(std::span<const IndexSeries> indexes,
                                                 std::span<const NewsArticle> corpus,
                                                 const MonthStamp& boundary,
                                                 const DatasetConfig& config);

struct DatasetSummary {
  int n_questions = 0;
  int n_countries = 0;
  int n_products = 0;
  int n_events = 0;
  std::optional<MonthStamp> first;
  std::optional<MonthStamp> last;
  std::optional<double> event_rate;
};

DatasetSummary summarize(std::span<const ForecastingQuestion> questions);

struct SplitReport {
  DatasetSummary train;
  DatasetSummary test;
  DatasetSummary unresolved;
  std::vector<std::string> warnings;
};

// Throws LeakageDetected listing test questions not strictly after every
// training month.
SplitReport chronological_split_check(std::span<const ForecastingQuestion> questions);

// Throws LookAheadViolation naming the first article published after the end
// of the question's month, IntegrityError if the label disagrees with the
// stored next-month index.
void leakage_check(const ForecastingQuestion& question, bool strict_threshold = false);

nlohmann::json to_json(const NewsArticle& article);
NewsArticle article_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ForecastingQuestion& q);
ForecastingQuestion question_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetSummary& s);
nlohmann::json to_json(const SplitReport& r);

// JSONL corpus, one article per line. Rejects duplicate ids.
std::vector<NewsArticle> read_news_jsonl(const std::filesystem::path& path);
void write_news_jsonl(const std::filesystem::path& path, std::span<const NewsArticle> corpus);
std::vector<ForecastingQuestion> read_questions_jsonl(const std::filesystem::path& path);
void write_questions_jsonl(const std::filesystem::path& path,
                           std::span<const ForecastingQuestion> questions);

}  // namespace scdf
