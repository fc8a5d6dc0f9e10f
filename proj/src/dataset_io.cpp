#include <fstream>
#include <set>

#include <fmt/format.h>

#include "scdf/dataset.hpp"
#include "scdf/errors.hpp"
#include "text_util.hpp"

namespace scdf {

using nlohmann::json;

namespace {

json entity_json(const EntityId& e) {
  return {{"kind", to_string(e.kind())}, {"name", e.name()}};
}

// Either {"kind": ..., "name": ...} or the compact "kind:name".
EntityId entity_from_json(const json& j) {
  if (j.is_string()) {
    const auto text = j.get<std::string>();
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
      throw InputError(fmt::format("entity '{}' is not of the form kind:name", text));
    }
    return EntityId(parse_entity_kind(text.substr(0, colon)), text.substr(colon + 1));
  }
  return EntityId(parse_entity_kind(j.at("kind").get<std::string>()),
                  j.at("name").get<std::string>());
}

json optional_month(const std::optional<MonthStamp>& m) {
  return m ? json(m->iso()) : json(nullptr);
}

}  // namespace

json to_json(const NewsArticle& a) {
  json entities = json::array();
  for (const auto& e : a.entities) entities.push_back(entity_json(e));
  json j = {{"id", a.id},
            {"published", a.published.iso()},
            {"title", a.title},
            {"text", a.text},
            {"entities", std::move(entities)}};
  if (a.representation != "text") j["representation"] = a.representation;
  if (a.retrieved_for) j["retrieved_for"] = a.retrieved_for->iso();
  return j;
}

NewsArticle article_from_json(const json& j) {
  NewsArticle a;
  a.id = j.at("id").get<std::string>();
  if (a.id.empty()) throw InputError("article id must not be empty");
  a.published = Date::parse(j.at("published").get<std::string>());
  a.title = j.value("title", "");
  a.text = j.value("text", "");
  if (j.contains("entities")) {
    for (const auto& e : j.at("entities")) a.entities.push_back(entity_from_json(e));
  }
  a.representation = j.value("representation", "text");
  if (j.contains("retrieved_for") && !j.at("retrieved_for").is_null()) {
    a.retrieved_for = MonthStamp::parse(j.at("retrieved_for").get<std::string>());
  }
  return a;
}

json to_json(const ForecastingQuestion& q) {
  json news = json::array();
  for (const auto& a : q.news) news.push_back(to_json(a));
  return {{"id", q.id},
          {"entity_kind", to_string(q.entity.kind())},
          {"entity_name", q.entity.name()},
          {"month", q.month.iso()},
          {"current_index", q.current_index},
          {"prior_change", q.prior_change},
          {"sigma", q.sigma},
          {"months_since_shock", q.months_since_shock},
          {"next_index", q.next_index ? json(*q.next_index) : json(nullptr)},
          {"label", q.label ? json(*q.label) : json(nullptr)},
          {"split", to_string(q.split)},
          {"news", std::move(news)}};
}

ForecastingQuestion question_from_json(const json& j) {
  ForecastingQuestion q;
  q.entity = EntityId(parse_entity_kind(j.at("entity_kind").get<std::string>()),
                      j.at("entity_name").get<std::string>());
  q.month = MonthStamp::parse(j.at("month").get<std::string>());
  q.id = j.value("id", make_question_id(q.entity, q.month));
  q.current_index = j.at("current_index").get<double>();
  q.prior_change = j.at("prior_change").get<double>();
  q.sigma = j.at("sigma").get<double>();
  q.months_since_shock = j.value("months_since_shock", 0);
  if (j.contains("next_index") && !j.at("next_index").is_null()) {
    q.next_index = j.at("next_index").get<double>();
  }
  if (j.contains("label") && !j.at("label").is_null()) {
    const int label = j.at("label").get<int>();
    if (label != 0 && label != 1) {
      throw InputError(fmt::format("question {}: label must be 0, 1 or null", q.id));
    }
    q.label = label;
  }
  q.split = parse_split(j.value("split", q.label ? "test" : "unresolved"));
  if (j.contains("news")) {
    for (const auto& a : j.at("news")) q.news.push_back(article_from_json(a));
  }
  return q;
}

json to_json(const DatasetSummary& s) {
  return {{"n_questions", s.n_questions},
          {"n_countries", s.n_countries},
          {"n_products", s.n_products},
          {"n_events", s.n_events},
          {"first_month", optional_month(s.first)},
          {"last_month", optional_month(s.last)},
          {"event_rate", s.event_rate ? json(*s.event_rate) : json(nullptr)}};
}

json to_json(const SplitReport& r) {
  return {{"train", to_json(r.train)},
          {"test", to_json(r.test)},
          {"unresolved", to_json(r.unresolved)},
          {"warnings", r.warnings}};
}

std::vector<NewsArticle> read_news_jsonl(const std::filesystem::path& path) {
  std::vector<NewsArticle> corpus;
  std::set<std::string> seen;
  size_t line_no = 0;
  for (const auto& line : detail::read_lines(path)) {
    ++line_no;
    try {
      auto article = article_from_json(json::parse(line));
      if (!seen.insert(article.id).second) {
        throw InputError(fmt::format("duplicate article id '{}'", article.id));
      }
      corpus.push_back(std::move(article));
    } catch (const json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return corpus;
}

void write_news_jsonl(const std::filesystem::path& path, std::span<const NewsArticle> corpus) {
  std::string out;
  for (const auto& a : corpus) out += to_json(a).dump() + "\n";
  detail::write_file(path, out);
}

std::vector<ForecastingQuestion> read_questions_jsonl(const std::filesystem::path& path) {
  std::vector<ForecastingQuestion> questions;
  size_t line_no = 0;
  for (const auto& line : detail::read_lines(path)) {
    ++line_no;
    try {
      questions.push_back(question_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return questions;
}

void write_questions_jsonl(const std::filesystem::path& path,
                           std::span<const ForecastingQuestion> questions) {
  std::string out;
  for (const auto& q : questions) out += to_json(q).dump() + "\n";
  detail::write_file(path, out);
}

}  // namespace scdf
