#include "scdf/adapter.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "scdf/errors.hpp"
#include "text_util.hpp"

namespace scdf {

using nlohmann::json;

namespace {

const json* column(const json& row, const ColumnMapping& m, const char* field) {
  if (!m.columns.contains(field)) return nullptr;
  const auto name = m.columns.at(field).get<std::string>();
  if (!row.contains(name) || row.at(name).is_null()) return nullptr;
  return &row.at(name);
}

const json& required(const json& row, const ColumnMapping& m, const char* field) {
  const json* v = column(row, m, field);
  if (v == nullptr) throw InputError(fmt::format("row lacks the column mapped to '{}'", field));
  return *v;
}

double as_number(const json& v, const char* field) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return detail::parse_decimal(v.get<std::string>());
  throw InputError(fmt::format("'{}' is not numeric", field));
}

int as_label(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number()) {
    const double d = v.get<double>();
    if (d == 0.0 || d == 1.0) return static_cast<int>(d);
  }
  if (v.is_string()) {
    const auto s = detail::to_lower(detail::trim(v.get<std::string>()));
    if (s == "1" || s == "yes" || s == "true") return 1;
    if (s == "0" || s == "no" || s == "false") return 0;
  }
  throw InputError(fmt::format("label value {} is not binary", v.dump()));
}

std::vector<NewsArticle> as_news(const json& v, const ForecastingQuestion& q) {
  const Date end = Date::last_day_of(q.month);
  std::vector<NewsArticle> out;
  const auto pseudo = [&](std::string text, size_t i) {
    return NewsArticle{fmt::format("{}#ctx{}", q.id, i), end, "", std::move(text), {q.entity},
                       "summary", std::nullopt};
  };
  if (v.is_string()) {
    out.push_back(pseudo(v.get<std::string>(), 0));
  } else if (v.is_array()) {
    for (size_t i = 0; i < v.size(); ++i) {
      const auto& item = v[i];
      if (item.is_string()) {
        out.push_back(pseudo(item.get<std::string>(), i));
        continue;
      }
      NewsArticle a = pseudo(item.value("text", ""), i);
      a.id = item.value("id", a.id);
      a.title = item.value("title", "");
      a.representation = item.value("representation", "text");
      if (item.contains("published") && item.at("published").is_string()) {
        a.published = Date::parse(item.at("published").get<std::string>());
      }
      out.push_back(std::move(a));
    }
  } else {
    throw InputError("news column must be a string or an array");
  }
  return out;
}

}  // namespace

ColumnMapping ColumnMapping::from_json(const json& j) {
  for (const char* field : {"entity_name", "month", "current_index", "sigma"}) {
    if (!j.contains(field)) throw InputError(fmt::format("column mapping lacks '{}'", field));
  }
  return ColumnMapping{j};
}

AdaptedDataset adapt_rows(const std::vector<json>& rows, const ColumnMapping& mapping,
                          const MonthStamp& boundary) {
  AdaptedDataset out;
  const std::string default_kind = mapping.columns.value("default_entity_kind", "product");
  for (size_t r = 0; r < rows.size(); ++r) {
    const json& row = rows[r];
    try {
      ForecastingQuestion q;
      const json* kind = column(row, mapping, "entity_kind");
      q.entity = EntityId(parse_entity_kind(kind ? kind->get<std::string>() : default_kind),
                          required(row, mapping, "entity_name").get<std::string>());
      q.month = MonthStamp::parse(required(row, mapping, "month").get<std::string>());
      const json* id = column(row, mapping, "id");
      q.id = id ? (id->is_string() ? id->get<std::string>() : id->dump())
                : make_question_id(q.entity, q.month);
      q.current_index = as_number(required(row, mapping, "current_index"), "current_index");
      q.sigma = as_number(required(row, mapping, "sigma"), "sigma");
      if (const json* d = column(row, mapping, "prior_change")) q.prior_change = as_number(*d, "prior_change");
      if (const json* n = column(row, mapping, "next_index")) q.next_index = as_number(*n, "next_index");
      if (const json* l = column(row, mapping, "label")) q.label = as_label(*l);
      q.split = !q.label ? Split::kUnresolved
                         : (q.month <= boundary ? Split::kTrain : Split::kTest);
      if (const json* news = column(row, mapping, "news")) q.news = as_news(*news, q);

      if (mapping.columns.contains("forecasts")) {
        for (const auto& [backend, col] : mapping.columns.at("forecasts").items()) {
          const auto name = col.get<std::string>();
          if (!row.contains(name) || row.at(name).is_null()) continue;
          const double p = as_number(row.at(name), "forecast");
          if (!(p >= 0.0 && p <= 1.0)) {
            throw InputError(fmt::format("forecast {} for {} outside [0, 1]", p, backend));
          }
          out.forecasts[backend].push_back(Forecast{q.id, p, "", backend, std::nullopt});
        }
      }
      out.questions.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw InputError(fmt::format("row {}: {}", r + 1, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("row {}: {}", r + 1, e.what()));
    }
  }
  if (out.questions.empty()) throw EmptyDataset("adapted dataset has no rows");
  std::stable_sort(out.questions.begin(), out.questions.end(),
                   [](const ForecastingQuestion& a, const ForecastingQuestion& b) {
                     if (a.entity != b.entity) return a.entity < b.entity;
                     return a.month < b.month;
                   });
  return out;
}

AdaptedDataset adapt_jsonl(const std::filesystem::path& path, const ColumnMapping& mapping,
                           const MonthStamp& boundary) {
  std::vector<json> rows;
  for (const auto& line : detail::read_lines(path)) {
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw InputError(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return adapt_rows(rows, mapping, boundary);
}

}  // namespace scdf
