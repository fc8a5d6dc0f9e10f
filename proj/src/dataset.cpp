#include "scdf/dataset.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "scdf/errors.hpp"

namespace scdf {

bool NewsArticle::tagged_with(const EntityId& entity) const {
  return std::find(entities.begin(), entities.end(), entity) != entities.end();
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kTest:
      return "test";
    case Split::kUnresolved:
      return "unresolved";
  }
  return "unresolved";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "test") return Split::kTest;
  if (text == "unresolved") return Split::kUnresolved;
  throw InputError(fmt::format("unknown split '{}'", text));
}

std::string make_question_id(const EntityId& entity, const MonthStamp& month) {
  return fmt::format("{}:{}", entity.key(), month.iso());
}

std::vector<NewsArticle> attach_news_context(const EntityId& entity, const MonthStamp& month,
                                             std::span<const NewsArticle> corpus,
                                             int max_articles,
                                             std::span<const std::string> related_keys) {
  const Date horizon = Date::last_day_of(month);
  std::vector<const NewsArticle*> picked;
  for (const auto& article : corpus) {
    bool relevant = article.tagged_with(entity);
    for (size_t i = 0; !relevant && i < related_keys.size(); ++i) {
      for (const auto& tag : article.entities) {
        if (tag.key() == related_keys[i]) relevant = true;
      }
    }
    if (!relevant) continue;
    if (article.retrieved_for) {
      if (*article.retrieved_for == month) picked.push_back(&article);
    } else if (article.published <= horizon) {
      picked.push_back(&article);
    }
  }
  std::sort(picked.begin(), picked.end(), [](const NewsArticle* a, const NewsArticle* b) {
    if (a->published != b->published) return a->published > b->published;
    return a->id < b->id;
  });
  if (max_articles >= 0 && picked.size() > static_cast<size_t>(max_articles)) {
    picked.resize(static_cast<size_t>(max_articles));
  }
  std::vector<NewsArticle> out;
  out.reserve(picked.size());
  for (const auto* a : picked) out.push_back(*a);
  return out;
}

namespace {

int months_since_shock(const IndexSeries& series, const MonthStamp& month, double sigma,
                       bool strict, int cap) {
  MonthStamp m = month;
  for (int k = 0; k < cap; ++k, m = m.prev()) {
    auto cur = series.value_at(m);
    auto prev = series.value_at(m.prev());
    if (!cur || !prev) return cap;
    if (label_event(*prev, *cur, sigma, strict) == 1) return k;
  }
  return cap;
}

}  // namespace

std::vector<ForecastingQuestion> build_questions(std::span<const IndexSeries> indexes,
                                                 std::span<const NewsArticle> corpus,
                                                 const MonthStamp& boundary,
                                                 const DatasetConfig& config) {
  if (!indexes.empty()) {
    MonthStamp earliest = indexes.front().observations().empty()
                              ? boundary
                              : indexes.front().observations().front().month;
    for (const auto& s : indexes) {
      if (!s.observations().empty()) earliest = std::min(earliest, s.observations().front().month);
    }
    if (boundary < earliest) {
      throw InputError(fmt::format("boundary {} precedes the first observation {}",
                                   boundary.iso(), earliest.iso()));
    }
  }

  std::vector<ForecastingQuestion> questions;
  for (const auto& series : indexes) {
    const auto& entity = series.entity();
    double sigma = 0.0;
    try {
      sigma = estimate_sigma(series, boundary, config.sigma_window_start).sigma;
    } catch (const InsufficientHistory& e) {
      spdlog::warn("skipping {}: {}", entity.key(), e.what());
      continue;
    }
    if (!(sigma > 0.0)) {
      spdlog::warn("skipping {}: zero volatility up to {}", entity.key(), boundary.iso());
      continue;
    }

    std::span<const std::string> related;
    if (auto it = config.related.find(entity.key()); it != config.related.end()) {
      related = it->second;
    }

    const auto& obs = series.observations();
    for (size_t i = 1; i < obs.size(); ++i) {
      const MonthStamp t = obs[i].month;
      if (t < config.start) continue;
      if (obs[i - 1].month != t.prev()) continue;

      ForecastingQuestion q;
      q.entity = entity;
      q.month = t;
      q.id = make_question_id(entity, t);
      q.current_index = obs[i].value;
      q.prior_change = obs[i].value - obs[i - 1].value;
      q.sigma = sigma;
      q.months_since_shock = months_since_shock(series, t, sigma, config.strict_threshold,
                                                config.shock_lookback_cap);
      if (i + 1 < obs.size() && obs[i + 1].month == t.next()) {
        q.next_index = obs[i + 1].value;
        q.label = label_event(q.current_index, *q.next_index, sigma, config.strict_threshold);
        q.split = t <= boundary ? Split::kTrain : Split::kTest;
      } else if (i + 1 == obs.size()) {
        q.split = Split::kUnresolved;
      } else {
        continue;  // t+1 missing inside the series
      }
      q.news = attach_news_context(entity, t, corpus, config.max_articles, related);
      questions.push_back(std::move(q));
    }
  }

  if (questions.empty()) throw EmptyDataset("no forecasting questions could be formed");
  std::sort(questions.begin(), questions.end(),
            [](const ForecastingQuestion& a, const ForecastingQuestion& b) {
              if (a.entity != b.entity) return a.entity < b.entity;
              return a.month < b.month;
            });
  return questions;
}

DatasetSummary summarize(std::span<const ForecastingQuestion> questions) {
  DatasetSummary s;
  std::set<std::string> countries;
  std::set<std::string> products;
  int labelled = 0;
  for (const auto& q : questions) {
    ++s.n_questions;
    (q.entity.kind() == EntityKind::kCountry ? countries : products).insert(q.entity.name());
    if (!s.first || q.month < *s.first) s.first = q.month;
    if (!s.last || q.month > *s.last) s.last = q.month;
    if (q.label) {
      ++labelled;
      s.n_events += *q.label;
    }
  }
  s.n_countries = static_cast<int>(countries.size());
  s.n_products = static_cast<int>(products.size());
  if (labelled > 0) s.event_rate = static_cast<double>(s.n_events) / labelled;
  return s;
}

SplitReport chronological_split_check(std::span<const ForecastingQuestion> questions) {
  std::vector<ForecastingQuestion> train;
  std::vector<ForecastingQuestion> test;
  std::vector<ForecastingQuestion> unresolved;
  for (const auto& q : questions) {
    switch (q.split) {
      case Split::kTrain:
        train.push_back(q);
        break;
      case Split::kTest:
        test.push_back(q);
        break;
      case Split::kUnresolved:
        unresolved.push_back(q);
        break;
    }
  }

  SplitReport report{summarize(train), summarize(test), summarize(unresolved), {}};
  if (test.empty()) {
    report.warnings.push_back("test split is empty");
    return report;
  }
  if (train.empty()) return report;

  const MonthStamp max_train = *report.train.last;
  std::vector<std::string> offending;
  for (const auto& q : test) {
    if (q.month <= max_train) offending.push_back(q.id);
  }
  if (!offending.empty()) {
    throw LeakageDetected(
        fmt::format("{} test question(s) at or before the last training month {}: {}",
                    offending.size(), max_train.iso(), fmt::join(offending, ", ")),
        std::move(offending));
  }
  return report;
}

void leakage_check(const ForecastingQuestion& question, bool strict_threshold) {
  const Date horizon = Date::last_day_of(question.month);
  for (const auto& article : question.news) {
    if (article.published > horizon) {
      throw LookAheadViolation(
          fmt::format("question {}: article {} published {} after {}", question.id, article.id,
                      article.published.iso(), horizon.iso()),
          question.id, article.id);
    }
  }
  if (question.next_index && !question.label) {
    throw IntegrityError(
        fmt::format("question {}: next-month index present but label missing", question.id));
  }
  if (question.label && question.next_index &&
      *question.label != label_event(question.current_index, *question.next_index,
                                     question.sigma, strict_threshold)) {
    throw IntegrityError(fmt::format(
        "question {}: label does not follow from the next-month index", question.id));
  }
}

}  // namespace scdf
