#include <doctest.h>

#include <algorithm>
#include <set>

#include "scdf/dataset.hpp"
#include "scdf/errors.hpp"
#include "scdf/rng.hpp"
#include "test_support.hpp"

using namespace scdf;
using scdf::testing::article;
using scdf::testing::series;
using nlohmann::json;

TEST_CASE("news context respects the end of the prediction month") {
  const EntityId e(EntityKind::kProduct, "furniture");
  const MonthStamp oct{2025, 10};
  const std::vector<NewsArticle> corpus = {
      article("late", Date{2025, 11, 2}, e, "after"),
      article("edge", Date{2025, 10, 31}, e, "boundary"),
      article("other", Date{2025, 10, 5}, EntityId(EntityKind::kCountry, "chile"), "x"),
  };
  const auto ctx = attach_news_context(e, oct, corpus, 8);
  REQUIRE(ctx.size() == 1);
  CHECK(ctx[0].id == "edge");
}

TEST_CASE("news context keeps the most recent max_articles") {
  const EntityId e(EntityKind::kCountry, "chile");
  std::vector<NewsArticle> corpus;
  Rng rng(3);
  for (int i = 0; i < 12; ++i) {
    corpus.push_back(article(fmt::format("a{:02d}", i),
                             Date{2025, static_cast<int>(1 + rng.below(10)), static_cast<int>(1 + rng.below(28))},
                             e, "t"));
  }
  const auto ctx = attach_news_context(e, MonthStamp{2025, 10}, corpus, 8);
  REQUIRE(ctx.size() == 8);

  auto sorted = corpus;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.published != b.published ? a.published > b.published : a.id < b.id;
  });
  for (size_t i = 0; i < 8; ++i) CHECK(ctx[i].id == sorted[i].id);
}

TEST_CASE("related entities contribute articles") {
  const EntityId e(EntityKind::kProduct, "furniture");
  const EntityId wood(EntityKind::kProduct, "wood");
  const std::vector<NewsArticle> corpus = {article("w", Date{2025, 10, 3}, wood, "timber")};
  CHECK(attach_news_context(e, MonthStamp{2025, 10}, corpus, 8).empty());
  const std::vector<std::string> related = {wood.key()};
  CHECK(attach_news_context(e, MonthStamp{2025, 10}, corpus, 8, related).size() == 1);
}

namespace {

struct Expected {
  std::string id;
  std::optional<int> label;
  Split split;
};

// Independent enumeration of eligible (entity, month) pairs.
std::vector<Expected> enumerate(const std::vector<IndexSeries>& all, MonthStamp boundary,
                                MonthStamp start) {
  std::vector<Expected> out;
  for (const auto& s : all) {
    std::vector<double> changes;
    const auto& obs = s.observations();
    for (size_t i = 1; i < obs.size(); ++i) {
      if (obs[i].month <= boundary && obs[i - 1].month.next() == obs[i].month) {
        changes.push_back(obs[i].value - obs[i - 1].value);
      }
    }
    if (changes.size() < 2) continue;
    double mean = 0.0;
    for (double c : changes) mean += c;
    mean /= changes.size();
    double var = 0.0;
    for (double c : changes) var += (c - mean) * (c - mean);
    const double sigma = std::sqrt(var / changes.size());
    if (sigma <= 0.0) continue;
    for (size_t i = 1; i < obs.size(); ++i) {
      const MonthStamp t = obs[i].month;
      if (t < start || obs[i - 1].month.next() != t) continue;
      const std::string id = s.entity().key() + ":" + t.iso();
      if (i + 1 < obs.size() && obs[i + 1].month == t.next()) {
        const int y = obs[i + 1].value - obs[i].value >= sigma ? 1 : 0;
        out.push_back({id, y, t <= boundary ? Split::kTrain : Split::kTest});
      } else if (i + 1 == obs.size()) {
        out.push_back({id, std::nullopt, Split::kUnresolved});
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("build_questions matches a brute-force enumeration") {
  Rng rng(42);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<IndexSeries> all;
    for (const char* name : {"alpha", "beta"}) {
      std::vector<Observation> obs;
      MonthStamp m{2022, 1};
      for (int i = 0; i < 6; ++i) {
        if (i == 0 || i == 5 || rng.bernoulli(0.85)) {
          obs.push_back({m, rng.uniform(0.0, 1.0)});
        }
        m = m.next();
      }
      all.emplace_back(EntityId(EntityKind::kCountry, name), obs);
    }
    const MonthStamp boundary{2022, 4};
    const MonthStamp start{2022, 2};
    const auto expected = enumerate(all, boundary, start);
    DatasetConfig config;
    config.start = start;
    if (expected.empty()) {
      CHECK_THROWS_AS(build_questions(all, {}, boundary, config), EmptyDataset);
      continue;
    }
    std::vector<ForecastingQuestion> got;
    try {
      got = build_questions(all, {}, boundary, config);
    } catch (const EmptyDataset&) {
    }
    REQUIRE(got.size() == expected.size());
    std::set<std::string> ids;
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == expected[i].id);
      CHECK(got[i].label == expected[i].label);
      CHECK(got[i].split == expected[i].split);
      ids.insert(got[i].id);
    }
    CHECK(ids.size() == got.size());
  }
}

TEST_CASE("final month without a next value is unresolved") {
  const auto s = series(EntityKind::kProduct, "furniture", MonthStamp{2025, 6},
                        {0.2, 0.5, 0.3, 0.33, 0.53});
  DatasetConfig config;
  config.start = MonthStamp{2025, 7};
  const std::vector<IndexSeries> all = {s};
  const auto qs = build_questions(all, {}, MonthStamp{2025, 8}, config);
  REQUIRE(!qs.empty());
  const auto& last = qs.back();
  CHECK(last.month == MonthStamp{2025, 10});
  CHECK(last.split == Split::kUnresolved);
  CHECK_FALSE(last.label.has_value());
  CHECK(last.prior_change == doctest::Approx(0.20));
  for (const auto& q : qs) CHECK_NOTHROW(leakage_check(q));
}

TEST_CASE("chronological split check") {
  const auto make = [](MonthStamp m, Split split) {
    ForecastingQuestion q;
    q.id = m.iso();
    q.month = m;
    q.split = split;
    q.label = 0;
    return q;
  };
  std::vector<ForecastingQuestion> qs;
  for (MonthStamp m{2022, 1}; m <= MonthStamp{2025, 9}; m = m.next()) qs.push_back(make(m, Split::kTrain));
  for (MonthStamp m{2025, 10}; m <= MonthStamp{2026, 1}; m = m.next()) qs.push_back(make(m, Split::kTest));
  const auto report = chronological_split_check(qs);
  CHECK(report.train.n_questions == 45);
  CHECK(report.test.n_questions == 4);
  CHECK(report.warnings.empty());

  qs.push_back(make(MonthStamp{2025, 9}, Split::kTest));
  CHECK_THROWS_AS(chronological_split_check(qs), LeakageDetected);

  std::vector<ForecastingQuestion> only_train = {make(MonthStamp{2022, 1}, Split::kTrain)};
  const auto vacuous = chronological_split_check(only_train);
  CHECK(vacuous.test.n_questions == 0);
  CHECK_FALSE(vacuous.warnings.empty());
}

TEST_CASE("leakage_check") {
  const EntityId e(EntityKind::kProduct, "furniture");
  ForecastingQuestion q;
  q.id = make_question_id(e, MonthStamp{2025, 10});
  q.entity = e;
  q.month = MonthStamp{2025, 10};
  q.current_index = 0.53;
  q.sigma = 0.35;
  CHECK_NOTHROW(leakage_check(q));

  q.news = {article("ok", Date{2025, 10, 31}, e, "fine")};
  CHECK_NOTHROW(leakage_check(q));

  q.news.push_back(article("leak-1", Date{2025, 11, 1}, e, "future"));
  try {
    leakage_check(q);
    FAIL("expected LookAheadViolation");
  } catch (const LookAheadViolation& v) {
    CHECK(v.article_id == "leak-1");
    CHECK(v.question_id == q.id);
  }

  q.news.pop_back();
  q.next_index = 0.90;
  q.label = 0;
  CHECK_THROWS_AS(leakage_check(q), IntegrityError);
  q.label = 1;
  CHECK_NOTHROW(leakage_check(q));
}

TEST_CASE("articles pinned to a month bypass date filtering and are caught") {
  const auto s = series(EntityKind::kProduct, "furniture", MonthStamp{2025, 6},
                        {0.2, 0.5, 0.3, 0.33, 0.53, 0.9});
  const EntityId e = s.entity();
  auto pinned = article("pinned-1", Date{2025, 11, 15}, e, "leaked outcome");
  pinned.retrieved_for = MonthStamp{2025, 10};
  const std::vector<NewsArticle> corpus = {pinned};
  const std::vector<IndexSeries> all = {s};
  DatasetConfig config;
  config.start = MonthStamp{2025, 7};
  const auto qs = build_questions(all, corpus, MonthStamp{2025, 8}, config);
  const auto it = std::find_if(qs.begin(), qs.end(),
                               [](const auto& q) { return q.month == MonthStamp{2025, 10}; });
  REQUIRE(it != qs.end());
  REQUIRE(it->news.size() == 1);
  CHECK_THROWS_AS(leakage_check(*it), LookAheadViolation);
}

TEST_CASE("question JSONL round-trip") {
  const auto dir = scdf::testing::temp_dir("dataset_io");
  const EntityId e(EntityKind::kProduct, "furniture");
  ForecastingQuestion q;
  q.id = make_question_id(e, MonthStamp{2025, 10});
  q.entity = e;
  q.month = MonthStamp{2025, 10};
  q.current_index = 0.53;
  q.prior_change = 0.2;
  q.sigma = 0.35;
  q.next_index = 0.9;
  q.label = 1;
  q.split = Split::kTest;
  q.news = {article("a", Date{2025, 10, 2}, e, "Port strike", "Workers walk out.")};
  const std::vector<ForecastingQuestion> qs = {q};
  write_questions_jsonl(dir / "q.jsonl", qs);
  const auto back = read_questions_jsonl(dir / "q.jsonl");
  REQUIRE(back.size() == 1);
  CHECK(back[0].id == "product:furniture:2025-10");
  CHECK(back[0].label == 1);
  CHECK(back[0].split == Split::kTest);
  CHECK(back[0].news.at(0).title == "Port strike");
  CHECK(to_json(back[0]) == to_json(q));

  const auto compact = article_from_json(
      json{{"id", "c"}, {"published", "2025-10-01"}, {"entities", {"product:Furniture"}}});
  CHECK(compact.tagged_with(e));
  CHECK_THROWS_AS(article_from_json(json{{"id", "c"}, {"published", "2025-10-01"}, {"entities", {"furniture"}}}),
                  InputError);

  const std::vector<NewsArticle> dup = {q.news[0], q.news[0]};
  write_news_jsonl(dir / "n.jsonl", dup);
  CHECK_THROWS_AS(read_news_jsonl(dir / "n.jsonl"), InputError);
}
