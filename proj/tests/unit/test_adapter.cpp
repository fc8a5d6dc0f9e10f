#include <doctest.h>

#include "scdf/adapter.hpp"
#include "scdf/cli.hpp"
#include "scdf/errors.hpp"
#include "test_support.hpp"
#include "text_util.hpp"

using namespace scdf;
using nlohmann::json;

namespace {

const json kMapping = {{"entity_kind", "type"},  {"entity_name", "entity"}, {"month", "date"},
                       {"current_index", "idx"}, {"sigma", "threshold"},   {"prior_change", "delta"},
                       {"label", "resolved"},    {"news", "context"},      {"forecasts", {{"model_a", "p_a"}}}};

}  // namespace

TEST_CASE("adapter maps released rows onto questions and forecasts") {
  const std::vector<json> rows = {
      {{"type", "product"}, {"entity", "Furniture"}, {"date", "2025-10"}, {"idx", 0.53}, {"threshold", 0.35},
       {"delta", 0.2}, {"resolved", "yes"}, {"context", "Port strike reported."}, {"p_a", 0.3}},
      {{"type", "country"}, {"entity", "Chile"}, {"date", "2025-08-01"}, {"idx", "1.10"}, {"threshold", 0.2},
       {"resolved", false}, {"context", json::array({"a", "b"})}, {"p_a", 0.1}},
      {{"type", "country"}, {"entity", "Chile"}, {"date", "2025-11"}, {"idx", 1.0}, {"threshold", 0.2}},
  };
  const auto out = adapt_rows(rows, ColumnMapping::from_json(kMapping), MonthStamp{2025, 9});
  REQUIRE(out.questions.size() == 3);
  CHECK(out.questions[0].id == "country:chile:2025-08");
  CHECK(out.questions[0].split == Split::kTrain);
  CHECK(out.questions[0].label == 0);
  CHECK(out.questions[0].news.size() == 2);
  CHECK(out.questions[1].split == Split::kUnresolved);
  CHECK(out.questions[2].split == Split::kTest);
  CHECK(out.questions[2].label == 1);
  CHECK(out.questions[2].news.at(0).published == Date{2025, 10, 31});
  for (const auto& q : out.questions) CHECK_NOTHROW(leakage_check(q));
  REQUIRE(out.forecasts.at("model_a").size() == 2);

  auto bad = rows;
  bad[0]["resolved"] = 3;
  CHECK_THROWS_AS(adapt_rows(bad, ColumnMapping::from_json(kMapping), MonthStamp{2025, 9}), InputError);
  CHECK_THROWS_AS(ColumnMapping::from_json(json{{"month", "m"}}), InputError);
}

TEST_CASE("released data flows through build-dataset and evaluate") {
  const auto dir = testing::temp_dir("cli_released");
  std::string lines;
  for (int i = 0; i < 20; ++i) {
    lines += json{{"type", "product"},
                  {"entity", fmt::format("p{:02d}", i)},
                  {"date", "2025-10"},
                  {"idx", 0.5},
                  {"threshold", 0.3},
                  {"resolved", i < 4 ? 1 : 0},
                  {"p_a", i < 4 ? 0.8 : 0.1}}
                 .dump() +
             "\n";
  }
  testing::write_text(dir / "released.jsonl", lines);
  testing::write_text(dir / "mapping.json", kMapping.dump());
  REQUIRE(run_cli({"build-dataset", "--released", (dir / "released.jsonl").string(), "--mapping",
                   (dir / "mapping.json").string(), "--boundary", "2025-09", "--out", (dir / "ds").string()}) == 0);
  REQUIRE(run_cli({"evaluate", "--questions", (dir / "ds/questions.jsonl").string(), "--forecasts",
                   (dir / "ds/forecasts_model_a.jsonl").string(), "--baseline-rate", "0.149", "--out",
                   (dir / "ev").string()}) == 0);
  const json report = json::parse(detail::read_file(dir / "ev/report.json"));
  const auto& model = report["models"][0];
  CHECK(model["backend"] == "model_a");
  CHECK(model["n"] == 20);
  CHECK(model["brier"].get<double>() == doctest::Approx((4 * 0.04 + 16 * 0.01) / 20.0));
  CHECK(model["precision_at_frac"] == 1.0);
}
