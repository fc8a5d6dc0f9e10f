#include <doctest.h>

#include <set>

#include "scdf/errors.hpp"
#include "scdf/promptkit.hpp"
#include "scdf/rng.hpp"
#include "test_support.hpp"

using namespace scdf;

namespace {

ForecastingQuestion question(std::string_view name, double index, double delta, double sigma) {
  ForecastingQuestion q;
  q.entity = EntityId(EntityKind::kProduct, name);
  q.month = MonthStamp{2025, 10};
  q.id = make_question_id(q.entity, q.month);
  q.current_index = index;
  q.prior_change = delta;
  q.sigma = sigma;
  return q;
}

}  // namespace

TEST_CASE("rendered prompt carries the question state") {
  const auto p = render_prompt(question("furniture", 0.53, 0.20, 0.35));
  CHECK(p.text.find("the supply chain disruption index for furniture is 0.53, having increased by 0.20") !=
        std::string::npos);
  CHECK(p.char_count == p.text.size());
  CHECK(p.question_id == "product:furniture:2025-10");
}

TEST_CASE("resolution line and empty context") {
  const auto p = render_prompt(question("residues_waste", 0.69, -0.26, 0.46));
  CHECK(p.text.find("having decreased by 0.26") != std::string::npos);
  CHECK(p.text.find("increases by more than 0.46 from October 2025 to November 2025") !=
        std::string::npos);
  CHECK(p.text.find("No recent articles available.") != std::string::npos);
  CHECK(p.text.find("<answer>") != std::string::npos);
  CHECK(p.text.find('{') == std::string::npos);
}

TEST_CASE("describe_change") {
  CHECK(describe_change(0.2) == "increased by 0.20");
  CHECK(describe_change(-0.26) == "decreased by 0.26");
  CHECK(describe_change(0.0) == "changed by 0.00");
}

TEST_CASE("context lists articles") {
  const EntityId e(EntityKind::kProduct, "furniture");
  const std::vector<NewsArticle> news = {
      scdf::testing::article("a", Date{2025, 10, 14}, e, "Port strike", "Dockworkers walk out.")};
  const auto ctx = render_context(news);
  CHECK(ctx.find("2025-10-14") != std::string::npos);
  CHECK(ctx.find("Port strike") != std::string::npos);
}

TEST_CASE("custom templates substitute once") {
  const PromptTemplate t("{entity}|{month}|{next_month}|{index}|{delta}|{sigma}|{context}");
  auto q = question("furniture", 0.53, 0.2, 0.35);
  q.news = {scdf::testing::article("a", Date{2025, 10, 1}, q.entity, "{entity}")};
  const auto r = t.render(q);
  CHECK(r.text.rfind("furniture|October 2025|November 2025|0.53|increased by 0.20|0.35|", 0) == 0);
  CHECK(r.text.find("{entity}") != std::string::npos);
  CHECK(PromptTemplate("{unknown} {sigma}").render(q).text == "{unknown} 0.35");
}

TEST_CASE("rendering is injective over question state") {
  std::set<std::string> seen;
  Rng rng(5);
  int n = 0;
  for (const char* name : {"furniture", "chile", "residues_waste"}) {
    for (int i = 0; i < 20; ++i) {
      auto q = question(name, 0.01 * i, 0.1 * (i % 5) - 0.2, 0.05 + 0.01 * i);
      seen.insert(render_prompt(q).text);
      ++n;
    }
  }
  CHECK(seen.size() == static_cast<size_t>(n));
}

TEST_CASE("parse_answer examples") {
  CHECK(parse_answer("...I'll assign 0.30. <answer>0.30</answer>").probability == doctest::Approx(0.30));
  CHECK(parse_answer("<answer>0.2</answer>").probability == doctest::Approx(0.2));
  CHECK(parse_answer("<answer> 1 </answer>").probability == 1.0);
  CHECK(parse_answer("<answer>0.1</answer> revised <answer>0.4</answer>").probability == doctest::Approx(0.4));
  const auto parsed = parse_answer("Reasoning here.\n<answer>.5</answer>");
  CHECK(parsed.probability == 0.5);
  CHECK(parsed.reasoning.find("Reasoning here.") != std::string::npos);
  CHECK_THROWS_AS(parse_answer("<answer>1.5</answer>"), OutOfRange);
  CHECK_THROWS_AS(parse_answer("<answer>-0.1</answer>"), OutOfRange);
  CHECK_THROWS_AS(parse_answer("probability 0.3"), NoAnswerTag);
  CHECK_THROWS_AS(parse_answer("<answer>0.3"), NoAnswerTag);
  CHECK_THROWS_AS(parse_answer("<answer>30%</answer>"), MalformedNumber);
  CHECK_THROWS_AS(parse_answer("<answer>3e-1</answer>"), MalformedNumber);
  CHECK_THROWS_AS(parse_answer("<answer></answer>"), MalformedNumber);
  CHECK_THROWS_AS(parse_answer("<answer>nan</answer>"), MalformedNumber);
}

TEST_CASE("parse_answer round-trips formatted probabilities") {
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const double p = rng.uniform();
    const auto text = fmt::format("thinking {} <answer>{:.6f}</answer>", i, p);
    CHECK(parse_answer(text).probability == doctest::Approx(p).epsilon(1e-6));
  }
}

TEST_CASE("parse_answer never crashes on arbitrary text") {
  Rng rng(13);
  const std::string alphabet = "<>/answer0123456789.- \n%e";
  for (int i = 0; i < 5000; ++i) {
    std::string s;
    const auto len = rng.below(40);
    for (uint64_t j = 0; j < len; ++j) s += alphabet[rng.below(alphabet.size())];
    try {
      const double p = parse_answer(s).probability;
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    } catch (const AnswerParseError&) {
    }
  }
}
