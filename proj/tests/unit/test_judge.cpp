#include <doctest.h>

#include <fstream>

#include <fmt/format.h>

#include "mock_endpoint.hpp"
#include "scdf/errors.hpp"
#include "scdf/judge.hpp"
#include "scdf/rng.hpp"
#include "text_util.hpp"

using namespace scdf;

namespace {

std::vector<RubricAnnotation> load_fixture(const std::string& name) {
  std::vector<RubricAnnotation> out;
  for (const auto& line : detail::read_lines(std::string(SCDF_FIXTURES_DIR) + "/judge/" + name)) {
    out.push_back(parse_judge_json(nlohmann::json::parse(line).at("raw_output").get<std::string>()));
  }
  return out;
}

RubricAnnotation random_annotation(Rng& rng) {
  RubricAnnotation a;
  for (auto& f : a.flags) f = rng.bernoulli(0.5) ? 1 : 0;
  return a;
}

}  // namespace

TEST_CASE("judge prompt") {
  const auto p = render_judge_prompt("The base rate is {low}. } {");
  CHECK(p.find("Be strict and literal.") != std::string::npos);
  CHECK(p.find("The base rate is {low}. } {") != std::string::npos);
  const auto format_block = p.substr(p.rfind("Return JSON:"));
  for (auto key : kBehaviorKeys) CHECK(format_block.find(std::string(key)) != std::string::npos);
  CHECK_THROWS_AS(render_judge_prompt(""), EmptyTrace);
  CHECK_THROWS_AS(render_judge_prompt("  \n"), EmptyTrace);
}

TEST_CASE("judge output parsing") {
  const auto zeros = parse_judge_json(R"({
  "base_rate": 0,
  "statistical_model": 0,
  "explicit_forecasting_model": 0,
  "evidence_linkage": 0,
  "probabilistic_synthesis": 0,
  "uncertainty_refinement": 0
})");
  CHECK(zeros.total() == 0);

  CHECK_THROWS_AS(parse_judge_json(
                      R"(```json
{"base_rate": true, "statistical_model": false, "explicit_forecasting_model": true,
 "evidence_linkage": false, "probabilistic_synthesis": true, "uncertainty_refinement": "x}"}
```)"),
                  NonBinaryValue);
  CHECK_THROWS_AS(parse_judge_json(R"({"base_rate": 1, "statistical_model": 1,
    "explicit_forecasting_model": 1, "evidence_linkage": 1, "probabilistic_synthesis": 1})"),
                  MissingKeys);
  CHECK_THROWS_AS(parse_judge_json(R"({"base_rate": 2, "statistical_model": 1,
    "explicit_forecasting_model": 1, "evidence_linkage": 1, "probabilistic_synthesis": 1,
    "uncertainty_refinement": 0})"),
                  NonBinaryValue);
  CHECK_THROWS_AS(parse_judge_json("no json here"), MissingKeys);

  const auto mapped = parse_judge_json(
      R"(Prose {not json}. {"base_rate": true, "statistical_model": false, "explicit_forecasting_model": 1,
 "evidence_linkage": 0, "probabilistic_synthesis": true, "uncertainty_refinement": false})");
  CHECK(mapped.flags == std::array<int, 6>{1, 0, 1, 0, 1, 0});
  CHECK(mapped[Behavior::kExplicitForecastingModel] == 1);
  CHECK(mapped.total() == 3);
}

TEST_CASE("fixture transcripts reproduce the rubric table") {
  const auto pre = aggregate_rubric(load_fixture("pretrained_transcripts.jsonl"));
  CHECK(pre.n_traces == 100);
  const std::array<double, 6> pre_expected = {0.09, 0.48, 0.25, 0.67, 0.94, 0.33};
  for (size_t i = 0; i < 6; ++i) CHECK(fmt::format("{:.2f}", pre.frequency[i]) == fmt::format("{:.2f}", pre_expected[i]));
  CHECK(pre.mean_total_score == doctest::Approx(2.76));

  const auto post = aggregate_rubric(load_fixture("finetuned_transcripts.jsonl"));
  CHECK(post.n_traces == 250);
  const std::array<double, 6> post_expected = {0.50, 1.00, 0.96, 0.70, 1.00, 1.00};
  for (size_t i = 0; i < 6; ++i) CHECK(fmt::format("{:.2f}", post.frequency[i]) == fmt::format("{:.2f}", post_expected[i]));
  CHECK(std::fabs(post.mean_total_score - 5.17) <= 0.01);
}

TEST_CASE("aggregation invariants") {
  const std::vector<RubricAnnotation> zeros(5);
  const auto z = aggregate_rubric(zeros);
  CHECK(z.mean_total_score == 0.0);
  for (double f : z.frequency) CHECK(f == 0.0);
  CHECK_THROWS_AS(aggregate_rubric({}), InputError);

  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<RubricAnnotation> set(1 + rng.below(40));
    for (auto& a : set) a = random_annotation(rng);
    const auto s = aggregate_rubric(set);
    double sum = 0.0;
    for (double f : s.frequency) sum += f;
    CHECK(s.mean_total_score == doctest::Approx(sum));

    auto shuffled = set;
    for (size_t i = shuffled.size() - 1; i > 0; --i) std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    auto doubled = set;
    doubled.insert(doubled.end(), set.begin(), set.end());
    for (const auto& other : {aggregate_rubric(shuffled), aggregate_rubric(doubled)}) {
      CHECK(other.mean_total_score == doctest::Approx(s.mean_total_score));
      for (size_t i = 0; i < 6; ++i) CHECK(other.frequency[i] == doctest::Approx(s.frequency[i]));
    }
  }
}

TEST_CASE("judge endpoint must decode deterministically") {
  EndpointConfig c;
  c.base_url = "http://127.0.0.1:9/v1";
  c.model = "judge";
  CHECK_THROWS_AS(require_deterministic_judge(c), InputError);
  c.temperature = 0.7;
  CHECK_THROWS_AS(require_deterministic_judge(c), InputError);
  c.temperature = 0.0;
  CHECK_NOTHROW(require_deterministic_judge(c));
}

TEST_CASE("judge_trace sends one trace per request") {
  const std::string reply = R"({"base_rate": 1, "statistical_model": 0, "explicit_forecasting_model": 0,
    "evidence_linkage": 1, "probabilistic_synthesis": 1, "uncertainty_refinement": 0})";
  testing::MockEndpoint server({{200, testing::completion_body({reply})}});
  auto config = server.config();
  config.temperature = 0.0;
  ChatClient client(config);
  const auto a = judge_trace(client, "Historically shocks occur 15% of the time.");
  CHECK(a.total() == 3);
  const auto seen = server.requests_seen();
  REQUIRE(seen.size() == 1);
  CHECK(seen[0]["temperature"] == 0.0);
  CHECK(seen[0]["messages"][0]["content"].get<std::string>().find("Historically shocks occur 15%") !=
        std::string::npos);
}
