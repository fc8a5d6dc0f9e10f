#include <doctest.h>

#include <cmath>
#include <map>

#include "scdf/errors.hpp"
#include "scdf/forecasters.hpp"
#include "scdf/metrics.hpp"
#include "scdf/rng.hpp"
#include "scdf/training.hpp"

using namespace scdf;

TEST_CASE("log score reward examples") {
  CHECK(log_score_reward(0.5, 1) == doctest::Approx(-0.6931).epsilon(1e-4));
  CHECK(log_score_reward(0.2, 0) == doctest::Approx(-0.2231).epsilon(1e-4));
  const double r = log_score_reward(0.0, 0, 1e-6);
  CHECK(r != 0.0);
  CHECK(r == doctest::Approx(std::log1p(-1e-6)));
  CHECK(std::isfinite(log_score_reward(0.0, 1)));
  CHECK(log_score_reward(0.0, 1) == doctest::Approx(std::log(1e-4)));
  CHECK_THROWS_AS(log_score_reward(0.5, 2), InputError);
}

TEST_CASE("expected log score is maximized at the truth") {
  for (double q : {0.05, 0.3, 0.7}) {
    const double at_truth = expected_log_score(q, q);
    for (double p = 0.001; p < 1.0; p += 0.01) CHECK(expected_log_score(p, q) <= at_truth + 1e-12);
  }
}

TEST_CASE("group advantages") {
  const std::vector<double> r = {-0.1, -0.5, -0.9};
  const auto a = group_advantages(r);
  CHECK(a[0] == doctest::Approx(1.2247).epsilon(1e-4));
  CHECK(a[1] == doctest::Approx(0.0));
  CHECK(a[2] == doctest::Approx(-1.2247).epsilon(1e-4));

  const std::vector<double> flat = {-0.4, -0.4, -0.4, -0.4};
  for (double v : group_advantages(flat)) CHECK(v == 0.0);

  const std::vector<double> two = {-0.2, -0.7};
  const auto t = group_advantages(two);
  CHECK(t[0] > 0.0);
  CHECK(t[0] == doctest::Approx(-t[1]));

  const std::vector<double> one = {-0.2};
  CHECK_THROWS_AS(group_advantages(one), GroupTooSmall);

  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> g(2 + rng.below(8));
    for (auto& v : g) v = rng.uniform(-5.0, 0.0);
    const auto adv = group_advantages(g);
    double sum = 0.0;
    for (double v : adv) sum += v;
    CHECK(std::fabs(sum) < 1e-9);
    const double shift = rng.uniform(-3.0, 3.0);
    auto shifted = g;
    for (auto& v : shifted) v += shift;
    const auto adv2 = group_advantages(shifted);
    for (size_t i = 0; i < g.size(); ++i) CHECK(adv2[i] == doctest::Approx(adv[i]).epsilon(1e-6));
  }
}

TEST_CASE("advantage batch export") {
  std::vector<Rollout> rollouts;
  std::map<std::string, int> labels = {{"q1", 1}, {"q2", 0}};
  for (const char* id : {"q2", "q1"}) {
    for (int i = 0; i < 4; ++i) rollouts.push_back({id, i, 0.1 + 0.2 * i, "r", true});
  }
  rollouts.push_back({"q1", 4, 0.5, "no answer", false});
  const auto batch = export_advantage_batch(rollouts, labels);
  REQUIRE(batch.size() == 9);
  CHECK(batch.front().question_id == "q1");
  std::map<std::string, double> sums;
  std::map<std::string, int> counts;
  for (const auto& rec : batch) {
    sums[rec.question_id] += rec.advantage;
    counts[rec.question_id] += 1;
    CHECK(rec.reward == doctest::Approx(log_score_reward(rec.probability, labels.at(rec.question_id))));
  }
  CHECK(counts["q1"] == 5);
  CHECK(counts["q2"] == 4);
  for (const auto& [id, s] : sums) CHECK(std::fabs(s) < 1e-9);
  CHECK_FALSE(batch[4].parsed);
  CHECK(batch[4].probability == 0.5);

  CHECK_THROWS_AS(export_advantage_batch({}, labels), MissingRollouts);
  const std::vector<Rollout> lonely = {{"q1", 0, 0.3, "", true}};
  CHECK_THROWS_AS(export_advantage_batch(lonely, labels), MissingRollouts);
}

namespace {

Design random_design(Rng& rng, int n, int d) {
  Design data;
  for (int i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = rng.normal();
    row.back() = 1.0;
    data.rows.push_back(row);
    data.labels.push_back(rng.bernoulli(0.3) ? 1 : 0);
  }
  return data;
}

}  // namespace

TEST_CASE("objective gradient matches finite differences") {
  Rng rng(2);
  const Design data = random_design(rng, 64, 5);
  for (double l2 : {0.0, 0.1}) {
    std::vector<double> w = {0.3, -0.2, 0.5, 0.1, -0.4};
    const auto g = objective_gradient(w, data, kDefaultClampEpsilon, l2);
    for (size_t j = 0; j < w.size(); ++j) {
      const double h = 1e-5;
      auto up = w;
      auto down = w;
      up[j] += h;
      down[j] -= h;
      const double fd = (objective(up, data, kDefaultClampEpsilon, l2) -
                         objective(down, data, kDefaultClampEpsilon, l2)) /
                        (2 * h);
      CHECK(std::fabs(fd - g[j]) <= 1e-4 * std::max(1.0, std::fabs(fd)));
    }
  }
}

TEST_CASE("independent features learn the base rate") {
  Rng rng(3);
  Design data;
  int events = 0;
  for (int i = 0; i < 4000; ++i) {
    data.rows.push_back({rng.normal(), 1.0});
    const int y = rng.bernoulli(0.2) ? 1 : 0;
    events += y;
    data.labels.push_back(y);
  }
  const double rate = events / 4000.0;
  const auto result = train_logistic(data, TrainConfig{});
  for (double s : {-2.0, 0.0, 2.0}) {
    const std::vector<double> x = {s, 1.0};
    CHECK(toy_forecast(result.weights, x) == doctest::Approx(rate).epsilon(0.15));
  }
  const double entropy = rate * std::log(rate) + (1 - rate) * std::log(1 - rate);
  CHECK(result.curve.back().mean_reward == doctest::Approx(entropy).epsilon(0.01));
}

TEST_CASE("separable data drives Brier toward zero") {
  Design data;
  Rng rng(4);
  for (int i = 0; i < 400; ++i) {
    const double s = rng.uniform(-1.0, 1.0);
    data.rows.push_back({s < 0 ? s - 0.5 : s + 0.5, 1.0});
    data.labels.push_back(s > 0 ? 1 : 0);
  }
  TrainConfig config;
  config.learning_rate = 1.0;
  config.epochs = 3000;
  const auto result = train_logistic(data, config);
  std::vector<double> preds;
  for (const auto& row : data.rows) preds.push_back(toy_forecast(result.weights, row));
  CHECK(brier(preds, data.labels) < 0.01);
}

TEST_CASE("training is deterministic and validates configs") {
  Rng rng(5);
  const Design data = random_design(rng, 200, 3);
  TrainConfig config;
  config.batch_size = 32;
  config.epochs = 50;
  config.seed = 99;
  CHECK(train_logistic(data, config).weights == train_logistic(data, config).weights);
  config.learning_rate = -1.0;
  CHECK_THROWS_AS(config.validate(), InputError);
  TrainConfig huge;
  huge.learning_rate = 1e308;
  huge.epochs = 5;
  huge.l2 = 1.0;
  CHECK_THROWS_AS(train_logistic(data, huge), Diverged);
}

TEST_CASE("curve CSV layout") {
  const std::vector<CurvePoint> curve = {{1, -0.5, 0.2}, {2, -0.4, std::nullopt}};
  const auto csv = curve_csv(curve);
  CHECK(csv.rfind("epoch,mean_reward,brier_on_validation\n", 0) == 0);
  CHECK(csv.find("\n2,-0.4000000000,\n") != std::string::npos);
}
