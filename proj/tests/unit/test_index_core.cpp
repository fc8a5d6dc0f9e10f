#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scdf/calendar.hpp"
#include "scdf/errors.hpp"
#include "scdf/index_core.hpp"
#include "scdf/rng.hpp"
#include "test_support.hpp"

using namespace scdf;
using scdf::testing::series;

namespace {

double brute_population_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace

TEST_CASE("month stamps order, step and format") {
  const MonthStamp oct{2025, 10};
  CHECK(oct.next() == MonthStamp{2025, 11});
  CHECK(MonthStamp{2025, 12}.next() == MonthStamp{2026, 1});
  CHECK(MonthStamp{2026, 1}.prev() == MonthStamp{2025, 12});
  CHECK(oct.display() == "October 2025");
  CHECK(oct.iso() == "2025-10");
  CHECK(MonthStamp::parse("2025-10-17") == oct);
  CHECK(MonthStamp{2026, 1}.months_since(MonthStamp{2022, 1}) == 48);
  CHECK(MonthStamp{2022, 1} < MonthStamp{2022, 2});
  CHECK_THROWS_AS(MonthStamp(2025, 13), InputError);
  CHECK_THROWS_AS(MonthStamp::parse("2025/10"), InputError);
  CHECK(Date::last_day_of(MonthStamp{2024, 2}) == Date{2024, 2, 29});
  CHECK(Date::last_day_of(MonthStamp{2025, 2}) == Date{2025, 2, 28});
  CHECK_THROWS_AS(Date::parse("2025-02-30"), InputError);
}

TEST_CASE("entity names normalize idempotently") {
  CHECK(normalize_entity_name("Residues / Waste") == "residues_waste");
  CHECK(normalize_entity_name("  Furniture ") == "furniture");
  for (const char* raw : {"A--B", "__x__", "Côte d'Ivoire", "Iron & Steel (HS 72)"}) {
    const auto once = normalize_entity_name(raw);
    CHECK(normalize_entity_name(once) == once);
  }
  CHECK_THROWS_AS(EntityId(EntityKind::kCountry, "///"), InputError);
  CHECK(EntityId(EntityKind::kProduct, "Furniture").key() == "product:furniture");
}

TEST_CASE("monthly_change examples") {
  const MonthStamp sep{2025, 9};
  const auto furniture = series(EntityKind::kProduct, "furniture", sep, {0.33, 0.53});
  CHECK(monthly_change(furniture, sep.next()) == doctest::Approx(0.20));
  const auto flat = series(EntityKind::kProduct, "flat", sep, {0.5, 0.5});
  CHECK(monthly_change(flat, sep.next()) == 0.0);
  const auto residues = series(EntityKind::kProduct, "residues_waste", sep, {0.95, 0.69});
  CHECK(monthly_change(residues, sep.next()) == doctest::Approx(-0.26));
  CHECK_THROWS_AS(monthly_change(furniture, sep), MissingMonth);
  CHECK_THROWS_AS(monthly_change(furniture, MonthStamp{2025, 12}), MissingMonth);
}

TEST_CASE("estimate_sigma examples") {
  const MonthStamp start{2022, 1};
  const auto constant_steps = series(EntityKind::kCountry, "c", start, {0.0, 0.1, 0.2, 0.3, 0.4});
  CHECK(estimate_sigma(constant_steps, MonthStamp{2022, 5}).sigma == doctest::Approx(0.0).epsilon(1e-12));

  const auto s = series(EntityKind::kCountry, "c", start, {1.0, 1.4, 1.4, 1.0});
  const auto est = estimate_sigma(s, MonthStamp{2022, 4});
  CHECK(est.sigma == doctest::Approx(0.3266).epsilon(1e-4));
  CHECK(est.sigma == doctest::Approx(brute_population_std({0.4, 0.0, -0.4})));
  CHECK(est.n_changes == 3);

  const auto short_series = series(EntityKind::kCountry, "c", start, {1.0, 1.1});
  CHECK_THROWS_AS(estimate_sigma(short_series, MonthStamp{2022, 2}), InsufficientHistory);
}

TEST_CASE("estimate_sigma skips changes across gaps") {
  IndexSeries s(EntityId(EntityKind::kCountry, "g"),
                {{{2022, 1}, 1.0}, {{2022, 2}, 1.2}, {{2022, 4}, 5.0}, {{2022, 5}, 5.0},
                 {{2022, 6}, 4.8}});
  CHECK(s.gaps() == std::vector<MonthStamp>{MonthStamp{2022, 3}});
  const auto est = estimate_sigma(s, MonthStamp{2022, 6});
  CHECK(est.n_changes == 3);
  CHECK(est.sigma == doctest::Approx(brute_population_std({0.2, 0.0, -0.2})));
}

TEST_CASE("sigma properties: translation invariance and blindness past the cutoff") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Observation> obs;
    MonthStamp m{2020, 1};
    double level = rng.uniform(0.0, 2.0);
    for (int i = 0; i < 30; ++i) {
      obs.push_back({m, level});
      level += rng.normal(0.0, 0.3);
      m = m.next();
    }
    const MonthStamp cutoff{2021, 6};
    const IndexSeries base(EntityId(EntityKind::kCountry, "x"), obs);
    const double sigma = estimate_sigma(base, cutoff).sigma;
    CHECK(sigma >= 0.0);

    auto shifted = obs;
    const double c = rng.uniform(-5.0, 5.0);
    for (auto& o : shifted) o.value += c;
    CHECK(estimate_sigma(IndexSeries(base.entity(), shifted), cutoff).sigma ==
          doctest::Approx(sigma).epsilon(1e-9));

    auto mutated = obs;
    for (auto& o : mutated) {
      if (o.month > cutoff) o.value = rng.uniform(-100.0, 100.0);
    }
    CHECK(estimate_sigma(IndexSeries(base.entity(), mutated), cutoff).sigma == sigma);
  }
}

TEST_CASE("label_event examples and monotonicity") {
  CHECK(label_event(0.53, 0.90, 0.35) == 1);
  CHECK(label_event(0.53, 0.40, 0.35) == 0);
  CHECK(label_event(0.0, 0.25, 0.25) == 1);
  CHECK(label_event(0.0, 0.25, 0.25, true) == 0);
  CHECK_THROWS_AS(label_event(0.5, 0.9, 0.0), DegenerateThreshold);
  CHECK_THROWS_AS(label_event(0.5, 0.9, -1.0), DegenerateThreshold);

  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    const double cur = rng.uniform(-1.0, 1.0);
    const double next = rng.uniform(-1.0, 1.0);
    const double sigma = rng.uniform(0.01, 1.0);
    const int y = label_event(cur, next, sigma);
    CHECK(label_event(cur, next + rng.uniform(0.0, 1.0), sigma) >= y);
    CHECK(label_event(cur, next, sigma + rng.uniform(0.0, 1.0)) <= y);
    if (next < cur) CHECK(y == 0);
  }
}

TEST_CASE("index CSV round-trip and validation") {
  std::istringstream in(
      "entity_kind,entity_name,year,month,value\n"
      "product,Furniture,2025,10,0.53\n"
      "product,Furniture,2025,9,0.33\n"
      "country,Chile,2025,9,1.25\n");
  const auto s = read_index_csv(in);
  REQUIRE(s.size() == 2);
  CHECK(s[0].entity().name() == "chile");
  CHECK(s[1].entity().name() == "furniture");
  CHECK(s[1].observations().front().month == MonthStamp{2025, 9});

  std::ostringstream out;
  write_index_csv(out, s);
  std::istringstream back(out.str());
  const auto again = read_index_csv(back);
  REQUIRE(again.size() == 2);
  CHECK(again[1].value_at(MonthStamp{2025, 10}) == 0.53);

  std::istringstream dup(
      "entity_kind,entity_name,year,month,value\n"
      "product,a,2025,9,0.1\nproduct,a,2025,9,0.2\n");
  CHECK_THROWS_AS(read_index_csv(dup), InputError);
  std::istringstream bad_kind("entity_kind,entity_name,year,month,value\nregion,a,2025,9,0.1\n");
  CHECK_THROWS_AS(read_index_csv(bad_kind), InputError);
  std::istringstream nan_value("entity_kind,entity_name,year,month,value\nproduct,a,2025,9,nan\n");
  CHECK_THROWS_AS(read_index_csv(nan_value), InputError);
}
