#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scdf/dataset.hpp"
#include "scdf/index_core.hpp"

namespace scdf {

// Synthetic data-generating process with known conditional shock
// probabilities. Each entity-month draws a news signal; the next month's
// change is a shock with probability `shock_probability_given_signal` or
// `shock_probability_no_signal`.
//
// Calm changes are uniform on [-base_volatility, 0) and shock changes uniform
// on [m - v/2, m + v/2] with m = shock_magnitude_mean, v = base_volatility.
// Whenever m >= 2.5 v every calm change is negative and every shock exceeds
// the population std. dev. of any subset of changes (range/2 bound), so the
// labels recomputed from the series match the drawn shocks exactly for any
// estimation cutoff.
struct SynthConfig {
  int n_entities = 20;
  int n_months = 60;
  MonthStamp start{2021, 1};
  double base_volatility = 0.1;
  double shock_probability_given_signal = 0.6;
  double shock_probability_no_signal = 0.05;
  double signal_rate = 0.2;
  double shock_magnitude_mean = 0.3;
  double noise_article_rate = 0.5;
  double initial_level = 0.5;
  std::vector<std::string> keywords = {"strike", "tariff",   "sanction", "shortage",
                                       "flood",  "port",     "shutdown"};
  uint64_t seed = 0;

  // Throws InfeasibleConfig.
  void validate() const;
  static SynthConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct OracleRow {
  EntityId entity;
  MonthStamp month;
  bool signal = false;
  double true_probability = 0.0;
  std::optional<int> event;  // realized y for month+1; absent at the final month
};

struct SynthOutput {
  std::vector<IndexSeries> indexes;
  std::vector<NewsArticle> corpus;
  std::vector<OracleRow> oracle;
};

SynthOutput generate(const SynthConfig& config);

// `entity_kind,entity_name,year,month,signal,true_probability,event`
std::string oracle_csv(const std::vector<OracleRow>& rows);

}  // namespace scdf
