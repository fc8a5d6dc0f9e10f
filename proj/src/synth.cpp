#include "scdf/synth.hpp"

#include <cctype>

#include <fmt/format.h>

#include "scdf/errors.hpp"
#include "scdf/rng.hpp"

namespace scdf {

using nlohmann::json;

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string article_id(const EntityId& e, const MonthStamp& m, char suffix) {
  return fmt::format("syn-{}-{}-{}-{}", to_string(e.kind()), e.name(), m.iso(), suffix);
}

}  // namespace

void SynthConfig::validate() const {
  if (n_entities < 1) throw InfeasibleConfig("n_entities must be >= 1");
  if (n_months < 4) throw InfeasibleConfig("n_months must be >= 4");
  if (!is_probability(shock_probability_given_signal) ||
      !is_probability(shock_probability_no_signal) || !is_probability(signal_rate) ||
      !is_probability(noise_article_rate)) {
    throw InfeasibleConfig("probabilities must lie in [0, 1]");
  }
  if (shock_probability_given_signal < shock_probability_no_signal) {
    throw InfeasibleConfig("shock probability given a signal must be >= the no-signal one");
  }
  if (!(base_volatility > 0.0)) throw InfeasibleConfig("base_volatility must be positive");
  if (shock_magnitude_mean < 2.5 * base_volatility) {
    throw InfeasibleConfig(fmt::format(
        "shock_magnitude_mean {} < 2.5 * base_volatility {}: shocks could fall below the "
        "estimated threshold",
        shock_magnitude_mean, base_volatility));
  }
  if (keywords.empty()) throw InfeasibleConfig("at least one signal keyword is required");
}

SynthConfig SynthConfig::from_json(const json& j) {
  SynthConfig c;
  c.n_entities = j.value("n_entities", c.n_entities);
  c.n_months = j.value("n_months", c.n_months);
  if (j.contains("start")) c.start = MonthStamp::parse(j.at("start").get<std::string>());
  c.base_volatility = j.value("base_volatility", c.base_volatility);
  c.shock_probability_given_signal =
      j.value("shock_probability_given_signal", c.shock_probability_given_signal);
  c.shock_probability_no_signal =
      j.value("shock_probability_no_signal", c.shock_probability_no_signal);
  c.signal_rate = j.value("signal_rate", c.signal_rate);
  c.shock_magnitude_mean = j.value("shock_magnitude_mean", c.shock_magnitude_mean);
  c.noise_article_rate = j.value("noise_article_rate", c.noise_article_rate);
  c.initial_level = j.value("initial_level", c.initial_level);
  if (j.contains("keywords")) c.keywords = j.at("keywords").get<std::vector<std::string>>();
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

json SynthConfig::to_json() const {
  return {{"n_entities", n_entities},
          {"n_months", n_months},
          {"start", start.iso()},
          {"base_volatility", base_volatility},
          {"shock_probability_given_signal", shock_probability_given_signal},
          {"shock_probability_no_signal", shock_probability_no_signal},
          {"signal_rate", signal_rate},
          {"shock_magnitude_mean", shock_magnitude_mean},
          {"noise_article_rate", noise_article_rate},
          {"initial_level", initial_level},
          {"keywords", keywords},
          {"seed", seed}};
}

SynthOutput generate(const SynthConfig& config) {
  config.validate();
  const double calm_width = config.base_volatility;
  const double shock_lo = config.shock_magnitude_mean - 0.5 * config.base_volatility;
  const double shock_hi = config.shock_magnitude_mean + 0.5 * config.base_volatility;

  SynthOutput out;
  for (int k = 0; k < config.n_entities; ++k) {
    const bool is_country = k % 2 == 0;
    const EntityId entity(is_country ? EntityKind::kCountry : EntityKind::kProduct,
                          fmt::format("{}_{:03d}", is_country ? "country" : "product", k));
    Rng rng(derive_seed(config.seed, entity.key()));

    std::vector<Observation> obs;
    obs.reserve(static_cast<size_t>(config.n_months));
    double level = config.initial_level;
    MonthStamp month = config.start;
    for (int t = 0; t < config.n_months; ++t, month = month.next()) {
      obs.push_back({month, level});

      const bool signal = rng.bernoulli(config.signal_rate);
      const double p = signal ? config.shock_probability_given_signal
                              : config.shock_probability_no_signal;
      if (signal) {
        const auto& kw = config.keywords[rng.below(config.keywords.size())];
        const int day = 1 + static_cast<int>(rng.below(
                                static_cast<uint64_t>(days_in_month(month.year(), month.month()))));
        out.corpus.push_back(NewsArticle{
            article_id(entity, month, 's'),
            Date(month.year(), month.month(), day),
            fmt::format("{} risk flagged for {}", capitalized(kw), entity.name()),
            fmt::format("Analysts warn of a {} affecting {} supply lines.", kw, entity.name()),
            {entity},
            "text",
            std::nullopt});
      }
      if (rng.bernoulli(config.noise_article_rate)) {
        const int day = 1 + static_cast<int>(rng.below(
                                static_cast<uint64_t>(days_in_month(month.year(), month.month()))));
        out.corpus.push_back(NewsArticle{
            article_id(entity, month, 'n'),
            Date(month.year(), month.month(), day),
            fmt::format("Market update for {}", entity.name()),
            fmt::format("Trading conditions for {} were described as routine this month.",
                        entity.name()),
            {entity},
            "text",
            std::nullopt});
      }

      OracleRow row{entity, month, signal, p, std::nullopt};
      if (t + 1 < config.n_months) {
        const bool shock = rng.bernoulli(p);
        const double change = shock ? rng.uniform(shock_lo, shock_hi)
                                    : -calm_width * rng.uniform_open_low();
        level += change;
        row.event = shock ? 1 : 0;
      }
      out.oracle.push_back(std::move(row));
    }
    out.indexes.emplace_back(entity, std::move(obs));
  }
  return out;
}

std::string oracle_csv(const std::vector<OracleRow>& rows) {
  std::string out = "entity_kind,entity_name,year,month,signal,true_probability,event\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{}\n", to_string(r.entity.kind()), r.entity.name(),
                       r.month.year(), r.month.month(), r.signal ? 1 : 0, r.true_probability,
                       r.event ? fmt::format("{}", *r.event) : "");
  }
  return out;
}

}  // namespace scdf
