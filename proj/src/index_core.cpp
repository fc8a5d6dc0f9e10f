#include "scdf/index_core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "scdf/errors.hpp"
#include "text_util.hpp"

namespace scdf {

std::string_view to_string(EntityKind kind) {
  return kind == EntityKind::kCountry ? "country" : "product";
}

EntityKind parse_entity_kind(std::string_view text) {
  std::string lowered = detail::to_lower(detail::trim(text));
  if (lowered == "country") return EntityKind::kCountry;
  if (lowered == "product") return EntityKind::kProduct;
  throw InputError(fmt::format("unknown entity kind '{}'", text));
}

std::string normalize_entity_name(std::string_view raw) {
  std::string out;
  bool pending_sep = false;
  for (unsigned char c : raw) {
    if (std::isalnum(c)) {
      if (pending_sep && !out.empty()) out.push_back('_');
      pending_sep = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_sep = true;
    }
  }
  return out;
}

EntityId::EntityId(EntityKind kind, std::string_view name)
    : kind_(kind), name_(normalize_entity_name(name)) {
  if (name_.empty()) {
    throw InputError(fmt::format("entity name '{}' is empty after normalization", name));
  }
}

std::string EntityId::key() const {
  return fmt::format("{}:{}", to_string(kind_), name_);
}

std::strong_ordering operator<=>(const EntityId& a, const EntityId& b) {
  if (auto c = a.name_ <=> b.name_; c != 0) return c;
  return a.kind_ <=> b.kind_;
}

IndexSeries::IndexSeries(EntityId entity, std::vector<Observation> observations)
    : entity_(std::move(entity)), observations_(std::move(observations)) {
  std::sort(observations_.begin(), observations_.end(),
            [](const Observation& a, const Observation& b) { return a.month < b.month; });
  for (size_t i = 1; i < observations_.size(); ++i) {
    if (observations_[i].month == observations_[i - 1].month) {
      throw InputError(fmt::format("duplicate month {} for {}",
                                   observations_[i].month.iso(), entity_.key()));
    }
  }
  for (const auto& obs : observations_) {
    if (!std::isfinite(obs.value)) {
      throw InputError(fmt::format("non-finite index value for {} at {}",
                                   entity_.key(), obs.month.iso()));
    }
  }
}

std::optional<double> IndexSeries::value_at(const MonthStamp& month) const {
  auto it = std::lower_bound(
      observations_.begin(), observations_.end(), month,
      [](const Observation& o, const MonthStamp& m) { return o.month < m; });
  if (it == observations_.end() || it->month != month) return std::nullopt;
  return it->value;
}

std::vector<MonthStamp> IndexSeries::gaps() const {
  std::vector<MonthStamp> missing;
  for (size_t i = 1; i < observations_.size(); ++i) {
    for (MonthStamp m = observations_[i - 1].month.next(); m < observations_[i].month;
         m = m.next()) {
      missing.push_back(m);
    }
  }
  return missing;
}

double monthly_change(const IndexSeries& series, const MonthStamp& month) {
  auto current = series.value_at(month);
  auto previous = series.value_at(month.prev());
  if (!current || !previous) {
    throw MissingMonth(fmt::format("{}: no observation for {}", series.entity().key(),
                                   (current ? month.prev() : month).iso()));
  }
  return *current - *previous;
}

SigmaEstimate estimate_sigma(const IndexSeries& series, const MonthStamp& cutoff,
                             std::optional<MonthStamp> window_start) {
  std::vector<double> changes;
  const auto& obs = series.observations();
  for (size_t i = 1; i < obs.size(); ++i) {
    if (obs[i].month > cutoff) break;
    if (obs[i].month != obs[i - 1].month.next()) continue;
    if (window_start && obs[i - 1].month < *window_start) continue;
    changes.push_back(obs[i].value - obs[i - 1].value);
  }
  if (changes.size() < 2) {
    throw InsufficientHistory(fmt::format("{}: {} monthly change(s) up to {}, need 2",
                                          series.entity().key(), changes.size(),
                                          cutoff.iso()));
  }
  double mean = 0.0;
  for (double c : changes) mean += c;
  mean /= static_cast<double>(changes.size());
  double ss = 0.0;
  for (double c : changes) ss += (c - mean) * (c - mean);
  return SigmaEstimate{series.entity(),
                       std::sqrt(ss / static_cast<double>(changes.size())),
                       static_cast<int>(changes.size()), cutoff};
}

int label_event(double current, double next, double sigma, bool strict) {
  if (!(sigma > 0.0)) {
    throw DegenerateThreshold(fmt::format("threshold sigma must be positive, got {}", sigma));
  }
  const double delta = next - current;
  return (strict ? delta > sigma : delta >= sigma) ? 1 : 0;
}

std::vector<IndexSeries> read_index_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("index CSV is empty");
  const auto header = detail::split_csv_line(detail::strip_bom(line));
  const std::vector<std::string> expected = {"entity_kind", "entity_name", "year", "month",
                                             "value"};
  if (header != expected) {
    throw InputError(fmt::format("index CSV header must be '{}', got '{}'",
                                 fmt::join(expected, ","), line));
  }

  std::map<EntityId, std::vector<Observation>> grouped;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != 5) {
      throw InputError(fmt::format("index CSV line {}: expected 5 fields, got {}", line_no,
                                   fields.size()));
    }
    try {
      EntityId entity(parse_entity_kind(fields[0]), fields[1]);
      MonthStamp month(detail::parse_int(fields[2]), detail::parse_int(fields[3]));
      grouped[entity].push_back({month, detail::parse_decimal(fields[4])});
    } catch (const InputError& e) {
      throw InputError(fmt::format("index CSV line {}: {}", line_no, e.what()));
    }
  }

  std::vector<IndexSeries> out;
  out.reserve(grouped.size());
  for (auto& [entity, observations] : grouped) {
    out.emplace_back(entity, std::move(observations));
  }
  return out;
}

void write_index_csv(std::ostream& out, const std::vector<IndexSeries>& series) {
  out << "entity_kind,entity_name,year,month,value\n";
  for (const auto& s : series) {
    for (const auto& obs : s.observations()) {
      out << fmt::format("{},{},{},{},{}\n", to_string(s.entity().kind()), s.entity().name(),
                         obs.month.year(), obs.month.month(), obs.value);
    }
  }
}

}  // namespace scdf
