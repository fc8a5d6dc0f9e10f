#pragma once

#include <compare>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scdf/calendar.hpp"

namespace scdf {

enum class EntityKind { kCountry, kProduct };

std::string_view to_string(EntityKind kind);
EntityKind parse_entity_kind(std::string_view text);

// Lowercases and folds runs of non-alphanumerics into single underscores,
// trimming leading/trailing separators: "Residues / Waste" -> "residues_waste".
std::string normalize_entity_name(std::string_view raw);

class EntityId {
 public:
  EntityId(EntityKind kind, std::string_view name);

  EntityKind kind() const { return kind_; }
  const std::string& name() const { return name_; }
  // "product:furniture"
  std::string key() const;

  // Sorted by name first, then kind.
  friend std::strong_ordering operator<=>(const EntityId& a, const EntityId& b);
  friend bool operator==(const EntityId& a, const EntityId& b) = default;

 private:
  EntityKind kind_;
  std::string name_;
};

struct Observation {
  MonthStamp month;
  double value = 0.0;
};

// Monthly index levels for one entity. Observations are kept sorted by month
// with no duplicates; missing months are allowed and reported by gaps().
class IndexSeries {
 public:
  IndexSeries(EntityId entity, std::vector<Observation> observations);

  const EntityId& entity() const { return entity_; }
  const std::vector<Observation>& observations() const { return observations_; }

  std::optional<double> value_at(const MonthStamp& month) const;
  bool has(const MonthStamp& month) const { return value_at(month).has_value(); }

  // Months m such that m is missing but m-1 and some later month are present.
  std::vector<MonthStamp> gaps() const;

 private:
  EntityId entity_;
  std::vector<Observation> observations_;
};

struct SigmaEstimate {
  EntityId entity;
  double sigma = 0.0;
  int n_changes = 0;
  MonthStamp estimation_end;
};

// I(t) - I(t-1). Throws MissingMonth if either observation is absent.
double monthly_change(const IndexSeries& series, const MonthStamp& month);

// Population standard deviation of all one-month changes whose later month is
// at or before `cutoff`. Changes that straddle a gap are skipped.
// Throws InsufficientHistory when fewer than two changes are available.
SigmaEstimate estimate_sigma(const IndexSeries& series, const MonthStamp& cutoff,
                             std::optional<MonthStamp> window_start = std::nullopt);

// 1 iff (next - current) >= sigma, or > sigma when `strict` is set.
// Throws DegenerateThreshold if sigma <= 0.
int label_event(double current, double next, double sigma, bool strict = false);

// CSV with header `entity_kind,entity_name,year,month,value`. Returns series
// sorted by entity. Duplicate (entity, month) rows are rejected.
std::vector<IndexSeries> read_index_csv(std::istream& in);
void write_index_csv(std::ostream& out, const std::vector<IndexSeries>& series);

}  // namespace scdf
