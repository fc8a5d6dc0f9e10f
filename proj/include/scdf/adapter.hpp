#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scdf/dataset.hpp"
#include "scdf/forecasters.hpp"

namespace scdf {

// Column mapping for externally prepared question sets (e.g. a published
// evaluation dataset exported to JSONL). Each field names the source column:
//
//   {"id": "...", "entity_kind": "...", "default_entity_kind": "product",
//    "entity_name": "...", "month": "...", "current_index": "...",
//    "prior_change": "...", "sigma": "...", "label": "...",
//    "next_index": "...", "news": "...",
//    "forecasts": {"<backend>": "<probability column>"}}
//
// Only entity_name, month, current_index and sigma are required. Labels may
// be 0/1, booleans or "yes"/"no". A string news column becomes one
// summary-type article dated the last day of the question month.
struct ColumnMapping {
  nlohmann::json columns;

  static ColumnMapping from_json(const nlohmann::json& j);
};

struct AdaptedDataset {
  std::vector<ForecastingQuestion> questions;
  std::map<std::string, std::vector<Forecast>> forecasts;
};

AdaptedDataset adapt_rows(const std::vector<nlohmann::json>& rows, const ColumnMapping& mapping,
                          const MonthStamp& boundary);

AdaptedDataset adapt_jsonl(const std::filesystem::path& path, const ColumnMapping& mapping,
                           const MonthStamp& boundary);

}  // namespace scdf
