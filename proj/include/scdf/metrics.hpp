#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace scdf {

struct ReliabilityBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
  // NaN for empty bins.
  double mean_predicted = 0.0;
  double empirical_rate = 0.0;
};

struct PrecisionAtK {
  double precision = 0.0;
  int k = 0;
  int hits = 0;
};

struct EvalConfig {
  int n_bins = 10;
  double top_fraction = 0.1;
};

struct EvalReport {
  std::string backend;
  int n = 0;
  double event_rate = 0.0;
  double brier = 0.0;
  double baseline_rate = 0.0;
  double baseline_brier = 0.0;
  double bss_vs_baseline = 0.0;  // fraction; rendered as a signed percentage
  double ece = 0.0;
  int n_bins = 10;
  double top_fraction = 0.1;
  double precision_at_frac = 0.0;
  int k_used = 0;
  int hits = 0;
  std::vector<ReliabilityBin> reliability;
};

// Mean squared error between probabilities and 0/1 outcomes.
double brier(std::span<const double> preds, std::span<const int> labels);

// 1 - model/baseline. Requires baseline > 0.
double brier_skill(double model_brier, double baseline_brier);

// "+16.9%" / "-50.5%" / "0.0%"
std::string format_skill_percent(double skill);

// Index of the equal-width bin holding p; bins are right-closed except the
// first, which also holds p = 0.
int bin_index(double p, int n_bins);

std::vector<ReliabilityBin> reliability_bins(std::span<const double> preds,
                                             std::span<const int> labels, int n_bins);

// Sum over bins of (count/n) * |mean_pred - rate|.
double ece(std::span<const double> preds, std::span<const int> labels, int n_bins = 10);

// Precision among the ceil(frac*n) highest predictions. Ties go to the
// lexicographically smaller id (or lower position when ids are empty).
PrecisionAtK precision_at(std::span<const double> preds, std::span<const int> labels,
                          double frac, std::span<const std::string> ids = {});

// Throws EmptyEvaluation for empty input.
EvalReport eval_report(std::span<const double> preds, std::span<const int> labels,
                       std::span<const std::string> ids, double baseline_rate,
                       const EvalConfig& config, std::string backend);

nlohmann::json to_json(const ReliabilityBin& bin);
nlohmann::json to_json(const EvalReport& report);
// `lo,hi,count,mean_pred,emp_rate`; empty bins leave the last two fields blank.
std::string reliability_csv(std::span<const ReliabilityBin> bins);

}  // namespace scdf
