#include "scdf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "scdf/errors.hpp"

namespace scdf {

using nlohmann::json;

namespace {

void check_inputs(std::span<const double> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    throw InputError(fmt::format("{} predictions but {} labels", preds.size(), labels.size()));
  }
  if (preds.empty()) throw EmptyEvaluation("no predictions to evaluate");
  for (double p : preds) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(fmt::format("probability {} outside [0, 1]", p));
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw InputError(fmt::format("label {} is not binary", y));
  }
}

}  // namespace

double brier(std::span<const double> preds, std::span<const int> labels) {
  check_inputs(preds, labels);
  double total = 0.0;
  for (size_t i = 0; i < preds.size(); ++i) {
    const double d = preds[i] - labels[i];
    total += d * d;
  }
  return total / static_cast<double>(preds.size());
}

double brier_skill(double model_brier, double baseline_brier) {
  if (!(baseline_brier > 0.0)) throw InputError("baseline Brier score must be positive");
  return 1.0 - model_brier / baseline_brier;
}

std::string format_skill_percent(double skill) {
  const std::string s = fmt::format("{:.1f}%", skill * 100.0);
  if (s == "-0.0%") return "0.0%";
  return skill > 0.0 && s != "0.0%" ? "+" + s : s;
}

int bin_index(double p, int n_bins) {
  for (int b = 0; b < n_bins - 1; ++b) {
    if (p <= static_cast<double>(b + 1) / n_bins) return b;
  }
  return n_bins - 1;
}

std::vector<ReliabilityBin> reliability_bins(std::span<const double> preds,
                                             std::span<const int> labels, int n_bins) {
  check_inputs(preds, labels);
  if (n_bins < 1) throw InputError("n_bins must be >= 1");
  std::vector<ReliabilityBin> bins(static_cast<size_t>(n_bins));
  std::vector<double> sum_pred(bins.size(), 0.0);
  std::vector<double> sum_label(bins.size(), 0.0);
  for (size_t i = 0; i < preds.size(); ++i) {
    const auto b = static_cast<size_t>(bin_index(preds[i], n_bins));
    ++bins[b].count;
    sum_pred[b] += preds[i];
    sum_label[b] += labels[i];
  }
  for (size_t b = 0; b < bins.size(); ++b) {
    bins[b].lo = static_cast<double>(b) / n_bins;
    bins[b].hi = static_cast<double>(b + 1) / n_bins;
    if (bins[b].count > 0) {
      bins[b].mean_predicted = sum_pred[b] / bins[b].count;
      bins[b].empirical_rate = sum_label[b] / bins[b].count;
    } else {
      bins[b].mean_predicted = std::numeric_limits<double>::quiet_NaN();
      bins[b].empirical_rate = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return bins;
}

double ece(std::span<const double> preds, std::span<const int> labels, int n_bins) {
  const auto bins = reliability_bins(preds, labels, n_bins);
  const double n = static_cast<double>(preds.size());
  double total = 0.0;
  for (const auto& bin : bins) {
    if (bin.count == 0) continue;
    total += (bin.count / n) * std::fabs(bin.mean_predicted - bin.empirical_rate);
  }
  return total;
}

PrecisionAtK precision_at(std::span<const double> preds, std::span<const int> labels,
                          double frac, std::span<const std::string> ids) {
  check_inputs(preds, labels);
  if (!(frac > 0.0 && frac <= 1.0)) throw InputError("fraction must lie in (0, 1]");
  if (!ids.empty() && ids.size() != preds.size()) {
    throw InputError("ids must be empty or match predictions in length");
  }
  const size_t n = preds.size();
  // ceil(frac * n), guarding against products like 0.1 * 460 = 46.000000000000007.
  const double scaled = frac * static_cast<double>(n);
  const double rounded = std::round(scaled);
  const auto k = static_cast<size_t>(std::fabs(scaled - rounded) < 1e-9 ? rounded
                                                                           : std::ceil(scaled));

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (preds[a] != preds[b]) return preds[a] > preds[b];
    if (!ids.empty() && ids[a] != ids[b]) return ids[a] < ids[b];
    return a < b;
  });
  int hits = 0;
  for (size_t i = 0; i < k; ++i) hits += labels[order[i]];
  return PrecisionAtK{static_cast<double>(hits) / static_cast<double>(k), static_cast<int>(k),
                      hits};
}

EvalReport eval_report(std::span<const double> preds, std::span<const int> labels,
                       std::span<const std::string> ids, double baseline_rate,
                       const EvalConfig& config, std::string backend) {
  check_inputs(preds, labels);
  if (!(baseline_rate >= 0.0 && baseline_rate <= 1.0)) {
    throw InputError("baseline rate must lie in [0, 1]");
  }
  EvalReport r;
  r.backend = std::move(backend);
  r.n = static_cast<int>(preds.size());
  r.event_rate =
      static_cast<double>(std::accumulate(labels.begin(), labels.end(), 0)) / r.n;
  r.brier = brier(preds, labels);
  r.baseline_rate = baseline_rate;
  const std::vector<double> baseline(preds.size(), baseline_rate);
  r.baseline_brier = brier(baseline, labels);
  r.bss_vs_baseline = brier_skill(r.brier, r.baseline_brier);
  r.n_bins = config.n_bins;
  r.reliability = reliability_bins(preds, labels, config.n_bins);
  r.ece = ece(preds, labels, config.n_bins);
  r.top_fraction = config.top_fraction;
  const auto top = precision_at(preds, labels, config.top_fraction, ids);
  r.precision_at_frac = top.precision;
  r.k_used = top.k;
  r.hits = top.hits;
  return r;
}

json to_json(const ReliabilityBin& bin) {
  const auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return {{"lo", bin.lo},
          {"hi", bin.hi},
          {"count", bin.count},
          {"mean_pred", num(bin.mean_predicted)},
          {"emp_rate", num(bin.empirical_rate)}};
}

json to_json(const EvalReport& r) {
  json bins = json::array();
  for (const auto& b : r.reliability) bins.push_back(to_json(b));
  return {{"backend", r.backend},
          {"n", r.n},
          {"event_rate", r.event_rate},
          {"brier", r.brier},
          {"baseline_rate", r.baseline_rate},
          {"baseline_brier", r.baseline_brier},
          {"bss_vs_baseline", r.bss_vs_baseline},
          {"bss_percent", format_skill_percent(r.bss_vs_baseline)},
          {"ece", r.ece},
          {"n_bins", r.n_bins},
          {"top_fraction", r.top_fraction},
          {"precision_at_frac", r.precision_at_frac},
          {"k_used", r.k_used},
          {"hits", r.hits},
          {"reliability", std::move(bins)}};
}

std::string reliability_csv(std::span<const ReliabilityBin> bins) {
  std::string out = "lo,hi,count,mean_pred,emp_rate\n";
  for (const auto& b : bins) {
    if (b.count == 0) {
      out += fmt::format("{},{},0,,\n", b.lo, b.hi);
    } else {
      out += fmt::format("{},{},{},{:.10f},{:.10f}\n", b.lo, b.hi, b.count, b.mean_predicted,
                         b.empirical_rate);
    }
  }
  return out;
}

}  // namespace scdf
