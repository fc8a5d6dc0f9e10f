#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scdf/dataset.hpp"
#include "scdf/forecasters.hpp"

namespace scdf {

inline constexpr double kDefaultClampEpsilon = 1e-4;
inline constexpr double kDefaultAdvantageEpsilon = 1e-8;

// Log score y*ln(p) + (1-y)*ln(1-p) with p clamped to [epsilon, 1-epsilon].
double log_score_reward(double p, int y, double epsilon = kDefaultClampEpsilon);

// Expected log score of reporting p when the event has probability q.
double expected_log_score(double p, double q, double epsilon = kDefaultClampEpsilon);

struct Reward {
  std::string question_id;
  int rollout_index = 0;
  double probability = 0.0;
  int outcome = 0;
  double value = 0.0;
};

// a_i = (r_i - mean(r)) / (std_pop(r) + epsilon_std). Throws GroupTooSmall
// for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double epsilon_std = kDefaultAdvantageEpsilon);

struct AdvantageRecord {
  std::string question_id;
  int rollout_index = 0;
  double probability = 0.0;
  double reward = 0.0;
  double advantage = 0.0;
  std::string reasoning;
  bool parsed = true;
};

nlohmann::json to_json(const AdvantageRecord& r);

// Groups rollouts by question, scores each against the question's label and
// normalizes within the group. Output is ordered by question id, then
// rollout index. Throws MissingRollouts if the batch is empty or any
// question has fewer than two rollouts; InputError if a label is missing.
std::vector<AdvantageRecord> export_advantage_batch(std::span<const Rollout> rollouts,
                                                    const std::map<std::string, int>& labels,
                                                    double clamp_epsilon = kDefaultClampEpsilon,
                                                    double epsilon_std = kDefaultAdvantageEpsilon);

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 2000;
  int batch_size = 0;  // 0 = full batch
  double clamp_epsilon = kDefaultClampEpsilon;
  double l2 = 0.0;
  uint64_t seed = 0;

  void validate() const;
  static TrainConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

// Row-major design matrix for the logistic policy.
struct Design {
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
};

// J(w) = mean_i reward(logistic(w.x_i), y_i) - (l2/2) |w|^2
double objective(std::span<const double> weights, const Design& data, double clamp_epsilon,
                 double l2);
// dJ/dw. Examples whose prediction is clamped contribute zero.
std::vector<double> objective_gradient(std::span<const double> weights, const Design& data,
                                       double clamp_epsilon, double l2);

struct CurvePoint {
  int epoch = 0;
  double mean_reward = 0.0;
  std::optional<double> validation_brier;
};

struct TrainResult {
  std::vector<double> weights;
  std::vector<CurvePoint> curve;
};

// Gradient ascent from zero weights. Throws Diverged on non-finite weights.
TrainResult train_logistic(const Design& train, const TrainConfig& config,
                           const Design* validation = nullptr);

struct ToyTrainResult {
  ToyPolicy policy;
  std::vector<CurvePoint> curve;
};

Design featurize_questions(std::span<const ForecastingQuestion> questions,
                           const FeatureConfig& features);

// Trains on labelled questions; `validation` (may be empty) only feeds the
// curve's Brier column.
ToyTrainResult train_toy(std::span<const ForecastingQuestion> train,
                         std::span<const ForecastingQuestion> validation,
                         const FeatureConfig& features, const TrainConfig& config);

// `epoch,mean_reward,brier_on_validation`
std::string curve_csv(std::span<const CurvePoint> curve);

}  // namespace scdf
