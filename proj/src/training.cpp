#include "scdf/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "scdf/errors.hpp"
#include "scdf/metrics.hpp"
#include "scdf/rng.hpp"

namespace scdf {

using nlohmann::json;

double log_score_reward(double p, int y, double epsilon) {
  if (y != 0 && y != 1) throw InputError(fmt::format("outcome must be 0 or 1, got {}", y));
  if (!(p >= 0.0 && p <= 1.0)) throw InputError(fmt::format("probability {} outside [0, 1]", p));
  const double clamped = std::clamp(p, epsilon, 1.0 - epsilon);
  return y == 1 ? std::log(clamped) : std::log1p(-clamped);
}

double expected_log_score(double p, double q, double epsilon) {
  return q * log_score_reward(p, 1, epsilon) + (1.0 - q) * log_score_reward(p, 0, epsilon);
}

std::vector<double> group_advantages(std::span<const double> rewards, double epsilon_std) {
  if (rewards.size() < 2) {
    throw GroupTooSmall(fmt::format("advantage group needs >= 2 rewards, got {}", rewards.size()));
  }
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom = std::sqrt(ss / n) + epsilon_std;
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / denom);
  return out;
}

json to_json(const AdvantageRecord& r) {
  return {{"question_id", r.question_id}, {"rollout_index", r.rollout_index},
          {"probability", r.probability}, {"reward", r.reward},
          {"advantage", r.advantage},     {"reasoning", r.reasoning},
          {"parsed", r.parsed}};
}

std::vector<AdvantageRecord> export_advantage_batch(std::span<const Rollout> rollouts,
                                                    const std::map<std::string, int>& labels,
                                                    double clamp_epsilon, double epsilon_std) {
  if (rollouts.empty()) throw MissingRollouts("no rollouts to score");
  std::map<std::string, std::vector<const Rollout*>> groups;
  for (const auto& r : rollouts) groups[r.question_id].push_back(&r);

  std::vector<AdvantageRecord> out;
  for (auto& [qid, group] : groups) {
    if (group.size() < 2) {
      throw MissingRollouts(fmt::format("question {} has {} rollout(s), need >= 2", qid,
                                        group.size()));
    }
    const auto label = labels.find(qid);
    if (label == labels.end()) {
      throw InputError(fmt::format("question {} has no resolved label", qid));
    }
    std::sort(group.begin(), group.end(), [](const Rollout* a, const Rollout* b) {
      return a->rollout_index < b->rollout_index;
    });
    std::vector<double> rewards;
    for (const auto* r : group) {
      rewards.push_back(log_score_reward(r->probability, label->second, clamp_epsilon));
    }
    const auto advantages = group_advantages(rewards, epsilon_std);
    for (size_t i = 0; i < group.size(); ++i) {
      out.push_back({qid, group[i]->rollout_index, group[i]->probability, rewards[i],
                     advantages[i], group[i]->reasoning, group[i]->parsed});
    }
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
  if (!(clamp_epsilon > 0.0 && clamp_epsilon < 0.5)) {
    throw InputError("clamp_epsilon must lie in (0, 0.5)");
  }
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (batch_size < 0) throw InputError("batch_size must be >= 0");
  if (l2 < 0.0) throw InputError("l2 must be >= 0");
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.clamp_epsilon = j.value("clamp_epsilon", c.clamp_epsilon);
  c.l2 = j.value("l2", c.l2);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"epochs", epochs}, {"batch_size", batch_size},
          {"clamp_epsilon", clamp_epsilon}, {"l2", l2},         {"seed", seed}};
}

namespace {

double dot(std::span<const double> w, const std::vector<double>& x) {
  double z = 0.0;
  for (size_t i = 0; i < x.size(); ++i) z += w[i] * x[i];
  return z;
}

void check_dims(std::span<const double> weights, const Design& data) {
  if (data.rows.size() != data.labels.size()) {
    throw InputError("design matrix and label vector differ in length");
  }
  for (const auto& row : data.rows) {
    if (row.size() != weights.size()) {
      throw InputError(fmt::format("feature row has {} entries, policy has {} weights",
                                   row.size(), weights.size()));
    }
  }
}

// Accumulates the gradient of the summed reward over `indices`.
void accumulate_gradient(std::span<const double> w, const Design& data,
                         std::span<const size_t> indices, double eps, std::vector<double>& grad) {
  for (size_t idx : indices) {
    const auto& x = data.rows[idx];
    const double p = logistic(dot(w, x));
    if (p <= eps || p >= 1.0 - eps) continue;
    const double g = static_cast<double>(data.labels[idx]) - p;
    for (size_t k = 0; k < x.size(); ++k) grad[k] += g * x[k];
  }
}

double mean_reward(std::span<const double> w, const Design& data, double eps) {
  double total = 0.0;
  for (size_t i = 0; i < data.rows.size(); ++i) {
    total += log_score_reward(logistic(dot(w, data.rows[i])), data.labels[i], eps);
  }
  return total / static_cast<double>(data.rows.size());
}

double design_brier(std::span<const double> w, const Design& data) {
  std::vector<double> preds;
  preds.reserve(data.rows.size());
  for (const auto& x : data.rows) preds.push_back(logistic(dot(w, x)));
  return brier(preds, data.labels);
}

}  // namespace

double objective(std::span<const double> weights, const Design& data, double clamp_epsilon,
                 double l2) {
  check_dims(weights, data);
  if (data.rows.empty()) throw InputError("empty design");
  double norm2 = 0.0;
  for (double w : weights) norm2 += w * w;
  return mean_reward(weights, data, clamp_epsilon) - 0.5 * l2 * norm2;
}

std::vector<double> objective_gradient(std::span<const double> weights, const Design& data,
                                       double clamp_epsilon, double l2) {
  check_dims(weights, data);
  if (data.rows.empty()) throw InputError("empty design");
  std::vector<size_t> all(data.rows.size());
  std::iota(all.begin(), all.end(), size_t{0});
  std::vector<double> grad(weights.size(), 0.0);
  accumulate_gradient(weights, data, all, clamp_epsilon, grad);
  const double n = static_cast<double>(data.rows.size());
  for (size_t k = 0; k < grad.size(); ++k) grad[k] = grad[k] / n - l2 * weights[k];
  return grad;
}

TrainResult train_logistic(const Design& train, const TrainConfig& config,
                           const Design* validation) {
  config.validate();
  if (train.rows.empty()) throw InputError("training set is empty");
  const size_t dim = train.rows.front().size();
  TrainResult result;
  result.weights.assign(dim, 0.0);
  check_dims(result.weights, train);
  if (validation != nullptr && !validation->rows.empty()) check_dims(result.weights, *validation);

  const size_t n = train.rows.size();
  const size_t batch =
      config.batch_size == 0 ? n : std::min(n, static_cast<size_t>(config.batch_size));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(derive_seed(config.seed, "train_logistic"));
  std::vector<double> grad(dim);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (batch < n) {
      for (size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    }
    for (size_t start = 0; start < n; start += batch) {
      const size_t len = std::min(batch, n - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      accumulate_gradient(result.weights, train, std::span(order).subspan(start, len),
                          config.clamp_epsilon, grad);
      for (size_t k = 0; k < dim; ++k) {
        result.weights[k] += config.learning_rate *
                             (grad[k] / static_cast<double>(len) - config.l2 * result.weights[k]);
        if (!std::isfinite(result.weights[k])) {
          throw Diverged(fmt::format("weight {} became non-finite at epoch {}", k, epoch));
        }
      }
    }
    CurvePoint point{epoch, mean_reward(result.weights, train, config.clamp_epsilon),
                     std::nullopt};
    if (validation != nullptr && !validation->rows.empty()) {
      point.validation_brier = design_brier(result.weights, *validation);
    }
    result.curve.push_back(point);
  }
  return result;
}

Design featurize_questions(std::span<const ForecastingQuestion> questions,
                           const FeatureConfig& features) {
  Design d;
  for (const auto& q : questions) {
    if (!q.label) continue;
    auto values = featurize(q, features).values();
    for (double v : values) {
      if (!std::isfinite(v)) throw InputError(fmt::format("non-finite feature in {}", q.id));
    }
    d.rows.push_back(std::move(values));
    d.labels.push_back(*q.label);
  }
  return d;
}

ToyTrainResult train_toy(std::span<const ForecastingQuestion> train,
                         std::span<const ForecastingQuestion> validation,
                         const FeatureConfig& features, const TrainConfig& config) {
  const Design train_design = featurize_questions(train, features);
  if (train_design.rows.empty()) throw InputError("no labelled training questions");
  const Design validation_design = featurize_questions(validation, features);
  auto result = train_logistic(train_design, config, &validation_design);
  ToyPolicy policy{std::move(result.weights), feature_names(features), features};
  return {std::move(policy), std::move(result.curve)};
}

std::string curve_csv(std::span<const CurvePoint> curve) {
  std::string out = "epoch,mean_reward,brier_on_validation\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{:.10f},{}\n", p.epoch, p.mean_reward,
                       p.validation_brier ? fmt::format("{:.10f}", *p.validation_brier) : "");
  }
  return out;
}

}  // namespace scdf
