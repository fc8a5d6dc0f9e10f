#include "scdf/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "scdf/adapter.hpp"
#include "scdf/chat_client.hpp"
#include "scdf/dataset.hpp"
#include "scdf/errors.hpp"
#include "scdf/forecasters.hpp"
#include "scdf/index_core.hpp"
#include "scdf/judge.hpp"
#include "scdf/manifest.hpp"
#include "scdf/metrics.hpp"
#include "scdf/synth.hpp"
#include "scdf/training.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace scdf {

namespace {

std::string dump_line(const json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
}

json load_json_file(const fs::path& path) {
  try {
    return json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  const size_t count = std::min<size_t>(n, static_cast<size_t>(std::max(workers, 1)));
  if (count <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

class AppendFile {
 public:
  explicit AppendFile(const fs::path& path) : out_(path, std::ios::binary | std::ios::app) {
    if (!out_) throw InputError(fmt::format("cannot open '{}'", path.string()));
  }
  void write(const json& j) {
    std::lock_guard lock(mu_);
    out_ << dump_line(j);
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

// Values from the config file section, overridden by flags given on the
// command line.
struct Settings {
  json values = json::object();

  template <typename T>
  void flag(const std::string& key, const CLI::Option* opt, const T& value) {
    if (opt->count() > 0) values[key] = value;
  }
  template <typename T>
  T get(const std::string& key, const T& fallback) const {
    return values.contains(key) && !values.at(key).is_null() ? values.at(key).get<T>() : fallback;
  }
  std::string need(const std::string& key) const {
    if (!values.contains(key) || values.at(key).is_null()) {
      throw InputError(fmt::format("missing required setting '{}'", key));
    }
    return values.at(key).get<std::string>();
  }
  bool has(const std::string& key) const {
    return values.contains(key) && !values.at(key).is_null();
  }
};

struct GlobalOptions {
  std::string config_path;
  uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::string log_level = "info";
};

Settings section(const GlobalOptions& g, const std::string& name) {
  Settings s;
  if (!g.config_path.empty()) {
    const json file = load_json_file(g.config_path);
    if (file.contains(name)) s.values = file.at(name);
    if (file.contains("seed")) s.values["seed"] = file.at("seed");
  }
  if (g.seed_opt != nullptr && g.seed_opt->count() > 0) s.values["seed"] = g.seed;
  return s;
}

double training_event_rate(const std::vector<ForecastingQuestion>& questions) {
  long events = 0;
  long n = 0;
  for (const auto& q : questions) {
    if (q.split == Split::kTrain && q.label) {
      events += *q.label;
      ++n;
    }
  }
  if (n == 0) throw InputError("no labelled training questions to derive a base rate from");
  return static_cast<double>(events) / static_cast<double>(n);
}

bool split_selected(const ForecastingQuestion& q, const std::string& split) {
  return split == "all" || to_string(q.split) == split;
}

// ---------------------------------------------------------------------------

struct BuildDatasetArgs {
  std::string index_csv, news_jsonl, boundary, out, start, released, mapping;
  int max_articles = 8;
  bool strict = false;
  CLI::Option *index_opt{}, *news_opt{}, *boundary_opt{}, *start_opt{}, *max_opt{}, *strict_opt{},
      *released_opt{}, *mapping_opt{};
};

int cmd_build_dataset(const GlobalOptions& g, const BuildDatasetArgs& a) {
  Settings s = section(g, "build_dataset");
  s.flag("index", a.index_opt, a.index_csv);
  s.flag("news", a.news_opt, a.news_jsonl);
  s.flag("boundary", a.boundary_opt, a.boundary);
  s.flag("start", a.start_opt, a.start);
  s.flag("max_articles", a.max_opt, a.max_articles);
  s.flag("strict_threshold", a.strict_opt, a.strict);
  s.flag("released", a.released_opt, a.released);
  s.flag("mapping", a.mapping_opt, a.mapping);

  const fs::path out = a.out;
  const MonthStamp boundary = MonthStamp::parse(s.need("boundary"));
  DatasetConfig config;
  if (s.has("start")) config.start = MonthStamp::parse(s.need("start"));
  config.max_articles = s.get("max_articles", config.max_articles);
  config.strict_threshold = s.get("strict_threshold", config.strict_threshold);
  if (s.has("sigma_window_start")) {
    config.sigma_window_start = MonthStamp::parse(s.need("sigma_window_start"));
  }
  if (s.has("related")) {
    config.related = s.values.at("related").get<std::map<std::string, std::vector<std::string>>>();
  }

  std::vector<fs::path> inputs;
  std::vector<ForecastingQuestion> questions;
  std::map<std::string, std::vector<Forecast>> released_forecasts;
  if (s.has("released")) {
    inputs = {s.need("released"), s.need("mapping")};
    auto adapted = adapt_jsonl(inputs[0], ColumnMapping::from_json(load_json_file(inputs[1])),
                               boundary);
    questions = std::move(adapted.questions);
    released_forecasts = std::move(adapted.forecasts);
  } else {
    inputs = {s.need("index"), s.need("news")};
    std::ifstream index_in(inputs[0]);
    if (!index_in) throw InputError(fmt::format("cannot open '{}'", inputs[0].string()));
    const auto indexes = read_index_csv(index_in);
    const auto corpus = read_news_jsonl(inputs[1]);
    questions = build_questions(indexes, corpus, boundary, config);
  }
  auto manifest = begin_manifest("build-dataset", s.values, inputs);

  for (const auto& q : questions) {
    try {
      leakage_check(q, config.strict_threshold);
    } catch (const LookAheadViolation& e) {
      throw LookAheadViolation(
          fmt::format("look-ahead violation: article {} in question {}", e.article_id,
                      e.question_id),
          e.question_id, e.article_id);
    }
  }
  const SplitReport report = chronological_split_check(questions);
  for (const auto& w : report.warnings) spdlog::warn("{}", w);

  fs::create_directories(out);
  write_questions_jsonl(out / "questions.jsonl", questions);
  detail::write_file(out / "split_report.json", to_json(report).dump(2) + "\n");

  json summary = to_json(report);
  summary["boundary"] = boundary.iso();
  summary["strict_threshold"] = config.strict_threshold;
  std::set<std::string> representations;
  for (const auto& q : questions) {
    for (const auto& a : q.news) representations.insert(a.representation);
  }
  summary["news_representation"] = representations;
  detail::write_file(out / "summary.json", summary.dump(2) + "\n");

  std::vector<std::string> outputs = {"questions.jsonl", "split_report.json", "summary.json"};
  for (const auto& [backend, forecasts] : released_forecasts) {
    std::string text;
    for (const auto& f : forecasts) text += dump_line(to_json(f));
    const std::string name = fmt::format("forecasts_{}.jsonl", normalize_entity_name(backend));
    detail::write_file(out / name, text);
    outputs.push_back(name);
  }
  finish_manifest(manifest, out, outputs);

  const auto pct = [](const DatasetSummary& d) {
    return d.event_rate ? fmt::format("{:.1f}%", *d.event_rate * 100.0) : std::string("n/a");
  };
  std::cout << fmt::format("train: {} questions, event rate {}\n", report.train.n_questions,
                           pct(report.train))
            << fmt::format("test: {} questions, event rate {}\n", report.test.n_questions,
                           pct(report.test))
            << fmt::format("unresolved: {} questions\n", report.unresolved.n_questions);
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ForecastArgs {
  std::string questions, backend, out, policy, endpoint, prompt_template, split = "test";
  double rate = 0.0;
  int limit = -1;
  int parallelism = 0;
  bool rollouts = false;
  int group_size = 4;
  CLI::Option *questions_opt{}, *backend_opt{}, *rate_opt{}, *policy_opt{}, *endpoint_opt{},
      *template_opt{}, *split_opt{}, *parallelism_opt{}, *rollouts_opt{}, *group_opt{};
};

int cmd_forecast(const GlobalOptions& g, const ForecastArgs& a) {
  Settings s = section(g, "forecast");
  s.flag("questions", a.questions_opt, a.questions);
  s.flag("backend", a.backend_opt, a.backend);
  s.flag("rate", a.rate_opt, a.rate);
  s.flag("policy", a.policy_opt, a.policy);
  s.flag("endpoint", a.endpoint_opt, a.endpoint);
  s.flag("template", a.template_opt, a.prompt_template);
  s.flag("split", a.split_opt, a.split);
  s.flag("parallelism", a.parallelism_opt, a.parallelism);
  s.flag("rollouts", a.rollouts_opt, a.rollouts);
  s.flag("group_size", a.group_opt, a.group_size);

  const fs::path out = a.out;
  const fs::path questions_path = s.need("questions");
  const std::string backend = s.need("backend");
  const std::string split = s.get<std::string>("split", "test");
  const auto questions = read_questions_jsonl(questions_path);

  std::vector<fs::path> inputs = {questions_path};
  std::unique_ptr<Forecaster> forecaster;
  RemoteForecaster* remote = nullptr;
  int parallelism = 1;
  int n_samples = 1;
  fs::create_directories(out);

  if (backend == "constant") {
    const double rate = s.has("rate") ? s.get("rate", 0.0) : training_event_rate(questions);
    s.values["rate"] = rate;
    forecaster = std::make_unique<ConstantForecaster>(rate);
  } else if (backend == "toy") {
    inputs.push_back(s.need("policy"));
    forecaster = std::make_unique<ToyForecaster>(ToyPolicy::from_json(load_json_file(inputs.back())));
  } else if (backend == "remote") {
    json endpoint_json;
    if (s.has("endpoint") && s.values.at("endpoint").is_object()) {
      endpoint_json = s.values.at("endpoint");
    } else {
      inputs.push_back(s.need("endpoint"));
      endpoint_json = load_json_file(inputs.back());
    }
    const auto endpoint = EndpointConfig::from_json(endpoint_json);
    PromptTemplate tmpl;
    if (s.has("template")) {
      inputs.push_back(s.need("template"));
      tmpl = PromptTemplate::from_file(inputs.back());
    }
    auto client = std::make_shared<ChatClient>(
        endpoint, std::make_shared<TranscriptLog>(out / "transcripts.jsonl"));
    auto rf = std::make_unique<RemoteForecaster>(client, std::move(tmpl));
    remote = rf.get();
    forecaster = std::move(rf);
    parallelism = s.get("parallelism", 0) > 0 ? s.get("parallelism", 0) : endpoint.max_parallelism;
    n_samples = endpoint.n_samples;
    if (s.get("rollouts", false)) n_samples = s.get("group_size", 4);
    if (n_samples < 1) throw InputError("group_size must be >= 1");
  } else {
    throw InputError(fmt::format("unknown backend '{}' (constant, toy, remote)", backend));
  }

  // Resume: a changed question file under an existing run is an integrity problem.
  const fs::path forecasts_path = out / "forecasts.jsonl";
  if (fs::exists(out / "manifest.json") && fs::exists(forecasts_path)) {
    const auto previous = RunManifest::from_json(load_json_file(out / "manifest.json"));
    for (const auto& d : previous.inputs) {
      if (fs::path(d.path) == questions_path && sha256_file(questions_path) != d.sha256) {
        throw IntegrityError(fmt::format(
            "{} changed since the previous run in {}; use a fresh output directory",
            questions_path.string(), out.string()));
      }
    }
  }
  std::set<std::string> done;
  if (fs::exists(forecasts_path)) {
    for (const auto& f : read_forecasts_jsonl(forecasts_path)) done.insert(f.question_id);
  }
  auto manifest = begin_manifest("forecast", s.values, inputs);

  std::vector<const ForecastingQuestion*> todo;
  for (const auto& q : questions) {
    if (!split_selected(q, split) || done.count(q.id) > 0) continue;
    todo.push_back(&q);
  }
  if (a.limit >= 0 && todo.size() > static_cast<size_t>(a.limit)) {
    todo.resize(static_cast<size_t>(a.limit));
  }

  AppendFile forecasts_out(forecasts_path);
  AppendFile failures_out(out / "failures.jsonl");
  std::unique_ptr<AppendFile> rollouts_out;
  if (remote != nullptr && n_samples > 1) rollouts_out = std::make_unique<AppendFile>(out / "rollouts.jsonl");

  std::atomic<bool> endpoint_down{false};
  std::atomic<int> failures{0};
  std::mutex error_mu;
  std::string endpoint_error;

  parallel_for(todo.size(), parallelism, [&](size_t i) {
    if (endpoint_down) return;
    const ForecastingQuestion& q = *todo[i];
    try {
      if (rollouts_out) {
        const auto rollouts = remote->rollouts(q, n_samples);
        double sum = 0.0;
        int parsed = 0;
        std::string reasoning;
        for (const auto& r : rollouts) {
          rollouts_out->write(to_json(r));
          if (r.parsed) {
            if (parsed == 0) reasoning = r.reasoning;
            sum += r.probability;
            ++parsed;
          }
        }
        if (parsed == 0) {
          throw AnswerUnparseable(fmt::format("{}: no sample had a usable answer", q.id),
                                  rollouts.empty() ? "" : rollouts.front().reasoning);
        }
        forecasts_out.write(to_json(Forecast{q.id, sum / parsed, reasoning, forecaster->backend(),
                                             std::nullopt}));
      } else {
        forecasts_out.write(to_json(forecaster->forecast(q)));
      }
    } catch (const AnswerUnparseable& e) {
      ++failures;
      failures_out.write({{"question_id", q.id}, {"error", e.what()}, {"raw_output", e.raw_output}});
    } catch (const EndpointError& e) {
      endpoint_down = true;
      std::lock_guard lock(error_mu);
      if (endpoint_error.empty()) endpoint_error = e.what();
      failures_out.write({{"question_id", q.id}, {"error", e.what()}});
    }
  });

  std::vector<std::string> outputs = {"forecasts.jsonl", "failures.jsonl"};
  if (rollouts_out) {
    outputs.push_back("rollouts.jsonl");
    std::map<std::string, int> labels;
    for (const auto& q : questions) {
      if (q.label) labels[q.id] = *q.label;
    }
    std::vector<Rollout> labelled;
    for (const auto& line : detail::read_lines(out / "rollouts.jsonl")) {
      auto r = rollout_from_json(json::parse(line));
      if (labels.count(r.question_id) > 0) labelled.push_back(std::move(r));
    }
    if (!labelled.empty()) {
      std::string text;
      for (const auto& rec : export_advantage_batch(labelled, labels)) text += dump_line(to_json(rec));
      detail::write_file(out / "advantages.jsonl", text);
      outputs.push_back("advantages.jsonl");
    }
  }
  if (remote != nullptr) outputs.push_back("transcripts.jsonl");
  finish_manifest(manifest, out, outputs);

  std::cout << fmt::format("{} new forecast(s), {} skipped as already done, {} failure(s)\n",
                           todo.size() - static_cast<size_t>(failures.load()) -
                               (endpoint_down ? 1 : 0),
                           done.size(), failures.load());
  if (endpoint_down) {
    spdlog::error("endpoint exhausted: {}", endpoint_error);
    return kExitEndpoint;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string questions, out, split = "test";
  std::vector<std::string> forecasts;
  double baseline_rate = 0.0;
  int bins = 10;
  double top_fraction = 0.1;
  CLI::Option *questions_opt{}, *forecasts_opt{}, *split_opt{}, *baseline_opt{}, *bins_opt{},
      *frac_opt{};
};

int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a) {
  Settings s = section(g, "evaluate");
  s.flag("questions", a.questions_opt, a.questions);
  s.flag("forecasts", a.forecasts_opt, a.forecasts);
  s.flag("split", a.split_opt, a.split);
  s.flag("baseline_rate", a.baseline_opt, a.baseline_rate);
  s.flag("n_bins", a.bins_opt, a.bins);
  s.flag("top_fraction", a.frac_opt, a.top_fraction);

  const fs::path out = a.out;
  const fs::path questions_path = s.need("questions");
  const auto forecast_paths = s.get<std::vector<std::string>>("forecasts", {});
  if (forecast_paths.empty()) throw InputError("at least one --forecasts file is required");
  const auto questions = read_questions_jsonl(questions_path);
  const std::string split = s.get<std::string>("split", "test");
  EvalConfig config{s.get("n_bins", 10), s.get("top_fraction", 0.1)};
  if (config.n_bins < 1) throw InputError("n_bins must be >= 1");

  const double baseline_rate =
      s.has("baseline_rate") ? s.get("baseline_rate", 0.0) : training_event_rate(questions);
  s.values["baseline_rate"] = baseline_rate;

  std::vector<fs::path> inputs = {questions_path};
  for (const auto& p : forecast_paths) inputs.emplace_back(p);
  auto manifest = begin_manifest("evaluate", s.values, inputs);

  std::map<std::string, const ForecastingQuestion*> by_id;
  std::vector<int> split_labels;
  for (const auto& q : questions) {
    if (!split_selected(q, split)) continue;
    if (!q.label) continue;
    by_id[q.id] = &q;
    split_labels.push_back(*q.label);
  }

  fs::create_directories(out);
  json models = json::array();
  std::vector<EvalReport> reports;
  std::vector<std::string> outputs = {"report.json", "plot_data.csv"};
  for (const auto& path : forecast_paths) {
    std::map<std::string, Forecast> joined;
    int unresolved = 0;
    for (auto& f : read_forecasts_jsonl(path)) {
      if (by_id.count(f.question_id) == 0) {
        ++unresolved;
        continue;
      }
      joined.emplace(f.question_id, std::move(f));
    }
    if (unresolved > 0) {
      spdlog::warn("{}: {} forecast(s) outside the resolved {} split ignored", path, unresolved,
                   split);
    }
    if (joined.size() < by_id.size()) {
      spdlog::warn("{}: {} of {} resolved questions have no forecast", path,
                   by_id.size() - joined.size(), by_id.size());
    }
    if (joined.empty()) throw EmptyEvaluation(fmt::format("{}: nothing to evaluate", path));

    std::vector<double> preds;
    std::vector<int> labels;
    std::vector<std::string> ids;
    std::string backend;
    for (const auto& [id, f] : joined) {
      preds.push_back(f.probability);
      labels.push_back(*by_id.at(id)->label);
      ids.push_back(id);
      backend = f.backend;
    }
    auto report = eval_report(preds, labels, ids, baseline_rate, config, backend);
    const std::string csv_name = fmt::format("reliability_{}.csv", normalize_entity_name(backend));
    detail::write_file(out / csv_name, reliability_csv(report.reliability));
    outputs.push_back(csv_name);
    json model = to_json(report);
    model["forecasts_file"] = path;
    models.push_back(std::move(model));
    reports.push_back(std::move(report));
  }

  const std::vector<double> baseline_preds(split_labels.size(), baseline_rate);
  const double baseline_brier = split_labels.empty() ? 0.0 : brier(baseline_preds, split_labels);
  json ece_changes = json::array();
  for (size_t i = 0; i < reports.size(); ++i) {
    for (size_t j = 0; j < reports.size(); ++j) {
      if (i == j || reports[i].ece <= 0.0) continue;
      ece_changes.push_back({{"from", reports[i].backend},
                             {"to", reports[j].backend},
                             {"relative_reduction", 1.0 - reports[j].ece / reports[i].ece}});
    }
  }
  const json doc = {{"split", split},
                    {"n_bins", config.n_bins},
                    {"top_fraction", config.top_fraction},
                    {"baseline", {{"rate", baseline_rate}, {"brier", baseline_brier}}},
                    {"models", models},
                    {"ece_relative_change", ece_changes}};
  detail::write_file(out / "report.json", doc.dump(2) + "\n");

  std::string plot = "kind,backend,x,y\n";
  plot += fmt::format("bar,historical_baseline,brier,{}\nbar,historical_baseline,bss,0\n",
                      baseline_brier);
  for (const auto& r : reports) {
    plot += fmt::format("bar,{0},brier,{1}\nbar,{0},bss,{2}\nbar,{0},ece,{3}\nbar,{0},precision,{4}\n",
                        r.backend, r.brier, r.bss_vs_baseline, r.ece, r.precision_at_frac);
    for (const auto& b : r.reliability) {
      if (b.count > 0) {
        plot += fmt::format("reliability,{},{},{}\n", r.backend, b.mean_predicted, b.empirical_rate);
      }
    }
  }
  detail::write_file(out / "plot_data.csv", plot);
  finish_manifest(manifest, out, outputs);

  for (const auto& r : reports) {
    std::cout << fmt::format("{}: n={} brier={:.4f} bss={} ece={:.4f} precision@{:.0f}%={:.4f} (k={})\n",
                             r.backend, r.n, r.brier, format_skill_percent(r.bss_vs_baseline), r.ece,
                             r.top_fraction * 100.0, r.precision_at_frac, r.k_used);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TrainToyArgs {
  std::string questions, out, features;
  double learning_rate = 0.05;
  int epochs = 2000;
  int batch_size = 0;
  double l2 = 0.0;
  double clamp_epsilon = kDefaultClampEpsilon;
  CLI::Option *questions_opt{}, *features_opt{}, *lr_opt{}, *epochs_opt{}, *batch_opt{}, *l2_opt{},
      *eps_opt{};
};

int cmd_train_toy(const GlobalOptions& g, const TrainToyArgs& a) {
  Settings s = section(g, "train_toy");
  s.flag("questions", a.questions_opt, a.questions);
  s.flag("features", a.features_opt, a.features);
  s.flag("learning_rate", a.lr_opt, a.learning_rate);
  s.flag("epochs", a.epochs_opt, a.epochs);
  s.flag("batch_size", a.batch_opt, a.batch_size);
  s.flag("l2", a.l2_opt, a.l2);
  s.flag("clamp_epsilon", a.eps_opt, a.clamp_epsilon);

  const fs::path out = a.out;
  const fs::path questions_path = s.need("questions");
  std::vector<fs::path> inputs = {questions_path};
  FeatureConfig features;
  if (s.has("features")) {
    if (s.values.at("features").is_object()) {
      features = FeatureConfig::from_json(s.values.at("features"));
    } else {
      inputs.push_back(s.need("features"));
      features = FeatureConfig::from_json(load_json_file(inputs.back()));
    }
  }
  const TrainConfig config = TrainConfig::from_json(s.values);
  json snapshot = s.values;
  snapshot["train_config"] = config.to_json();
  snapshot["feature_config"] = features.to_json();
  auto manifest = begin_manifest("train-toy", snapshot, inputs);

  const auto questions = read_questions_jsonl(questions_path);
  std::vector<ForecastingQuestion> train;
  std::vector<ForecastingQuestion> validation;
  for (const auto& q : questions) {
    if (!q.label) continue;
    if (q.split == Split::kTrain) train.push_back(q);
    if (q.split == Split::kTest) validation.push_back(q);
  }
  const auto result = train_toy(train, validation, features, config);

  fs::create_directories(out);
  json policy = result.policy.to_json();
  policy["train_config"] = config.to_json();
  detail::write_file(out / "policy.json", policy.dump(2) + "\n");
  detail::write_file(out / "curve.csv", curve_csv(result.curve));
  finish_manifest(manifest, out, {"policy.json", "curve.csv"});

  const auto& last = result.curve.back();
  std::cout << fmt::format("trained on {} questions; final mean reward {:.6f}", train.size(),
                           last.mean_reward);
  if (last.validation_brier) std::cout << fmt::format(", validation Brier {:.6f}", *last.validation_brier);
  std::cout << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct JudgeArgs {
  std::string forecasts, endpoint, out, annotations;
  int parallelism = 0;
  CLI::Option *forecasts_opt{}, *endpoint_opt{}, *annotations_opt{}, *parallelism_opt{};
};

int cmd_judge(const GlobalOptions& g, const JudgeArgs& a) {
  Settings s = section(g, "judge");
  s.flag("forecasts", a.forecasts_opt, a.forecasts);
  s.flag("endpoint", a.endpoint_opt, a.endpoint);
  s.flag("annotations", a.annotations_opt, a.annotations);
  s.flag("parallelism", a.parallelism_opt, a.parallelism);
  const fs::path out = a.out;
  fs::create_directories(out);

  // Re-aggregate an existing annotation file without calling the judge.
  if (s.has("annotations")) {
    const fs::path path = s.need("annotations");
    auto manifest = begin_manifest("judge", s.values, {path});
    std::vector<RubricAnnotation> annotations;
    for (const auto& line : detail::read_lines(path)) {
      annotations.push_back(annotation_from_json(json::parse(line)));
    }
    const auto summary = aggregate_rubric(annotations);
    detail::write_file(out / "summary.json", to_json(summary).dump(2) + "\n");
    finish_manifest(manifest, out, {"summary.json"});
    std::cout << fmt::format("{} traces, mean rubric score {:.2f}\n", summary.n_traces,
                             summary.mean_total_score);
    return kExitOk;
  }

  const fs::path forecasts_path = s.need("forecasts");
  std::vector<fs::path> inputs = {forecasts_path};
  json endpoint_json;
  if (s.has("endpoint") && s.values.at("endpoint").is_object()) {
    endpoint_json = s.values.at("endpoint");
  } else {
    inputs.push_back(s.need("endpoint"));
    endpoint_json = load_json_file(inputs.back());
  }
  const auto endpoint = EndpointConfig::from_json(endpoint_json);
  require_deterministic_judge(endpoint);
  auto manifest = begin_manifest("judge", s.values, inputs);

  std::vector<Forecast> traces;
  for (auto& f : read_forecasts_jsonl(forecasts_path)) {
    if (detail::trim(f.reasoning).empty()) {
      spdlog::warn("{}: empty reasoning trace skipped", f.question_id);
      continue;
    }
    traces.push_back(std::move(f));
  }
  ChatClient client(endpoint, std::make_shared<TranscriptLog>(out / "transcripts.jsonl"));
  const int parallelism = s.get("parallelism", 0) > 0 ? s.get("parallelism", 0) : endpoint.max_parallelism;

  std::vector<std::optional<RubricAnnotation>> results(traces.size());
  AppendFile failures_out(out / "failures.jsonl");
  std::atomic<bool> endpoint_down{false};
  std::mutex error_mu;
  std::string endpoint_error;
  parallel_for(traces.size(), parallelism, [&](size_t i) {
    if (endpoint_down) return;
    try {
      results[i] = judge_trace(client, traces[i].reasoning, traces[i].question_id);
    } catch (const JudgeParseError& e) {
      failures_out.write({{"question_id", traces[i].question_id}, {"error", e.what()}});
    } catch (const EndpointError& e) {
      endpoint_down = true;
      std::lock_guard lock(error_mu);
      if (endpoint_error.empty()) endpoint_error = e.what();
    }
  });

  std::vector<size_t> order(traces.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
    return traces[x].question_id < traces[y].question_id;
  });
  std::string lines;
  std::vector<RubricAnnotation> annotations;
  for (size_t i : order) {
    if (!results[i]) continue;
    json row = to_json(*results[i]);
    row["question_id"] = traces[i].question_id;
    row["backend"] = traces[i].backend;
    lines += dump_line(row);
    annotations.push_back(*results[i]);
  }
  detail::write_file(out / "annotations.jsonl", lines);
  std::vector<std::string> outputs = {"annotations.jsonl", "failures.jsonl", "transcripts.jsonl"};
  if (!annotations.empty()) {
    json summary = to_json(aggregate_rubric(annotations));
    summary["judge_model"] = endpoint.model;
    detail::write_file(out / "summary.json", summary.dump(2) + "\n");
    outputs.push_back("summary.json");
    std::cout << fmt::format("{} traces judged, mean rubric score {:.2f}\n", annotations.size(),
                             summary["mean_total_score"].get<double>());
  }
  finish_manifest(manifest, out, outputs);
  if (endpoint_down) {
    spdlog::error("judge endpoint exhausted: {}", endpoint_error);
    return kExitEndpoint;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int n_entities = 0, n_months = 0;
  CLI::Option *entities_opt{}, *months_opt{};
};

int cmd_synth(const GlobalOptions& g, const SynthArgs& a) {
  Settings s = section(g, "synth");
  s.flag("n_entities", a.entities_opt, a.n_entities);
  s.flag("n_months", a.months_opt, a.n_months);
  const auto config = SynthConfig::from_json(s.values);
  auto manifest = begin_manifest("synth", config.to_json(), {});
  const auto data = generate(config);

  const fs::path out = a.out;
  fs::create_directories(out);
  {
    std::ofstream index_out(out / "indexes.csv", std::ios::binary | std::ios::trunc);
    write_index_csv(index_out, data.indexes);
  }
  write_news_jsonl(out / "news.jsonl", data.corpus);
  detail::write_file(out / "oracle.csv", oracle_csv(data.oracle));
  detail::write_file(out / "synth_config.json", config.to_json().dump(2) + "\n");
  finish_manifest(manifest, out, {"indexes.csv", "news.jsonl", "oracle.csv", "synth_config.json"});

  long events = 0;
  long resolved = 0;
  for (const auto& r : data.oracle) {
    if (r.event) {
      events += *r.event;
      ++resolved;
    }
  }
  std::cout << fmt::format("{} entities x {} months, {} articles, {} events in {} resolved months\n",
                           config.n_entities, config.n_months, data.corpus.size(), events, resolved);
  return kExitOk;
}

void configure_logging(const std::string& level) {
  auto logger = spdlog::get("scdf");
  if (!logger) logger = spdlog::stderr_color_mt("scdf");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
  spdlog::set_pattern("[%l] %v");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Supply-chain disruption forecasting harness"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  g.seed_opt = app.add_option("--seed", g.seed, "Seed for all randomness");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error");
  app.set_version_flag("--version", std::string(kToolVersion));

  BuildDatasetArgs bd;
  auto* build = app.add_subcommand("build-dataset", "Build forecasting questions from indexes and news");
  bd.index_opt = build->add_option("--index", bd.index_csv, "Index CSV");
  bd.news_opt = build->add_option("--news", bd.news_jsonl, "News JSONL corpus");
  bd.boundary_opt = build->add_option("--boundary", bd.boundary, "Last training month (YYYY-MM)");
  build->add_option("--out", bd.out, "Output directory")->required();
  bd.start_opt = build->add_option("--start", bd.start, "First prediction month (default 2022-01)");
  bd.max_opt = build->add_option("--max-articles", bd.max_articles, "News articles per question");
  bd.strict_opt = build->add_flag("--strict-threshold", bd.strict, "Require change > sigma");
  bd.released_opt = build->add_option("--released", bd.released, "Prepared question JSONL to adapt");
  bd.mapping_opt = build->add_option("--mapping", bd.mapping, "Column mapping JSON for --released");

  ForecastArgs fc;
  auto* forecast = app.add_subcommand("forecast", "Produce forecasts for a question set");
  fc.questions_opt = forecast->add_option("--questions", fc.questions, "Question JSONL");
  fc.backend_opt = forecast->add_option("--backend", fc.backend, "constant, toy or remote");
  forecast->add_option("--out", fc.out, "Output directory")->required();
  fc.rate_opt = forecast->add_option("--rate", fc.rate, "Constant backend rate (default: training rate)");
  fc.policy_opt = forecast->add_option("--policy", fc.policy, "Toy policy JSON");
  fc.endpoint_opt = forecast->add_option("--endpoint", fc.endpoint, "Endpoint config JSON");
  fc.template_opt = forecast->add_option("--template", fc.prompt_template, "Prompt template file");
  fc.split_opt = forecast->add_option("--split", fc.split, "train, test, unresolved or all");
  fc.parallelism_opt = forecast->add_option("--parallelism", fc.parallelism, "Concurrent requests");
  forecast->add_option("--limit", fc.limit, "Forecast at most N new questions");
  fc.rollouts_opt = forecast->add_flag("--rollouts", fc.rollouts, "Sample a group per question and export advantages");
  fc.group_opt = forecast->add_option("--group-size", fc.group_size, "Samples per question with --rollouts (default 4)");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score forecasts against resolved questions");
  ev.questions_opt = evaluate->add_option("--questions", ev.questions, "Question JSONL");
  ev.forecasts_opt = evaluate->add_option("--forecasts", ev.forecasts, "Forecast JSONL (repeatable)");
  evaluate->add_option("--out", ev.out, "Output directory")->required();
  ev.split_opt = evaluate->add_option("--split", ev.split, "Split to evaluate (default test)");
  ev.baseline_opt = evaluate->add_option("--baseline-rate", ev.baseline_rate, "Reference constant rate");
  ev.bins_opt = evaluate->add_option("--bins", ev.bins, "Calibration bins (default 10)");
  ev.frac_opt = evaluate->add_option("--top-fraction", ev.top_fraction, "Precision@ fraction (default 0.1)");

  TrainToyArgs tt;
  auto* train = app.add_subcommand("train-toy", "Train the logistic toy forecaster on log-score reward");
  tt.questions_opt = train->add_option("--questions", tt.questions, "Question JSONL");
  train->add_option("--out", tt.out, "Output directory")->required();
  tt.features_opt = train->add_option("--features", tt.features, "Feature config JSON");
  tt.lr_opt = train->add_option("--learning-rate", tt.learning_rate, "Step size");
  tt.epochs_opt = train->add_option("--epochs", tt.epochs, "Epochs");
  tt.batch_opt = train->add_option("--batch-size", tt.batch_size, "Minibatch size (0 = full batch)");
  tt.l2_opt = train->add_option("--l2", tt.l2, "L2 penalty");
  tt.eps_opt = train->add_option("--clamp-epsilon", tt.clamp_epsilon, "Probability clamp");

  JudgeArgs jd;
  auto* judge = app.add_subcommand("judge", "Annotate reasoning traces with the rubric evaluator");
  jd.forecasts_opt = judge->add_option("--forecasts", jd.forecasts, "Forecast JSONL with reasoning");
  jd.endpoint_opt = judge->add_option("--endpoint", jd.endpoint, "Judge endpoint config JSON");
  jd.annotations_opt = judge->add_option("--annotations", jd.annotations, "Aggregate an existing annotation JSONL");
  jd.parallelism_opt = judge->add_option("--parallelism", jd.parallelism, "Concurrent requests");
  judge->add_option("--out", jd.out, "Output directory")->required();

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Generate synthetic indexes, news and oracle table");
  synth->add_option("--out", sy.out, "Output directory")->required();
  sy.entities_opt = synth->add_option("--n-entities", sy.n_entities, "Entities");
  sy.months_opt = synth->add_option("--n-months", sy.n_months, "Months per entity");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }
  configure_logging(g.log_level);

  try {
    if (*build) return cmd_build_dataset(g, bd);
    if (*forecast) return cmd_forecast(g, fc);
    if (*evaluate) return cmd_evaluate(g, ev);
    if (*train) return cmd_train_toy(g, tt);
    if (*judge) return cmd_judge(g, jd);
    if (*synth) return cmd_synth(g, sy);
  } catch (const IntegrityError& e) {
    spdlog::error("{}", e.what());
    return kExitIntegrity;
  } catch (const EndpointError& e) {
    spdlog::error("{}", e.what());
    return kExitEndpoint;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace scdf
