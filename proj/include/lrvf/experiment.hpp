#pragma once

#include "lrvf/config.hpp"
#include "lrvf/csv.hpp"
#include "lrvf/learners.hpp"
#include "lrvf/serialize.hpp"
#include "lrvf/task.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <future>
#include <limits>
#include <vector>

namespace lrvf {

struct EvalPoint {
  std::int64_t episode = 0;  // training episodes completed when evaluated
  double median_return = 0.0;
  double median_steps = 0.0;
};

struct RunResult {
  std::vector<double> train_returns;  // per training episode; NaN once diverged
  std::vector<EvalPoint> evals;
  bool diverged = false;
  std::int64_t diverged_at_episode = -1;
  double wall_clock_seconds = 0.0;  // never written to CSV outputs
  ValueModel final_model;
  ModelDims dims;
};

// Greedy (eps = 0) rollouts; medians over the evaluation episodes.
inline std::pair<double, double> evaluate_greedy(const ValueModel& model, const ModelDims& dims,
                                                 Task& task, int episodes, std::uint64_t seed) {
  require(episodes >= 1, "evaluate_greedy: episodes must be >= 1");
  std::vector<double> returns, steps;
  returns.reserve(episodes);
  steps.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    MultiIndex state = task.reset(derive_seed(seed, static_cast<std::uint64_t>(e)));
    double ep_return = 0.0;
    int ep_steps = 0;
    for (int t = 0; t < task.max_steps(); ++t) {
      const MultiIndex action = best_action(model, dims, state).first;
      StepOutcome out = task.step(action);
      ep_return += out.reward;
      ++ep_steps;
      state = std::move(out.next_state);
      if (out.terminal) break;
    }
    returns.push_back(ep_return);
    steps.push_back(static_cast<double>(ep_steps));
  }
  return {median(returns), median(steps)};
}

namespace detail {

struct SeedStreams {
  std::uint64_t run_seed;
  std::uint64_t train_reset(std::int64_t episode) const {
    return derive_seed(derive_seed(run_seed, 1), static_cast<std::uint64_t>(episode));
  }
  std::uint64_t eval_stream(std::int64_t episode) const {
    return derive_seed(derive_seed(run_seed, 2), static_cast<std::uint64_t>(episode));
  }
  std::uint64_t exploration() const { return derive_seed(run_seed, 3); }
};

}  // namespace detail

// One seeded training: eps-greedy episodes interleaved with greedy
// evaluation points every eval.cadence episodes (and after the last
// episode). Learner divergence flags the run instead of crashing it.
inline RunResult train_single_run(const ExperimentConfig& cfg, int run_index) {
  const auto t0 = std::chrono::steady_clock::now();
  const detail::SeedStreams seeds{cfg.base_seed + static_cast<std::uint64_t>(run_index)};

  std::unique_ptr<Task> task = make_task(cfg);
  RunResult res;
  res.dims = model_dims_of(*task);

  LearnerConfig learner = cfg.learner.config;
  learner.init_seed = derive_seed(learner.init_seed, static_cast<std::uint64_t>(run_index));
  res.final_model = init_model_with(cfg.learner.kind, learner, res.dims);

  Rng explore(seeds.exploration());
  std::int64_t update_count = 0;
  res.train_returns.assign(static_cast<std::size_t>(cfg.episodes),
                           std::numeric_limits<double>::quiet_NaN());

  for (std::int64_t episode = 0; episode < cfg.episodes && !res.diverged; ++episode) {
    const double eps = learner.epsilon.at(episode);
    MultiIndex state = task->reset(seeds.train_reset(episode));
    double ep_return = 0.0;
    try {
      for (int t = 0; t < task->max_steps(); ++t) {
        const MultiIndex action = epsilon_greedy(res.final_model, res.dims, state, eps, explore);
        StepOutcome out = task->step(action);
        ep_return += out.reward;
        ++update_count;
        model_update(res.final_model, res.dims, state, action, out.reward, out.next_state,
                     out.absorbing, learner, update_count);
        state = std::move(out.next_state);
        if (out.terminal) break;
      }
      res.train_returns[static_cast<std::size_t>(episode)] = ep_return;
    } catch (const divergence_error&) {
      res.diverged = true;
      res.diverged_at_episode = episode;
      break;
    }
    const bool last = episode + 1 == cfg.episodes;
    if ((episode + 1) % cfg.eval.cadence == 0 || last) {
      auto [ret, steps] = evaluate_greedy(res.final_model, res.dims, *task, cfg.eval.episodes,
                                          seeds.eval_stream(episode));
      res.evals.push_back(EvalPoint{episode + 1, ret, steps});
    }
  }

  res.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// All runs of an experiment, seeded base_seed + i. Runs execute in
// parallel; results are collected by run index so outputs never depend on
// scheduling.
inline std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<std::future<RunResult>> futures;
  futures.reserve(cfg.runs);
  for (int i = 0; i < cfg.runs; ++i)
    futures.push_back(
        std::async(std::launch::async, [&cfg, i]() { return train_single_run(cfg, i); }));
  std::vector<RunResult> results;
  results.reserve(cfg.runs);
  for (auto& f : futures) results.push_back(f.get());
  return results;
}

struct MetricPoint {
  std::int64_t episode = 0;
  Quartiles q;
  int runs = 0;      // non-diverged runs entering the quartiles
  int diverged = 0;  // diverged runs excluded from them
};

// Medians/quartiles across runs per training episode; diverged runs are
// excluded from the statistics and counted separately.
inline std::vector<MetricPoint> aggregate_train_metrics(const std::vector<RunResult>& results) {
  require(!results.empty(), "aggregate_train_metrics: no runs");
  const std::size_t episodes = results[0].train_returns.size();
  int diverged = 0;
  for (const RunResult& r : results)
    if (r.diverged) ++diverged;
  std::vector<MetricPoint> out;
  out.reserve(episodes);
  for (std::size_t e = 0; e < episodes; ++e) {
    std::vector<double> sample;
    for (const RunResult& r : results)
      if (!r.diverged) sample.push_back(r.train_returns[e]);
    MetricPoint m;
    m.episode = static_cast<std::int64_t>(e) + 1;
    m.runs = static_cast<int>(sample.size());
    m.diverged = diverged;
    if (!sample.empty()) m.q = quartiles(std::move(sample));
    out.push_back(m);
  }
  return out;
}

inline std::vector<MetricPoint> aggregate_eval_metrics(const std::vector<RunResult>& results) {
  require(!results.empty(), "aggregate_eval_metrics: no runs");
  int diverged = 0;
  for (const RunResult& r : results)
    if (r.diverged) ++diverged;
  std::size_t points = 0;
  for (const RunResult& r : results)
    if (!r.diverged) points = std::max(points, r.evals.size());
  std::vector<MetricPoint> out;
  for (std::size_t p = 0; p < points; ++p) {
    std::vector<double> sample;
    std::int64_t episode = 0;
    for (const RunResult& r : results)
      if (!r.diverged && p < r.evals.size()) {
        sample.push_back(r.evals[p].median_return);
        episode = r.evals[p].episode;
      }
    MetricPoint m;
    m.episode = episode;
    m.runs = static_cast<int>(sample.size());
    m.diverged = diverged;
    if (!sample.empty()) m.q = quartiles(std::move(sample));
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline void write_model_file(const std::string& path, const ExperimentConfig& cfg,
                             const ValueModel& model, const ModelDims& dims) {
  std::ofstream out(path);
  if (!out) fail("model: cannot open " + path + " for writing");
  json header;
  header["format"] = "lrvf-model";
  header["schema"] = 1;
  header["kind"] = model_kind_name(model_kind(model));
  header["environment"] = cfg.raw.at("environment");
  if (cfg.raw.contains("grid")) header["grid"] = cfg.raw.at("grid");
  if (cfg.raw.contains("partition")) header["partition"] = cfg.raw.at("partition");
  header["learner"] = cfg.raw.at("learner");
  header["num_state_dims"] = static_cast<int>(dims.state_sizes.size());
  out << header.dump() << '\n';
  write_model_body(out, model);
}

struct LoadedModel {
  ValueModel model;
  ModelDims dims;
  ExperimentConfig config;  // environment/grid/partition/learner sections only
};

inline LoadedModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("model: cannot open " + path);
  std::string header_line;
  if (!std::getline(in, header_line)) fail("model: missing JSON header");
  json header = json::parse(header_line);
  require(header.value("format", "") == "lrvf-model", "model: not a model file");

  json cfg_json;
  cfg_json["environment"] = header.at("environment");
  if (header.contains("grid")) cfg_json["grid"] = header.at("grid");
  if (header.contains("partition")) cfg_json["partition"] = header.at("partition");
  cfg_json["learner"] = header.at("learner");
  cfg_json["episodes"] = 1;  // placeholder; not used when reloading

  LoadedModel loaded;
  loaded.config = parse_experiment_config(cfg_json);
  std::unique_ptr<Task> task = make_task(loaded.config);
  loaded.dims = model_dims_of(*task);
  loaded.model = read_model_body(in, parse_model_kind(header.at("kind").get<std::string>()),
                                 header.at("num_state_dims").get<int>());
  return loaded;
}

inline void write_experiment_csvs(const ExperimentConfig& cfg,
                                  const std::vector<RunResult>& results,
                                  const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  {
    CsvWriter csv(path("train_returns.csv"));
    csv.header({"run", "episode", "return"});
    for (std::size_t r = 0; r < results.size(); ++r)
      for (std::size_t e = 0; e < results[r].train_returns.size(); ++e)
        csv.row({CsvWriter::cell(static_cast<std::int64_t>(r)),
                 CsvWriter::cell(static_cast<std::int64_t>(e) + 1),
                 CsvWriter::cell(results[r].train_returns[e])});
  }
  {
    CsvWriter csv(path("eval_returns.csv"));
    csv.header({"run", "episode", "greedy_return", "greedy_steps"});
    for (std::size_t r = 0; r < results.size(); ++r)
      for (const EvalPoint& p : results[r].evals)
        csv.row({CsvWriter::cell(static_cast<std::int64_t>(r)), CsvWriter::cell(p.episode),
                 CsvWriter::cell(p.median_return), CsvWriter::cell(p.median_steps)});
  }
  {
    CsvWriter csv(path("metrics_train.csv"));
    csv.header({"episode", "q25", "median", "q75", "runs", "diverged"});
    for (const MetricPoint& m : aggregate_train_metrics(results))
      csv.row({CsvWriter::cell(m.episode), CsvWriter::cell(m.q.q25), CsvWriter::cell(m.q.q50),
               CsvWriter::cell(m.q.q75), CsvWriter::cell(m.runs), CsvWriter::cell(m.diverged)});
  }
  {
    CsvWriter csv(path("metrics_eval.csv"));
    csv.header({"episode", "q25", "median", "q75", "runs", "diverged"});
    for (const MetricPoint& m : aggregate_eval_metrics(results))
      csv.row({CsvWriter::cell(m.episode), CsvWriter::cell(m.q.q25), CsvWriter::cell(m.q.q50),
               CsvWriter::cell(m.q.q75), CsvWriter::cell(m.runs), CsvWriter::cell(m.diverged)});
  }
  for (std::size_t r = 0; r < results.size(); ++r)
    write_model_file(path("model_run" + std::to_string(r) + ".txt"), cfg, results[r].final_model,
                     results[r].dims);

  // Final summary consumed by the table emitter.
  json summary;
  summary["environment"] = cfg.environment.name;
  summary["label"] = cfg.label.empty() ? cfg.environment.name + "-" +
                                             model_kind_name(cfg.learner.kind)
                                       : cfg.label;
  summary["algorithm"] = model_kind_name(cfg.learner.kind);
  ModelDims dims = results[0].dims;
  summary["parameters"] = count_parameters(cfg.learner.kind, dims, cfg.learner.config.rank);
  summary["rank"] = cfg.learner.config.rank;
  summary["runs"] = cfg.runs;
  summary["episodes"] = cfg.episodes;
  int diverged = 0;
  std::vector<double> finals;
  for (const RunResult& r : results) {
    if (r.diverged) {
      ++diverged;
    } else if (!r.evals.empty()) {
      finals.push_back(r.evals.back().median_return);
    }
  }
  summary["diverged_runs"] = diverged;
  if (!finals.empty())
    summary["final_median_greedy_return"] = median(finals);
  else
    summary["final_median_greedy_return"] = nullptr;
  std::ofstream out(path("summary.json"));
  out << summary.dump(2) << '\n';
}

}  // namespace lrvf
