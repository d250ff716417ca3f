// Command-line front end: seeded training runs, model evaluation, and the
// spectrum/sweep/policy analyses, all emitting schema-versioned CSV files.

#include "lrvf/analysis.hpp"
#include "lrvf/config.hpp"
#include "lrvf/experiment.hpp"
#include "lrvf/gridworld.hpp"
#include "lrvf/mdp.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace lrvf;

namespace {

DenseTensor tensor_from_q_matrix(const Mat& q, const ModelDims& dims) {
  std::vector<int> tensor_dims = dims.state_sizes;
  tensor_dims.insert(tensor_dims.end(), dims.action_sizes.begin(), dims.action_sizes.end());
  DenseTensor t(tensor_dims);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      t.data.data(), q.rows(), q.cols()) = q;
  return t;
}

// Minimal config wrapper so gridworld solutions share the model file format.
ExperimentConfig gridworld_config(const std::string& layout_file, double discount, double slip) {
  json j;
  j["environment"] = {{"name", "gridworld"},
                      {"layout_file", layout_file},
                      {"discount", discount},
                      {"slip", slip}};
  j["learner"] = {{"kind", "qtable"},
                  {"discount", discount},
                  {"step_size", {{"kind", "constant"}, {"value", 0.1}}}};
  j["episodes"] = 1;
  return parse_experiment_config(j);
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed, std::optional<int> runs) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed) {
    cfg.base_seed = *seed;
    cfg.raw["base_seed"] = *seed;
  }
  if (runs) {
    cfg.runs = *runs;
    cfg.raw["runs"] = *runs;
  }
  cfg.validate();
  std::vector<RunResult> results = run_experiment(cfg);
  write_experiment_csvs(cfg, results, out_dir);
  int diverged = 0;
  for (const RunResult& r : results) diverged += r.diverged ? 1 : 0;
  std::cout << "trained " << results.size() << " run(s), " << diverged << " diverged; outputs in "
            << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model_path, int episodes, std::uint64_t seed,
                 const std::string& out_dir) {
  LoadedModel loaded = load_model_file(model_path);
  std::unique_ptr<Task> task = make_task(loaded.config);
  auto [ret, steps] = evaluate_greedy(loaded.model, loaded.dims, *task, episodes, seed);
  std::cout << "median greedy return " << format_double(ret) << ", median steps "
            << format_double(steps) << " over " << episodes << " episode(s)\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    CsvWriter csv((fs::path(out_dir) / "evaluate.csv").string());
    csv.header({"episodes", "median_return", "median_steps"});
    csv.row({CsvWriter::cell(episodes), CsvWriter::cell(ret), CsvWriter::cell(steps)});
  }
  return 0;
}

int cmd_analyze_svd(const std::string& model_path, const std::string& gridworld_path,
                    double discount, const std::string& out_dir) {
  Mat q;
  if (!model_path.empty()) {
    LoadedModel loaded = load_model_file(model_path);
    q = model_q_matrix(loaded.model, loaded.dims);
  } else {
    GridworldSpec spec = load_grid_file(gridworld_path);
    spec.discount = discount;
    TabularMdp mdp = build_gridworld(spec);
    auto [policy, value] = policy_iteration(mdp);
    q = value.unvec(mdp.num_states, mdp.num_actions);
  }
  SvdAnalysis analysis = analyze_svd(q);
  write_svd_csv(analysis, out_dir);
  std::cout << "effective rank at 0.90 energy: " << analysis.effective_rank_090
            << ", at 0.99: " << analysis.effective_rank_099 << "\n";
  return 0;
}

int cmd_parafac_sweep(const std::string& model_path, const std::vector<int>& ranks, int max_iters,
                      double tol, int restarts, std::uint64_t seed, const std::string& out_dir) {
  LoadedModel loaded = load_model_file(model_path);
  DenseTensor t = tensor_from_q_matrix(model_q_matrix(loaded.model, loaded.dims), loaded.dims);
  std::vector<SweepRow> rows = parafac_sweep(t, ranks, max_iters, tol, seed, restarts);
  fs::create_directories(out_dir);
  write_sweep_csv(rows, (fs::path(out_dir) / "parafac_sweep.csv").string());
  for (const SweepRow& r : rows)
    std::cout << "rank " << r.rank << ": NFE " << format_double(r.nfe) << "\n";
  return 0;
}

int cmd_tsvd_policy_test(const std::string& model_path, std::vector<int> ranks, int episodes,
                         std::uint64_t seed, const std::string& out_dir) {
  LoadedModel loaded = load_model_file(model_path);
  std::unique_ptr<Task> task = make_task(loaded.config);
  Mat q = model_q_matrix(loaded.model, loaded.dims);
  if (ranks.empty())
    for (int k = 1; k <= std::min(q.rows(), q.cols()); ++k) ranks.push_back(k);
  double reference = 0.0;
  std::vector<TsvdPolicyRow> rows =
      tsvd_policy_test(q, loaded.dims, *task, ranks, episodes, seed, &reference);
  fs::create_directories(out_dir);
  write_tsvd_policy_csv(rows, reference, (fs::path(out_dir) / "tsvd_policy.csv").string());
  for (const TsvdPolicyRow& r : rows)
    std::cout << "rank " << r.rank << ": NCRE "
              << (r.ncre_defined ? format_double(r.ncre_value) : std::string("NA")) << "\n";
  return 0;
}

int cmd_policy_iteration(const std::string& gridworld_path, double discount, double slip,
                         const std::string& out_dir) {
  GridworldSpec spec = load_grid_file(gridworld_path);
  spec.discount = discount;
  spec.slip = slip;
  TabularMdp mdp = build_gridworld(spec);
  auto [policy, value] = policy_iteration(mdp);
  fs::create_directories(out_dir);
  {
    CsvWriter csv((fs::path(out_dir) / "policy.csv").string());
    csv.header({"state", "action", "value"});
    const Mat q = value.unvec(mdp.num_states, mdp.num_actions);
    const std::vector<int> actions = policy.greedy_actions();
    for (int s = 0; s < mdp.num_states; ++s)
      csv.row({CsvWriter::cell(s), CsvWriter::cell(actions[s]), CsvWriter::cell(q(s, actions[s]))});
  }
  ExperimentConfig cfg = gridworld_config(gridworld_path, discount, slip);
  ModelDims dims{{mdp.num_states}, {mdp.num_actions}};
  write_model_file((fs::path(out_dir) / "model_qstar.txt").string(), cfg,
                   QTable{value.unvec(mdp.num_states, mdp.num_actions)}, dims);
  std::cout << "Bellman optimality residual: "
            << format_double(bellman_optimality_residual(mdp, value)) << "\n";
  return 0;
}

int cmd_emit_table(const std::vector<std::string>& run_dirs, const std::string& out_file) {
  std::vector<TableRow> rows;
  for (const std::string& dir : run_dirs) {
    std::ifstream in(fs::path(dir) / "summary.json");
    if (!in) fail("emit-table: no summary.json in " + dir);
    rows.push_back(table_row_from_summary(json::parse(in)));
  }
  emit_table(rows, out_file);
  std::cout << "wrote " << rows.size() << " row(s) to " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank state-action value function training and analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", model_path, gridworld_path, out_file;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int runs = 0, episodes = 20, max_iters = 500, restarts = 3;
  double discount = 0.9, slip = 0.0, tol = 1e-10;
  std::vector<int> ranks;
  std::vector<std::string> run_dirs;

  CLI::App* train = app.add_subcommand("train", "Run seeded training per a config file");
  train->add_option("--config", config_path, "Experiment config JSON")->required();
  train->add_option("--out", out_dir, "Output directory");
  train->add_option("--seed", seed, "Override base_seed")->each([&](const std::string&) { seed_set = true; });
  train->add_option("--runs", runs, "Override run count");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Greedy-evaluate a saved model");
  evaluate->add_option("--model", model_path, "Model file")->required();
  evaluate->add_option("--episodes", episodes, "Evaluation episodes");
  evaluate->add_option("--seed", seed, "Evaluation seed");
  evaluate->add_option("--out", out_dir, "Optional output directory")->default_val("");

  CLI::App* asvd = app.add_subcommand("analyze-svd", "Singular-value spectrum of a Q matrix");
  asvd->add_option("--model", model_path, "Model file");
  asvd->add_option("--gridworld", gridworld_path, "Gridworld layout file (exact Q* source)");
  asvd->add_option("--gamma", discount, "Discount for the gridworld solve");
  asvd->add_option("--out", out_dir, "Output directory");

  CLI::App* sweep = app.add_subcommand("parafac-sweep", "PARAFAC fit error per rank");
  sweep->add_option("--model", model_path, "Model file (Q tensor source)")->required();
  sweep->add_option("--ranks", ranks, "Ascending ranks")->required()->delimiter(',');
  sweep->add_option("--max-iters", max_iters, "ALS sweep cap");
  sweep->add_option("--tol", tol, "Relative NFE improvement stop");
  sweep->add_option("--restarts", restarts, "Seeded restarts per rank");
  sweep->add_option("--seed", seed, "Base seed for factor inits");
  sweep->add_option("--out", out_dir, "Output directory");

  CLI::App* tsvdtest = app.add_subcommand("tsvd-policy-test",
                                          "NCRE of policies from rank-truncated Q matrices");
  tsvdtest->add_option("--model", model_path, "Model file")->required();
  tsvdtest->add_option("--ranks", ranks, "Ranks (default: all)")->delimiter(',');
  tsvdtest->add_option("--episodes", episodes, "Evaluation episodes per rank");
  tsvdtest->add_option("--seed", seed, "Evaluation seed");
  tsvdtest->add_option("--out", out_dir, "Output directory");

  CLI::App* pit = app.add_subcommand("policy-iteration", "Solve a gridworld exactly");
  pit->add_option("--gridworld", gridworld_path, "Layout file")->required();
  pit->add_option("--gamma", discount, "Discount");
  pit->add_option("--slip", slip, "Slip probability in [0, 0.5]");
  pit->add_option("--out", out_dir, "Output directory");

  CLI::App* table = app.add_subcommand("emit-table", "Collect training summaries into one CSV");
  table->add_option("--out", out_file, "Output CSV file")->required();
  table->add_option("dirs", run_dirs, "Training output directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(config_path, out_dir,
                       seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                       runs > 0 ? std::optional<int>(runs) : std::nullopt);
    if (evaluate->parsed()) return cmd_evaluate(model_path, episodes, seed, out_dir);
    if (asvd->parsed()) {
      if (model_path.empty() == gridworld_path.empty())
        fail("analyze-svd: pass exactly one of --model / --gridworld");
      return cmd_analyze_svd(model_path, gridworld_path, discount, out_dir);
    }
    if (sweep->parsed())
      return cmd_parafac_sweep(model_path, ranks, max_iters, tol, restarts, seed, out_dir);
    if (tsvdtest->parsed()) return cmd_tsvd_policy_test(model_path, ranks, episodes, seed, out_dir);
    if (pit->parsed()) return cmd_policy_iteration(gridworld_path, discount, slip, out_dir);
    if (table->parsed()) return cmd_emit_table(run_dirs, out_file);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
