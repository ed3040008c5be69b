#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cobrapp/config.hpp"

namespace fs = std::filesystem;
using namespace cobrapp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

CliConfig load_config(const std::string& config_path) {
  return config_path.empty() ? CliConfig{} : CliConfig::from_file(config_path);
}

void write_run_outputs(const fs::path& out_dir, const BenchOutput& output) {
  fs::create_directories(out_dir / "traces");
  std::ofstream runs(out_dir / "runs.csv");
  if (!runs) throw std::runtime_error("cannot write runs.csv");
  runs << "problem,budget,algorithm,repeat,ri\n";
  std::size_t trace_index = 0;
  for (const auto& cell : output.table.cells) {
    for (int repeat = 0; repeat < cell.n_runs(); ++repeat, ++trace_index) {
      const auto& value = cell.ri_values[repeat];
      runs << cell.problem << ',' << cell.budget << ',' << cell.algorithm << ',' << repeat
           << ',' << (value ? format_double(*value) : "none") << '\n';
      std::string name = cell.problem + "_" + std::to_string(cell.budget) + "_" +
                         cell.algorithm + "_" + std::to_string(repeat) + ".csv";
      for (auto& c : name)
        if (c == ':') c = '-';
      write_trace_csv_file((out_dir / "traces" / name).string(),
                           output.traces[trace_index]);
    }
  }
  write_report_csv((out_dir / "report.csv").string(), output.table);
  write_ranks_csv((out_dir / "ranks.csv").string(), output.table);
  write_phase_freq_csv((out_dir / "phase_freq.csv").string(),
                       phase_frequencies(output.traces));
  write_text_file(out_dir / "grid.txt", render_grid(output.table));
}

int cmd_train(const std::string& config_path, const CliConfig& cfg,
              const std::string& out_dir) {
  fs::create_directories(out_dir);
  (void)config_path;
  const TrainConfig train_cfg = cfg.to_train_config();
  const TrainResult result = train_policy(train_cfg);
  CheckpointMeta meta;
  meta.epochs = cfg.epochs;
  meta.seed = cfg.seed;
  meta.epsilon = result.reports.empty() ? 1.0 : result.reports.back().epsilon_end;
  save_checkpoint(result.net, meta, (fs::path(out_dir) / "checkpoint.json").string());
  write_epochs_csv((fs::path(out_dir) / "epochs.csv").string(), result.reports);
  write_text_file(fs::path(out_dir) / "config.toml", cfg.render());
  std::cout << "trained " << cfg.epochs << " epochs; checkpoint at " << out_dir
            << "/checkpoint.json\n";
  return kExitOk;
}

int cmd_run(const CliConfig& cfg, const std::string& baseline, const std::string& policy_path,
            const std::string& problem_text, int budget, std::uint64_t seed,
            const std::string& trace_path) {
  ModelSelector selector = ModelSelector::fixed(0);
  if (!policy_path.empty()) {
    auto net = std::make_shared<QNetwork>(load_checkpoint(policy_path));
    selector = ModelSelector::learned(net);
  } else if (!baseline.empty()) {
    selector = ModelSelector::parse(baseline);
  } else {
    throw std::invalid_argument("run: need --baseline or --policy");
  }

  const ProblemSpec spec = parse_problem_spec(problem_text, seed);
  const ConstrainedProblem problem = make_problem(spec);
  const RunTrace trace =
      run_cobra(problem, selector.as_select_fn(), budget, cfg.cobra, seed, cfg.n0);
  if (!trace_path.empty()) write_trace_csv_file(trace_path, trace);

  const Incumbent& best = trace.steps.back().incumbent;
  const auto ri_value = run_ri(trace, problem.f_star);
  std::cout << "best_f=" << format_double(best.f) << " feasible=" << (best.feasible ? 1 : 0)
            << " RI=" << (ri_value ? format_double(*ri_value) : "none") << '\n';
  return kExitOk;
}

int cmd_bench(const CliConfig& cfg, const std::string& suite, const std::string& algos,
              const std::string& policy_path, const std::string& out_dir) {
  BenchConfig bench_cfg;
  bench_cfg.problems = expand_suite(suite, cfg.bench_dim, cfg.seed);
  std::istringstream algo_stream(algos);
  std::string token;
  while (std::getline(algo_stream, token, ',')) {
    if (token.empty()) continue;
    if (token == "learned") {
      if (policy_path.empty())
        throw std::invalid_argument("bench: learned algorithm requires --policy");
      auto net = std::make_shared<QNetwork>(load_checkpoint(policy_path));
      bench_cfg.algorithms.push_back(ModelSelector::learned(net));
    } else {
      bench_cfg.algorithms.push_back(ModelSelector::parse(token));
    }
  }
  if (bench_cfg.algorithms.empty()) throw std::invalid_argument("bench: empty algorithm list");
  bench_cfg.budgets = cfg.budgets;
  bench_cfg.repeats = cfg.repeats;
  bench_cfg.n0 = cfg.n0;
  bench_cfg.seed = cfg.seed;
  bench_cfg.cobra = cfg.cobra;

  const BenchOutput output = run_benchmark(bench_cfg);
  fs::create_directories(out_dir);
  write_run_outputs(out_dir, output);
  write_text_file(fs::path(out_dir) / "config.toml", cfg.render());
  std::cout << render_grid(output.table);
  return kExitOk;
}

// Rebuilds report.csv / ranks.csv / grid.txt from a bench output directory's
// raw runs.csv (phase_freq.csv needs the traces and is left untouched).
int cmd_report(const std::string& in_dir) {
  std::ifstream runs(fs::path(in_dir) / "runs.csv");
  if (!runs) throw std::invalid_argument("report: missing runs.csv in " + in_dir);
  std::string line;
  std::getline(runs, line);  // header
  std::map<std::tuple<std::string, int, std::string>, ResultCell> cells;
  while (std::getline(runs, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string problem, budget_text, algorithm, repeat_text, ri_text;
    std::getline(fields, problem, ',');
    std::getline(fields, budget_text, ',');
    std::getline(fields, algorithm, ',');
    std::getline(fields, repeat_text, ',');
    std::getline(fields, ri_text, ',');
    const int budget = std::stoi(budget_text);
    auto& cell = cells[{problem, budget, algorithm}];
    cell.problem = problem;
    cell.budget = budget;
    cell.algorithm = algorithm;
    cell.ri_values.push_back(ri_text == "none" ? std::nullopt
                                               : std::optional<double>(std::stod(ri_text)));
  }
  std::vector<ResultCell> flat;
  for (auto& [key, cell] : cells) flat.push_back(std::move(cell));
  const ResultsTable table = aggregate(std::move(flat));
  write_report_csv((fs::path(in_dir) / "report.csv").string(), table);
  write_ranks_csv((fs::path(in_dir) / "ranks.csv").string(), table);
  write_text_file(fs::path(in_dir) / "grid.txt", render_grid(table));
  std::cout << render_grid(table);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"COBRA++ surrogate-assisted constrained optimization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "results";
  std::string baseline, policy_path, problem_text, suite, algos, in_dir;
  int budget = 100;
  std::int64_t seed_flag = -1;
  int epochs_flag = -1;
  int repeats_flag = -1;
  int dim_flag = -1;
  std::vector<int> budgets_flag;
  std::string trace_path;

  auto* train = app.add_subcommand("train", "train the selection policy");
  train->add_option("--config", config_path);
  train->add_option("--seed", seed_flag);
  train->add_option("--epochs", epochs_flag);
  train->add_option("--budget", budget)->default_val(100);
  train->add_option("--out", out_dir);

  auto* run = app.add_subcommand("run", "single optimization run");
  run->add_option("--config", config_path);
  run->add_option("--baseline", baseline);
  run->add_option("--policy", policy_path);
  run->add_option("--problem", problem_text)->required();
  run->add_option("--budget", budget)->default_val(100);
  run->add_option("--seed", seed_flag);
  run->add_option("--trace", trace_path);

  auto* bench = app.add_subcommand("bench", "benchmark grid of runs");
  bench->add_option("--config", config_path);
  bench->add_option("--suite", suite)->default_val("test");
  bench->add_option("--algos", algos)->required();
  bench->add_option("--policy", policy_path);
  bench->add_option("--budgets", budgets_flag);
  bench->add_option("--repeats", repeats_flag);
  bench->add_option("--dim", dim_flag);
  bench->add_option("--seed", seed_flag);
  bench->add_option("--out", out_dir);

  auto* report = app.add_subcommand("report", "rebuild reports from raw runs");
  report->add_option("--in", in_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& error) {
    const int code = app.exit(error);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    CliConfig cfg = load_config(config_path);
    if (seed_flag >= 0) cfg.seed = static_cast<std::uint64_t>(seed_flag);
    if (epochs_flag >= 0) cfg.epochs = epochs_flag;
    if (repeats_flag >= 0) cfg.repeats = repeats_flag;
    if (dim_flag >= 0) cfg.bench_dim = dim_flag;
    if (!budgets_flag.empty()) cfg.budgets = budgets_flag;
    if (train->parsed() && train->count("--budget")) cfg.train_budget = budget;

    if (train->parsed()) return cmd_train(config_path, cfg, out_dir);
    if (run->parsed())
      return cmd_run(cfg, baseline, policy_path, problem_text, budget, cfg.seed, trace_path);
    if (bench->parsed()) return cmd_bench(cfg, suite, algos, policy_path, out_dir);
    if (report->parsed()) return cmd_report(in_dir);
    return kExitUsage;
  } catch (const std::invalid_argument& error) {
    std::cerr << "error: " << error.what() << '\n';
    return kExitUsage;
  } catch (const CheckpointError& error) {
    std::cerr << "error: " << error.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << '\n';
    return kExitRuntime;
  }
}
