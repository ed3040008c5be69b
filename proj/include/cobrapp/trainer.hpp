#pragma once

#include "cobrapp/bench.hpp"

namespace cobrapp {

struct TrainConfig {
  std::vector<ProblemSpec> train_set;
  int max_epochs = 10;
  int budget = 100;  // MaxFEs per episode
  int n0 = -1;       // <0 -> default 2*(dim+1) capped at budget/2
  int batch_size = 1024;
  double gamma = 0.95;
  int train_interval = 1;          // environment steps between gradient updates
  int target_sync_interval = 500;  // gradient steps between target syncs
  std::uint64_t seed = 0;
  CobraConfig cobra;
};

struct EpochReport {
  int epoch = 0;
  double total_return = 0.0;
  std::vector<double> per_problem_returns;
  double epsilon_end = 1.0;
  double mean_loss = 0.0;  // over gradient updates this epoch; 0 if none
};

struct TrainResult {
  QNetwork net;
  std::vector<EpochReport> reports;
};

TrainResult train_policy(const TrainConfig& cfg);

void write_epochs_csv(const std::string& path, const std::vector<EpochReport>& reports);

struct BenchConfig {
  std::vector<ProblemSpec> problems;
  std::vector<ModelSelector> algorithms;
  std::vector<int> budgets;
  int repeats = 5;
  int n0 = -1;
  std::uint64_t seed = 0;
  CobraConfig cobra;
};

struct BenchOutput {
  ResultsTable table;
  std::vector<RunTrace> traces;  // every run, in deterministic grid order
};

BenchOutput run_benchmark(const BenchConfig& cfg);

// Greedy (epsilon = 0) evaluation of a trained policy over problems x budgets.
BenchOutput evaluate_policy(std::shared_ptr<const QNetwork> net, std::vector<ProblemSpec> test_set,
                            std::vector<int> budgets, int repeats, std::uint64_t seed,
                            const CobraConfig& cobra = {}, int n0 = -1);

}  // namespace cobrapp
