#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>

#include "cobrapp/cobra.hpp"
#include "cobrapp/policy.hpp"

namespace cobrapp {

// Per-step model chooser: learned policy (greedy at evaluation time) or one
// of the baselines.
struct ModelSelector {
  enum class Kind { Learned, Fixed, Random, GreedyError };
  Kind kind = Kind::Fixed;
  int fixed_index = 0;
  std::shared_ptr<const QNetwork> net;
  double epsilon = 0.0;  // only the Learned kind uses it (training-time)

  static ModelSelector learned(std::shared_ptr<const QNetwork> net, double epsilon = 0.0);
  static ModelSelector fixed(int index);
  static ModelSelector random();
  static ModelSelector greedy_error();
  // "fixed:3", "random", "greedy-error", "learned" not included (needs a net)
  static ModelSelector parse(const std::string& name);

  std::string name() const;
  SelectFn as_select_fn() const;
};

int select_baseline(const ModelSelector& selector, const StateVector& state,
                    const SurrogatePool& pool, Rng& rng);

// Relative improvement (larger is better); throws if f_best undercuts the
// optimum beyond tolerance, which indicates a broken problem generator.
double ri(double f0, double f_star, double f_best);

// RI of a finished run; nullopt when the run never found a feasible point.
std::optional<double> run_ri(const RunTrace& trace, double f_star);

struct ResultCell {
  std::string problem;
  int budget = 0;
  std::string algorithm;
  std::vector<std::optional<double>> ri_values;  // one per repeat
  int n_runs() const { return static_cast<int>(ri_values.size()); }
  int n_feasible() const;
  std::optional<double> mean_ri() const;  // over feasible runs; nullopt if none
  std::optional<double> std_ri() const;
};

struct ResultsTable {
  std::vector<ResultCell> cells;
  // average rank per (budget, algorithm), ranks computed per (problem, budget)
  struct RankRow {
    int budget = 0;
    std::string algorithm;
    double avg_rank = 0.0;
  };
  std::vector<RankRow> ranks;
};

ResultsTable aggregate(std::vector<ResultCell> cells);

// Selection counts per optimization phase (first/middle/final third of steps).
struct PhaseFrequencies {
  std::array<std::array<long, kPoolSize>, 3> counts{};
};

PhaseFrequencies phase_frequencies(const std::vector<RunTrace>& traces);

void write_report_csv(const std::string& path, const ResultsTable& table);
void write_ranks_csv(const std::string& path, const ResultsTable& table);
void write_phase_freq_csv(const std::string& path, const PhaseFrequencies& freq);
// plain-text mean +- std grid, one row per problem, one column per algorithm
std::string render_grid(const ResultsTable& table);

}  // namespace cobrapp
