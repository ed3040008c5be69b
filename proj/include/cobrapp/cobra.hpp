#pragma once

#include <functional>
#include <iosfwd>
#include <optional>

#include "cobrapp/state.hpp"

namespace cobrapp {

struct CobraConfig {
  double margin = -1.0;          // surrogate feasibility buffer; <0 -> 1e-4 * bounds range
  int inner_budget = 0;          // surrogate evals per stage start; 0 -> 200 * dim
  int restarts = 5;
  double duplicate_tol = -1.0;   // <0 -> 1e-8 * dim * bounds range
  double margin_grow = 2.0;
  double margin_shrink = 0.5;
  double margin_floor = 1e-6;
};

struct StepRecord {
  int step = 0;  // 1-based
  int fes = 0;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd candidate;
  Evaluation eval;
  Incumbent incumbent;
};

struct RunTrace {
  ProblemSpec spec;
  int n0 = 0;
  int budget = 0;
  std::uint64_t seed = 0;
  Dataset initial;  // the N0 design evaluations
  std::vector<StepRecord> steps;
};

// Approximate argmin of sum_j max(g_hat_j, 0)^2 over the box via multi-start
// bounded Nelder-Mead; never worse than the start.
Eigen::VectorXd stage1_repair(const SurrogateSet& set, const Eigen::VectorXd& start,
                              double lower, double upper, const CobraConfig& cfg, Rng& rng);

// Approximately minimizes f_hat subject to g_hat_j + margin <= 0 via an
// escalating quadratic penalty; falls back to stage1_repair when no
// margin-feasible point is found.
Eigen::VectorXd stage2_improve(const SurrogateSet& set, const Eigen::VectorXd& start,
                               double lower, double upper, const CobraConfig& cfg, Rng& rng);

struct StepResult {
  Evaluation eval;
  Incumbent incumbent;
  bool used_stage2 = false;
  bool stage2_margin_ok = false;  // candidate satisfied g_hat + margin <= 0
};

StepResult cobra_step(const ConstrainedProblem& problem, const SurrogatePool& pool,
                      int action, const Incumbent& incumbent, Dataset& dataset,
                      const CobraConfig& cfg, double margin, EvalCounter& counter, Rng& rng);

// Selector: (state, pool, rng) -> action in 0..10.
using SelectFn = std::function<int(const StateVector&, const SurrogatePool&, Rng&)>;
// Transition hook fired once per step (used by the trainer).
using TransitionFn =
    std::function<void(const StateVector&, int, double, const StateVector&, bool)>;

RunTrace run_cobra(const ConstrainedProblem& problem, const SelectFn& selector, int budget,
                   CobraConfig cfg, std::uint64_t seed, int n0 = -1,
                   const TransitionFn& on_transition = nullptr);

// CSV: step,fes,action,reward,f,violation,feasible,best_f,best_feasible
void write_trace_csv(std::ostream& out, const RunTrace& trace);
void write_trace_csv_file(const std::string& path, const RunTrace& trace);

std::string format_double(double value);  // 17 significant digits

}  // namespace cobrapp
