#include "cobrapp/cobra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace cobrapp {

namespace {

struct EffectiveConfig {
  double margin;
  int inner_budget;
  int restarts;
  double duplicate_tol;
};

EffectiveConfig resolve(const CobraConfig& cfg, int dim, double range) {
  EffectiveConfig eff;
  eff.margin = cfg.margin >= 0.0 ? cfg.margin : 1e-4 * range;
  eff.inner_budget = cfg.inner_budget > 0 ? cfg.inner_budget : 200 * dim;
  eff.inner_budget = std::max(eff.inner_budget, 10 * dim);
  eff.restarts = std::max(cfg.restarts, 1);
  eff.duplicate_tol = cfg.duplicate_tol > 0.0 ? cfg.duplicate_tol : 1e-8 * dim * range;
  return eff;
}

Eigen::VectorXd clamp_to_box(Eigen::VectorXd x, double lower, double upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// Bounded Nelder-Mead: every vertex is projected onto the box. Returns the
// best vertex after at most max_evals objective calls.
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& x0, double lower, double upper,
                            int max_evals) {
  const int d = static_cast<int>(x0.size());
  const double range = upper - lower;
  int evals = 0;
  auto evaluate = [&](const Eigen::VectorXd& x) {
    ++evals;
    return fn(x);
  };

  std::vector<Eigen::VectorXd> vertices;
  std::vector<double> values;
  vertices.push_back(clamp_to_box(x0, lower, upper));
  values.push_back(evaluate(vertices[0]));
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd v = vertices[0];
    const double step = 0.05 * range;
    v[i] = v[i] + step <= upper ? v[i] + step : v[i] - step;
    vertices.push_back(clamp_to_box(v, lower, upper));
    values.push_back(evaluate(vertices.back()));
  }

  std::vector<int> order(d + 1);
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
    const int best = order[0];
    const int worst = order[d];
    const int second_worst = order[d - 1];

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (int i = 0; i <= d; ++i)
      if (i != worst) centroid += vertices[i];
    centroid /= d;

    const Eigen::VectorXd reflected =
        clamp_to_box(centroid + (centroid - vertices[worst]), lower, upper);
    const double reflected_value = evaluate(reflected);

    if (reflected_value < values[best]) {
      const Eigen::VectorXd expanded =
          clamp_to_box(centroid + 2.0 * (centroid - vertices[worst]), lower, upper);
      const double expanded_value = evaluate(expanded);
      if (expanded_value < reflected_value) {
        vertices[worst] = expanded;
        values[worst] = expanded_value;
      } else {
        vertices[worst] = reflected;
        values[worst] = reflected_value;
      }
    } else if (reflected_value < values[second_worst]) {
      vertices[worst] = reflected;
      values[worst] = reflected_value;
    } else {
      const Eigen::VectorXd contracted =
          clamp_to_box(centroid + 0.5 * (vertices[worst] - centroid), lower, upper);
      const double contracted_value = evaluate(contracted);
      if (contracted_value < values[worst]) {
        vertices[worst] = contracted;
        values[worst] = contracted_value;
      } else {
        // shrink toward the best vertex
        for (int i = 0; i <= d; ++i) {
          if (i == best) continue;
          vertices[i] = clamp_to_box(vertices[best] + 0.5 * (vertices[i] - vertices[best]),
                                     lower, upper);
          values[i] = evaluate(vertices[i]);
          if (evals >= max_evals) break;
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= d; ++i)
    if (values[i] < values[best]) best = i;
  return vertices[best];
}

double surrogate_violation(const SurrogateSet& set, const Eigen::VectorXd& x) {
  double total = 0.0;
  for (const auto& model : set.constraints) {
    const double g = model.predict(x);
    if (g > 0.0) total += g * g;
  }
  return total;
}

Eigen::VectorXd random_in_box(int dim, double lower, double upper, Rng& rng) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = rng.uniform(lower, upper);
  return x;
}

}  // namespace

Eigen::VectorXd stage1_repair(const SurrogateSet& set, const Eigen::VectorXd& start,
                              double lower, double upper, const CobraConfig& cfg, Rng& rng) {
  const int d = static_cast<int>(start.size());
  const EffectiveConfig eff = resolve(cfg, d, upper - lower);
  auto objective = [&](const Eigen::VectorXd& x) { return surrogate_violation(set, x); };

  Eigen::VectorXd best = clamp_to_box(start, lower, upper);
  double best_value = objective(best);
  for (int r = 0; r < eff.restarts && best_value > 0.0; ++r) {
    const Eigen::VectorXd x0 = r == 0 ? best : random_in_box(d, lower, upper, rng);
    const Eigen::VectorXd candidate = nelder_mead(objective, x0, lower, upper, eff.inner_budget);
    const double value = objective(candidate);
    if (value < best_value) {
      best = candidate;
      best_value = value;
    }
  }
  return best;
}

Eigen::VectorXd stage2_improve(const SurrogateSet& set, const Eigen::VectorXd& start,
                               double lower, double upper, const CobraConfig& cfg, Rng& rng) {
  const int d = static_cast<int>(start.size());
  const EffectiveConfig eff = resolve(cfg, d, upper - lower);
  const double margin = eff.margin;

  bool found_feasible = false;
  Eigen::VectorXd best_feasible;
  double best_feasible_f = 0.0;

  auto penalized = [&](const Eigen::VectorXd& x, double rho) {
    const double f_hat = set.objective.predict(x);
    double penalty = 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& model : set.constraints) {
      const double shifted = model.predict(x) + margin;
      worst = std::max(worst, shifted);
      if (shifted > 0.0) penalty += shifted * shifted;
    }
    if (worst <= 1e-9 && (!found_feasible || f_hat < best_feasible_f)) {
      found_feasible = true;
      best_feasible = x;
      best_feasible_f = f_hat;
    }
    return f_hat + rho * penalty;
  };

  for (int r = 0; r < eff.restarts; ++r) {
    const double rho = 1e3 * std::pow(10.0, r);
    auto objective = [&](const Eigen::VectorXd& x) { return penalized(x, rho); };
    const Eigen::VectorXd x0 =
        r == 0 ? clamp_to_box(start, lower, upper)
               : (found_feasible && r % 2 == 0 ? best_feasible
                                               : random_in_box(d, lower, upper, rng));
    nelder_mead(objective, x0, lower, upper, eff.inner_budget);
  }

  if (found_feasible) return best_feasible;
  return stage1_repair(set, start, lower, upper, cfg, rng);
}

StepResult cobra_step(const ConstrainedProblem& problem, const SurrogatePool& pool,
                      int action, const Incumbent& incumbent, Dataset& dataset,
                      const CobraConfig& cfg, double margin, EvalCounter& counter, Rng& rng) {
  if (action < 0 || action >= kPoolSize)
    throw std::invalid_argument("cobra_step: action out of range");
  if (counter.exhausted()) throw BudgetExhausted("cobra_step: no budget left");

  const SurrogateSet& set = pool.sets[action];
  const int d = problem.dim();
  const double range = problem.upper - problem.lower;
  CobraConfig step_cfg = cfg;
  step_cfg.margin = margin;
  const EffectiveConfig eff = resolve(step_cfg, d, range);

  StepResult result;
  result.used_stage2 = incumbent.feasible;
  Eigen::VectorXd candidate =
      incumbent.feasible
          ? stage2_improve(set, incumbent.x, problem.lower, problem.upper, step_cfg, rng)
          : stage1_repair(set, incumbent.x, problem.lower, problem.upper, step_cfg, rng);

  // min-distance filter against the archive
  auto min_distance = [&](const Eigen::VectorXd& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& eval : dataset) best = std::min(best, (x - eval.x).norm());
    return best;
  };
  const double nudge = std::max(10.0 * eff.duplicate_tol, 1e-6 * range);
  for (int tries = 0; tries < 100 && min_distance(candidate) <= eff.duplicate_tol; ++tries) {
    Eigen::VectorXd perturbed = candidate;
    for (int i = 0; i < d; ++i) perturbed[i] += nudge * rng.normal();
    candidate = clamp_to_box(perturbed, problem.lower, problem.upper);
  }

  if (result.used_stage2) {
    bool margin_ok = true;
    for (const auto& model : set.constraints)
      margin_ok = margin_ok && model.predict(candidate) + eff.margin <= 1e-9;
    result.stage2_margin_ok = margin_ok;
  }

  result.eval = evaluate(problem, candidate, counter);
  dataset.push_back(result.eval);
  const Incumbent challenger = make_incumbent(result.eval);
  result.incumbent = dominates(challenger, incumbent) ? challenger : incumbent;
  return result;
}

RunTrace run_cobra(const ConstrainedProblem& problem, const SelectFn& selector, int budget,
                   CobraConfig cfg, std::uint64_t seed, int n0,
                   const TransitionFn& on_transition) {
  const int d = problem.dim();
  if (n0 < 0) n0 = default_initial_design_size(d, budget);
  if (budget <= n0) throw std::invalid_argument("run_cobra: budget must exceed n0");
  const double range = problem.upper - problem.lower;

  Rng root(seed);
  Rng design_rng = root.split("design");
  Rng step_rng = root.split("step");
  Rng select_rng = root.split("select");

  EvalCounter counter(budget);
  RunTrace trace;
  trace.spec = problem.spec;
  trace.n0 = n0;
  trace.budget = budget;
  trace.seed = seed;

  Dataset dataset = initial_design(problem, n0, design_rng, counter);
  trace.initial = dataset;

  Incumbent incumbent = make_incumbent(dataset[0]);
  for (std::size_t j = 1; j < dataset.size(); ++j) {
    const Incumbent challenger = make_incumbent(dataset[j]);
    if (dominates(challenger, incumbent)) incumbent = challenger;
  }

  double margin = cfg.margin >= 0.0 ? cfg.margin : 1e-4 * range;
  SurrogatePool pool = fit_pool(dataset);
  SelectionHistory history;
  StateVector state = extract_state(history, pool, dataset, counter.used(), budget);

  int step = 0;
  while (!counter.exhausted()) {
    ++step;
    const int action = selector(state, pool, select_rng);
    const Incumbent previous = incumbent;
    StepResult result =
        cobra_step(problem, pool, action, incumbent, dataset, cfg, margin, counter, step_rng);
    incumbent = result.incumbent;
    const double reward = compute_reward(previous, result.eval);

    if (result.used_stage2) {
      margin = result.eval.feasible
                   ? std::max(cfg.margin_floor, margin * cfg.margin_shrink)
                   : margin * cfg.margin_grow;
    }

    history.steps.push_back(
        {action, result.eval.feasible, reward == 1.0, result.eval.f});
    pool = fit_pool(dataset);

    const bool terminal = counter.exhausted();
    StateVector next_state;
    if (!terminal || on_transition) {
      next_state = extract_state(history, pool, dataset, counter.used(), budget);
    }
    if (on_transition) on_transition(state, action, reward, next_state, terminal);

    StepRecord record;
    record.step = step;
    record.fes = counter.used();
    record.action = action;
    record.reward = reward;
    record.candidate = result.eval.x;
    record.eval = result.eval;
    record.incumbent = incumbent;
    trace.steps.push_back(std::move(record));

    state = std::move(next_state);
  }
  return trace;
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "step,fes,action,reward,f,violation,feasible,best_f,best_feasible\n";
  for (const auto& record : trace.steps) {
    const double violation = record.eval.g.cwiseMax(0.0).sum();
    out << record.step << ',' << record.fes << ',' << record.action << ','
        << format_double(record.reward) << ',' << format_double(record.eval.f) << ','
        << format_double(violation) << ',' << (record.eval.feasible ? 1 : 0) << ','
        << format_double(record.incumbent.f) << ',' << (record.incumbent.feasible ? 1 : 0)
        << '\n';
  }
}

void write_trace_csv_file(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
  write_trace_csv(out, trace);
}

}  // namespace cobrapp
