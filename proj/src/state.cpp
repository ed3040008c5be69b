#include "cobrapp/state.hpp"

#include <cmath>

namespace cobrapp {

Incumbent make_incumbent(const Evaluation& eval) {
  Incumbent incumbent;
  incumbent.x = eval.x;
  incumbent.f = eval.f;
  incumbent.violation = eval.g.cwiseMax(0.0).sum();
  incumbent.feasible = incumbent.violation == 0.0;
  return incumbent;
}

bool dominates(const Incumbent& challenger, const Incumbent& holder) {
  if (challenger.feasible != holder.feasible) return challenger.feasible;
  if (challenger.feasible) return challenger.f < holder.f;
  if (challenger.violation != holder.violation)
    return challenger.violation < holder.violation;
  return challenger.f < holder.f;
}

StateVector extract_state(const SelectionHistory& history, const SurrogatePool& pool,
                          const Dataset& dataset, int fes, int max_fes) {
  if (dataset.empty()) throw std::invalid_argument("extract_state: dataset is empty");
  const int t = history.n_steps();

  StateVector state;
  state.per_model = Eigen::VectorXd::Zero(kPoolSize * kFeaturesPerModel);

  int total_improvements = 0;
  std::array<int, kPoolSize> improvements{};
  for (const auto& step : history.steps) {
    if (step.improved) {
      ++improvements[step.action];
      ++total_improvements;
    }
  }

  for (int i = 0; i < kPoolSize; ++i) {
    auto feature = [&](int id) -> double& {
      return state.per_model[i * kFeaturesPerModel + id - 1];
    };
    feature(1) = loo_error(pool.sets[i].kernel, dataset);
    // F2..F6: usage bits at steps t-1 .. t-5
    for (int k = 1; k <= 5; ++k) {
      const int idx = t - k;
      feature(1 + k) = (idx >= 0 && history.steps[idx].action == i) ? 1.0 : 0.0;
    }
    // F7: feasible candidates among the up-to-5 most recent steps using model i
    int used = 0;
    int successes = 0;
    for (int idx = t - 1; idx >= 0 && used < 5; --idx) {
      if (history.steps[idx].action != i) continue;
      ++used;
      if (history.steps[idx].candidate_feasible) ++successes;
    }
    feature(7) = successes / 5.0;
    feature(8) = total_improvements > 0
                     ? static_cast<double>(improvements[i]) / total_improvements
                     : 0.0;
  }

  // G1: squashed std of candidate objective values over the last min(5, t) steps
  double squashed = 0.0;
  const int window = std::min(5, t);
  if (window > 0) {
    double mean = 0.0;
    for (int idx = t - window; idx < t; ++idx) mean += history.steps[idx].candidate_f;
    mean /= window;
    double variance = 0.0;
    for (int idx = t - window; idx < t; ++idx) {
      const double delta = history.steps[idx].candidate_f - mean;
      variance += delta * delta;
    }
    const double std_dev = std::sqrt(variance / window);
    squashed = std_dev / (1.0 + std_dev);
  }
  state.global[0] = squashed;
  state.global[1] = static_cast<double>(fes) / max_fes;
  return state;
}

double compute_reward(const Incumbent& prev_incumbent, const Evaluation& new_eval) {
  const bool feasible = (new_eval.g.array() <= 0.0).all();
  return (feasible && new_eval.f < prev_incumbent.f) ? 1.0 : 0.0;
}

}  // namespace cobrapp
