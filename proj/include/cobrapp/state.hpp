#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cobrapp/surrogate.hpp"

namespace cobrapp {

inline constexpr int kFeaturesPerModel = 8;
inline constexpr int kGlobalFeatures = 2;
inline constexpr int kStateDim = kPoolSize * kFeaturesPerModel + kGlobalFeatures;  // 90
inline constexpr const char* kFeatureSchema = "v1";

struct SelectionHistory {
  struct StepInfo {
    int action = 0;
    bool candidate_feasible = false;
    bool improved = false;  // reward predicate held for this step
    double candidate_f = 0.0;
  };
  std::vector<StepInfo> steps;

  int n_steps() const { return static_cast<int>(steps.size()); }
};

struct StateVector {
  Eigen::VectorXd per_model;  // 11 x 8, model-major
  Eigen::Vector2d global;

  Eigen::VectorXd flatten() const {
    Eigen::VectorXd flat(kStateDim);
    flat.head(per_model.size()) = per_model;
    flat.tail(kGlobalFeatures) = global;
    return flat;
  }

  double feature(int model, int feature_id) const {  // feature_id 1..8
    return per_model[model * kFeaturesPerModel + feature_id - 1];
  }
};

struct Transition {
  StateVector state;
  int action = 0;
  double reward = 0.0;
  StateVector next_state;
  bool terminal = false;
};

struct Incumbent {
  Eigen::VectorXd x;
  double f = 0.0;
  double violation = 0.0;  // sum_j max(g_j, 0)
  bool feasible = false;
};

Incumbent make_incumbent(const Evaluation& eval);
// feasible beats infeasible; among feasible lower f; among infeasible lower
// violation, ties by lower f
bool dominates(const Incumbent& challenger, const Incumbent& holder);

StateVector extract_state(const SelectionHistory& history, const SurrogatePool& pool,
                          const Dataset& dataset, int fes, int max_fes);

double compute_reward(const Incumbent& prev_incumbent, const Evaluation& new_eval);

}  // namespace cobrapp
