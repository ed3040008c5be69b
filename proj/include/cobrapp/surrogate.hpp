#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

#include "cobrapp/problems.hpp"

namespace cobrapp {

enum class KernelKind { Cubic, Multiquadric, Gaussian };

struct KernelSpec {
  KernelKind kind = KernelKind::Cubic;
  double width = 1.0;  // ignored for Cubic
};

inline constexpr int kPoolSize = 11;

// Canonical pool, index order fixed: [Cubic] then Multiquadric and Gaussian
// with widths {0.01, 0.2, 0.5, 1, 5} ascending.
const std::array<KernelSpec, kPoolSize>& canonical_pool();

double kernel_value(const KernelSpec& kernel, double r);

// Median pairwise Euclidean distance among centers (rows), floored at 1e-12;
// 1.0 for a single center.
double compute_sigma(const Eigen::MatrixXd& centers);

struct FitError : std::runtime_error {
  FitError(const std::string& what, double condition)
      : std::runtime_error(what), condition_estimate(condition) {}
  double condition_estimate;
};

struct RbfModel {
  KernelSpec kernel;
  Eigen::MatrixXd centers;     // K x dim
  double sigma = 1.0;
  Eigen::VectorXd rbf_weights;   // lambda, K
  int tail_degree = -1;          // -1 none, 0 constant, 1 constant + linear
  Eigen::VectorXd tail_weights;  // beta
  double ridge = 0.0;
  double condition_estimate = 0.0;

  double predict(const Eigen::VectorXd& x) const;
};

RbfModel fit_rbf(const KernelSpec& kernel, const Eigen::MatrixXd& samples,
                 const Eigen::VectorXd& values);

// Same centers/sigma/factorization, one model per column of values.
std::vector<RbfModel> fit_rbf_many(const KernelSpec& kernel, const Eigen::MatrixXd& samples,
                                   const Eigen::MatrixXd& values);

struct SurrogateSet {
  KernelSpec kernel;
  RbfModel objective;
  std::vector<RbfModel> constraints;
};

struct SurrogatePool {
  std::vector<SurrogateSet> sets;  // index i == action a_i
};

SurrogatePool fit_pool(const Dataset& dataset);

inline constexpr int kLooWindow = 20;

// Windowed leave-one-out generalization error of the objective model,
// normalized by the objective range over the dataset and clipped to [0, 1].
double loo_error(const KernelSpec& kernel, const Dataset& dataset, int window = kLooWindow);

}  // namespace cobrapp
