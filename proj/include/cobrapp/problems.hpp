#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

#include "cobrapp/rng.hpp"

namespace cobrapp {

enum class Family {
  Sphere,
  Ellipsoid,
  BentCigar,
  Rastrigin,
  LinearSlope,
  EllipsoidRotated,
  Discus,
  DifferentPowers,
  RastriginRotated,
};

Family parse_family(const std::string& name);
std::string family_name(Family family);

struct ProblemSpec {
  Family family = Family::Sphere;
  int instance = 1;
  int dim = 2;
  std::uint64_t seed = 0;
};

// Parses "<family>:<instance>:<dim>", e.g. "sphere:1:10".
ProblemSpec parse_problem_spec(const std::string& text, std::uint64_t seed);
std::string problem_spec_name(const ProblemSpec& spec);

struct Evaluation {
  Eigen::VectorXd x;
  double f = 0.0;
  Eigen::VectorXd g;
  bool feasible = false;
  int fes_at_eval = 0;
};

using Dataset = std::vector<Evaluation>;

struct BudgetExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class EvalCounter {
 public:
  explicit EvalCounter(int budget) : budget_(budget) {}
  int used() const { return used_; }
  int budget() const { return budget_; }
  bool exhausted() const { return used_ >= budget_; }
  void charge() {
    if (exhausted()) throw BudgetExhausted("evaluation budget exhausted");
    ++used_;
  }

 private:
  int used_ = 0;
  int budget_;
};

// min f(x) s.t. g_j(x) <= 0, a <= x <= b. Constraints are linear in x,
// g_j(x) = a_j'(x - x_star) + b_j, constructed so that x_star is the
// constrained optimum (KKT point of the smooth core, first constraint
// active). Immutable after construction.
struct ConstrainedProblem {
  ProblemSpec spec;
  Eigen::VectorXd shift;             // z
  Eigen::MatrixXd rotation;          // R, orthogonal (identity unless rotated family)
  Eigen::MatrixXd constraint_normals;  // M x dim
  Eigen::VectorXd constraint_offsets;  // M, all <= 0
  double lower = -5.0;
  double upper = 5.0;
  Eigen::VectorXd x_star;
  double f_star = 0.0;
  int n_constraints = 1;

  int dim() const { return static_cast<int>(shift.size()); }
  double objective(const Eigen::VectorXd& x) const;
  Eigen::VectorXd constraints(const Eigen::VectorXd& x) const;
  bool in_bounds(const Eigen::VectorXd& x) const;
};

// Raw core value on the transformed coordinate y = R(x - z).
double core_value(Family family, const Eigen::VectorXd& y);
// Gradient of the smooth core (the quadratic part for Rastrigin families).
Eigen::VectorXd smooth_core_gradient(Family family, const Eigen::VectorXd& y);

ConstrainedProblem make_problem(const ProblemSpec& spec);

Evaluation evaluate(const ConstrainedProblem& problem, const Eigen::VectorXd& x,
                    EvalCounter& counter);

// Latin hypercube design of n0 points, each truly evaluated (consumes n0 FEs).
Dataset initial_design(const ConstrainedProblem& problem, int n0, Rng& rng,
                       EvalCounter& counter);

int default_initial_design_size(int dim, int budget);

}  // namespace cobrapp
