#include "cobrapp/problems.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cobrapp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct FamilyEntry {
  Family family;
  const char* name;
};

constexpr FamilyEntry kFamilies[] = {
    {Family::Sphere, "sphere"},
    {Family::Ellipsoid, "ellipsoid"},
    {Family::BentCigar, "bentcigar"},
    {Family::Rastrigin, "rastrigin"},
    {Family::LinearSlope, "linearslope"},
    {Family::EllipsoidRotated, "ellipsoidrotated"},
    {Family::Discus, "discus"},
    {Family::DifferentPowers, "differentpowers"},
    {Family::RastriginRotated, "rastriginrotated"},
};

bool is_rotated(Family family) {
  return family == Family::EllipsoidRotated || family == Family::RastriginRotated;
}

bool is_rastrigin_like(Family family) {
  return family == Family::Rastrigin || family == Family::RastriginRotated;
}

// Per-coordinate scale 10^{6 i/(d-1)} used by the ellipsoid cores.
double ellipsoid_scale(int i, int d) { return std::pow(10.0, 6.0 * i / (d - 1)); }

Eigen::MatrixXd random_rotation(int dim, Rng& rng) {
  Eigen::MatrixXd gauss(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) gauss(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix signs so the factorization is unique and Q is a proper rotation basis.
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

}  // namespace

Family parse_family(const std::string& name) {
  std::string lowered = name;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (const auto& entry : kFamilies)
    if (lowered == entry.name) return entry.family;
  throw std::invalid_argument("unknown problem family: " + name);
}

std::string family_name(Family family) {
  for (const auto& entry : kFamilies)
    if (entry.family == family) return entry.name;
  throw std::invalid_argument("unknown family enum value");
}

ProblemSpec parse_problem_spec(const std::string& text, std::uint64_t seed) {
  std::istringstream in(text);
  std::string family_part, instance_part, dim_part;
  if (!std::getline(in, family_part, ':') || !std::getline(in, instance_part, ':') ||
      !std::getline(in, dim_part, ':')) {
    throw std::invalid_argument("problem spec must be <family>:<instance>:<dim>, got: " + text);
  }
  ProblemSpec spec;
  spec.family = parse_family(family_part);
  spec.instance = std::stoi(instance_part);
  spec.dim = std::stoi(dim_part);
  spec.seed = seed;
  if (spec.instance < 1 || spec.instance > 6)
    throw std::invalid_argument("instance must be in 1..6, got " + instance_part);
  if (spec.dim < 2) throw std::invalid_argument("dim must be >= 2, got " + dim_part);
  return spec;
}

std::string problem_spec_name(const ProblemSpec& spec) {
  return family_name(spec.family) + ":" + std::to_string(spec.instance) + ":" +
         std::to_string(spec.dim);
}

double core_value(Family family, const Eigen::VectorXd& y) {
  const int d = static_cast<int>(y.size());
  switch (family) {
    case Family::Sphere:
      return y.squaredNorm();
    case Family::Ellipsoid:
    case Family::EllipsoidRotated: {
      double total = 0.0;
      for (int i = 0; i < d; ++i) total += ellipsoid_scale(i, d) * y[i] * y[i];
      return total;
    }
    case Family::BentCigar: {
      double total = y[0] * y[0];
      for (int i = 1; i < d; ++i) total += 1e6 * y[i] * y[i];
      return total;
    }
    case Family::Rastrigin:
    case Family::RastriginRotated: {
      double ripple = 0.0;
      for (int i = 0; i < d; ++i) ripple += std::cos(kTwoPi * y[i]);
      return y.squaredNorm() + 10.0 * (d - ripple);
    }
    case Family::LinearSlope: {
      double total = 0.0;
      for (int i = 0; i < d; ++i) total += std::pow(10.0, static_cast<double>(i) / (d - 1)) * y[i];
      return total;
    }
    case Family::Discus: {
      double total = 1e6 * y[0] * y[0];
      for (int i = 1; i < d; ++i) total += y[i] * y[i];
      return total;
    }
    case Family::DifferentPowers: {
      double total = 0.0;
      for (int i = 0; i < d; ++i)
        total += std::pow(std::abs(y[i]), 2.0 + 4.0 * i / (d - 1));
      return total;
    }
  }
  throw std::invalid_argument("unknown family enum value");
}

Eigen::VectorXd smooth_core_gradient(Family family, const Eigen::VectorXd& y) {
  const int d = static_cast<int>(y.size());
  Eigen::VectorXd grad(d);
  switch (family) {
    case Family::Sphere:
    case Family::Rastrigin:
    case Family::RastriginRotated:
      // Rastrigin constraints are anchored to the underlying quadratic core.
      return 2.0 * y;
    case Family::Ellipsoid:
    case Family::EllipsoidRotated:
      for (int i = 0; i < d; ++i) grad[i] = 2.0 * ellipsoid_scale(i, d) * y[i];
      return grad;
    case Family::BentCigar:
      grad[0] = 2.0 * y[0];
      for (int i = 1; i < d; ++i) grad[i] = 2e6 * y[i];
      return grad;
    case Family::LinearSlope:
      for (int i = 0; i < d; ++i) grad[i] = std::pow(10.0, static_cast<double>(i) / (d - 1));
      return grad;
    case Family::Discus:
      grad[0] = 2e6 * y[0];
      for (int i = 1; i < d; ++i) grad[i] = 2.0 * y[i];
      return grad;
    case Family::DifferentPowers:
      for (int i = 0; i < d; ++i) {
        const double p = 2.0 + 4.0 * i / (d - 1);
        grad[i] = p * std::pow(std::abs(y[i]), p - 1.0) * (y[i] >= 0 ? 1.0 : -1.0);
      }
      return grad;
  }
  throw std::invalid_argument("unknown family enum value");
}

double ConstrainedProblem::objective(const Eigen::VectorXd& x) const {
  return core_value(spec.family, rotation * (x - shift));
}

Eigen::VectorXd ConstrainedProblem::constraints(const Eigen::VectorXd& x) const {
  return constraint_normals * (x - x_star) + constraint_offsets;
}

bool ConstrainedProblem::in_bounds(const Eigen::VectorXd& x) const {
  return (x.array() >= lower).all() && (x.array() <= upper).all();
}

ConstrainedProblem make_problem(const ProblemSpec& spec) {
  if (spec.instance < 1 || spec.instance > 6)
    throw std::invalid_argument("instance must be in 1..6");
  if (spec.dim < 2) throw std::invalid_argument("dim must be >= 2");
  family_name(spec.family);  // validates the enum value

  const int d = spec.dim;
  Rng rng = Rng(spec.seed)
                .split("problem")
                .split(static_cast<std::uint64_t>(spec.family) * 1000 +
                       static_cast<std::uint64_t>(spec.instance) * 100 +
                       static_cast<std::uint64_t>(d));

  ConstrainedProblem p;
  p.spec = spec;
  p.n_constraints = spec.instance;  // M = instance: monotone constraint complexity

  p.shift = Eigen::VectorXd(d);
  for (int i = 0; i < d; ++i) p.shift[i] = rng.uniform(-2.0, 2.0);

  p.rotation = is_rotated(spec.family) ? random_rotation(d, rng)
                                       : Eigen::MatrixXd::Identity(d, d);

  // Transformed-space optimum y_star. Rastrigin families use a small integer
  // lattice point: the cosine ripple is minimal there, so x_star stays the
  // exact constrained optimum of the full function over the active halfspace
  // (Cauchy-Schwarz on y'y_star >= ||y_star||^2).
  Eigen::VectorXd y_star = Eigen::VectorXd::Zero(d);
  if (is_rastrigin_like(spec.family)) {
    const int first = rng.uniform_int(d);
    int second = rng.uniform_int(d);
    y_star[first] = rng.uniform() < 0.5 ? 1.0 : -1.0;
    if (second != first) y_star[second] = rng.uniform() < 0.5 ? 1.0 : -1.0;
  } else {
    Eigen::VectorXd direction(d);
    for (int i = 0; i < d; ++i) direction[i] = rng.normal();
    direction.normalize();
    y_star = rng.uniform(0.5, 1.5) * direction;
  }
  p.x_star = p.shift + p.rotation.transpose() * y_star;
  p.f_star = p.objective(p.x_star);

  // First normal: negated smooth-core gradient at x_star, making x_star a KKT
  // point with multiplier 1 on the single active constraint.
  const Eigen::VectorXd y_at_star = p.rotation * (p.x_star - p.shift);
  Eigen::VectorXd a1 = -p.rotation.transpose() * smooth_core_gradient(spec.family, y_at_star);
  if (a1.norm() < 1e-12) a1 = Eigen::VectorXd::Constant(d, -1.0);  // cannot occur off-center

  const int m = p.n_constraints;
  p.constraint_normals = Eigen::MatrixXd(m, d);
  p.constraint_offsets = Eigen::VectorXd(m);
  p.constraint_normals.row(0) = a1.transpose();
  p.constraint_offsets[0] = 0.0;  // active at x_star
  for (int j = 1; j < m; ++j) {
    Eigen::VectorXd perturbation(d);
    for (int i = 0; i < d; ++i) perturbation[i] = rng.normal();
    perturbation *= 0.4 * a1.norm() / std::max(perturbation.norm(), 1e-300);
    p.constraint_normals.row(j) = (a1 + perturbation).transpose();
    p.constraint_offsets[j] = -rng.uniform(0.1, 1.0) * a1.norm();
  }
  return p;
}

Evaluation evaluate(const ConstrainedProblem& problem, const Eigen::VectorXd& x,
                    EvalCounter& counter) {
  if (x.size() != problem.dim())
    throw std::invalid_argument("evaluate: dimension mismatch");
  if (!problem.in_bounds(x)) throw std::invalid_argument("evaluate: point outside bounds");
  counter.charge();
  Evaluation eval;
  eval.x = x;
  eval.f = problem.objective(x);
  eval.g = problem.constraints(x);
  eval.feasible = (eval.g.array() <= 0.0).all();
  eval.fes_at_eval = counter.used();
  return eval;
}

Dataset initial_design(const ConstrainedProblem& problem, int n0, Rng& rng,
                       EvalCounter& counter) {
  if (n0 < 1) throw std::invalid_argument("initial_design: n0 must be >= 1");
  if (n0 > counter.budget() - counter.used())
    throw std::invalid_argument("initial_design: n0 exceeds remaining budget");
  const int d = problem.dim();
  const double range = problem.upper - problem.lower;

  // One stratum permutation per coordinate; each of the n0 equal strata is
  // occupied exactly once.
  std::vector<std::vector<int>> strata(d);
  for (int k = 0; k < d; ++k) {
    strata[k].resize(n0);
    for (int i = 0; i < n0; ++i) strata[k][i] = i;
    for (int i = n0 - 1; i > 0; --i)
      std::swap(strata[k][i], strata[k][rng.uniform_int(i + 1)]);
  }

  Dataset design;
  design.reserve(n0);
  for (int i = 0; i < n0; ++i) {
    Eigen::VectorXd x(d);
    for (int k = 0; k < d; ++k) {
      const double offset = (strata[k][i] + rng.uniform()) / n0;
      x[k] = problem.lower + range * offset;
    }
    design.push_back(evaluate(problem, x, counter));
  }
  return design;
}

int default_initial_design_size(int dim, int budget) {
  return std::min(2 * (dim + 1), budget / 2);
}

}  // namespace cobrapp
