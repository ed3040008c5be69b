#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cobrapp/problems.hpp"

using namespace cobrapp;

namespace {

std::vector<Family> all_families() {
  return {Family::Sphere,          Family::Ellipsoid, Family::BentCigar,
          Family::Rastrigin,       Family::LinearSlope, Family::EllipsoidRotated,
          Family::Discus,          Family::DifferentPowers, Family::RastriginRotated};
}

}  // namespace

TEST_CASE("spec parsing round trip and errors") {
  const ProblemSpec spec = parse_problem_spec("sphere:1:10", 7);
  CHECK(spec.family == Family::Sphere);
  CHECK(spec.instance == 1);
  CHECK(spec.dim == 10);
  CHECK(problem_spec_name(spec) == "sphere:1:10");
  CHECK_THROWS_AS(parse_family("Ackley"), std::invalid_argument);
  CHECK_THROWS_AS(parse_problem_spec("sphere:0:10", 7), std::invalid_argument);
  CHECK_THROWS_AS(parse_problem_spec("sphere:7:10", 7), std::invalid_argument);
  CHECK_THROWS_AS(parse_problem_spec("sphere:1:1", 7), std::invalid_argument);
  CHECK_THROWS_AS(parse_problem_spec("sphere", 7), std::invalid_argument);
}

TEST_CASE("generator basics: sphere instance 1 KKT point via directional sampling") {
  const ConstrainedProblem p = make_problem({Family::Sphere, 1, 2, 7});
  CHECK(p.n_constraints == 1);
  CHECK(std::abs(p.constraints(p.x_star)[0]) <= 1e-10);  // active at x_star

  // sample feasible directions (a_1' d <= 0) and check f does not drop
  const Eigen::VectorXd a1 = p.constraint_normals.row(0).transpose();
  Rng rng(123);
  int tested = 0;
  while (tested < 1000) {
    Eigen::VectorXd d(p.dim());
    for (int i = 0; i < p.dim(); ++i) d[i] = rng.normal();
    d.normalize();
    if (a1.dot(d) > 0.0) d = -d;
    const Eigen::VectorXd x = p.x_star + 1e-3 * d;
    if (!p.in_bounds(x)) continue;
    ++tested;
    CHECK(p.objective(x) >= p.f_star - 1e-9);
  }
}

TEST_CASE("generator: rastrigin instance 6 construction") {
  const ConstrainedProblem p = make_problem({Family::Rastrigin, 6, 10, 7});
  CHECK(p.n_constraints == 6);
  CHECK(p.in_bounds(p.x_star));
  const Eigen::VectorXd g = p.constraints(p.x_star);
  CHECK((g.array() <= 1e-10).all());
  CHECK(std::abs(g[0]) <= 1e-10);
  for (int j = 1; j < 6; ++j) CHECK(g[j] < 0.0);
  // remaining normals keep a positive inner product with the first
  const Eigen::VectorXd a1 = p.constraint_normals.row(0).transpose();
  for (int j = 1; j < 6; ++j)
    CHECK(p.constraint_normals.row(j).dot(a1) > 0.0);
}

TEST_CASE("x_star feasible for all families, instances, dims {2, 10}") {
  for (Family family : all_families()) {
    for (int instance = 1; instance <= 6; ++instance) {
      for (int dim : {2, 10}) {
        CAPTURE(family_name(family));
        CAPTURE(instance);
        CAPTURE(dim);
        const ConstrainedProblem p = make_problem({family, instance, dim, 42});
        CHECK(p.in_bounds(p.x_star));
        CHECK((p.constraints(p.x_star).array() <= 1e-10).all());
        CHECK((p.rotation.transpose() * p.rotation - Eigen::MatrixXd::Identity(dim, dim))
                  .cwiseAbs()
                  .maxCoeff() <= 1e-10);
      }
    }
  }
}

TEST_CASE("determinism: same spec gives bit-identical problems") {
  const ConstrainedProblem a = make_problem({Family::EllipsoidRotated, 3, 5, 99});
  const ConstrainedProblem b = make_problem({Family::EllipsoidRotated, 3, 5, 99});
  CHECK(a.shift == b.shift);
  CHECK(a.rotation == b.rotation);
  CHECK(a.x_star == b.x_star);
  CHECK(a.constraint_normals == b.constraint_normals);
  CHECK(a.constraint_offsets == b.constraint_offsets);
  CHECK(a.f_star == b.f_star);
  const ConstrainedProblem c = make_problem({Family::EllipsoidRotated, 3, 5, 100});
  CHECK(a.shift != c.shift);
}

TEST_CASE("rotated objective matches direct composition oracle") {
  const ConstrainedProblem p = make_problem({Family::RastriginRotated, 2, 5, 11});
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = rng.uniform(-5.0, 5.0);
    const Eigen::VectorXd y = p.rotation * (x - p.shift);
    CHECK(p.objective(x) == doctest::Approx(core_value(p.spec.family, y)).epsilon(1e-14));
  }
}

TEST_CASE("evaluate: counting, optimum value, bounds") {
  const ConstrainedProblem p = make_problem({Family::Sphere, 1, 3, 7});
  EvalCounter counter(10);
  const Evaluation at_star = evaluate(p, p.x_star, counter);
  CHECK(at_star.f == doctest::Approx(p.f_star).epsilon(1e-12));
  CHECK(counter.used() == 1);
  CHECK(at_star.fes_at_eval == 1);

  Eigen::VectorXd outside = p.x_star;
  outside[0] = p.upper + 0.1;
  CHECK_THROWS_AS(evaluate(p, outside, counter), std::invalid_argument);
  CHECK(counter.used() == 1);  // failed evaluations are not charged

  EvalCounter tiny(1);
  evaluate(p, p.x_star, tiny);
  CHECK_THROWS_AS(evaluate(p, p.x_star, tiny), BudgetExhausted);
}

TEST_CASE("evaluate: feasible iff max constraint <= 0") {
  const ConstrainedProblem p = make_problem({Family::Ellipsoid, 3, 4, 7});
  EvalCounter counter(200);
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(4);
    for (int i = 0; i < 4; ++i) x[i] = rng.uniform(-5.0, 5.0);
    const Evaluation eval = evaluate(p, x, counter);
    CHECK(eval.feasible == (eval.g.maxCoeff() <= 0.0));
  }
}

TEST_CASE("initial design: strata occupancy, determinism, degenerate size") {
  const ConstrainedProblem p = make_problem({Family::Sphere, 1, 2, 7});
  {
    EvalCounter counter(50);
    Rng rng(17);
    const Dataset design = initial_design(p, 10, rng, counter);
    CHECK(design.size() == 10);
    CHECK(counter.used() == 10);
    // each coordinate's 10 equal strata occupied exactly once
    for (int k = 0; k < 2; ++k) {
      std::vector<int> occupancy(10, 0);
      for (const auto& eval : design) {
        const double unit = (eval.x[k] - p.lower) / (p.upper - p.lower);
        ++occupancy[std::min(9, static_cast<int>(unit * 10))];
      }
      for (int count : occupancy) CHECK(count == 1);
    }
  }
  {
    EvalCounter c1(50), c2(50);
    Rng r1(3), r2(3);
    const Dataset d1 = initial_design(p, 8, r1, c1);
    const Dataset d2 = initial_design(p, 8, r2, c2);
    for (int i = 0; i < 8; ++i) CHECK(d1[i].x == d2[i].x);
  }
  {
    EvalCounter counter(50);
    Rng rng(4);
    const Dataset design = initial_design(p, 1, rng, counter);
    CHECK(design.size() == 1);
    CHECK(p.in_bounds(design[0].x));
  }
  {
    EvalCounter counter(5);
    Rng rng(4);
    CHECK_THROWS_AS(initial_design(p, 6, rng, counter), std::invalid_argument);
  }
}
