#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cobrapp/bench.hpp"

using namespace cobrapp;
namespace fs = std::filesystem;

namespace {

RunTrace toy_trace(const std::vector<std::pair<bool, double>>& initial,
                   const std::vector<std::pair<bool, double>>& steps) {
  RunTrace trace;
  int fes = 0;
  for (const auto& [feasible, f] : initial) {
    Evaluation eval;
    eval.x = Eigen::VectorXd::Zero(2);
    eval.f = f;
    eval.g = Eigen::VectorXd::Constant(1, feasible ? -1.0 : 1.0);
    eval.feasible = feasible;
    eval.fes_at_eval = ++fes;
    trace.initial.push_back(std::move(eval));
  }
  trace.n0 = static_cast<int>(initial.size());
  int step = 0;
  for (const auto& [feasible, f] : steps) {
    StepRecord record;
    record.step = ++step;
    record.fes = ++fes;
    record.eval.x = Eigen::VectorXd::Zero(2);
    record.eval.f = f;
    record.eval.g = Eigen::VectorXd::Constant(1, feasible ? -1.0 : 1.0);
    record.eval.feasible = feasible;
    trace.steps.push_back(std::move(record));
  }
  trace.budget = fes;
  return trace;
}

ResultCell cell(const std::string& problem, int budget, const std::string& algo,
                std::vector<std::optional<double>> values) {
  ResultCell c;
  c.problem = problem;
  c.budget = budget;
  c.algorithm = algo;
  c.ri_values = std::move(values);
  return c;
}

}  // namespace

TEST_CASE("selector parsing and names") {
  CHECK(ModelSelector::parse("random").kind == ModelSelector::Kind::Random);
  CHECK(ModelSelector::parse("greedy-error").kind == ModelSelector::Kind::GreedyError);
  const ModelSelector fixed = ModelSelector::parse("fixed:7");
  CHECK(fixed.kind == ModelSelector::Kind::Fixed);
  CHECK(fixed.fixed_index == 7);
  CHECK(fixed.name() == "fixed:7");
  CHECK_THROWS_AS(ModelSelector::parse("fixed:11"), std::invalid_argument);
  CHECK_THROWS_AS(ModelSelector::parse("sacobra"), std::invalid_argument);
  CHECK_THROWS_AS(ModelSelector::fixed(-1), std::invalid_argument);
}

TEST_CASE("baseline selection semantics") {
  StateVector state;
  state.per_model = Eigen::VectorXd::Zero(kPoolSize * kFeaturesPerModel);
  state.global.setZero();
  // give model 4 the smallest normalized error
  for (int i = 0; i < kPoolSize; ++i)
    state.per_model[i * kFeaturesPerModel] = i == 4 ? 0.05 : 0.3 + 0.01 * i;
  SurrogatePool pool;
  Rng rng(1);

  CHECK(select_baseline(ModelSelector::fixed(9), state, pool, rng) == 9);
  CHECK(select_baseline(ModelSelector::greedy_error(), state, pool, rng) == 4);

  // greedy-error tie keeps the lowest index
  StateVector tied = state;
  tied.per_model[0] = 0.05;
  CHECK(select_baseline(ModelSelector::greedy_error(), tied, pool, rng) == 0);

  std::array<int, kPoolSize> seen{};
  for (int i = 0; i < 2000; ++i)
    ++seen[select_baseline(ModelSelector::random(), state, pool, rng)];
  for (int count : seen) CHECK(count > 100);

  CHECK_THROWS_AS(select_baseline(ModelSelector{ModelSelector::Kind::Learned}, state, pool, rng),
                  std::invalid_argument);
}

TEST_CASE("ri: formula, clamp, and optimum-undercut guard") {
  CHECK(ri(10.0, 0.0, 5.0) == doctest::Approx(2.0));
  CHECK(ri(10.0, 2.0, 10.0) == doctest::Approx(1.0));
  CHECK(ri(10.0, 0.0, 0.0) == 1e12);              // solved to the optimum
  CHECK(ri(10.0, 0.0, 5e-13) == 1e12);            // denominator below tolerance
  CHECK(ri(10.0, 0.0, -5e-10) == 1e12);           // inside tolerance band
  CHECK_THROWS_AS(ri(10.0, 0.0, -1e-6), std::runtime_error);
}

TEST_CASE("run_ri: f0 conventions") {
  // best feasible initial point is the baseline
  const RunTrace a = toy_trace({{true, 8.0}, {true, 6.0}, {false, 1.0}},
                               {{true, 4.0}, {false, 0.5}, {true, 3.0}});
  CHECK(run_ri(a, 1.0) == doctest::Approx((6.0 - 1.0) / (3.0 - 1.0)));

  // no feasible initial point: first feasible step becomes f0
  const RunTrace b = toy_trace({{false, 8.0}, {false, 6.0}},
                               {{false, 4.0}, {true, 5.0}, {true, 2.0}});
  CHECK(run_ri(b, 1.0) == doctest::Approx((5.0 - 1.0) / (2.0 - 1.0)));

  // never feasible
  const RunTrace c = toy_trace({{false, 8.0}}, {{false, 4.0}});
  CHECK(!run_ri(c, 1.0).has_value());
}

TEST_CASE("cell statistics over feasible repeats only") {
  const ResultCell c = cell("sphere:1:2", 100, "random",
                            {2.0, std::nullopt, 4.0, std::nullopt});
  CHECK(c.n_runs() == 4);
  CHECK(c.n_feasible() == 2);
  CHECK(*c.mean_ri() == doctest::Approx(3.0));
  CHECK(*c.std_ri() == doctest::Approx(1.0));
  const ResultCell empty = cell("sphere:1:2", 100, "random", {std::nullopt});
  CHECK(!empty.mean_ri().has_value());
  CHECK(!empty.std_ri().has_value());
}

TEST_CASE("aggregate: per-problem ranks with tie averaging, none ranks last") {
  std::vector<ResultCell> cells_list;
  // problem A: learned 4.0, random 2.0, fixed none -> ranks 1, 2, 3
  cells_list.push_back(cell("a", 100, "learned", {4.0}));
  cells_list.push_back(cell("a", 100, "random", {2.0}));
  cells_list.push_back(cell("a", 100, "fixed:0", {std::nullopt}));
  // problem B: learned == random == 3.0 (tie -> 1.5), fixed 1.0 -> rank 3
  cells_list.push_back(cell("b", 100, "learned", {3.0}));
  cells_list.push_back(cell("b", 100, "random", {3.0}));
  cells_list.push_back(cell("b", 100, "fixed:0", {1.0}));

  const ResultsTable table = aggregate(std::move(cells_list));
  auto rank_of = [&](const std::string& algo) {
    for (const auto& row : table.ranks)
      if (row.algorithm == algo && row.budget == 100) return row.avg_rank;
    FAIL("missing rank row");
    return 0.0;
  };
  CHECK(rank_of("learned") == doctest::Approx((1.0 + 1.5) / 2.0));
  CHECK(rank_of("random") == doctest::Approx((2.0 + 1.5) / 2.0));
  CHECK(rank_of("fixed:0") == doctest::Approx(3.0));
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}

TEST_CASE("phase frequencies split steps into thirds") {
  RunTrace trace = toy_trace({}, std::vector<std::pair<bool, double>>(9, {true, 1.0}));
  for (int i = 0; i < 9; ++i) trace.steps[i].action = i < 3 ? 2 : (i < 6 ? 5 : 9);
  const PhaseFrequencies freq = phase_frequencies({trace});
  CHECK(freq.counts[0][2] == 3);
  CHECK(freq.counts[1][5] == 3);
  CHECK(freq.counts[2][9] == 3);
  long total = 0;
  for (const auto& phase : freq.counts)
    for (long count : phase) total += count;
  CHECK(total == 9);
  CHECK_THROWS_AS(phase_frequencies({}), std::invalid_argument);
}

TEST_CASE("csv writers produce the documented headers") {
  const fs::path dir = fs::temp_directory_path() / "cobrapp_test_bench";
  fs::create_directories(dir);

  std::vector<ResultCell> cells_list;
  cells_list.push_back(cell("a", 100, "random", {2.0, std::nullopt}));
  cells_list.push_back(cell("a", 100, "fixed:0", {1.0, 3.0}));
  const ResultsTable table = aggregate(std::move(cells_list));

  write_report_csv((dir / "report.csv").string(), table);
  write_ranks_csv((dir / "ranks.csv").string(), table);

  std::ifstream report(dir / "report.csv");
  std::string line;
  REQUIRE(std::getline(report, line));
  CHECK(line == "problem,budget,algorithm,mean_ri,std_ri,n_feasible_runs,n_runs");
  REQUIRE(std::getline(report, line));
  CHECK(line == "a,100,random,2,0,1,2");

  std::ifstream ranks(dir / "ranks.csv");
  REQUIRE(std::getline(ranks, line));
  CHECK(line == "budget,algorithm,avg_rank");

  RunTrace trace = toy_trace({}, {{true, 1.0}, {true, 2.0}, {true, 3.0}});
  write_phase_freq_csv((dir / "phase_freq.csv").string(), phase_frequencies({trace}));
  std::ifstream freq(dir / "phase_freq.csv");
  REQUIRE(std::getline(freq, line));
  CHECK(line == "phase,action,count");
  int rows = 0;
  while (std::getline(freq, line)) ++rows;
  CHECK(rows == 3 * kPoolSize);

  const std::string grid = render_grid(table);
  CHECK(grid.find("== budget 100 ==") != std::string::npos);
  CHECK(grid.find("random") != std::string::npos);
}
