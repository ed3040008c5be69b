#include "cobrapp/trainer.hpp"

#include <cmath>
#include <fstream>

namespace cobrapp {

TrainResult train_policy(const TrainConfig& cfg) {
  if (cfg.train_set.empty()) throw std::invalid_argument("train_policy: empty train set");
  if (cfg.gamma < 0.0 || cfg.gamma >= 1.0)
    throw std::invalid_argument("train_policy: gamma must be in [0, 1)");

  Rng root(cfg.seed);
  Rng init_rng = root.split("net-init");
  Rng shuffle_rng = root.split("shuffle");
  Rng sample_rng = root.split("replay-sample");

  TrainResult result;
  result.net = QNetwork::initialize(init_rng);
  QNetwork target_net = result.net;
  Optimizer optimizer(result.net);
  ReplayBuffer buffer;
  EpsilonSchedule epsilon;
  long gradient_steps = 0;

  const int n_problems = static_cast<int>(cfg.train_set.size());
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // seeded shuffle of the episode order to decorrelate buffer contents
    std::vector<int> order(n_problems);
    for (int i = 0; i < n_problems; ++i) order[i] = i;
    for (int i = n_problems - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(i + 1)]);

    EpochReport report;
    report.epoch = epoch;
    report.per_problem_returns.assign(n_problems, 0.0);
    double loss_total = 0.0;
    long loss_count = 0;

    for (int slot = 0; slot < n_problems; ++slot) {
      const int problem_index = order[slot];
      const ConstrainedProblem problem = make_problem(cfg.train_set[problem_index]);
      const std::uint64_t episode_seed =
          root.split("episode")
              .split(static_cast<std::uint64_t>(epoch) * 1000003ULL +
                     static_cast<std::uint64_t>(problem_index))
              .next_u64();

      int env_steps_since_update = 0;
      auto selector = [&](const StateVector& state, const SurrogatePool&, Rng& rng) {
        return select_action(result.net, state, epsilon.value, rng);
      };
      auto on_transition = [&](const StateVector& state, int action, double reward,
                               const StateVector& next_state, bool terminal) {
        buffer.push({state, action, reward, next_state, terminal});
        report.per_problem_returns[problem_index] += reward;
        epsilon.decay();
        if (++env_steps_since_update >= cfg.train_interval) {
          env_steps_since_update = 0;
          const double loss = train_step(result.net, target_net, buffer, optimizer,
                                         cfg.gamma, cfg.batch_size, sample_rng);
          if (std::isfinite(loss)) {
            loss_total += loss;
            ++loss_count;
            if (++gradient_steps % cfg.target_sync_interval == 0)
              sync_target(result.net, target_net);
          }
        }
      };
      run_cobra(problem, selector, cfg.budget, cfg.cobra, episode_seed, cfg.n0,
                on_transition);
    }

    for (double value : report.per_problem_returns) report.total_return += value;
    report.epsilon_end = epsilon.value;
    report.mean_loss = loss_count > 0 ? loss_total / loss_count : 0.0;
    result.reports.push_back(std::move(report));
  }
  return result;
}

void write_epochs_csv(const std::string& path, const std::vector<EpochReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "epoch,return,epsilon,mean_loss\n";
  for (const auto& report : reports) {
    out << report.epoch << ',' << format_double(report.total_return) << ','
        << format_double(report.epsilon_end) << ',' << format_double(report.mean_loss)
        << '\n';
  }
}

BenchOutput run_benchmark(const BenchConfig& cfg) {
  if (cfg.problems.empty()) throw std::invalid_argument("run_benchmark: no problems");
  if (cfg.algorithms.empty()) throw std::invalid_argument("run_benchmark: no algorithms");
  if (cfg.budgets.empty()) throw std::invalid_argument("run_benchmark: no budgets");
  if (cfg.repeats < 1) throw std::invalid_argument("run_benchmark: repeats must be >= 1");

  const Rng root(cfg.seed);
  BenchOutput output;
  std::vector<ResultCell> cells;

  for (const auto& spec : cfg.problems) {
    const ConstrainedProblem problem = make_problem(spec);
    const std::string problem_name = problem_spec_name(spec);
    for (int budget : cfg.budgets) {
      for (const auto& algorithm : cfg.algorithms) {
        ResultCell cell;
        cell.problem = problem_name;
        cell.budget = budget;
        cell.algorithm = algorithm.name();
        for (int repeat = 0; repeat < cfg.repeats; ++repeat) {
          const std::string run_key = problem_name + "/" + std::to_string(budget) + "/" +
                                      algorithm.name() + "/" + std::to_string(repeat);
          const std::uint64_t run_seed = root.split(Rng::fnv1a(run_key)).next_u64();
          RunTrace trace = run_cobra(problem, algorithm.as_select_fn(), budget, cfg.cobra,
                                     run_seed, cfg.n0);
          cell.ri_values.push_back(run_ri(trace, problem.f_star));
          output.traces.push_back(std::move(trace));
        }
        cells.push_back(std::move(cell));
      }
    }
  }
  output.table = aggregate(std::move(cells));
  return output;
}

BenchOutput evaluate_policy(std::shared_ptr<const QNetwork> net, std::vector<ProblemSpec> test_set,
                            std::vector<int> budgets, int repeats, std::uint64_t seed,
                            const CobraConfig& cobra, int n0) {
  BenchConfig cfg;
  cfg.problems = std::move(test_set);
  cfg.algorithms = {ModelSelector::learned(std::move(net))};
  cfg.budgets = std::move(budgets);
  cfg.repeats = repeats;
  cfg.seed = seed;
  cfg.cobra = cobra;
  cfg.n0 = n0;
  return run_benchmark(cfg);
}

}  // namespace cobrapp
