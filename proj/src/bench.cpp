#include "cobrapp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace cobrapp {

ModelSelector ModelSelector::learned(std::shared_ptr<const QNetwork> net, double epsilon) {
  ModelSelector selector;
  selector.kind = Kind::Learned;
  selector.net = std::move(net);
  selector.epsilon = epsilon;
  return selector;
}

ModelSelector ModelSelector::fixed(int index) {
  if (index < 0 || index >= kPoolSize)
    throw std::invalid_argument("fixed selector index out of range: " + std::to_string(index));
  ModelSelector selector;
  selector.kind = Kind::Fixed;
  selector.fixed_index = index;
  return selector;
}

ModelSelector ModelSelector::random() {
  ModelSelector selector;
  selector.kind = Kind::Random;
  return selector;
}

ModelSelector ModelSelector::greedy_error() {
  ModelSelector selector;
  selector.kind = Kind::GreedyError;
  return selector;
}

ModelSelector ModelSelector::parse(const std::string& name) {
  if (name == "random") return random();
  if (name == "greedy-error") return greedy_error();
  if (name.rfind("fixed:", 0) == 0) return fixed(std::stoi(name.substr(6)));
  throw std::invalid_argument("unknown selector: " + name);
}

std::string ModelSelector::name() const {
  switch (kind) {
    case Kind::Learned:
      return "learned";
    case Kind::Fixed:
      return "fixed:" + std::to_string(fixed_index);
    case Kind::Random:
      return "random";
    case Kind::GreedyError:
      return "greedy-error";
  }
  return "unknown";
}

SelectFn ModelSelector::as_select_fn() const {
  ModelSelector copy = *this;
  return [copy](const StateVector& state, const SurrogatePool& pool, Rng& rng) {
    return select_baseline(copy, state, pool, rng);
  };
}

int select_baseline(const ModelSelector& selector, const StateVector& state,
                    const SurrogatePool& pool, Rng& rng) {
  (void)pool;
  switch (selector.kind) {
    case ModelSelector::Kind::Fixed:
      return selector.fixed_index;
    case ModelSelector::Kind::Random:
      return rng.uniform_int(kPoolSize);
    case ModelSelector::Kind::GreedyError: {
      int best = 0;
      for (int i = 1; i < kPoolSize; ++i)
        if (state.feature(i, 1) < state.feature(best, 1)) best = i;
      return best;
    }
    case ModelSelector::Kind::Learned:
      if (!selector.net) throw std::invalid_argument("learned selector has no network");
      return select_action(*selector.net, state, selector.epsilon, rng);
  }
  throw std::invalid_argument("unknown selector kind");
}

double ri(double f0, double f_star, double f_best) {
  if (f_best < f_star - 1e-9)
    throw std::runtime_error("ri: best value undercuts the known optimum (broken generator?)");
  const double denominator = f_best - f_star;
  if (denominator < 1e-12) return 1e12;
  return (f0 - f_star) / denominator;
}

std::optional<double> run_ri(const RunTrace& trace, double f_star) {
  std::optional<double> f0;
  std::optional<double> f_best;
  for (const auto& eval : trace.initial) {
    if (!eval.feasible) continue;
    if (!f0 || eval.f < *f0) f0 = eval.f;
    if (!f_best || eval.f < *f_best) f_best = eval.f;
  }
  for (const auto& record : trace.steps) {
    if (!record.eval.feasible) continue;
    if (!f0) f0 = record.eval.f;  // first feasible point found during the run
    if (!f_best || record.eval.f < *f_best) f_best = record.eval.f;
  }
  if (!f0) return std::nullopt;
  return ri(*f0, f_star, *f_best);
}

int ResultCell::n_feasible() const {
  int count = 0;
  for (const auto& value : ri_values)
    if (value) ++count;
  return count;
}

std::optional<double> ResultCell::mean_ri() const {
  double total = 0.0;
  int count = 0;
  for (const auto& value : ri_values) {
    if (!value) continue;
    total += *value;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return total / count;
}

std::optional<double> ResultCell::std_ri() const {
  const auto mean = mean_ri();
  if (!mean) return std::nullopt;
  double total = 0.0;
  int count = 0;
  for (const auto& value : ri_values) {
    if (!value) continue;
    total += (*value - *mean) * (*value - *mean);
    ++count;
  }
  return std::sqrt(total / count);
}

ResultsTable aggregate(std::vector<ResultCell> cells) {
  if (cells.empty()) throw std::invalid_argument("aggregate: no result cells");
  for (const auto& cell : cells)
    if (cell.ri_values.empty())
      throw std::invalid_argument("aggregate: empty cell for " + cell.problem);

  ResultsTable table;
  table.cells = std::move(cells);

  // rank algorithms within each (problem, budget); higher mean RI is better,
  // all-"none" cells rank last, ties averaged
  std::map<std::pair<std::string, int>, std::vector<const ResultCell*>> groups;
  for (const auto& cell : table.cells)
    groups[{cell.problem, cell.budget}].push_back(&cell);

  std::map<std::pair<int, std::string>, std::pair<double, int>> rank_totals;
  for (const auto& [key, group] : groups) {
    std::vector<std::pair<double, const ResultCell*>> scored;
    for (const ResultCell* cell : group) {
      const auto mean = cell->mean_ri();
      scored.push_back({mean ? *mean : -std::numeric_limits<double>::infinity(), cell});
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::size_t i = 0;
    while (i < scored.size()) {
      std::size_t j = i;
      while (j < scored.size() && scored[j].first == scored[i].first) ++j;
      const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
      for (std::size_t k = i; k < j; ++k) {
        auto& entry = rank_totals[{key.second, scored[k].second->algorithm}];
        entry.first += avg_rank;
        entry.second += 1;
      }
      i = j;
    }
  }
  for (const auto& [key, total] : rank_totals)
    table.ranks.push_back({key.first, key.second, total.first / total.second});
  return table;
}

PhaseFrequencies phase_frequencies(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("phase_frequencies: no traces");
  PhaseFrequencies freq;
  for (const auto& trace : traces) {
    const int n = static_cast<int>(trace.steps.size());
    for (int i = 0; i < n; ++i) {
      const int phase = std::min(2, 3 * i / n);
      ++freq.counts[phase][trace.steps[i].action];
    }
  }
  return freq;
}

void write_report_csv(const std::string& path, const ResultsTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "problem,budget,algorithm,mean_ri,std_ri,n_feasible_runs,n_runs\n";
  for (const auto& cell : table.cells) {
    const auto mean = cell.mean_ri();
    const auto std_dev = cell.std_ri();
    out << cell.problem << ',' << cell.budget << ',' << cell.algorithm << ','
        << (mean ? format_double(*mean) : "none") << ','
        << (std_dev ? format_double(*std_dev) : "none") << ',' << cell.n_feasible() << ','
        << cell.n_runs() << '\n';
  }
}

void write_ranks_csv(const std::string& path, const ResultsTable& table) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "budget,algorithm,avg_rank\n";
  for (const auto& row : table.ranks)
    out << row.budget << ',' << row.algorithm << ',' << format_double(row.avg_rank) << '\n';
}

void write_phase_freq_csv(const std::string& path, const PhaseFrequencies& freq) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "phase,action,count\n";
  const char* names[] = {"early", "middle", "late"};
  for (int phase = 0; phase < 3; ++phase)
    for (int action = 0; action < kPoolSize; ++action)
      out << names[phase] << ',' << action << ',' << freq.counts[phase][action] << '\n';
}

std::string render_grid(const ResultsTable& table) {
  std::map<int, std::map<std::string, std::map<std::string, const ResultCell*>>> grid;
  std::map<int, std::vector<std::string>> algorithms;
  for (const auto& cell : table.cells) {
    grid[cell.budget][cell.problem][cell.algorithm] = &cell;
    auto& algos = algorithms[cell.budget];
    if (std::find(algos.begin(), algos.end(), cell.algorithm) == algos.end())
      algos.push_back(cell.algorithm);
  }
  std::ostringstream out;
  for (const auto& [budget, problems] : grid) {
    out << "== budget " << budget << " ==\n";
    out << "problem";
    for (const auto& algo : algorithms[budget]) out << '\t' << algo;
    out << '\n';
    for (const auto& [problem, row] : problems) {
      out << problem;
      for (const auto& algo : algorithms[budget]) {
        out << '\t';
        const auto it = row.find(algo);
        if (it == row.end()) {
          out << '-';
          continue;
        }
        const auto mean = it->second->mean_ri();
        if (!mean) {
          out << "none";
          continue;
        }
        char cell_text[64];
        std::snprintf(cell_text, sizeof(cell_text), "%.3g+-%.2g", *mean,
                      it->second->std_ri().value_or(0.0));
        out << cell_text;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace cobrapp
