#include "cobrapp/config.hpp"

#include <fstream>
#include <sstream>

namespace cobrapp {

namespace {

std::string trim(const std::string& text) {
  const auto begin = text.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = text.find_last_not_of(" \t\r");
  return text.substr(begin, end - begin + 1);
}

std::string strip_quotes(const std::string& token) {
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"')
    return token.substr(1, token.size() - 2);
  return token;
}

std::vector<std::string> split_list(const std::string& body) {
  std::vector<std::string> items;
  std::string current;
  for (char c : body) {
    if (c == ',') {
      const std::string item = trim(current);
      if (!item.empty()) items.push_back(strip_quotes(item));
      current.clear();
    } else {
      current += c;
    }
  }
  const std::string item = trim(current);
  if (!item.empty()) items.push_back(strip_quotes(item));
  return items;
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_text(buffer.str());
}

ConfigFile ConfigFile::parse_text(const std::string& text) {
  ConfigFile config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_number) +
                                    ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_number) +
                                  ": expected key = value");
    const std::string key =
        (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(line_number) +
                                    ": unterminated array");
      config.values_[key] = split_list(value.substr(1, value.size() - 2));
    } else {
      config.values_[key] = {strip_quotes(value)};
    }
  }
  return config;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() || it->second.empty() ? fallback : it->second.front();
}

long ConfigFile::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  try {
    return std::stol(it->second.front());
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " is not an integer");
  }
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  try {
    return std::stod(it->second.front());
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " is not a number");
  }
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  const std::string& token = it->second.front();
  if (token == "true") return true;
  if (token == "false") return false;
  throw std::invalid_argument("config key " + key + " is not a boolean");
}

std::vector<std::string> ConfigFile::get_list(const std::string& key,
                                              std::vector<std::string> fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

CliConfig CliConfig::from_file(const std::string& path) {
  return from_config(ConfigFile::parse_file(path));
}

CliConfig CliConfig::from_config(const ConfigFile& file) {
  CliConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(file.get_int("seed", 0));

  cfg.cobra.margin = file.get_double("cobra.margin", cfg.cobra.margin);
  cfg.cobra.inner_budget = static_cast<int>(file.get_int("cobra.inner_budget", 0));
  cfg.cobra.restarts = static_cast<int>(file.get_int("cobra.restarts", cfg.cobra.restarts));
  cfg.cobra.duplicate_tol = file.get_double("cobra.duplicate_tol", cfg.cobra.duplicate_tol);

  cfg.batch_size = static_cast<int>(file.get_int("dqn.batch", cfg.batch_size));
  cfg.gamma = file.get_double("dqn.gamma", cfg.gamma);
  cfg.train_interval = static_cast<int>(file.get_int("dqn.train_interval", cfg.train_interval));
  cfg.target_sync_interval =
      static_cast<int>(file.get_int("dqn.target_sync_interval", cfg.target_sync_interval));

  cfg.train_problems = file.get_list("train.problems", {});
  cfg.train_dim = static_cast<int>(file.get_int("train.dim", cfg.train_dim));
  cfg.epochs = static_cast<int>(file.get_int("train.epochs", cfg.epochs));
  cfg.train_budget = static_cast<int>(file.get_int("train.budget", cfg.train_budget));
  cfg.n0 = static_cast<int>(file.get_int("train.n0", cfg.n0));

  cfg.suite = file.get_string("bench.suite", cfg.suite);
  cfg.bench_dim = static_cast<int>(file.get_int("bench.dim", cfg.bench_dim));
  const auto budget_list = file.get_list("bench.budgets", {});
  if (!budget_list.empty()) {
    cfg.budgets.clear();
    for (const auto& token : budget_list) cfg.budgets.push_back(std::stoi(token));
  }
  cfg.repeats = static_cast<int>(file.get_int("bench.repeats", cfg.repeats));
  return cfg;
}

TrainConfig CliConfig::to_train_config() const {
  TrainConfig train;
  if (train_problems.empty()) {
    train.train_set = train_suite(train_dim, seed);
  } else {
    for (const auto& name : train_problems)
      train.train_set.push_back(parse_problem_spec(name, seed));
  }
  train.max_epochs = epochs;
  train.budget = train_budget;
  train.n0 = n0;
  train.batch_size = batch_size;
  train.gamma = gamma;
  train.train_interval = train_interval;
  train.target_sync_interval = target_sync_interval;
  train.seed = seed;
  train.cobra = cobra;
  return train;
}

std::string CliConfig::render() const {
  std::ostringstream out;
  out << "seed = " << seed << "\n\n";
  out << "[cobra]\n";
  out << "margin = " << cobra.margin << "\n";
  out << "inner_budget = " << cobra.inner_budget << "\n";
  out << "restarts = " << cobra.restarts << "\n";
  out << "duplicate_tol = " << cobra.duplicate_tol << "\n\n";
  out << "[dqn]\n";
  out << "batch = " << batch_size << "\n";
  out << "gamma = " << gamma << "\n";
  out << "train_interval = " << train_interval << "\n";
  out << "target_sync_interval = " << target_sync_interval << "\n\n";
  out << "[train]\n";
  out << "problems = [";
  for (std::size_t i = 0; i < train_problems.size(); ++i)
    out << (i ? ", " : "") << '"' << train_problems[i] << '"';
  out << "]\n";
  out << "dim = " << train_dim << "\n";
  out << "epochs = " << epochs << "\n";
  out << "budget = " << train_budget << "\n";
  out << "n0 = " << n0 << "\n\n";
  out << "[bench]\n";
  out << "suite = \"" << suite << "\"\n";
  out << "dim = " << bench_dim << "\n";
  out << "budgets = [";
  for (std::size_t i = 0; i < budgets.size(); ++i) out << (i ? ", " : "") << budgets[i];
  out << "]\n";
  out << "repeats = " << repeats << "\n";
  return out.str();
}

std::vector<ProblemSpec> train_suite(int dim, std::uint64_t seed) {
  // 5 x 6 = 30 instances (includes RastriginRotated to reach five families)
  const Family families[] = {Family::LinearSlope, Family::EllipsoidRotated, Family::Discus,
                             Family::DifferentPowers, Family::RastriginRotated};
  std::vector<ProblemSpec> specs;
  for (Family family : families)
    for (int instance = 1; instance <= 6; ++instance)
      specs.push_back({family, instance, dim, seed});
  return specs;
}

std::vector<ProblemSpec> test_suite(int dim, std::uint64_t seed) {
  const Family families[] = {Family::Sphere, Family::Ellipsoid, Family::BentCigar,
                             Family::Rastrigin};
  std::vector<ProblemSpec> specs;
  for (Family family : families)
    for (int instance = 1; instance <= 6; ++instance)
      specs.push_back({family, instance, dim, seed});
  return specs;
}

std::vector<ProblemSpec> expand_suite(const std::string& suite, int dim, std::uint64_t seed) {
  if (suite == "train") return train_suite(dim, seed);
  if (suite == "test") return test_suite(dim, seed);
  std::vector<ProblemSpec> specs;
  std::istringstream in(suite);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (!token.empty()) specs.push_back(parse_problem_spec(token, seed));
  }
  if (specs.empty()) throw std::invalid_argument("suite expands to no problems: " + suite);
  return specs;
}

}  // namespace cobrapp
