#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cobrapp/trainer.hpp"

namespace cobrapp {

// Minimal TOML-subset reader: [section] headers, key = value lines,
// '#' comments, scalar values (int, float, bool, "string") and flat arrays.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_text(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key,
                                    std::vector<std::string> fallback) const;

 private:
  // key is "section.name"; arrays keep their elements tokenized
  std::map<std::string, std::vector<std::string>> values_;
};

// Effective configuration for the CLI; every field has a default, flag
// overrides beat file values.
struct CliConfig {
  std::uint64_t seed = 0;

  CobraConfig cobra;

  // [dqn]
  int batch_size = 1024;
  double gamma = 0.95;
  int train_interval = 1;
  int target_sync_interval = 500;

  // [train]
  std::vector<std::string> train_problems;  // empty -> full train suite at train_dim
  int train_dim = 10;
  int epochs = 10;
  int train_budget = 100;
  int n0 = -1;

  // [bench]
  std::string suite = "test";
  int bench_dim = 10;
  std::vector<int> budgets = {100, 150, 200};
  int repeats = 5;

  static CliConfig from_file(const std::string& path);
  static CliConfig from_config(const ConfigFile& file);

  TrainConfig to_train_config() const;
  std::string render() const;  // effective-config snapshot, same format
};

// Suite expansion: "train" and "test" are the paper's family splits at the
// given dimension; anything else is a comma-separated explicit spec list.
std::vector<ProblemSpec> expand_suite(const std::string& suite, int dim, std::uint64_t seed);

std::vector<ProblemSpec> train_suite(int dim, std::uint64_t seed);
std::vector<ProblemSpec> test_suite(int dim, std::uint64_t seed);

}  // namespace cobrapp
