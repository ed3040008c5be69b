#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include "cobrapp/policy.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_binary;

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::string& args) {
  const std::string command = g_binary + " " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CommandResult result;
  char buffer[4096];
  while (std::size_t n = std::fread(buffer, 1, sizeof(buffer), pipe))
    result.output.append(buffer, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "cobrapp_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_command("").exit_code == 2);
  CHECK(run_command("frobnicate").exit_code == 2);
  CHECK(run_command("run --problem sphere:1:2").exit_code == 2);  // no selector
  CHECK(run_command("run --baseline random --problem nosuch:1:2 --budget 20").exit_code == 2);
  CHECK(run_command("run --baseline sacobra --problem sphere:1:2 --budget 20").exit_code == 2);
  CHECK(run_command("bench --algos learned --out /tmp/x").exit_code == 2);  // needs --policy
  CHECK(run_command("report --in /nonexistent_dir_xyz").exit_code == 2);
  const fs::path bad_config = work_dir() / "bad.toml";
  {
    std::ofstream out(bad_config);
    out << "not a key value line\n";
  }
  CHECK(run_command("run --config " + bad_config.string() +
                    " --baseline random --problem sphere:1:2 --budget 20")
            .exit_code == 2);
}

TEST_CASE("run: prints summary, writes trace, deterministic per seed") {
  const fs::path trace_a = work_dir() / "trace_a.csv";
  const std::string args =
      "run --baseline fixed:0 --problem sphere:1:2 --budget 20 --seed 11 --trace ";
  const CommandResult a = run_command(args + trace_a.string());
  CHECK(a.exit_code == 0);
  CHECK(a.output.find("best_f=") != std::string::npos);
  CHECK(a.output.find("feasible=") != std::string::npos);
  CHECK(a.output.find("RI=") != std::string::npos);

  const std::string trace_text = read_file(trace_a);
  CHECK(trace_text.rfind("step,fes,action,reward,f,violation,feasible,best_f,best_feasible",
                         0) == 0);

  const fs::path trace_b = work_dir() / "trace_b.csv";
  const CommandResult b = run_command(args + trace_b.string());
  CHECK(b.exit_code == 0);
  CHECK(b.output == a.output);
  CHECK(read_file(trace_b) == trace_text);

  const CommandResult c = run_command(
      "run --baseline fixed:0 --problem sphere:1:2 --budget 20 --seed 12");
  CHECK(c.exit_code == 0);
  CHECK(c.output != a.output);
}

TEST_CASE("train then bench with the learned policy") {
  const fs::path train_dir = work_dir() / "train_out";
  const fs::path config = work_dir() / "train.toml";
  {
    std::ofstream out(config);
    out << "seed = 5\n"
        << "[dqn]\nbatch = 8\n"
        << "[train]\nproblems = [\"linearslope:1:2\", \"sphere:1:2\"]\n"
        << "epochs = 1\nbudget = 14\n"
        << "[cobra]\ninner_budget = 40\nrestarts = 2\n";
  }
  const CommandResult train = run_command("train --config " + config.string() + " --out " +
                                          train_dir.string());
  CHECK(train.exit_code == 0);
  CHECK(fs::exists(train_dir / "checkpoint.json"));
  CHECK(fs::exists(train_dir / "epochs.csv"));
  CHECK(fs::exists(train_dir / "config.toml"));
  CHECK(read_file(train_dir / "epochs.csv").rfind("epoch,return,epsilon,mean_loss", 0) == 0);

  // checkpoint loads through the library entry point
  const cobrapp::QNetwork net =
      cobrapp::load_checkpoint((train_dir / "checkpoint.json").string());
  CHECK(net.q_head.layers.size() == 4);

  const fs::path bench_dir = work_dir() / "bench_out";
  const fs::path bench_config = work_dir() / "bench.toml";
  {
    std::ofstream out(bench_config);
    out << "seed = 5\n[bench]\nbudgets = [16]\nrepeats = 2\n"
        << "[cobra]\ninner_budget = 40\nrestarts = 2\n";
  }
  const CommandResult bench = run_command(
      "bench --config " + bench_config.string() +
      " --suite sphere:1:2,linearslope:1:2 --algos learned,random,fixed:0 --policy " +
      (train_dir / "checkpoint.json").string() + " --out " + bench_dir.string());
  CHECK(bench.exit_code == 0);
  for (const char* name :
       {"runs.csv", "report.csv", "ranks.csv", "phase_freq.csv", "grid.txt", "config.toml"})
    CHECK(fs::exists(bench_dir / name));
  CHECK(fs::is_directory(bench_dir / "traces"));
  CHECK(read_file(bench_dir / "report.csv")
            .rfind("problem,budget,algorithm,mean_ri,std_ri,n_feasible_runs,n_runs", 0) == 0);
  const std::string runs = read_file(bench_dir / "runs.csv");
  CHECK(runs.rfind("problem,budget,algorithm,repeat,ri", 0) == 0);
  // 2 problems x 1 budget x 3 algorithms x 2 repeats = 12 rows + header
  CHECK(std::count(runs.begin(), runs.end(), '\n') == 13);

  // report rebuilds the aggregates from runs.csv alone (row order may differ)
  auto sorted_lines = [](const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    std::sort(lines.begin(), lines.end());
    return lines;
  };
  const auto report_before = sorted_lines(read_file(bench_dir / "report.csv"));
  const CommandResult report = run_command("report --in " + bench_dir.string());
  CHECK(report.exit_code == 0);
  CHECK(sorted_lines(read_file(bench_dir / "report.csv")) == report_before);

  // corrupted checkpoint is a usage/config error
  const fs::path broken = work_dir() / "broken.json";
  {
    std::ofstream out(broken);
    out << "{broken";
  }
  CHECK(run_command("run --policy " + broken.string() +
                    " --problem sphere:1:2 --budget 16")
            .exit_code == 2);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-cobra-binary> [doctest args]\n");
    return 1;
  }
  g_binary = argv[1];
  doctest::Context context;
  context.applyCommandLine(argc - 1, argv + 1);
  return context.run();
}
