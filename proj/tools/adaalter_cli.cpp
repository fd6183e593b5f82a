// Command-line front end: run, sweep, compare, verify-bound, check-lemma1.
//
// Exit codes: 0 success, 1 a verification verb found a violation,
// 2 configuration or usage error, 3 runtime invariant violation.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adaalter/analysis.hpp"
#include "adaalter/config.hpp"
#include "adaalter/experiments.hpp"
#include "adaalter/trace_io.hpp"

namespace fs = std::filesystem;
using namespace adaalter;

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

RunConfig load_with_overrides(const std::string& path, const std::string& output_dir,
                              std::size_t threads) {
  RunConfig cfg = load_config(path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (threads > 0) cfg.threads = threads;
  validate(cfg);
  return cfg;
}

int cmd_run(const std::string& config_path, const std::string& output_dir, std::size_t threads) {
  const RunConfig cfg = load_with_overrides(config_path, output_dir, threads);
  const auto art = run_and_save(cfg);
  const auto comm = comm_summary(art.result.ledger, cfg.T, cfg.algo);
  std::cout << "run          " << run_name(cfg) << '\n'
            << "directory    " << art.dir.string() << '\n'
            << "final loss   " << format_double(art.result.final_loss) << '\n'
            << "avg |grad|^2 " << format_double(avg_sq_grad_norm(art.result.trace)) << '\n'
            << "sync rounds  " << comm.sync_rounds << '\n'
            << "floats/worker " << comm.floats_total << " (" << comm.floats_per_iter_avg
            << " per iteration, " << comm.reduction_factor << " of synchronous AdaGrad)\n";
  if (cfg.check_bound) {
    const auto report = verify_bound(art.result.trace, bound_inputs_for_run(cfg, art.result));
    std::cout << "bound        " << format_double(report.bound.total) << " measured "
              << format_double(report.measured) << (report.dominated ? " (dominated)" : " (VIOLATED)")
              << '\n';
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::int64_t>& H_values,
              const std::vector<std::uint64_t>& seeds, const std::string& output_dir, bool save_runs) {
  const RunConfig base = load_with_overrides(config_path, output_dir, 0);
  const auto summary = run_sweep(base, H_values, seeds, save_runs);
  fs::create_directories(base.output_dir);
  const auto csv = fs::path(base.output_dir) / "sweep_summary.csv";
  std::ofstream out(csv);
  write_sweep_csv(out, summary);
  std::cout << format_sweep_table(summary) << "summary written to " << csv.string() << '\n';
  for (const auto& r : summary.rows)
    if (r.failed) return kExitRuntime;
  return 0;
}

int cmd_compare(const std::vector<std::string>& config_paths, const std::string& output_dir) {
  std::vector<RunConfig> configs;
  for (const auto& p : config_paths) configs.push_back(load_with_overrides(p, "", 0));
  const auto report = compare_baselines(configs);
  const fs::path dir = output_dir.empty() ? fs::path(configs.front().output_dir) : fs::path(output_dir);
  fs::create_directories(dir);
  std::ofstream by_iter(dir / "loss_vs_iteration.csv");
  write_loss_vs_iteration_csv(by_iter, report);
  std::ofstream by_comm(dir / "loss_vs_comm.csv");
  write_loss_vs_comm_csv(by_comm, report);
  std::cout << format_compare_table(report) << "curves written to " << dir.string() << '\n';
  return 0;
}

int cmd_verify_bound(const std::string& trace_path, const std::string& inputs_path,
                     const std::string& report_path) {
  const Trace trace = read_trace_csv(trace_path);
  const BoundInputs inputs = read_bound_inputs_json(inputs_path);
  const auto report = verify_bound(trace, inputs);
  const std::string text = bound_report_to_json(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    if (!out) throw UsageError("cannot open '" + report_path + "' for writing");
    out << text << '\n';
  }
  std::cout << text << '\n';
  return report.dominated ? 0 : kExitViolation;
}

int cmd_check_lemma1(std::size_t trials, std::uint64_t seed) {
  Engine rng(seed);
  std::uniform_int_distribution<std::size_t> length(1, 100);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> start(0.1, 10.0);
  std::size_t failures = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < trials; ++k) {
    std::vector<double> seq(length(rng));
    for (auto& a : seq) a = std::abs(normal(rng));
    const auto r = lemma1_check(start(rng), seq);
    worst_slack = std::min(worst_slack, r.rhs - r.lhs);
    if (!r.holds) ++failures;
  }
  std::cout << "trials " << trials << ", failures " << failures << ", smallest rhs-lhs "
            << format_double(worst_slack) << '\n';
  return failures == 0 ? 0 : kExitViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local AdaAlter distributed-SGD simulator"};
  app.require_subcommand(1);

  std::string config_path, output_dir;
  std::size_t threads = 0;
  auto* run_cmd = app.add_subcommand("run", "run one configuration and write its trace");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--output-dir", output_dir, "override output_dir");
  run_cmd->add_option("--threads", threads, "override worker threads");

  std::vector<std::int64_t> H_values;
  std::vector<std::uint64_t> seeds;
  bool save_runs = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "one run per (H, seed), summarised per H");
  sweep_cmd->add_option("config", config_path, "base config file")->required();
  sweep_cmd->add_option("--H", H_values, "synchronization periods")->required()->delimiter(',');
  sweep_cmd->add_option("--seeds", seeds, "run seeds")->required()->delimiter(',');
  sweep_cmd->add_option("--output-dir", output_dir, "override output_dir");
  sweep_cmd->add_flag("--save-runs", save_runs, "also write every cell's run directory");

  std::vector<std::string> compare_paths;
  auto* compare_cmd = app.add_subcommand("compare", "loss curves of several algorithms on one problem");
  compare_cmd->add_option("configs", compare_paths, "config files")->required();
  compare_cmd->add_option("--output-dir", output_dir, "where to write the curve CSVs");

  std::string trace_path, inputs_path, report_path;
  auto* verify_cmd = app.add_subcommand("verify-bound", "compare a trace against the convergence bound");
  verify_cmd->add_option("trace", trace_path, "trace CSV")->required();
  verify_cmd->add_option("bound-inputs", inputs_path, "bound inputs JSON")->required();
  verify_cmd->add_option("--report", report_path, "write the report JSON here");

  std::size_t trials = 10000;
  std::uint64_t lemma_seed = 1;
  auto* lemma_cmd = app.add_subcommand("check-lemma1", "random-sequence test of the log-sum inequality");
  lemma_cmd->add_option("--trials", trials, "number of random sequences");
  lemma_cmd->add_option("--seed", lemma_seed, "RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(config_path, output_dir, threads);
    if (*sweep_cmd) return cmd_sweep(config_path, H_values, seeds, output_dir, save_runs);
    if (*compare_cmd) return cmd_compare(compare_paths, output_dir);
    if (*verify_cmd) return cmd_verify_bound(trace_path, inputs_path, report_path);
    if (*lemma_cmd) return cmd_check_lemma1(trials, lemma_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
