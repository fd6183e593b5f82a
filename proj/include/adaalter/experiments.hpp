#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "adaalter/analysis.hpp"
#include "adaalter/cluster.hpp"

namespace adaalter {

struct RunArtifacts {
  std::filesystem::path dir;
  std::filesystem::path trace_file;
  RunResult result;
};

/// Runs `cfg` and writes <output_dir>/<run_name>/ with config.txt, trace_<run_name>.csv and
/// summary.json; adds bound_inputs.json and bound_report.json when check_bound is set and
/// shards.csv when dump_shards is set.
RunArtifacts run_and_save(const RunConfig& cfg);

std::string summary_json(const RunConfig& cfg, const RunResult& result);

struct SweepRow {
  std::int64_t H = 1;
  std::size_t runs = 0;
  std::size_t failed = 0;
  double final_loss_mean = 0.0;
  double final_loss_std = 0.0;  // sample standard deviation over seeds
  double avg_sq_grad_norm_mean = 0.0;
  std::uint64_t comm_floats = 0;
  std::vector<std::string> errors;
};

struct SweepSummary {
  std::vector<SweepRow> rows;
};

/// One run per (H, seed). A failing cell is recorded in its row and the sweep continues.
SweepSummary run_sweep(const RunConfig& base, std::span<const std::int64_t> H_values,
                       std::span<const std::uint64_t> seeds, bool save_runs = false);

void write_sweep_csv(std::ostream& out, const SweepSummary& summary);
std::string format_sweep_table(const SweepSummary& summary);

struct CompareEntry {
  std::string label;
  RunConfig config;
  RunResult result;
  /// Cumulative floats when the loss first reaches the first entry's final loss; -1 if never.
  std::int64_t floats_to_reference = -1;
  std::int64_t iterations_to_reference = -1;
};

struct CompareReport {
  std::vector<CompareEntry> entries;
};

/// Runs configurations that share the same problem, dimension, horizon and seed.
/// Throws UsageError when they do not.
CompareReport compare_baselines(std::span<const RunConfig> configs);

/// t, then one loss column per entry.
void write_loss_vs_iteration_csv(std::ostream& out, const CompareReport& report);
/// label, iterate k, comm floats spent to reach x̄_k, F(x̄_k) (long format).
void write_loss_vs_comm_csv(std::ostream& out, const CompareReport& report);
std::string format_compare_table(const CompareReport& report);

}  // namespace adaalter
