#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adaalter/core_math.hpp"
#include "adaalter/optimizers.hpp"
#include "adaalter/problems.hpp"

namespace adaalter {

enum class Algorithm { Sgd, AdaGrad, LocalSgd, LocalAdaAlter };

std::string to_string(Algorithm algo);
Algorithm parse_algorithm(const std::string& text);

/// Floats per worker per synchronization, in units of d: 2 for AdaAlter
/// (model and accumulator), 1 for everything else.
int floats_per_sync_factor(Algorithm algo);

enum class SyncMode { EveryStep, Periodic, Never };

std::string to_string(SyncMode mode);
SyncMode parse_sync_mode(const std::string& text);

struct SyncSchedule {
  std::int64_t H = 1;
  SyncMode mode = SyncMode::Periodic;

  bool is_sync_round(std::int64_t t) const;
};

/// Everything needed to reproduce one simulated training run.
struct RunConfig {
  Algorithm algo = Algorithm::LocalAdaAlter;
  std::size_t n = 4;
  std::int64_t T = 1000;
  std::int64_t H = 4;
  SyncMode sync = SyncMode::Periodic;
  std::size_t d = 10;
  double eta = 0.1;
  std::int64_t warm_up_steps = 0;  // 0 disables warm-up
  LrScaleMode lr_scale_mode = LrScaleMode::None;
  double lr_scale_k = 1.0;
  std::optional<double> b0sq;  // unset: 0 for adagrad, 1 for local_adaalter
  double epssq = 1.0;
  std::optional<double> clip_rho;

  ProblemKind problem = ProblemKind::Quadratic;
  std::size_t num_samples = 512;
  int num_classes = 2;
  double separation = 1.0;
  double noise = 1.0;
  double lambda_min = 0.1;
  double lambda_max = 1.0;
  bool rotate = true;
  double beta = 0.5;
  double l2 = 0.0;
  std::size_t batch = 1;
  double alpha = 0.0;
  bool identical_shards = false;
  double x0 = 0.0;

  std::uint64_t data_seed = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool check_bound = false;
  bool dump_shards = false;
  bool verify_invariants = true;
  std::string output_dir = "runs";

  bool operator==(const RunConfig&) const = default;

  double resolved_b0sq() const;
  double resolved_eta() const;  // eta after batch-size scaling
  SyncSchedule schedule() const;
};

/// Cheap structural checks shared by the parser and run().
void validate(const RunConfig& cfg);

/// Builds the dataset, its partition and the objective; depends only on data_seed and problem keys.
Problem build_problem(const RunConfig& cfg);

struct WorkerState {
  std::size_t id = 0;
  ParamVector x;
  AccumulatorState acc;
  std::uint64_t run_seed = 0;  // worker_stream(run_seed, id, t) is this worker's RNG at step t
  std::size_t shard = 0;
};

struct CommLedger {
  std::uint64_t floats_sent_per_worker = 0;
  std::uint64_t sync_rounds = 0;
  std::size_t d = 0;
};

/// Charges one synchronization round; nothing is sent when there are no peers.
void charge_sync(CommLedger& ledger, std::size_t n, Algorithm algo);

struct TraceRow {
  std::int64_t t = 0;
  double loss_avg_model = 0.0;          // F(x̄_{t-1})
  double grad_norm_sq_avg_model = 0.0;  // |∇F(x̄_{t-1})|^2
  double eta_t = 0.0;
  std::uint64_t comm_floats_cum = 0;
  bool sync_round = false;
};

struct Trace {
  std::vector<TraceRow> rows;
};

struct RunResult {
  Trace trace;
  CommLedger ledger;
  ParamVector final_model;  // x̄_T
  double final_loss = 0.0;  // F(x̄_T)
  double smoothness = 0.0;
  std::optional<double> clip_rho;
  std::optional<double> min_value;  // analytic inf F when known
};

/// Averages models, and for AdaAlter the accumulators, across all workers; charges the ledger.
void synchronize(std::span<WorkerState> workers, Algorithm algo, CommLedger& ledger);

RunResult run(const RunConfig& cfg, const Problem& problem);
RunResult run(const RunConfig& cfg);

struct CommSummary {
  std::uint64_t sync_rounds = 0;
  std::uint64_t floats_total = 0;
  double floats_per_iter_avg = 0.0;
  double reduction_factor = 0.0;  // relative to d floats per iteration (synchronous AdaGrad)
};

CommSummary comm_summary(const CommLedger& ledger, std::int64_t T, Algorithm algo);

}  // namespace adaalter
