#include "adaalter/cluster.hpp"

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <cmath>

namespace adaalter {

std::string to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::Sgd:
      return "sgd";
    case Algorithm::AdaGrad:
      return "adagrad";
    case Algorithm::LocalSgd:
      return "local_sgd";
    case Algorithm::LocalAdaAlter:
      return "local_adaalter";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& text) {
  if (text == "sgd") return Algorithm::Sgd;
  if (text == "adagrad") return Algorithm::AdaGrad;
  if (text == "local_sgd") return Algorithm::LocalSgd;
  if (text == "local_adaalter") return Algorithm::LocalAdaAlter;
  throw UsageError("unknown algorithm '" + text + "'");
}

int floats_per_sync_factor(Algorithm algo) { return algo == Algorithm::LocalAdaAlter ? 2 : 1; }

std::string to_string(SyncMode mode) {
  switch (mode) {
    case SyncMode::EveryStep:
      return "every_step";
    case SyncMode::Periodic:
      return "periodic";
    case SyncMode::Never:
      return "never";
  }
  return "unknown";
}

SyncMode parse_sync_mode(const std::string& text) {
  if (text == "every_step") return SyncMode::EveryStep;
  if (text == "periodic") return SyncMode::Periodic;
  if (text == "never") return SyncMode::Never;
  throw UsageError("unknown sync mode '" + text + "'");
}

bool SyncSchedule::is_sync_round(std::int64_t t) const {
  switch (mode) {
    case SyncMode::EveryStep:
      return true;
    case SyncMode::Periodic:
      return t % H == 0;
    case SyncMode::Never:
      return false;
  }
  return false;
}

double RunConfig::resolved_b0sq() const {
  if (b0sq) return *b0sq;
  return algo == Algorithm::AdaGrad ? 0.0 : 1.0;
}

double RunConfig::resolved_eta() const { return scale_lr(eta, lr_scale_k, lr_scale_mode); }

SyncSchedule RunConfig::schedule() const {
  if (algo == Algorithm::Sgd || algo == Algorithm::AdaGrad) return {1, SyncMode::EveryStep};
  return {H, sync};
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (cfg.n < 1) fail("n must be >= 1");
  if (cfg.T < 1) fail("T must be >= 1");
  if (cfg.H < 1) fail("H must be >= 1");
  if (cfg.d < 1) fail("d must be >= 1");
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta)) fail("eta must be > 0");
  if (cfg.warm_up_steps < 0) fail("warm_up_steps must be >= 0");
  if (!(cfg.lr_scale_k > 0.0)) fail("lr_scale_k must be > 0");
  if (cfg.b0sq && !(*cfg.b0sq >= 0.0)) fail("b0sq must be >= 0");
  if (!(cfg.epssq >= 0.0)) fail("epssq must be >= 0");
  if (cfg.clip_rho && !(*cfg.clip_rho > 0.0)) fail("clip_rho must be > 0");
  if (cfg.num_samples < cfg.n) fail("num_samples must be >= n");
  if (cfg.num_classes < 1) fail("num_classes must be >= 1");
  if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) fail("alpha must lie in [0, 1]");
  if (cfg.problem != ProblemKind::Logistic &&
      !(cfg.lambda_min > 0.0 && cfg.lambda_max >= cfg.lambda_min)) {
    fail("lambda_min must be > 0 and <= lambda_max");
  }
  if (cfg.l2 < 0.0) fail("l2 must be >= 0");
  if (cfg.threads < 1) fail("threads must be >= 1");
  if (cfg.algo == Algorithm::LocalAdaAlter) {
    // every radicand is b0sq + t' eps^2 or larger
    if (!(cfg.resolved_b0sq() + cfg.epssq > 0.0)) fail("local_adaalter needs b0sq + epssq > 0");
  }
  if (cfg.algo == Algorithm::AdaGrad && !(cfg.epssq > 0.0)) fail("adagrad needs epssq > 0");
  if (cfg.check_bound) {
    if (cfg.algo != Algorithm::LocalAdaAlter) fail("check_bound requires algo=local_adaalter");
    if (!cfg.clip_rho) fail("check_bound requires clip_rho");
    if (!(cfg.resolved_b0sq() >= 1.0)) fail("check_bound requires b0sq >= 1");
    if (!(cfg.epssq > 0.0)) fail("check_bound requires epssq > 0");
  }
}

Problem build_problem(const RunConfig& cfg) {
  Engine data_rng(hash_combine(cfg.data_seed, 0x64617461ULL));
  Engine split_rng(hash_combine(cfg.data_seed, 0x73706c74ULL));
  Engine shape_rng(hash_combine(cfg.data_seed, 0x68657373ULL));

  ClusterSpec clusters;
  clusters.num_samples = cfg.num_samples;
  clusters.dim = cfg.d;
  clusters.num_classes = cfg.num_classes;
  clusters.separation = cfg.separation;
  clusters.noise = cfg.noise;
  Dataset data = make_gaussian_clusters(clusters, data_rng);

  auto shards = cfg.identical_shards ? replicate_shards(data, cfg.n)
                                     : partition_non_iid(data, cfg.n, cfg.alpha, split_rng);

  ProblemSpec spec;
  spec.kind = cfg.problem;
  spec.lambda_min = cfg.lambda_min;
  spec.lambda_max = cfg.lambda_max;
  spec.rotate = cfg.rotate;
  spec.beta = cfg.beta;
  spec.l2 = cfg.l2;
  spec.clip_rho = cfg.clip_rho;
  spec.batch = cfg.batch;
  return Problem(spec, std::move(data), std::move(shards), shape_rng);
}

void charge_sync(CommLedger& ledger, std::size_t n, Algorithm algo) {
  ++ledger.sync_rounds;
  if (n > 1) {
    ledger.floats_sent_per_worker +=
        static_cast<std::uint64_t>(floats_per_sync_factor(algo)) * ledger.d;
  }
}

void synchronize(std::span<WorkerState> workers, Algorithm algo, CommLedger& ledger) {
  if (workers.empty()) throw UsageError("synchronize: empty worker list");
  const auto n = workers.size();

  ParamVector x_mean = workers[0].x;
  for (std::size_t k = 1; k < n; ++k) {
    require_same_size(x_mean.size(), workers[k].x.size(), "synchronize");
    x_mean += (workers[k].x - x_mean) / static_cast<double>(k + 1);
  }
  for (auto& w : workers) w.x = x_mean;

  if (algo == Algorithm::LocalAdaAlter) {
    ParamVector a2_mean = workers[0].acc.a2;
    for (std::size_t k = 1; k < n; ++k) {
      require_same_size(a2_mean.size(), workers[k].acc.a2.size(), "synchronize");
      a2_mean += (workers[k].acc.a2 - a2_mean) / static_cast<double>(k + 1);
    }
    for (auto& w : workers) {
      w.acc.a2 = a2_mean;
      w.acc.b2_sync = a2_mean;
    }
  }
  charge_sync(ledger, n, algo);
}

namespace {

template <typename Body>
void for_each_worker(std::size_t n, std::size_t threads, tbb::task_arena* arena, Body&& body) {
  if (threads <= 1 || n <= 1 || arena == nullptr) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  arena->execute([&] {
    tbb::parallel_for(
        tbb::blocked_range<std::size_t>(0, n, 1),
        [&](const tbb::blocked_range<std::size_t>& r) {
          for (std::size_t i = r.begin(); i != r.end(); ++i) body(i);
        },
        tbb::simple_partitioner());
  });
}

ParamVector model_average(const std::vector<WorkerState>& workers) {
  ParamVector mean = workers[0].x;
  for (std::size_t k = 1; k < workers.size(); ++k)
    mean += (workers[k].x - mean) / static_cast<double>(k + 1);
  return mean;
}

void check_agreement(const std::vector<WorkerState>& workers, Algorithm algo, std::int64_t t,
                     bool after_sync) {
  const auto& ref = workers.front();
  for (const auto& w : workers) {
    if (after_sync && w.x != ref.x) {
      throw InvariantError("models disagree after synchronization at t=" + std::to_string(t));
    }
    if (algo == Algorithm::LocalAdaAlter && w.acc.b2_sync != ref.acc.b2_sync) {
      throw InvariantError("synchronized accumulators disagree at t=" + std::to_string(t));
    }
  }
}

}  // namespace

RunResult run(const RunConfig& cfg) {
  validate(cfg);
  return run(cfg, build_problem(cfg));
}

RunResult run(const RunConfig& cfg, const Problem& problem) {
  validate(cfg);
  if (problem.num_workers() != cfg.n) throw UsageError("run: problem shard count differs from n");
  if (problem.dim() != cfg.d) throw UsageError("run: problem dimension differs from d");
  if (cfg.check_bound && !(cfg.resolved_eta() <= 1.0 / problem.smoothness())) {
    throw ConfigError("check_bound requires eta <= 1/L (L = " + std::to_string(problem.smoothness()) +
                      ")");
  }

  const auto d = static_cast<Eigen::Index>(cfg.d);
  const auto n = cfg.n;
  const auto algo = cfg.algo;
  const auto schedule = cfg.schedule();
  const double eta_base = cfg.resolved_eta();
  const double b0sq = cfg.resolved_b0sq();

  std::vector<WorkerState> workers(n);
  for (std::size_t i = 0; i < n; ++i) {
    workers[i].id = i;
    workers[i].x = ParamVector::Constant(d, cfg.x0);
    workers[i].acc = AccumulatorState::initial(d, b0sq, cfg.epssq);
    workers[i].run_seed = cfg.seed;
    workers[i].shard = i;
  }
  // Synchronous AdaGrad keeps one global accumulator.
  ParamVector global_b2 = ParamVector::Constant(d, b0sq);

  CommLedger ledger;
  ledger.d = cfg.d;

  std::optional<tbb::task_arena> arena;
  if (cfg.threads > 1) arena.emplace(static_cast<int>(cfg.threads));

  std::vector<ParamVector> grads(n);
  RunResult result;
  result.trace.rows.reserve(static_cast<std::size_t>(cfg.T));

  for (std::int64_t t = 1; t <= cfg.T; ++t) {
    TraceRow row;
    row.t = t;
    {
      const ParamVector x_bar = model_average(workers);
      row.loss_avg_model = problem.value(x_bar);
      row.grad_norm_sq_avg_model = problem.gradient(x_bar).squaredNorm();
    }
    row.eta_t = cfg.warm_up_steps > 0 ? warmup_lr(t, eta_base, cfg.warm_up_steps) : eta_base;

    StepParams sp;
    sp.eta = row.eta_t;
    sp.t = t;
    sp.H = schedule.mode == SyncMode::Periodic ? schedule.H : 1;
    sp.warm_up_steps = cfg.warm_up_steps;
    sp.eta_base = eta_base;
    if (schedule.mode == SyncMode::Never) {
      // t' keeps counting since nothing is ever synchronized
      sp.H = t;
    }

    for_each_worker(n, cfg.threads, arena ? &*arena : nullptr, [&](std::size_t i) {
      auto& w = workers[i];
      Engine rng = worker_stream(w.run_seed, w.id, static_cast<std::uint64_t>(t));
      grads[i] = stochastic_gradient(problem, w.x, w.shard, rng);
      switch (algo) {
        case Algorithm::LocalSgd:
          w.x = local_sgd_step(w.x, grads[i], sp.eta);
          break;
        case Algorithm::LocalAdaAlter: {
          auto step = adaalter_local_step(w.x, w.acc, grads[i], sp);
          w.x = std::move(step.y);
          w.acc = std::move(step.acc);
          break;
        }
        case Algorithm::Sgd:
        case Algorithm::AdaGrad:
          break;
      }
    });

    if (algo == Algorithm::Sgd || algo == Algorithm::AdaGrad) {
      const ParamVector g_avg = average(grads);
      ParamVector x_next;
      if (algo == Algorithm::Sgd) {
        x_next = local_sgd_step(workers[0].x, g_avg, sp.eta);
      } else {
        auto step = adagrad_step(workers[0].x, global_b2, g_avg, sp.eta, cfg.epssq);
        x_next = std::move(step.x);
        global_b2 = std::move(step.b2);
      }
      for (auto& w : workers) w.x = x_next;
      charge_sync(ledger, n, algo);
      row.sync_round = true;
    } else if (schedule.is_sync_round(t)) {
      synchronize(workers, algo, ledger);
      row.sync_round = true;
    }

    if (cfg.verify_invariants) check_agreement(workers, algo, t, row.sync_round);
    row.comm_floats_cum = ledger.floats_sent_per_worker;
    result.trace.rows.push_back(row);
  }

  result.final_model = model_average(workers);
  result.final_loss = problem.value(result.final_model);
  if (!std::isfinite(result.final_loss)) throw InvariantError("run: final loss is not finite");
  result.ledger = ledger;
  result.smoothness = problem.smoothness();
  result.clip_rho = problem.clip_bound();
  result.min_value = problem.min_value();
  return result;
}

CommSummary comm_summary(const CommLedger& ledger, std::int64_t T, Algorithm algo) {
  if (T < 1) throw UsageError("comm_summary: T must be >= 1");
  const auto per_round = static_cast<std::uint64_t>(floats_per_sync_factor(algo)) * ledger.d;
  if (ledger.floats_sent_per_worker != 0 &&
      ledger.floats_sent_per_worker != ledger.sync_rounds * per_round) {
    throw InvariantError("comm_summary: ledger does not match the algorithm's per-round cost");
  }
  CommSummary s;
  s.sync_rounds = ledger.sync_rounds;
  s.floats_total = ledger.floats_sent_per_worker;
  s.floats_per_iter_avg = static_cast<double>(s.floats_total) / static_cast<double>(T);
  s.reduction_factor =
      ledger.d == 0 ? 0.0 : s.floats_per_iter_avg / static_cast<double>(ledger.d);
  return s;
}

}  // namespace adaalter
