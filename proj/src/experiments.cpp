#include "adaalter/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "adaalter/config.hpp"
#include "adaalter/trace_io.hpp"
#include "json.hpp"

namespace adaalter {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

}  // namespace

std::string summary_json(const RunConfig& cfg, const RunResult& result) {
  const auto comm = comm_summary(result.ledger, cfg.T, cfg.algo);
  json j;
  j["run"] = run_name(cfg);
  j["algo"] = to_string(cfg.algo);
  j["n"] = cfg.n;
  j["T"] = cfg.T;
  j["H"] = cfg.H;
  j["d"] = cfg.d;
  j["final_loss"] = result.final_loss;
  j["avg_sq_grad_norm"] = avg_sq_grad_norm(result.trace);
  j["smoothness_L"] = result.smoothness;
  j["clipping"] = result.clip_rho.has_value();
  // coordinate clipping biases the stochastic gradients
  j["gradients_unbiased"] = !result.clip_rho.has_value();
  if (result.clip_rho) j["clip_rho"] = *result.clip_rho;
  if (result.min_value) j["min_value"] = *result.min_value;
  j["comm"] = {{"sync_rounds", comm.sync_rounds},
               {"floats_sent_per_worker", comm.floats_total},
               {"floats_per_iter_avg", comm.floats_per_iter_avg},
               {"reduction_factor", comm.reduction_factor}};
  std::vector<double> model(result.final_model.data(),
                            result.final_model.data() + result.final_model.size());
  j["final_model"] = model;
  return j.dump(2);
}

RunArtifacts run_and_save(const RunConfig& cfg) {
  validate(cfg);
  const Problem problem = build_problem(cfg);
  RunArtifacts out;
  out.result = run(cfg, problem);

  const std::string name = run_name(cfg);
  out.dir = fs::path(cfg.output_dir) / name;
  fs::create_directories(out.dir);
  write_text(out.dir / "config.txt", emit_config(cfg));
  out.trace_file = out.dir / ("trace_" + name + ".csv");
  write_trace_csv(out.trace_file.string(), out.result.trace);
  write_text(out.dir / "summary.json", summary_json(cfg, out.result));

  if (cfg.check_bound) {
    const BoundInputs inputs = bound_inputs_for_run(cfg, out.result);
    write_text(out.dir / "bound_inputs.json", bound_inputs_to_json(inputs));
    write_text(out.dir / "bound_report.json",
               bound_report_to_json(verify_bound(out.result.trace, inputs)));
  }
  if (cfg.dump_shards) {
    std::ofstream shards(out.dir / "shards.csv", std::ios::binary);
    write_shards_csv(shards, problem);
  }
  return out;
}

SweepSummary run_sweep(const RunConfig& base, std::span<const std::int64_t> H_values,
                       std::span<const std::uint64_t> seeds, bool save_runs) {
  if (H_values.empty()) throw UsageError("run_sweep: no H values");
  if (seeds.empty()) throw UsageError("run_sweep: no seeds");
  validate(base);
  // The problem depends only on data_seed, so every cell shares it.
  const Problem problem = build_problem(base);

  SweepSummary summary;
  for (const auto H : H_values) {
    SweepRow row;
    row.H = H;
    std::vector<double> losses, grad_norms;
    for (const auto seed : seeds) {
      ++row.runs;
      RunConfig cfg = base;
      cfg.H = H;
      cfg.seed = seed;
      try {
        const RunResult r = save_runs ? run_and_save(cfg).result : run(cfg, problem);
        losses.push_back(r.final_loss);
        grad_norms.push_back(avg_sq_grad_norm(r.trace));
        row.comm_floats = r.ledger.floats_sent_per_worker;
      } catch (const Error& e) {
        ++row.failed;
        row.errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
      }
    }
    if (!losses.empty()) {
      double mean = 0.0;
      for (double v : losses) mean += v;
      mean /= static_cast<double>(losses.size());
      double var = 0.0;
      for (double v : losses) var += (v - mean) * (v - mean);
      row.final_loss_mean = mean;
      row.final_loss_std =
          losses.size() > 1 ? std::sqrt(var / static_cast<double>(losses.size() - 1)) : 0.0;
      double g = 0.0;
      for (double v : grad_norms) g += v;
      row.avg_sq_grad_norm_mean = g / static_cast<double>(grad_norms.size());
    } else {
      row.final_loss_mean = row.final_loss_std = row.avg_sq_grad_norm_mean = std::nan("");
    }
    summary.rows.push_back(std::move(row));
  }
  return summary;
}

void write_sweep_csv(std::ostream& out, const SweepSummary& summary) {
  out << "H,runs,failed,final_loss_mean,final_loss_std,avg_sq_grad_norm_mean,comm_floats\n";
  for (const auto& r : summary.rows) {
    out << r.H << ',' << r.runs << ',' << r.failed << ',' << format_double(r.final_loss_mean) << ','
        << format_double(r.final_loss_std) << ',' << format_double(r.avg_sq_grad_norm_mean) << ','
        << r.comm_floats << '\n';
  }
}

std::string format_sweep_table(const SweepSummary& summary) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%6s %6s %26s %16s %14s\n", "H", "runs", "final F(x_bar) mean+-std",
                "avg |grad|^2", "comm floats");
  out << line;
  for (const auto& r : summary.rows) {
    std::snprintf(line, sizeof(line), "%6lld %6zu %13.6g +- %-10.3g %16.6g %14llu%s\n",
                  static_cast<long long>(r.H), r.runs, r.final_loss_mean, r.final_loss_std,
                  r.avg_sq_grad_norm_mean, static_cast<unsigned long long>(r.comm_floats),
                  r.failed ? "  (failed cells)" : "");
    out << line;
    for (const auto& e : r.errors) out << "       ! " << e << '\n';
  }
  return out.str();
}

namespace {

void require_same_problem(const RunConfig& a, const RunConfig& b) {
  auto mismatch = [](const char* field) {
    throw UsageError(std::string("compare: configs differ in ") + field);
  };
  if (a.problem != b.problem) mismatch("problem");
  if (a.d != b.d) mismatch("d");
  if (a.T != b.T) mismatch("T");
  if (a.seed != b.seed) mismatch("seed");
  if (a.data_seed != b.data_seed) mismatch("data_seed");
  if (a.n != b.n) mismatch("n");
  if (a.num_samples != b.num_samples || a.num_classes != b.num_classes ||
      a.separation != b.separation || a.noise != b.noise) {
    mismatch("dataset");
  }
  if (a.lambda_min != b.lambda_min || a.lambda_max != b.lambda_max || a.rotate != b.rotate ||
      a.beta != b.beta || a.l2 != b.l2) {
    mismatch("problem parameters");
  }
  if (a.alpha != b.alpha || a.identical_shards != b.identical_shards) mismatch("partition");
}

std::string default_label(const RunConfig& c) {
  std::string label = to_string(c.algo);
  if (c.algo == Algorithm::LocalSgd || c.algo == Algorithm::LocalAdaAlter) {
    if (c.sync == SyncMode::Never) {
      label += "_Hinf";
    } else if (c.sync == SyncMode::Periodic) {
      label += "_H" + std::to_string(c.H);
    }
  }
  return label;
}

}  // namespace

CompareReport compare_baselines(std::span<const RunConfig> configs) {
  if (configs.empty()) throw UsageError("compare: no configs");
  for (const auto& c : configs) {
    validate(c);
    require_same_problem(configs.front(), c);
  }
  const Problem problem = build_problem(configs.front());

  CompareReport report;
  for (const auto& c : configs) {
    CompareEntry e;
    e.config = c;
    e.label = default_label(c);
    int dup = 1;
    for (const auto& prev : report.entries) {
      if (prev.label == e.label || prev.label.rfind(e.label + "#", 0) == 0) ++dup;
    }
    if (dup > 1) e.label += "#" + std::to_string(dup);
    e.result = run(c, problem);
    report.entries.push_back(std::move(e));
  }

  const double target = report.entries.front().result.final_loss;
  for (auto& e : report.entries) {
    for (const auto& row : e.result.trace.rows) {
      // rows hold F(x̄_{t-1}); the floats spent to reach it are those before step t
      if (row.loss_avg_model <= target) {
        e.iterations_to_reference = row.t - 1;
        e.floats_to_reference = static_cast<std::int64_t>(
            row.t == 1 ? 0 : e.result.trace.rows[static_cast<std::size_t>(row.t - 2)].comm_floats_cum);
        break;
      }
    }
    if (e.iterations_to_reference < 0 && e.result.final_loss <= target) {
      e.iterations_to_reference = e.config.T;
      e.floats_to_reference = static_cast<std::int64_t>(e.result.ledger.floats_sent_per_worker);
    }
  }
  return report;
}

void write_loss_vs_iteration_csv(std::ostream& out, const CompareReport& report) {
  out << 't';
  for (const auto& e : report.entries) out << ',' << e.label;
  out << '\n';
  if (report.entries.empty()) return;
  const auto rows = report.entries.front().result.trace.rows.size();
  for (std::size_t k = 0; k < rows; ++k) {
    out << report.entries.front().result.trace.rows[k].t;
    for (const auto& e : report.entries) out << ',' << format_double(e.result.trace.rows[k].loss_avg_model);
    out << '\n';
  }
}

void write_loss_vs_comm_csv(std::ostream& out, const CompareReport& report) {
  out << "label,iterate,comm_floats_cum,loss\n";
  for (const auto& e : report.entries) {
    // x̄_k against the floats spent to produce it
    std::uint64_t spent = 0;
    for (const auto& row : e.result.trace.rows) {
      out << e.label << ',' << row.t - 1 << ',' << spent << ',' << format_double(row.loss_avg_model)
          << '\n';
      spent = row.comm_floats_cum;
    }
    out << e.label << ',' << e.config.T << ',' << spent << ',' << format_double(e.result.final_loss)
        << '\n';
  }
}

std::string format_compare_table(const CompareReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %16s %14s %18s %18s\n", "run", "final F(x_bar)",
                "comm floats", "iters to ref", "floats to ref");
  out << line;
  for (const auto& e : report.entries) {
    std::snprintf(line, sizeof(line), "%-22s %16.8g %14llu %18lld %18lld\n", e.label.c_str(),
                  e.result.final_loss,
                  static_cast<unsigned long long>(e.result.ledger.floats_sent_per_worker),
                  static_cast<long long>(e.iterations_to_reference),
                  static_cast<long long>(e.floats_to_reference));
    out << line;
  }
  return out.str();
}

}  // namespace adaalter
