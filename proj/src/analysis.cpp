#include "adaalter/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>

#include "json.hpp"

namespace adaalter {

using nlohmann::json;

Lemma1Result lemma1_check(double a0, std::span<const double> seq) {
  if (!(a0 > 0.0)) throw DomainError("lemma1_check: a0 must be > 0");
  if (seq.empty()) throw UsageError("lemma1_check: empty sequence");
  Lemma1Result r;
  double running = a0;
  for (double a : seq) {
    if (!(a >= 0.0)) throw DomainError("lemma1_check: sequence entries must be >= 0");
    running += a;
    r.lhs += a / running;
  }
  r.rhs = std::log(running) - std::log(a0);
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

void check_hypotheses(const BoundInputs& b) {
  auto fail = [](const std::string& msg) { throw UsageError("bound hypothesis violated: " + msg); };
  if (!(b.L > 0.0)) fail("L > 0");
  if (!(b.eta > 0.0)) fail("eta > 0");
  if (!(b.eta <= 1.0 / b.L)) fail("eta <= 1/L");
  if (!(b.b0sq >= 1.0)) fail("b0 >= 1");
  if (!(b.eps > 0.0)) fail("eps > 0");
  if (!(b.rho > 0.0)) fail("rho > 0");
  if (b.H < 1) fail("H >= 1");
  if (b.n < 1) fail("n >= 1");
  if (b.T < 1) fail("T >= 1");
  if (b.d < 1) fail("d >= 1");
  if (!(b.F_gap >= 0.0)) fail("F_gap >= 0");
}

BoundTerms theorem_bound_terms(const BoundInputs& b) {
  check_hypotheses(b);
  const double T = static_cast<double>(b.T);
  const double H = static_cast<double>(b.H);
  const double d = static_cast<double>(b.d);
  const double n = static_cast<double>(b.n);

  BoundTerms out;
  out.p = std::min(b.eps / b.rho, 1.0);
  const double p2 = out.p * out.p;
  const double s = std::sqrt(b.b0sq + T * b.eps * b.eps / p2);
  const double log_term = d * std::log(b.b0sq + T * b.rho * b.rho);

  out.terms[0] = 2.0 * s * b.F_gap / (b.eta * T);
  out.terms[1] = 4.0 * b.eta * b.eta * b.L * b.L * H * H * s * log_term / (T * p2);
  out.terms[2] = b.L * b.eta * s * log_term / (n * T * p2);
  out.total = out.terms[0] + out.terms[1] + out.terms[2];
  return out;
}

double theorem_bound(const BoundInputs& b) { return theorem_bound_terms(b).total; }

double avg_sq_grad_norm(const Trace& trace) {
  if (trace.rows.empty()) throw UsageError("avg_sq_grad_norm: empty trace");
  double sum = 0.0;
  for (const auto& r : trace.rows) sum += r.grad_norm_sq_avg_model;
  return sum / static_cast<double>(trace.rows.size());
}

double f_gap_from_trace(const Trace& trace) {
  if (trace.rows.empty()) throw UsageError("f_gap_from_trace: empty trace");
  double lowest = trace.rows.front().loss_avg_model;
  for (const auto& r : trace.rows) lowest = std::min(lowest, r.loss_avg_model);
  return trace.rows.front().loss_avg_model - lowest;
}

BoundReport verify_bound(const Trace& trace, const BoundInputs& inputs) {
  BoundReport report;
  report.inputs = inputs;
  report.bound = theorem_bound_terms(inputs);
  report.measured = avg_sq_grad_norm(trace);
  report.dominated = report.measured <= report.bound.total;
  return report;
}

BoundInputs bound_inputs_for_run(const RunConfig& cfg, const RunResult& result) {
  if (!result.clip_rho) throw UsageError("bound inputs need a certified rho (set clip_rho)");
  if (result.trace.rows.empty()) throw UsageError("bound inputs need a nonempty trace");
  BoundInputs b;
  b.L = result.smoothness;
  b.rho = *result.clip_rho;
  b.eps = std::sqrt(cfg.epssq);
  b.eta = cfg.resolved_eta();
  b.H = cfg.schedule().mode == SyncMode::Never ? cfg.T : cfg.schedule().H;
  b.n = cfg.n;
  b.T = cfg.T;
  b.b0sq = cfg.resolved_b0sq();
  b.d = cfg.d;
  const double f0 = result.trace.rows.front().loss_avg_model;
  b.F_gap = result.min_value ? std::max(0.0, f0 - *result.min_value) : f_gap_from_trace(result.trace);
  return b;
}

namespace {

json to_json(const BoundInputs& b) {
  return json{{"L", b.L},       {"rho", b.rho}, {"eps", b.eps},   {"eta", b.eta},
              {"H", b.H},       {"n", b.n},     {"T", b.T},       {"b0sq", b.b0sq},
              {"d", b.d},       {"F_gap", b.F_gap}};
}

BoundInputs from_json(const json& j) {
  static const char* kKeys[] = {"L", "rho", "eps", "eta", "H", "n", "T", "b0sq", "d", "F_gap"};
  for (const auto& [key, _] : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      throw UsageError("bound inputs: unknown key '" + key + "'");
    }
  }
  for (const char* key : kKeys) {
    if (!j.contains(key)) throw UsageError(std::string("bound inputs: missing key '") + key + "'");
  }
  BoundInputs b;
  try {
    b.L = j.at("L").get<double>();
    b.rho = j.at("rho").get<double>();
    b.eps = j.at("eps").get<double>();
    b.eta = j.at("eta").get<double>();
    b.H = j.at("H").get<std::int64_t>();
    b.n = j.at("n").get<std::size_t>();
    b.T = j.at("T").get<std::int64_t>();
    b.b0sq = j.at("b0sq").get<double>();
    b.d = j.at("d").get<std::size_t>();
    b.F_gap = j.at("F_gap").get<double>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("bound inputs: ") + e.what());
  }
  return b;
}

}  // namespace

BoundInputs read_bound_inputs_json(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(std::string("bound inputs: ") + e.what());
  }
  // a full bound report is accepted too
  if (j.contains("inputs") && j.at("inputs").is_object()) return from_json(j.at("inputs"));
  return from_json(j);
}

BoundInputs read_bound_inputs_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open bound inputs '" + path + "'");
  return read_bound_inputs_json(in);
}

std::string bound_inputs_to_json(const BoundInputs& b) { return to_json(b).dump(2); }

std::string bound_report_to_json(const BoundReport& report) {
  json j;
  j["inputs"] = to_json(report.inputs);
  j["bound_terms"] = report.bound.terms;
  j["bound_total"] = report.bound.total;
  j["p"] = report.bound.p;
  j["measured"] = report.measured;
  j["dominated"] = report.dominated;
  return j.dump(2);
}

}  // namespace adaalter
