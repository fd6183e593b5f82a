#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "adaalter/cluster.hpp"

namespace adaalter {

struct Lemma1Result {
  double lhs = 0.0;  // sum_t a_t / (a0 + sum_{s<=t} a_s)
  double rhs = 0.0;  // log(a0 + sum_t a_t) - log(a0)
  bool holds = false;
};

/// Evaluates both sides of the log-sum inequality for a non-negative sequence.
Lemma1Result lemma1_check(double a0, std::span<const double> seq);

/// Inputs of the explicit convergence bound for Local AdaAlter.
struct BoundInputs {
  double L = 1.0;     // smoothness constant
  double rho = 1.0;   // bound on every gradient coordinate
  double eps = 1.0;   // epsilon (not squared)
  double eta = 1.0;
  std::int64_t H = 1;
  std::size_t n = 1;
  std::int64_t T = 1;
  double b0sq = 1.0;
  std::size_t d = 1;
  double F_gap = 0.0;  // upper bound on F(x̄_0) - F(x̄_T)
};

/// Throws UsageError naming the first violated hypothesis (eta <= 1/L, b0 >= 1, eps > 0, ...).
void check_hypotheses(const BoundInputs& b);

struct BoundTerms {
  std::array<double, 3> terms{};  // optimisation gap, H^2 drift, 1/n variance
  double total = 0.0;
  double p = 0.0;                 // min(eps / rho, 1)
};

BoundTerms theorem_bound_terms(const BoundInputs& b);

/// 2 S F_gap / (eta T) + 4 eta^2 L^2 H^2 S d log(b0^2 + T rho^2) / (T p^2)
///   + L eta S d log(b0^2 + T rho^2) / (n T p^2),  S = sqrt(b0^2 + T eps^2 / p^2).
double theorem_bound(const BoundInputs& b);

/// Mean of the grad_norm_sq column.
double avg_sq_grad_norm(const Trace& trace);

/// F(x̄_0) - min_t F(x̄_{t-1}) taken from the loss column.
double f_gap_from_trace(const Trace& trace);

struct BoundReport {
  BoundInputs inputs;
  BoundTerms bound;
  double measured = 0.0;
  bool dominated = false;
};

BoundReport verify_bound(const Trace& trace, const BoundInputs& inputs);

/// Bound inputs for a finished run: L from the problem, rho from clipping, F_gap from the
/// analytic minimum when known and from the trace otherwise.
BoundInputs bound_inputs_for_run(const RunConfig& cfg, const RunResult& result);

BoundInputs read_bound_inputs_json(std::istream& in);
BoundInputs read_bound_inputs_json(const std::string& path);
std::string bound_inputs_to_json(const BoundInputs& b);

/// {inputs, bound_terms: [t1,t2,t3], bound_total, measured, dominated}
std::string bound_report_to_json(const BoundReport& report);

}  // namespace adaalter
