#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "adaalter/core_math.hpp"

namespace adaalter {

/// Per-worker accumulator state of Local AdaAlter.
///
/// `a2` is the running accumulator: the synchronized value plus every G∘G added
/// since the last synchronization. In local rounds B²_{i,t} and A²_{i,t} coincide,
/// so `a2` also serves as B² (see b2()). `b2_sync` is the snapshot taken at the
/// last synchronization; it is the only accumulator read by the step rule.
struct AccumulatorState {
  ParamVector a2;
  ParamVector b2_sync;
  double b0sq = 1.0;
  double epssq = 1.0;

  /// Both buffers start at b0sq * 1.
  static AccumulatorState initial(Eigen::Index d, double b0sq, double epssq);

  const ParamVector& b2() const { return a2; }
};

struct StepParams {
  double eta = 0.0;             // learning rate in effect for this step
  std::int64_t t = 1;           // 1-based iteration
  std::int64_t H = 1;           // synchronization period
  std::int64_t warm_up_steps = 0;
  double eta_base = 0.0;
};

/// t' = ((t - 1) mod H) + 1, the number of local steps since the last sync including this one.
std::int64_t local_step_counter(std::int64_t t, std::int64_t H);

struct AdaAlterStep {
  ParamVector y;
  AccumulatorState acc;
};

/// y = x - eta * G / sqrt(B2_sync + t' eps^2);  A2 <- A2 + G∘G.
AdaAlterStep adaalter_local_step(const ParamVector& x, const AccumulatorState& acc,
                                 const ParamVector& grad, const StepParams& sp);

struct AdaGradStep {
  ParamVector x;
  ParamVector b2;
};

/// B2 <- B2 + G∘G, then x <- x - eta * G / sqrt(B2 + eps^2). `grad_avg` is already averaged over workers.
AdaGradStep adagrad_step(const ParamVector& x, const ParamVector& b2, const ParamVector& grad_avg,
                         double eta, double epssq);

ParamVector local_sgd_step(const ParamVector& x, const ParamVector& grad, double eta);

/// eta * min(1, t / warm_up_steps)
double warmup_lr(std::int64_t t, double eta, std::int64_t warm_up_steps);

enum class LrScaleMode { None, Linear, Sqrt };

std::string to_string(LrScaleMode mode);
LrScaleMode parse_lr_scale_mode(const std::string& text);

/// eta_base * k (linear) or eta_base * sqrt(k) (sqrt).
double scale_lr(double eta_base, double k, LrScaleMode mode);

}  // namespace adaalter
