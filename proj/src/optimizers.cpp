#include "adaalter/optimizers.hpp"

#include <algorithm>
#include <cmath>

namespace adaalter {

AccumulatorState AccumulatorState::initial(Eigen::Index d, double b0sq, double epssq) {
  if (!(b0sq >= 0.0)) throw UsageError("b0sq must be >= 0");
  if (!(epssq >= 0.0)) throw UsageError("epssq must be >= 0");
  AccumulatorState acc;
  acc.a2 = ParamVector::Constant(d, b0sq);
  acc.b2_sync = acc.a2;
  acc.b0sq = b0sq;
  acc.epssq = epssq;
  return acc;
}

std::int64_t local_step_counter(std::int64_t t, std::int64_t H) {
  if (t < 1) throw UsageError("local_step_counter: t must be >= 1");
  if (H < 1) throw UsageError("local_step_counter: H must be >= 1");
  return (t - 1) % H + 1;
}

AdaAlterStep adaalter_local_step(const ParamVector& x, const AccumulatorState& acc,
                                 const ParamVector& grad, const StepParams& sp) {
  require_same_size(x.size(), grad.size(), "adaalter_local_step");
  require_same_size(x.size(), acc.a2.size(), "adaalter_local_step");
  require_same_size(x.size(), acc.b2_sync.size(), "adaalter_local_step");
  const auto tp = local_step_counter(sp.t, sp.H);

  ParamVector scale;
  try {
    scale = inv_sqrt_shifted(acc.b2_sync, static_cast<double>(tp) * acc.epssq);
  } catch (const DomainError& e) {
    throw InvariantError(std::string("adaalter_local_step: ") + e.what());
  }

  AdaAlterStep out{x - sp.eta * grad.cwiseProduct(scale), acc};
  out.acc.a2 += grad.cwiseProduct(grad);
  require_finite(out.y, "adaalter_local_step");
  return out;
}

AdaGradStep adagrad_step(const ParamVector& x, const ParamVector& b2, const ParamVector& grad_avg,
                         double eta, double epssq) {
  require_same_size(x.size(), b2.size(), "adagrad_step");
  require_same_size(x.size(), grad_avg.size(), "adagrad_step");
  AdaGradStep out;
  out.b2 = b2 + grad_avg.cwiseProduct(grad_avg);
  ParamVector scale;
  try {
    scale = inv_sqrt_shifted(out.b2, epssq);
  } catch (const DomainError& e) {
    throw InvariantError(std::string("adagrad_step: ") + e.what());
  }
  out.x = x - eta * grad_avg.cwiseProduct(scale);
  require_finite(out.x, "adagrad_step");
  return out;
}

ParamVector local_sgd_step(const ParamVector& x, const ParamVector& grad, double eta) {
  require_same_size(x.size(), grad.size(), "local_sgd_step");
  ParamVector y = x - eta * grad;
  require_finite(y, "local_sgd_step");
  return y;
}

double warmup_lr(std::int64_t t, double eta, std::int64_t warm_up_steps) {
  if (warm_up_steps < 1) throw UsageError("warmup_lr: warm_up_steps must be >= 1");
  if (t < 0) throw UsageError("warmup_lr: t must be >= 0");
  if (t >= warm_up_steps) return eta;
  return eta * (static_cast<double>(t) / static_cast<double>(warm_up_steps));
}

std::string to_string(LrScaleMode mode) {
  switch (mode) {
    case LrScaleMode::None:
      return "none";
    case LrScaleMode::Linear:
      return "linear";
    case LrScaleMode::Sqrt:
      return "sqrt";
  }
  return "unknown";
}

LrScaleMode parse_lr_scale_mode(const std::string& text) {
  if (text == "none") return LrScaleMode::None;
  if (text == "linear") return LrScaleMode::Linear;
  if (text == "sqrt") return LrScaleMode::Sqrt;
  throw UsageError("unknown learning-rate scaling mode '" + text + "'");
}

double scale_lr(double eta_base, double k, LrScaleMode mode) {
  if (!(k > 0.0)) throw UsageError("scale_lr: k must be > 0");
  switch (mode) {
    case LrScaleMode::None:
      return eta_base;
    case LrScaleMode::Linear:
      return eta_base * k;
    case LrScaleMode::Sqrt:
      return eta_base * std::sqrt(k);
  }
  throw UsageError("scale_lr: unknown mode");
}

}  // namespace adaalter
