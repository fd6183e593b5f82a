#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adaalter/core_math.hpp"
#include "adaalter/rng.hpp"

namespace adaalter {

enum class ProblemKind { Quadratic, Logistic, SinQuadratic };

std::string to_string(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& text);

/// Finite labelled sample set; one row of `features` per sample.
struct Dataset {
  Matrix<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }
};

struct ClusterSpec {
  std::size_t num_samples = 512;
  std::size_t dim = 10;
  int num_classes = 2;
  double separation = 1.0;  // std-dev of the class centres
  double noise = 1.0;       // std-dev of samples around their centre
};

/// Gaussian clusters with balanced labels (sample k has label k mod num_classes).
Dataset make_gaussian_clusters(const ClusterSpec& spec, Engine& rng);

/// Samples owned by one worker.
struct Shard {
  std::size_t worker = 0;
  std::vector<std::size_t> samples;  // ascending dataset indices
  double skew = 0.0;
};

/// Splits `data` into n disjoint shards whose sizes differ by at most one.
///
/// Each shard takes round(alpha * size) samples from its own block of the
/// label-sorted dataset and fills the rest uniformly from what remains, so
/// alpha = 0 is an IID split and alpha = 1 a fully label-sorted one.
std::vector<Shard> partition_non_iid(const Dataset& data, std::size_t n, double alpha, Engine& rng);

/// n shards that all hold the whole dataset.
std::vector<Shard> replicate_shards(const Dataset& data, std::size_t n);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Quadratic;
  double lambda_min = 0.1;   // spectrum of the quadratic part
  double lambda_max = 1.0;
  bool rotate = true;        // false keeps the Hessian diagonal
  double beta = 0.0;         // amplitude of the sin perturbation
  double l2 = 0.0;           // ridge term of the logistic loss
  std::optional<double> clip_rho;
  std::size_t batch = 1;     // 0 means the whole shard
};

/// Finite-sum objective F(x) = (1/n) sum_i F_i(x), F_i the mean loss over shard i.
///
/// Per-sample losses:
///   quadratic      1/2 x'Ax - a_k'x
///   sin_quadratic  1/2 x'Ax - a_k'x + beta * sum_j sin(x_j)
///   logistic       log(1 + exp(-y_k a_k'x)) + l2/2 |x|^2,  y_k = +1 for odd labels, -1 otherwise
class Problem {
 public:
  /// `rng` draws the random rotation of the quadratic Hessian.
  Problem(const ProblemSpec& spec, Dataset data, std::vector<Shard> shards, Engine& rng);

  ProblemKind kind() const { return spec_.kind; }
  const ProblemSpec& spec() const { return spec_; }
  std::size_t dim() const { return data_.dim(); }
  std::size_t num_workers() const { return shards_.size(); }
  const Dataset& data() const { return data_; }
  const std::vector<Shard>& shards() const { return shards_; }
  const std::optional<double>& clip_bound() const { return spec_.clip_rho; }

  /// Gradient-Lipschitz constant; exact for the quadratic, an upper bound otherwise.
  double smoothness() const { return smoothness_; }

  /// Hessian of the quadratic part (zero for logistic).
  const Matrix<double>& hessian() const { return hessian_; }

  double value(const ParamVector& x) const;
  ParamVector gradient(const ParamVector& x) const;
  double shard_value(const ParamVector& x, std::size_t worker) const;
  ParamVector shard_gradient(const ParamVector& x, std::size_t worker) const;
  ParamVector sample_gradient(const ParamVector& x, std::size_t sample) const;

  /// Analytic minimiser and minimum; quadratic only.
  std::optional<ParamVector> minimizer() const;
  std::optional<double> min_value() const;

 private:
  ParamVector apply_hessian(const ParamVector& x) const;
  double sample_value(const ParamVector& x, std::size_t sample) const;
  void check_dim(const ParamVector& x, const char* what) const;
  void check_worker(std::size_t worker) const;

  ProblemSpec spec_;
  Dataset data_;
  std::vector<Shard> shards_;
  Matrix<double> hessian_;
  ParamVector hessian_diag_;
  std::vector<ParamVector> shard_means_;  // mean feature vector per shard
  ParamVector global_mean_;               // (1/n) sum_i shard_means_[i]
  std::vector<double> signs_;
  double smoothness_ = 0.0;
};

/// Exact gradient of F.
ParamVector full_gradient(const Problem& p, const ParamVector& x);

/// Minibatch estimate of grad F_worker, clipped to the problem's bound when one is set.
ParamVector stochastic_gradient(const Problem& p, const ParamVector& x, std::size_t worker,
                                Engine& rng);

/// Central differences (F(x + h e_j) - F(x - h e_j)) / 2h.
ParamVector finite_diff_gradient(const Problem& p, const ParamVector& x, double h);

/// worker_id, sample_index, features..., label
void write_shards_csv(std::ostream& out, const Problem& p);

}  // namespace adaalter
