#include "adaalter/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace adaalter {

std::string to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Quadratic:
      return "quadratic";
    case ProblemKind::Logistic:
      return "logistic";
    case ProblemKind::SinQuadratic:
      return "sin_quadratic";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(const std::string& text) {
  if (text == "quadratic") return ProblemKind::Quadratic;
  if (text == "logistic") return ProblemKind::Logistic;
  if (text == "sin_quadratic") return ProblemKind::SinQuadratic;
  throw UsageError("unknown problem kind '" + text + "'");
}

Dataset make_gaussian_clusters(const ClusterSpec& spec, Engine& rng) {
  if (spec.num_samples == 0 || spec.dim == 0 || spec.num_classes < 1) {
    throw UsageError("make_gaussian_clusters: empty dataset requested");
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(spec.dim);
  Matrix<double> centres(spec.num_classes, d);
  for (Eigen::Index c = 0; c < centres.rows(); ++c)
    for (Eigen::Index j = 0; j < d; ++j) centres(c, j) = spec.separation * normal(rng);

  Dataset data;
  data.features.resize(static_cast<Eigen::Index>(spec.num_samples), d);
  data.labels.resize(spec.num_samples);
  for (std::size_t k = 0; k < spec.num_samples; ++k) {
    const int label = static_cast<int>(k % static_cast<std::size_t>(spec.num_classes));
    data.labels[k] = label;
    const auto row = static_cast<Eigen::Index>(k);
    for (Eigen::Index j = 0; j < d; ++j) {
      data.features(row, j) = centres(label, j) + spec.noise * normal(rng);
    }
  }
  return data;
}

std::vector<Shard> partition_non_iid(const Dataset& data, std::size_t n, double alpha,
                                     Engine& rng) {
  const std::size_t total = data.size();
  if (n == 0) throw UsageError("partition_non_iid: need at least one worker");
  if (total == 0) throw UsageError("partition_non_iid: empty dataset");
  if (n > total) throw UsageError("partition_non_iid: more workers than samples");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("partition_non_iid: alpha must lie in [0,1]");

  std::vector<std::size_t> sorted(total);
  std::iota(sorted.begin(), sorted.end(), std::size_t{0});
  std::stable_sort(sorted.begin(), sorted.end(),
                   [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });

  std::vector<std::size_t> sizes(n, total / n);
  for (std::size_t i = 0; i < total % n; ++i) ++sizes[i];

  std::vector<Shard> shards(n);
  std::vector<std::size_t> pool;
  pool.reserve(total);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> block(sorted.begin() + static_cast<std::ptrdiff_t>(offset),
                                   sorted.begin() + static_cast<std::ptrdiff_t>(offset + sizes[i]));
    offset += sizes[i];
    std::shuffle(block.begin(), block.end(), rng);
    const auto keep = std::min<std::size_t>(
        sizes[i], static_cast<std::size_t>(std::llround(alpha * static_cast<double>(sizes[i]))));
    shards[i].worker = i;
    shards[i].skew = alpha;
    shards[i].samples.assign(block.begin(), block.begin() + static_cast<std::ptrdiff_t>(keep));
    pool.insert(pool.end(), block.begin() + static_cast<std::ptrdiff_t>(keep), block.end());
  }

  std::shuffle(pool.begin(), pool.end(), rng);
  auto next = pool.begin();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t missing = sizes[i] - shards[i].samples.size();
    shards[i].samples.insert(shards[i].samples.end(), next,
                             next + static_cast<std::ptrdiff_t>(missing));
    next += static_cast<std::ptrdiff_t>(missing);
    std::sort(shards[i].samples.begin(), shards[i].samples.end());
  }
  return shards;
}

std::vector<Shard> replicate_shards(const Dataset& data, std::size_t n) {
  if (n == 0) throw UsageError("replicate_shards: need at least one worker");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<Shard> shards(n);
  for (std::size_t i = 0; i < n; ++i) {
    shards[i].worker = i;
    shards[i].samples = all;
  }
  return shards;
}

namespace {

Matrix<double> make_hessian(const ProblemSpec& spec, Eigen::Index d, Engine& rng) {
  ParamVector eig(d);
  if (d == 1) {
    eig(0) = spec.lambda_max;
  } else {
    // log-spaced spectrum from lambda_min to lambda_max
    const double lo = std::log(spec.lambda_min), hi = std::log(spec.lambda_max);
    for (Eigen::Index j = 0; j < d; ++j)
      eig(j) = std::exp(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(d - 1));
    eig(d - 1) = spec.lambda_max;
  }
  if (!spec.rotate) return eig.asDiagonal();

  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix<double> g(d, d);
  for (Eigen::Index r = 0; r < d; ++r)
    for (Eigen::Index c = 0; c < d; ++c) g(r, c) = normal(rng);
  const Matrix<double> q = Eigen::HouseholderQR<Matrix<double>>(g).householderQ();
  Matrix<double> a = q * eig.asDiagonal() * q.transpose();
  return (0.5 * (a + a.transpose())).eval();
}

}  // namespace

Problem::Problem(const ProblemSpec& spec, Dataset data, std::vector<Shard> shards, Engine& rng)
    : spec_(spec), data_(std::move(data)), shards_(std::move(shards)) {
  if (data_.size() == 0 || data_.dim() == 0) throw UsageError("Problem: empty dataset");
  if (shards_.empty()) throw UsageError("Problem: no shards");
  for (const auto& s : shards_) {
    if (s.samples.empty()) throw UsageError("Problem: empty shard");
    for (auto k : s.samples)
      if (k >= data_.size()) throw UsageError("Problem: shard references unknown sample");
  }
  if (spec_.clip_rho && !(*spec_.clip_rho > 0.0)) throw UsageError("Problem: clip_rho must be > 0");

  const auto d = static_cast<Eigen::Index>(data_.dim());
  if (spec_.kind == ProblemKind::Logistic) {
    if (spec_.l2 < 0.0) throw UsageError("Problem: l2 must be >= 0");
    hessian_ = Matrix<double>::Zero(d, d);
    hessian_diag_ = ParamVector::Zero(d);
    double max_sq = 0.0;
    for (Eigen::Index k = 0; k < data_.features.rows(); ++k)
      max_sq = std::max(max_sq, data_.features.row(k).squaredNorm());
    smoothness_ = 0.25 * max_sq + spec_.l2;
    signs_.resize(data_.size());
    for (std::size_t k = 0; k < data_.size(); ++k) signs_[k] = (data_.labels[k] % 2 != 0) ? 1.0 : -1.0;
  } else {
    if (!(spec_.lambda_min > 0.0 && spec_.lambda_max >= spec_.lambda_min)) {
      throw UsageError("Problem: need 0 < lambda_min <= lambda_max");
    }
    hessian_ = make_hessian(spec_, d, rng);
    hessian_diag_ = hessian_.diagonal();
    const double lambda_top = spec_.rotate
        ? Eigen::SelfAdjointEigenSolver<Matrix<double>>(hessian_, Eigen::EigenvaluesOnly)
              .eigenvalues()
              .maxCoeff()
        : hessian_diag_.maxCoeff();
    smoothness_ = lambda_top + (spec_.kind == ProblemKind::SinQuadratic ? std::abs(spec_.beta) : 0.0);
  }

  shard_means_.reserve(shards_.size());
  global_mean_ = ParamVector::Zero(d);
  for (std::size_t i = 0; i < shards_.size(); ++i) {
    ParamVector mean = ParamVector::Zero(d);
    for (auto k : shards_[i].samples) mean += data_.features.row(static_cast<Eigen::Index>(k)).transpose();
    mean /= static_cast<double>(shards_[i].samples.size());
    global_mean_ += (mean - global_mean_) / static_cast<double>(i + 1);
    shard_means_.push_back(std::move(mean));
  }
}

void Problem::check_dim(const ParamVector& x, const char* what) const {
  require_same_size(x.size(), static_cast<Eigen::Index>(dim()), what);
}

void Problem::check_worker(std::size_t worker) const {
  if (worker >= shards_.size()) {
    throw UsageError("unknown worker id " + std::to_string(worker) + " (n=" +
                     std::to_string(shards_.size()) + ")");
  }
}

ParamVector Problem::apply_hessian(const ParamVector& x) const {
  if (!spec_.rotate) return hessian_diag_.cwiseProduct(x);
  return hessian_ * x;
}

double Problem::sample_value(const ParamVector& x, std::size_t sample) const {
  const auto a = data_.features.row(static_cast<Eigen::Index>(sample)).transpose();
  if (spec_.kind == ProblemKind::Logistic) {
    const double margin = signs_[sample] * a.dot(x);
    // log(1 + exp(-m)) without overflow
    const double loss = margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    return loss + 0.5 * spec_.l2 * x.squaredNorm();
  }
  double v = 0.5 * x.dot(apply_hessian(x)) - a.dot(x);
  if (spec_.kind == ProblemKind::SinQuadratic) v += spec_.beta * x.array().sin().sum();
  return v;
}

ParamVector Problem::sample_gradient(const ParamVector& x, std::size_t sample) const {
  check_dim(x, "sample_gradient");
  if (sample >= data_.size()) throw UsageError("sample_gradient: unknown sample");
  const auto a = data_.features.row(static_cast<Eigen::Index>(sample)).transpose();
  if (spec_.kind == ProblemKind::Logistic) {
    const double y = signs_[sample];
    const double margin = y * a.dot(x);
    // d/dm log(1 + exp(-m)) = -1 / (1 + exp(m))
    const double weight = -y / (1.0 + std::exp(margin));
    return weight * a + spec_.l2 * x;
  }
  ParamVector g = apply_hessian(x) - a;
  if (spec_.kind == ProblemKind::SinQuadratic) g.array() += spec_.beta * x.array().cos();
  return g;
}

double Problem::shard_value(const ParamVector& x, std::size_t worker) const {
  check_dim(x, "shard_value");
  check_worker(worker);
  if (spec_.kind == ProblemKind::Logistic) {
    double sum = 0.0;
    for (auto k : shards_[worker].samples) sum += sample_value(x, k);
    return sum / static_cast<double>(shards_[worker].samples.size());
  }
  double v = 0.5 * x.dot(apply_hessian(x)) - shard_means_[worker].dot(x);
  if (spec_.kind == ProblemKind::SinQuadratic) v += spec_.beta * x.array().sin().sum();
  return v;
}

ParamVector Problem::shard_gradient(const ParamVector& x, std::size_t worker) const {
  check_dim(x, "shard_gradient");
  check_worker(worker);
  if (spec_.kind == ProblemKind::Logistic) {
    ParamVector g = ParamVector::Zero(x.size());
    for (auto k : shards_[worker].samples) g += sample_gradient(x, k);
    return g / static_cast<double>(shards_[worker].samples.size());
  }
  ParamVector g = apply_hessian(x) - shard_means_[worker];
  if (spec_.kind == ProblemKind::SinQuadratic) g.array() += spec_.beta * x.array().cos();
  return g;
}

double Problem::value(const ParamVector& x) const {
  check_dim(x, "value");
  if (spec_.kind == ProblemKind::Logistic) {
    double mean = 0.0;
    for (std::size_t i = 0; i < shards_.size(); ++i)
      mean += (shard_value(x, i) - mean) / static_cast<double>(i + 1);
    return mean;
  }
  double v = 0.5 * x.dot(apply_hessian(x)) - global_mean_.dot(x);
  if (spec_.kind == ProblemKind::SinQuadratic) v += spec_.beta * x.array().sin().sum();
  return v;
}

ParamVector Problem::gradient(const ParamVector& x) const {
  check_dim(x, "gradient");
  if (spec_.kind == ProblemKind::Logistic) {
    ParamVector mean = ParamVector::Zero(x.size());
    for (std::size_t i = 0; i < shards_.size(); ++i)
      mean += (shard_gradient(x, i) - mean) / static_cast<double>(i + 1);
    return mean;
  }
  ParamVector g = apply_hessian(x) - global_mean_;
  if (spec_.kind == ProblemKind::SinQuadratic) g.array() += spec_.beta * x.array().cos();
  return g;
}

std::optional<ParamVector> Problem::minimizer() const {
  if (spec_.kind != ProblemKind::Quadratic) return std::nullopt;
  if (!spec_.rotate) return global_mean_.cwiseQuotient(hessian_diag_);
  return ParamVector(hessian_.ldlt().solve(global_mean_));
}

std::optional<double> Problem::min_value() const {
  auto x = minimizer();
  if (!x) return std::nullopt;
  return value(*x);
}

ParamVector full_gradient(const Problem& p, const ParamVector& x) { return p.gradient(x); }

ParamVector stochastic_gradient(const Problem& p, const ParamVector& x, std::size_t worker,
                                Engine& rng) {
  ParamVector g;
  const auto batch = p.spec().batch;
  if (batch == 0) {
    g = p.shard_gradient(x, worker);
  } else {
    if (worker >= p.num_workers()) {
      throw UsageError("unknown worker id " + std::to_string(worker));
    }
    const auto& samples = p.shards()[worker].samples;
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
    g = ParamVector::Zero(static_cast<Eigen::Index>(p.dim()));
    for (std::size_t b = 0; b < batch; ++b) g += p.sample_gradient(x, samples[pick(rng)]);
    g /= static_cast<double>(batch);
  }
  if (const auto& rho = p.clip_bound()) g = g.cwiseMax(-*rho).cwiseMin(*rho);
  return g;
}

ParamVector finite_diff_gradient(const Problem& p, const ParamVector& x, double h) {
  if (!(h > 0.0)) throw UsageError("finite_diff_gradient: h must be > 0");
  require_same_size(x.size(), static_cast<Eigen::Index>(p.dim()), "finite_diff_gradient");
  ParamVector g(x.size());
  ParamVector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    probe(j) = x(j) + h;
    const double up = p.value(probe);
    probe(j) = x(j) - h;
    const double down = p.value(probe);
    probe(j) = x(j);
    g(j) = (up - down) / (2.0 * h);
  }
  return g;
}

void write_shards_csv(std::ostream& out, const Problem& p) {
  out << "worker_id,sample_index";
  for (std::size_t j = 0; j < p.dim(); ++j) out << ",f" << j;
  out << ",label\n";
  const auto old_precision = out.precision(17);
  for (const auto& shard : p.shards()) {
    for (auto k : shard.samples) {
      out << shard.worker << ',' << k;
      const auto row = p.data().features.row(static_cast<Eigen::Index>(k));
      for (Eigen::Index j = 0; j < row.size(); ++j) out << ',' << row(j);
      out << ',' << p.data().labels[k] << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace adaalter
