#include "adaalter/problems.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

using namespace adaalter;

namespace {

Dataset clusters(std::size_t samples, std::size_t d, int classes, std::uint64_t seed) {
  Engine rng(seed);
  ClusterSpec spec;
  spec.num_samples = samples;
  spec.dim = d;
  spec.num_classes = classes;
  return make_gaussian_clusters(spec, rng);
}

Problem make_problem(ProblemKind kind, std::size_t d, std::size_t n, double alpha, std::uint64_t seed,
                     std::optional<double> clip = std::nullopt, std::size_t batch = 1) {
  Dataset data = clusters(200, d, 2, seed);
  Engine rng(seed + 1);
  auto shards = partition_non_iid(data, n, alpha, rng);
  ProblemSpec spec;
  spec.kind = kind;
  spec.lambda_min = 0.2;
  spec.lambda_max = 3.0;
  spec.beta = 0.7;
  spec.l2 = 0.01;
  spec.clip_rho = clip;
  spec.batch = batch;
  return Problem(spec, std::move(data), std::move(shards), rng);
}

ParamVector random_point(Engine& rng, std::size_t d, double scale = 2.0) {
  std::normal_distribution<double> normal(0.0, scale);
  ParamVector x(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < x.size(); ++j) x(j) = normal(rng);
  return x;
}

const ProblemKind kAllKinds[] = {ProblemKind::Quadratic, ProblemKind::SinQuadratic,
                                 ProblemKind::Logistic};

}  // namespace

TEST(FullGradient, QuadraticStationaryPoint) {
  const auto p = make_problem(ProblemKind::Quadratic, 5, 3, 0.5, 1);
  const auto x_star = p.minimizer();
  ASSERT_TRUE(x_star.has_value());
  EXPECT_LE(full_gradient(p, *x_star).norm(), 1e-12);
}

TEST(FullGradient, IdentityHessianZeroLinearTerm) {
  // A = I and every feature zero, so grad F(x) = x.
  Dataset data;
  data.features = Matrix<double>::Zero(4, 2);
  data.labels = {0, 1, 0, 1};
  ProblemSpec spec;
  spec.lambda_min = spec.lambda_max = 1.0;
  spec.rotate = false;
  Engine rng(0);
  const Problem p(spec, data, replicate_shards(data, 2), rng);
  ParamVector x(2);
  x << 3, -1;
  EXPECT_EQ(full_gradient(p, x), x);
  EXPECT_EQ(p.smoothness(), 1.0);
}

TEST(FullGradient, DimensionMismatch) {
  const auto p = make_problem(ProblemKind::Quadratic, 4, 2, 0.0, 2);
  EXPECT_THROW(full_gradient(p, ParamVector::Zero(3)), DimensionError);
}

TEST(FiniteDiff, IdentityQuadratic) {
  Dataset data;
  data.features = Matrix<double>::Zero(2, 2);
  data.labels = {0, 1};
  ProblemSpec spec;
  spec.lambda_min = spec.lambda_max = 1.0;
  Engine rng(0);
  const Problem p(spec, data, replicate_shards(data, 1), rng);
  ParamVector x(2);
  x << 1, 0;
  const auto g = finite_diff_gradient(p, x, 1e-6);
  EXPECT_NEAR(g(0), 1.0, 1e-6);
  EXPECT_NEAR(g(1), 0.0, 1e-6);
}

TEST(FiniteDiff, ConstantObjective) {
  // logistic with all-zero features and no ridge: F = log 2 everywhere
  Dataset data;
  data.features = Matrix<double>::Zero(3, 4);
  data.labels = {0, 1, 1};
  ProblemSpec spec;
  spec.kind = ProblemKind::Logistic;
  Engine rng(0);
  const Problem p(spec, data, replicate_shards(data, 1), rng);
  Engine pts(5);
  const auto x = random_point(pts, 4);
  EXPECT_NEAR(p.value(x), std::log(2.0), 1e-15);
  EXPECT_LE(finite_diff_gradient(p, x, 1e-6).norm(), 1e-12);
  EXPECT_THROW(finite_diff_gradient(p, x, 0.0), UsageError);
}

TEST(FiniteDiff, MatchesAnalyticGradientOnRandomPoints) {
  for (const auto kind : kAllKinds) {
    const auto p = make_problem(kind, 6, 4, 0.7, 3);
    Engine rng(99);
    for (int k = 0; k < 100; ++k) {
      const auto x = random_point(rng, p.dim());
      const ParamVector g = full_gradient(p, x);
      const ParamVector fd = finite_diff_gradient(p, x, 1e-6);
      EXPECT_LE((g - fd).norm(), 1e-5 * std::max(1.0, g.norm())) << to_string(kind) << " point " << k;
    }
  }
}

TEST(Objective, IsMeanOfShardObjectives) {
  for (const auto kind : kAllKinds) {
    const auto p = make_problem(kind, 5, 3, 0.4, 8);
    Engine rng(1);
    const auto x = random_point(rng, p.dim());
    double f = 0.0;
    ParamVector g = ParamVector::Zero(x.size());
    for (std::size_t i = 0; i < p.num_workers(); ++i) {
      f += p.shard_value(x, i);
      g += p.shard_gradient(x, i);
    }
    f /= static_cast<double>(p.num_workers());
    g /= static_cast<double>(p.num_workers());
    EXPECT_NEAR(p.value(x), f, 1e-12 * std::max(1.0, std::abs(f)));
    EXPECT_LE((p.gradient(x) - g).norm(), 1e-12 * std::max(1.0, g.norm()));
  }
}

TEST(StochasticGradient, FullBatchEqualsShardGradient) {
  const auto p = make_problem(ProblemKind::Logistic, 4, 3, 1.0, 4, std::nullopt, 0);
  Engine pts(2);
  const auto x = random_point(pts, 4);
  for (std::size_t i = 0; i < 3; ++i) {
    Engine rng(i);
    EXPECT_EQ(stochastic_gradient(p, x, i, rng), p.shard_gradient(x, i));
  }
}

TEST(StochasticGradient, MonteCarloMeanMatchesShardGradient) {
  for (const auto kind : kAllKinds) {
    const auto p = make_problem(kind, 3, 2, 0.5, 6);
    Engine pts(17);
    const auto x = random_point(pts, 3, 0.5);
    const std::size_t worker = 1;
    const int draws = 100000;
    Engine rng(123);
    ParamVector sum = ParamVector::Zero(3), sum_sq = ParamVector::Zero(3);
    for (int k = 0; k < draws; ++k) {
      const auto g = stochastic_gradient(p, x, worker, rng);
      sum += g;
      sum_sq += g.cwiseProduct(g);
    }
    const ParamVector mean = sum / draws;
    const ParamVector var = (sum_sq / draws - mean.cwiseProduct(mean)) * (double(draws) / (draws - 1));
    const ParamVector se = (var / draws).cwiseSqrt();
    const ParamVector exact = p.shard_gradient(x, worker);
    for (Eigen::Index j = 0; j < 3; ++j) {
      EXPECT_LE(std::abs(mean(j) - exact(j)), 3.0 * se(j)) << to_string(kind) << " coord " << j;
    }
  }
}

TEST(StochasticGradient, ClipsCoordinates) {
  // one sample, A = I, feature (-1.5, 0.2): raw gradient at x = (0.5, 0) is (2.0, -0.2)
  Dataset data;
  data.features = Matrix<double>(1, 2);
  data.features << -1.5, 0.2;
  data.labels = {0};
  ProblemSpec spec;
  spec.lambda_min = spec.lambda_max = 1.0;
  spec.rotate = false;
  spec.clip_rho = 0.5;
  Engine rng(0);
  const Problem p(spec, data, replicate_shards(data, 1), rng);
  ParamVector x(2);
  x << 0.5, 0.0;
  const auto g = stochastic_gradient(p, x, 0, rng);
  EXPECT_DOUBLE_EQ(g(0), 0.5);
  EXPECT_NEAR(g(1), -0.2, 1e-15);
}

TEST(StochasticGradient, UnknownWorker) {
  const auto p = make_problem(ProblemKind::Quadratic, 3, 2, 0.0, 1);
  Engine rng(0);
  EXPECT_THROW(stochastic_gradient(p, ParamVector::Zero(3), 2, rng), UsageError);
}

TEST(StochasticGradient, BoundedUnderClippingOverLongRun) {
  const double rho = 0.25;
  const auto p = make_problem(ProblemKind::SinQuadratic, 8, 2, 1.0, 12, rho);
  ParamVector x = ParamVector::Constant(8, 3.0);
  double worst = 0.0;
  for (std::uint64_t t = 1; t <= 10000; ++t) {
    Engine rng = worker_stream(5, t % 2, t);
    const auto g = stochastic_gradient(p, x, t % 2, rng);
    worst = std::max(worst, g.lpNorm<Eigen::Infinity>());
    x -= 0.05 * g;
  }
  EXPECT_LE(worst, rho);
}

TEST(Smoothness, QuadraticLipschitzWitness) {
  const auto p = make_problem(ProblemKind::Quadratic, 10, 2, 0.0, 21);
  const double L = p.smoothness();
  EXPECT_NEAR(L, 3.0, 1e-12);
  Engine rng(4);
  for (int k = 0; k < 200; ++k) {
    const auto x = random_point(rng, 10), y = random_point(rng, 10);
    const double lhs = (p.gradient(x) - p.gradient(y)).norm();
    EXPECT_LE(lhs, L * (x - y).norm() * (1 + 1e-12));
  }
}

TEST(Smoothness, PerturbedAndLogisticBoundsHold) {
  for (const auto kind : {ProblemKind::SinQuadratic, ProblemKind::Logistic}) {
    const auto p = make_problem(kind, 6, 3, 0.5, 22);
    Engine rng(6);
    for (int k = 0; k < 200; ++k) {
      const auto x = random_point(rng, 6), y = random_point(rng, 6);
      for (std::size_t i = 0; i < p.num_workers(); ++i) {
        const double lhs = (p.shard_gradient(x, i) - p.shard_gradient(y, i)).norm();
        EXPECT_LE(lhs, p.smoothness() * (x - y).norm() * (1 + 1e-12));
      }
    }
  }
}

TEST(Partition, SingleWorkerGetsEverything) {
  const auto data = clusters(37, 2, 3, 1);
  Engine rng(1);
  const auto shards = partition_non_iid(data, 1, 0.3, rng);
  ASSERT_EQ(shards.size(), 1u);
  ASSERT_EQ(shards[0].samples.size(), 37u);
  for (std::size_t k = 0; k < 37; ++k) EXPECT_EQ(shards[0].samples[k], k);
}

TEST(Partition, SortedSplitIsSingleClass) {
  const auto data = clusters(100, 2, 2, 2);
  Engine rng(2);
  const auto shards = partition_non_iid(data, 2, 1.0, rng);
  for (const auto& s : shards) {
    std::set<int> labels;
    for (auto k : s.samples) labels.insert(data.labels[k]);
    EXPECT_EQ(labels.size(), 1u);
  }
  EXPECT_NE(data.labels[shards[0].samples[0]], data.labels[shards[1].samples[0]]);
}

TEST(Partition, IidSplitMatchesGlobalHistogram) {
  // multinomial oracle: count of class c in a shard of size m has sd sqrt(m p (1 - p))
  const int classes = 3;
  const auto data = clusters(1200, 2, classes, 3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Engine rng(seed);
    const auto shards = partition_non_iid(data, 4, 0.0, rng);
    for (const auto& s : shards) {
      std::map<int, int> hist;
      for (auto k : s.samples) ++hist[data.labels[k]];
      const double m = static_cast<double>(s.samples.size());
      const double prob = 1.0 / classes;
      const double sd = std::sqrt(m * prob * (1 - prob));
      for (int c = 0; c < classes; ++c) EXPECT_LE(std::abs(hist[c] - m * prob), 4 * sd);
    }
  }
}

TEST(Partition, CoverageDisjointAndBalanced) {
  Engine gen(10);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t samples = 10 + gen() % 300;
    const std::size_t n = 1 + gen() % 9;
    const double alpha = std::uniform_real_distribution<double>(0, 1)(gen);
    const auto data = clusters(samples, 2, 1 + static_cast<int>(gen() % 4), gen());
    const auto shards = partition_non_iid(data, n, alpha, gen);
    std::vector<int> owner(samples, -1);
    std::size_t smallest = samples, largest = 0;
    for (const auto& s : shards) {
      smallest = std::min(smallest, s.samples.size());
      largest = std::max(largest, s.samples.size());
      for (auto k : s.samples) {
        ASSERT_EQ(owner[k], -1) << "sample " << k << " in two shards";
        owner[k] = static_cast<int>(s.worker);
      }
    }
    EXPECT_TRUE(std::all_of(owner.begin(), owner.end(), [](int o) { return o >= 0; }));
    EXPECT_LE(largest - smallest, 1u);
  }
}

TEST(Partition, Errors) {
  const auto data = clusters(3, 2, 2, 1);
  Engine rng(0);
  EXPECT_THROW(partition_non_iid(data, 4, 0.0, rng), UsageError);
  EXPECT_THROW(partition_non_iid(data, 0, 0.0, rng), UsageError);
  EXPECT_THROW(partition_non_iid(data, 2, 1.5, rng), UsageError);
}

TEST(ShardDump, CsvLayout) {
  const auto p = make_problem(ProblemKind::Quadratic, 2, 2, 1.0, 1);
  std::ostringstream out;
  write_shards_csv(out, p);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "worker_id,sample_index,f0,f1,label");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 200u);
}
