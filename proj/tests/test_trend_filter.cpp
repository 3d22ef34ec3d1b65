#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gtn/prox.hpp"
#include "gtn/trend_filter.hpp"
#include "oracles/oracles.hpp"

namespace gtn {
namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Matrix column(std::initializer_list<double> values) {
  Matrix m(static_cast<Index>(values.size()), 1);
  Index r = 0;
  for (double v : values) m(r++, 0) = v;
  return m;
}

IncidenceOperator single_edge() { return build_incidence(build_graph({{0, 0}}, 1, 1)); }

TEST(ClipProx, Examples) {
  EXPECT_EQ(clip_prox(scalar(0.0), 1.0)(0, 0), 0.0);
  EXPECT_EQ(clip_prox(scalar(0.3), 0.5)(0, 0), 0.3);
  EXPECT_EQ(clip_prox(scalar(-0.8), 0.5)(0, 0), -0.5);
  EXPECT_THROW(clip_prox(scalar(1.0), -0.1), ConfigError);
}

TEST(ClipProx, Idempotent) {
  std::mt19937_64 rng(1);
  const Matrix x = oracle::random_matrix(20, 3, rng);
  const Matrix once = clip_prox(x, 0.6);
  EXPECT_EQ(clip_prox(once, 0.6), once);
}

TEST(SoftThreshold, Examples) {
  EXPECT_EQ(soft_threshold(scalar(0.3), 0.5)(0, 0), 0.0);
  EXPECT_NEAR(soft_threshold(scalar(-0.8), 0.5)(0, 0), -0.3, 1e-15);
  EXPECT_THROW(soft_threshold(scalar(1.0), -1.0), ConfigError);
}

TEST(SoftThreshold, MoreauDecomposition) {
  std::mt19937_64 rng(2);
  for (double lambda : {0.0, 0.3, 0.7, 2.0}) {
    const Matrix x = oracle::random_matrix(30, 4, rng);
    const Matrix sum = clip_prox(x, lambda) + soft_threshold(x, lambda);
    EXPECT_LT((sum - x).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GtcfFilter, ZeroLambdaIsIdentity) {
  std::mt19937_64 rng(3);
  const auto g = oracle::random_graph(6, 8, 0.4, rng);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 3, rng);
  FilterConfig cfg;
  cfg.lambda = 0.0;
  cfg.num_layers = 25;
  const auto trace = gtcf_filter(e_in, build_incidence(g), cfg);
  EXPECT_EQ(trace.output, e_in);
}

TEST(GtcfFilter, ZeroLayersIsIdentity) {
  std::mt19937_64 rng(4);
  const auto g = oracle::random_graph(6, 8, 0.4, rng);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 3, rng);
  FilterConfig cfg;
  cfg.num_layers = 0;
  EXPECT_EQ(gtcf_filter(e_in, build_incidence(g), cfg).output, e_in);
}

TEST(GtcfFilter, SingleEdgeFusedSolution) {
  FilterConfig cfg;
  cfg.lambda = 1.0;
  cfg.num_layers = 200;
  const auto trace = gtcf_filter(column({1.0, 0.0}), single_edge(), cfg);
  EXPECT_NEAR(trace.output(0, 0), 0.5, 1e-4);
  EXPECT_NEAR(trace.output(1, 0), 0.5, 1e-4);
  const Matrix diff = apply_incidence(single_edge(), trace.output, Direction::kForward);
  EXPECT_LT(std::abs(diff(0, 0)), 1e-6);
}

TEST(GtcfFilter, SingleEdgeShrunkSolution) {
  FilterConfig cfg;
  cfg.lambda = 0.1;
  cfg.num_layers = 200;
  const auto trace = gtcf_filter(column({1.0, 0.0}), single_edge(), cfg);
  EXPECT_NEAR(trace.output(0, 0), 1.0 - 0.1 / std::sqrt(2.0), 1e-4);
  EXPECT_NEAR(trace.output(1, 0), 0.1 / std::sqrt(2.0), 1e-4);
}

TEST(GtcfFilter, MatchesDenseTranscription) {
  std::mt19937_64 rng(5);
  const auto g = oracle::random_graph(7, 6, 0.4, rng);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 3, rng);
  FilterConfig cfg;
  cfg.lambda = 0.3;
  cfg.num_layers = 7;
  const auto trace = gtcf_filter(e_in, build_incidence(g), cfg);
  const Matrix expected = oracle::gtcf_dense(e_in, oracle::dense_incidence(g), 0.3, 7);
  EXPECT_LT((trace.output - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GtcfFilter, ReachesOracleOptimum) {
  std::mt19937_64 rng(6);
  const double lambdas[] = {0.1, 0.5, 1.0, 2.0};
  for (int trial = 0; trial < 12; ++trial) {
    std::uniform_int_distribution<Index> size(2, 10);
    std::uniform_int_distribution<int> dim(1, 4);
    const auto g = oracle::random_graph(size(rng), size(rng), 0.35, rng);
    const double lambda = lambdas[trial % 4];
    const Matrix e_in = oracle::random_matrix(g.num_nodes(), dim(rng), rng);
    FilterConfig cfg;
    cfg.lambda = lambda;
    cfg.num_layers = 2000;
    const auto op = build_incidence(g);
    const auto trace = gtcf_filter(e_in, op, cfg);
    const auto best = oracle::solve_gtf_dual_cd(e_in, oracle::dense_incidence(g), lambda);
    EXPECT_LE(gtf_objective(trace.output, e_in, op, lambda), best.objective + 1e-5);
    EXPECT_NEAR(gtf_objective(trace.output, e_in, op, lambda), best.objective, 1e-5);
  }
}

TEST(GtcfFilter, DualStaysInBoxAndObjectivePlateaus) {
  std::mt19937_64 rng(7);
  const auto g = oracle::random_graph(9, 9, 0.3, rng);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 2, rng);
  FilterConfig cfg;
  cfg.lambda = 0.4;
  cfg.num_layers = 600;
  cfg.record_trace = true;
  cfg.record_iterates = true;
  const auto trace = gtcf_filter(e_in, build_incidence(g), cfg);
  ASSERT_EQ(trace.objective.size(), 601u);
  ASSERT_EQ(trace.dual_prediction.size(), 600u);
  EXPECT_LE(trace.dual.cwiseAbs().maxCoeff(), 0.4);
  for (std::size_t k = 500; k + 50 < trace.objective.size(); ++k) {
    EXPECT_LT(trace.objective[k] - trace.objective[k + 50], 1e-6);
  }
}

TEST(GtcfFilter, DualBoundEveryIteration) {
  std::mt19937_64 rng(8);
  const auto g = oracle::random_graph(5, 7, 0.5, rng);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 3, rng, 3.0);
  const auto op = build_incidence(g);
  for (int k = 1; k <= 30; ++k) {
    FilterConfig cfg;
    cfg.lambda = 0.25;
    cfg.num_layers = k;
    EXPECT_LE(gtcf_filter(e_in, op, cfg).dual.cwiseAbs().maxCoeff(), 0.25);
  }
}

TEST(GtcfFilter, DefaultStepsNeverDiverge) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<Index> size(1, 8);
    const auto g = oracle::random_graph(size(rng), size(rng), 0.5, rng);
    const Matrix e_in = oracle::random_matrix(g.num_nodes(), 2, rng);
    FilterConfig cfg;
    cfg.lambda = 1.0;
    cfg.num_layers = 100;
    cfg.record_iterates = true;
    const auto trace = gtcf_filter(e_in, build_incidence(g), cfg);
    for (const auto& e_bar : trace.primal_prediction) {
      EXPECT_LE(e_bar.norm(), 10.0 * e_in.norm());
    }
  }
}

TEST(GtcfFilter, GeneralStepsizesConverge) {
  std::mt19937_64 rng(10);
  const auto g = oracle::random_graph(6, 6, 0.4, rng);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 2, rng);
  FilterConfig cfg;
  cfg.lambda = 0.5;
  cfg.num_layers = 4000;
  cfg.gamma = 0.8;
  cfg.beta = 0.6;
  ASSERT_TRUE(cfg.satisfies_step_bound());
  const auto op = build_incidence(g);
  const auto trace = gtcf_filter(e_in, op, cfg);
  const auto best = oracle::solve_gtf_dual_cd(e_in, oracle::dense_incidence(g), 0.5);
  EXPECT_NEAR(gtf_objective(trace.output, e_in, op, 0.5), best.objective, 1e-6);
}

TEST(GtcfFilter, Errors) {
  const auto op = single_edge();
  FilterConfig cfg;
  EXPECT_THROW(gtcf_filter(Matrix::Zero(3, 1), op, cfg), ShapeError);
  cfg.lambda = -1.0;
  EXPECT_THROW(gtcf_filter(Matrix::Zero(2, 1), op, cfg), ConfigError);
  cfg.lambda = 1.0;
  Matrix bad = Matrix::Zero(2, 1);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  try {
    gtcf_filter(bad, op, cfg);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("iteration 1"), std::string::npos);
  }
}

TEST(GtfObjective, Examples) {
  std::mt19937_64 rng(11);
  const auto g = oracle::random_graph(4, 5, 0.5, rng);
  const auto op = build_incidence(g);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 2, rng);
  const double l1 = apply_incidence(op, e_in, Direction::kForward).cwiseAbs().sum();
  EXPECT_NEAR(gtf_objective(e_in, e_in, op, 0.7), 0.7 * l1, 1e-14);
  EXPECT_EQ(gtf_objective(Matrix::Zero(9, 2), Matrix::Zero(9, 2), op, 0.7), 0.0);
  EXPECT_NEAR(gtf_objective(column({0.5, 0.5}), column({1.0, 0.0}), single_edge(), 1.0), 0.25,
              1e-15);
  EXPECT_THROW(gtf_objective(Matrix::Zero(9, 2), Matrix::Zero(9, 3), op, 1.0), ShapeError);
}

TEST(GtfObjective, DualGapCertifiesFilterOutput) {
  std::mt19937_64 rng(12);
  const auto g = oracle::random_graph(8, 8, 0.3, rng);
  const auto op = build_incidence(g);
  const Matrix e_in = oracle::random_matrix(g.num_nodes(), 3, rng);
  FilterConfig cfg;
  cfg.lambda = 0.5;
  cfg.num_layers = 3000;
  const auto trace = gtcf_filter(e_in, op, cfg);
  const double primal = gtf_objective(trace.output, e_in, op, 0.5);
  const double dual = gtf_dual_objective(trace.dual, e_in, op);
  EXPECT_GE(primal, dual - 1e-12);
  EXPECT_LT(primal - dual, 1e-6);
}

TEST(EdgeWeights, Examples) {
  Matrix one(1, 1);
  one << 0.5;
  EXPECT_DOUBLE_EQ(*edge_weights_from_differences(one)[0], 2.0);
  Matrix two(1, 2);
  two << 0.3, 0.4;
  EXPECT_NEAR(*edge_weights_from_differences(two)[0], 2.8, 1e-12);
  EXPECT_FALSE(edge_weights_from_differences(Matrix::Zero(1, 3))[0].has_value());
}

TEST(EdgeWeights, ReweightedQuadraticEqualsL1) {
  std::mt19937_64 rng(13);
  const auto g = oracle::random_graph(6, 6, 0.5, rng);
  const auto op = build_incidence(g);
  const Matrix e = oracle::random_matrix(g.num_nodes(), 4, rng);
  const Matrix diffs = apply_incidence(op, e, Direction::kForward);
  const auto w = edge_weights(e, op);
  double reweighted = 0.0;
  for (Index l = 0; l < diffs.rows(); ++l) reweighted += *w[l] * diffs.row(l).squaredNorm();
  EXPECT_NEAR(reweighted, diffs.cwiseAbs().sum(), 1e-10);
}

TEST(LaplacianPropagate, Examples) {
  const auto op = build_propagation(build_graph({{0, 0}}, 1, 1));
  const Matrix e_in = column({1.0, 0.0});
  EXPECT_EQ(laplacian_propagate(e_in, op, 0, LayerCombine::kLast), e_in);
  EXPECT_TRUE(laplacian_propagate(e_in, op, 1, LayerCombine::kLast)
                  .isApprox(column({0.5, 0.5}), 1e-15));
  const Matrix constant = column({2.5, 2.5});
  for (int k : {1, 3, 10}) {
    EXPECT_TRUE(laplacian_propagate(constant, op, k, LayerCombine::kLast).isApprox(constant));
    EXPECT_TRUE(laplacian_propagate(constant, op, k, LayerCombine::kMean).isApprox(constant));
  }
  // mean of E^0 = [1, 0] and E^1 = [.5, .5]
  EXPECT_TRUE(laplacian_propagate(e_in, op, 1, LayerCombine::kMean)
                  .isApprox(column({0.75, 0.25}), 1e-15));
  EXPECT_THROW(laplacian_propagate(Matrix::Zero(3, 1), op, 1, LayerCombine::kLast), ShapeError);
}

TEST(LaplacianPropagate, MatchesDensePowers) {
  std::mt19937_64 rng(14);
  const auto g = oracle::random_graph(8, 10, 0.3, rng);
  const Matrix a = oracle::dense_propagation(g);
  const Matrix e = oracle::random_matrix(g.num_nodes(), 3, rng);
  const auto op = build_propagation(g);
  Matrix power = e, sum = e;
  for (int k = 0; k < 4; ++k) {
    power = a * power;
    sum += power;
  }
  EXPECT_LT((laplacian_propagate(e, op, 4, LayerCombine::kLast) - power).cwiseAbs().maxCoeff(),
            1e-12);
  EXPECT_LT((laplacian_propagate(e, op, 4, LayerCombine::kMean) - sum / 5.0).cwiseAbs().maxCoeff(),
            1e-12);
}

}  // namespace
}  // namespace gtn
