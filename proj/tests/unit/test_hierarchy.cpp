#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "uaamg/hierarchy.hpp"

using namespace uaamg;

namespace {

SparseMatrix path_laplacian(index_t n) {
  std::vector<Edge> e;
  for (index_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0});
  return assemble_laplacian(GraphProblem(n, e, {}));
}

} // namespace

TEST(Galerkin, PathOfFourPairs) {
  const auto Ac = galerkin_coarse(path_laplacian(4), Aggregation::from_labels(std::vector<index_t>{0, 0, 1, 1}));
  EXPECT_EQ(oracle::dense(Ac), (oracle::Mat(2, 2) << 1, -1, -1, 1).finished());
}

TEST(Galerkin, IdentityAggregationKeepsMatrix) {
  const auto A = assemble_laplacian(generate_structured_grid(5, BoundaryCondition::dirichlet, {1.0, 2.0}));
  EXPECT_EQ(galerkin_coarse(A, Aggregation::identity(A.rows())), A);
}

TEST(Galerkin, SingleAggregateOfNeumannIsZero) {
  const auto A = assemble_laplacian(generate_structured_grid(4, BoundaryCondition::neumann));
  const auto Ac = galerkin_coarse(A, Aggregation::from_labels(std::vector<index_t>(16, 0)));
  EXPECT_EQ(Ac.rows(), 1u);
  EXPECT_EQ(Ac.nnz(), 0u);
  EXPECT_THROW(galerkin_coarse(A, Aggregation::identity(3)), InvalidArgument);
}

TEST(Galerkin, MatchesDenseTripleProduct) {
  std::mt19937_64 rng(23);
  for (int k = 0; k < 200; ++k) {
    const index_t n = 2 + static_cast<index_t>(rng() % 99);
    const auto p = oracle::random_connected_graph(rng, n, 3.0 / static_cast<double>(n), k % 2 == 0);
    const auto A = assemble_laplacian(p);
    const auto agg = oracle::random_aggregation(rng, A, 1 + rng() % 6);
    const auto Ac = galerkin_coarse(A, agg);
    const oracle::Mat P = oracle::prolongator(agg);
    const oracle::Mat ref = P.transpose() * oracle::dense(A) * P;
    EXPECT_LE((oracle::dense(Ac) - ref).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, ref.cwiseAbs().maxCoeff()));
    EXPECT_TRUE(Ac.is_symmetric(1e-14));
    if (p.singular()) {
      const auto y = spmv(Ac, Vector(Ac.rows(), 1.0));
      for (double v : y) EXPECT_LE(std::abs(v), 1e-12 * std::max(1.0, Ac.norm_inf()));
    }
  }
}

TEST(Setup, TableSixLevelRatios) {
  const auto A = assemble_laplacian(generate_structured_grid(128, BoundaryCondition::dirichlet));
  HierarchyConfig cfg;
  cfg.aggregation.size_cap = 5;
  const auto h = setup(A, cfg);
  ASSERT_EQ(h.levels(), 6u);
  const double paper[] = {2.97, 3.81, 3.41, 2.95, 2.82};
  for (index_t l = 0; l < 5; ++l) {
    EXPECT_NEAR(h.aggregation(l).coarsening_ratio(), paper[l], 0.2) << "level " << l;
    EXPECT_EQ(h.op(l + 1).rows(), h.aggregation(l).n_coarse());
  }
  EXPECT_LE(h.op(5).rows(), 100u);
  EXPECT_FALSE(h.singular());
  EXPECT_GE(h.grid_complexity(), 1.0);
  EXPECT_LE(h.operator_complexity(), 2.2);
}

TEST(Setup, SingleLevelWhenAlreadySmall) {
  const auto A = assemble_laplacian(generate_structured_grid(8, BoundaryCondition::dirichlet));
  HierarchyConfig cfg;
  cfg.coarsest_size = 64;
  const auto h = setup(A, cfg);
  EXPECT_EQ(h.levels(), 1u);
  EXPECT_DOUBLE_EQ(h.grid_complexity(), 1.0);
  EXPECT_DOUBLE_EQ(h.operator_complexity(), 1.0);
}

TEST(Setup, PathOfEightPairs) {
  const auto A = path_laplacian(8);
  HierarchyConfig cfg;
  cfg.aggregation.size_cap = 2;
  cfg.coarsest_size = 2;
  const auto h = setup(A, cfg);
  // pairing a path can leave singletons, so 8 -> 4..5 -> 2..3 -> 2
  EXPECT_GE(h.levels(), 3u);
  EXPECT_LE(h.levels(), 4u);
  EXPECT_TRUE(h.singular());
  for (index_t l = 0; l + 1 < h.levels(); ++l) {
    const oracle::Mat P = oracle::prolongator(h.aggregation(l));
    const oracle::Mat ref = P.transpose() * oracle::dense(h.op(l)) * P;
    const oracle::Mat Ac = oracle::dense(h.op(l + 1));
    EXPECT_LE((Ac - ref).cwiseAbs().maxCoeff(), 1e-14);
    for (Eigen::Index i = 0; i < Ac.rows(); ++i)
      for (Eigen::Index j = 0; j < Ac.cols(); ++j)
        if (std::abs(i - j) > 1) {
          EXPECT_EQ(Ac(i, j), 0.0);
        }
  }
}

TEST(Setup, LevelLimitAndComplexities) {
  const auto A = assemble_laplacian(generate_structured_grid(64, BoundaryCondition::neumann));
  HierarchyConfig cfg;
  cfg.aggregation.size_cap = 3;
  cfg.max_levels = 3;
  const auto h = setup(A, cfg);
  EXPECT_EQ(h.levels(), 3u);
  EXPECT_TRUE(h.singular());
  for (index_t l = 0; l < h.levels(); ++l) {
    EXPECT_TRUE(h.op(l).is_symmetric(1e-12));
    const auto y = spmv(h.op(l), Vector(h.op(l).rows(), 1.0));
    for (double v : y) EXPECT_LE(std::abs(v), 1e-12 * h.op(l).norm_inf());
  }
  EXPECT_LE(h.operator_complexity(), 2.2);
}

TEST(Setup, StagnationNamesTheLevel) {
  const auto A = path_laplacian(10);
  HierarchyConfig cfg;
  cfg.aggregation.size_cap = 1;
  cfg.coarsest_size = 2;
  try {
    (void)setup(A, cfg);
    FAIL() << "expected a stagnation error";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("level 0"), std::string::npos);
  }
}

TEST(Setup, IdenticalAcrossThreadCounts) {
  const auto A = assemble_laplacian(generate_structured_grid(50, BoundaryCondition::dirichlet));
  HierarchyConfig cfg;
  cfg.aggregation.size_cap = 4;
  cfg.aggregation.seed = 5;
  set_num_threads(1);
  const auto h1 = setup(A, cfg);
  set_num_threads(8);
  const auto h8 = setup(A, cfg);
  set_num_threads(1);
  EXPECT_TRUE(h1 == h8);
}

TEST(CoarseSolver, SolvesSpdAndSingularSystems) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (bool singular : {false, true}) {
    const auto p = oracle::random_connected_graph(rng, 30, 0.1, !singular);
    const auto A = assemble_laplacian(p);
    const CoarseSolver s(A, singular);
    Vector b(30), x(30);
    for (auto& v : b) v = u(rng);
    if (singular) remove_mean(b);
    s.solve(b, x);
    const auto r = spmv(A, x);
    for (index_t i = 0; i < 30; ++i) EXPECT_NEAR(r[i], b[i], 1e-10);
    if (singular) {
      double mean = 0.0;
      for (double v : x) mean += v;
      EXPECT_NEAR(mean, 0.0, 1e-10);
    }
  }
}
