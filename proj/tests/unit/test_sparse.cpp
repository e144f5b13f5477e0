#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "uaamg/parallel.hpp"
#include "uaamg/sparse.hpp"

using namespace uaamg;

namespace {

SparseMatrix path_laplacian(index_t n) {
  std::vector<Edge> e;
  for (index_t i = 0; i + 1 < n; ++i) e.push_back({i, i + 1, 1.0});
  return assemble_laplacian(GraphProblem(n, e, {}));
}

SparseMatrix random_sparse(std::mt19937_64& rng, index_t rows, index_t cols, double density) {
  std::uniform_real_distribution<double> u(0.0, 1.0), v(-3.0, 3.0);
  std::vector<Triplet> t;
  for (index_t i = 0; i < rows; ++i)
    for (index_t j = 0; j < cols; ++j)
      if (u(rng) < density) t.push_back({i, j, v(rng)});
  return SparseMatrix::from_triplets(rows, cols, t);
}

} // namespace

TEST(SparseMatrix, RejectsNonCanonicalArrays) {
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 2.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1, 2}, {0, 2}, {1.0, 1.0}), InvalidArgument);
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), InvalidArgument);
}

TEST(SparseMatrix, FromTripletsSumsDuplicatesAndDropsZeros) {
  const auto A = SparseMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 3.0}, {1, 1, 1.0}, {1, 1, -1.0}});
  EXPECT_EQ(A.nnz(), 2u);
  EXPECT_DOUBLE_EQ(A(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(A(0, 2), 4.0);
  EXPECT_DOUBLE_EQ(A(1, 1), 0.0);
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), InvalidArgument);
}

TEST(AssembleLaplacian, PathOfThree) {
  const auto A = path_laplacian(3);
  const oracle::Mat expect = (oracle::Mat(3, 3) << 1, -1, 0, -1, 2, -1, 0, -1, 1).finished();
  EXPECT_EQ(oracle::dense(A), expect);
  const auto r = spmv(A, Vector(3, 1.0));
  for (double v : r) EXPECT_EQ(v, 0.0);
}

TEST(AssembleLaplacian, SingleBoundaryVertex) {
  const GraphProblem p(1, {}, {{0, 5.0}});
  const auto A = assemble_laplacian(p);
  EXPECT_FALSE(p.singular());
  ASSERT_EQ(A.rows(), 1u);
  EXPECT_DOUBLE_EQ(A(0, 0), 5.0);
}

TEST(AssembleLaplacian, EmptyGraphIsZeroAndSingular) {
  const GraphProblem p(3, {}, {});
  const auto A = assemble_laplacian(p);
  EXPECT_TRUE(p.singular());
  EXPECT_EQ(A.rows(), 3u);
  EXPECT_EQ(A.nnz(), 0u);
}

TEST(GraphProblem, RejectsInvalidInput) {
  EXPECT_THROW(GraphProblem(3, {{0, 1, 0.0}}, {}), InvalidArgument);
  EXPECT_THROW(GraphProblem(3, {{0, 1, -1.0}}, {}), InvalidArgument);
  EXPECT_THROW(GraphProblem(3, {{0, 1, 1.0}, {1, 0, 2.0}}, {}), InvalidArgument);
  EXPECT_THROW(GraphProblem(3, {{1, 1, 1.0}}, {}), InvalidArgument);
  EXPECT_THROW(GraphProblem(3, {{0, 3, 1.0}}, {}), InvalidArgument);
  EXPECT_THROW(GraphProblem(3, {}, {{0, 0.0}}), InvalidArgument);
  EXPECT_THROW(GraphProblem(3, {}, {{0, 1.0}, {0, 2.0}}), InvalidArgument);
}

TEST(AssembleLaplacian, QuadraticFormMatchesBilinearForm) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int g = 0; g < 20; ++g) {
    const index_t n = 2 + g;
    const auto p = oracle::random_connected_graph(rng, n, 0.2, g % 2 == 0);
    const auto A = assemble_laplacian(p);
    EXPECT_TRUE(A.is_symmetric());
    for (int k = 0; k < 100; ++k) {
      Vector x(n);
      for (auto& v : x) v = u(rng);
      const double form = oracle::quadratic_form(p, x);
      EXPECT_NEAR(dot(x, spmv(A, x)), form, 1e-12 * std::max(1.0, form));
    }
  }
}

TEST(Spmv, IdentityAndNullSpace) {
  const Vector x{1.5, -2.0, 3.25, 0.0};
  EXPECT_EQ(spmv(SparseMatrix::identity(4), x), x);
  const auto y = spmv(path_laplacian(3), Vector(3, 1.0));
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(Spmv, MatchesDenseProduct) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (index_t n : {8u, 17u, 33u, 64u}) {
    const auto A = random_sparse(rng, n, n, 0.3);
    Vector x(n);
    for (auto& v : x) v = u(rng);
    const oracle::Vec ref = oracle::dense(A) * Eigen::Map<const oracle::Vec>(x.data(), static_cast<Eigen::Index>(n));
    const auto y = spmv(A, x);
    for (index_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], ref(static_cast<Eigen::Index>(i)), n == 8 ? 1e-14 : 1e-13);
  }
}

TEST(Spmv, RectangularAndDimensionChecks) {
  std::mt19937_64 rng(3);
  const auto A = random_sparse(rng, 5, 9, 0.5);
  Vector x(9, 1.0), y(5);
  spmv(A, x, y);
  const oracle::Vec ref = oracle::dense(A) * oracle::Vec::Ones(9);
  for (index_t i = 0; i < 5; ++i) EXPECT_NEAR(y[i], ref(static_cast<Eigen::Index>(i)), 1e-13);
  Vector bad(5);
  EXPECT_THROW(spmv(A, bad, y), InvalidArgument);
}

TEST(Spmv, BitIdenticalAcrossThreadCounts) {
  const auto A = assemble_laplacian(generate_structured_grid(80, BoundaryCondition::dirichlet, {1.0, 3.0}));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector x(A.rows());
  for (auto& v : x) v = u(rng);
  set_num_threads(1);
  const auto y1 = spmv(A, x);
  const double d1 = dot(x, y1);
  set_num_threads(4);
  const auto y4 = spmv(A, x);
  const double d4 = dot(x, y4);
  set_num_threads(1);
  EXPECT_EQ(y1, y4);
  EXPECT_EQ(d1, d4);
}

TEST(SquaredPattern, PathOfFive) {
  const auto P = squared_adjacency_pattern(path_laplacian(5));
  const auto row0 = P.row_cols(0);
  EXPECT_EQ(std::vector<index_t>(row0.begin(), row0.end()), (std::vector<index_t>{0, 1, 2}));
  const auto row2 = P.row_cols(2);
  EXPECT_EQ(std::vector<index_t>(row2.begin(), row2.end()), (std::vector<index_t>{0, 1, 2, 3, 4}));
}

TEST(SquaredPattern, DiagonalAndComplete) {
  const auto D = squared_adjacency_pattern(SparseMatrix::identity(4));
  EXPECT_EQ(D.nnz(), 4u);
  std::vector<Edge> e;
  for (index_t i = 0; i < 4; ++i)
    for (index_t j = i + 1; j < 4; ++j) e.push_back({i, j, 1.0});
  const auto K = squared_adjacency_pattern(assemble_laplacian(GraphProblem(4, e, {})));
  EXPECT_EQ(K.nnz(), 16u);
  EXPECT_THROW(squared_adjacency_pattern(SparseMatrix::from_triplets(2, 3, {})), InvalidArgument);
}

TEST(SquaredPattern, MatchesBfsDistanceTwo) {
  std::mt19937_64 rng(13);
  for (index_t n : {10u, 50u, 120u, 200u}) {
    const auto A = assemble_laplacian(oracle::random_connected_graph(rng, n, 3.0 / static_cast<double>(n), false));
    const auto P = squared_adjacency_pattern(A);
    EXPECT_TRUE(P.is_symmetric());
    const auto adj = oracle::adjacency(A);
    for (index_t i = 0; i < n; ++i) {
      const auto d = oracle::bfs(adj, i);
      for (index_t j = 0; j < n; ++j) EXPECT_EQ(P(i, j) != 0.0, d[j] <= 2) << i << ' ' << j;
    }
  }
}

TEST(StructuredGrid, NeumannTwoByTwoIsFourCycle) {
  const auto p = generate_structured_grid(2, BoundaryCondition::neumann);
  EXPECT_TRUE(p.singular());
  const auto A = assemble_laplacian(p);
  for (double d : A.diagonal()) EXPECT_DOUBLE_EQ(d, 2.0);
  EXPECT_DOUBLE_EQ(A(0, 1), -1.0);
  EXPECT_DOUBLE_EQ(A(0, 2), -1.0);
  EXPECT_DOUBLE_EQ(A(0, 3), 0.0);
}

TEST(StructuredGrid, DirichletTwoByTwo) {
  const auto A = assemble_laplacian(generate_structured_grid(2, BoundaryCondition::dirichlet));
  for (double d : A.diagonal()) EXPECT_DOUBLE_EQ(d, 4.0);
}

TEST(StructuredGrid, AnisotropicWeights) {
  const auto p = generate_structured_grid(4, BoundaryCondition::neumann, {1.0, 10.0});
  const auto A = assemble_laplacian(p);
  EXPECT_EQ(oracle::dense(A), oracle::grid_laplacian_dense(4, 1.0, 10.0));
  EXPECT_DOUBLE_EQ(A(5, 6), -1.0);
  EXPECT_DOUBLE_EQ(A(5, 9), -10.0);
}

TEST(StructuredGrid, DirichletEliminationMatchesFivePointStencil) {
  // every vertex has total weight 2 wh + 2 wv on its diagonal
  const auto A = assemble_laplacian(generate_structured_grid(5, BoundaryCondition::dirichlet, {1.0, 3.0}));
  for (double d : A.diagonal()) EXPECT_DOUBLE_EQ(d, 8.0);
  EXPECT_FALSE(annihilates_constants(A));
  EXPECT_THROW(generate_structured_grid(1, BoundaryCondition::neumann), InvalidArgument);
}

TEST(StructuredGrid, NeumannAnnihilatesConstants) {
  const auto A = assemble_laplacian(generate_structured_grid(33, BoundaryCondition::neumann, {1.0, 7.0}));
  const auto y = spmv(A, Vector(A.rows(), 1.0));
  for (double v : y) EXPECT_LE(std::abs(v), 1e-13 * A.norm_inf());
  EXPECT_TRUE(annihilates_constants(A));
}

TEST(Kernels, DotAxpyRemoveMean) {
  Vector x{1.0, 2.0, 3.0}, y{1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(dot(x, y), 6.0);
  axpy(2.0, x, y);
  EXPECT_EQ(y, (Vector{3.0, 5.0, 7.0}));
  remove_mean(y);
  EXPECT_NEAR(y[0] + y[1] + y[2], 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(norm2(Vector{3.0, 4.0}), 5.0);
}
