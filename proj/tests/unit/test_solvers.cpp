#include <random>

#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "uaamg/solvers.hpp"

using namespace uaamg;

namespace {

Vector random_vector(std::mt19937_64& rng, index_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

Hierarchy grid_hierarchy(index_t n, BoundaryCondition bc, index_t t = 4, index_t coarsest = 100) {
  HierarchyConfig cfg;
  cfg.aggregation.size_cap = t;
  cfg.aggregation.seed = 3;
  cfg.coarsest_size = coarsest;
  return setup(assemble_laplacian(generate_structured_grid(n, bc)), cfg);
}

double energy(const SparseMatrix& A, const Vector& e) { return std::sqrt(dot(e, spmv(A, e))); }

double residual_norm(const SparseMatrix& A, const Vector& x, const Vector& b) {
  Vector r(b.size());
  residual(A, x, b, r);
  return norm2(r);
}

} // namespace

TEST(Smoother, JacobiSolvesDiagonalSystemInOneSweep) {
  const auto A = SparseMatrix::from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 4.0}});
  Vector x{0.0, 0.0};
  smooth(A, SmootherSpec::jacobi(1.0), x, Vector{2.0, 4.0});
  EXPECT_EQ(x, (Vector{1.0, 1.0}));
  Vector y{0.0, 0.0};
  smooth(A, SmootherSpec::l1_jacobi(), y, Vector{2.0, 4.0});
  EXPECT_EQ(y, (Vector{1.0, 1.0}));
}

TEST(Smoother, L1DiagonalAddsOffDiagonalMagnitudes) {
  std::vector<Edge> e{{0, 1, 1.0}, {1, 2, 1.0}};
  const auto A = assemble_laplacian(GraphProblem(3, e, {}));
  const auto inv = smoother_inverse_diagonal(A, SmootherSpec::l1_jacobi());
  EXPECT_DOUBLE_EQ(inv[0], 0.5);
  EXPECT_DOUBLE_EQ(inv[1], 0.25);
  const auto dj = smoother_inverse_diagonal(A, SmootherSpec::jacobi(0.5));
  EXPECT_DOUBLE_EQ(dj[1], 0.25);
}

TEST(Smoother, RejectsBadParameters) {
  EXPECT_THROW(SmootherSpec::jacobi(1.5).validate(), InvalidArgument);
  EXPECT_THROW(SmootherSpec::jacobi(0.0).validate(), InvalidArgument);
  EXPECT_THROW(SmootherSpec::l1_jacobi(0).validate(), InvalidArgument);
  const auto Z = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}});
  EXPECT_THROW(smoother_inverse_diagonal(Z, SmootherSpec::l1_jacobi()), NumericalError);
}

TEST(Smoother, L1JacobiContractsInEnergy) {
  std::mt19937_64 rng(71);
  for (int k = 0; k < 50; ++k) {
    const index_t n = 2 + static_cast<index_t>(rng() % 63);
    const auto A = assemble_laplacian(oracle::random_connected_graph(rng, n, 4.0 / static_cast<double>(n), true));
    const oracle::Mat D = oracle::dense(A);
    EXPECT_LT(oracle::energy_norm(D, oracle::l1_jacobi_propagator(D), false), 1.0);
    const Vector e0 = random_vector(rng, n);
    Vector e = e0;
    smooth(A, SmootherSpec::l1_jacobi(), e, Vector(n, 0.0));
    EXPECT_LT(energy(A, e), energy(A, e0));
  }
}

TEST(Transfers, MatchDenseProlongator) {
  std::mt19937_64 rng(73);
  const auto A = assemble_laplacian(oracle::random_connected_graph(rng, 40, 0.1, false));
  const auto agg = oracle::random_aggregation(rng, A, 5);
  const oracle::Mat P = oracle::prolongator(agg);
  const Vector r = random_vector(rng, 40);
  const Vector ec = random_vector(rng, agg.n_coarse());
  const Vector rc = restrict_residual(agg, r);
  const oracle::Vec ref = P.transpose() * Eigen::Map<const oracle::Vec>(r.data(), 40);
  for (index_t I = 0; I < agg.n_coarse(); ++I) EXPECT_NEAR(rc[I], ref(static_cast<Eigen::Index>(I)), 1e-14);
  Vector x(40, 0.0);
  prolongate_add(agg, ec, x);
  for (index_t i = 0; i < 40; ++i) EXPECT_EQ(x[i], ec[agg[i]]);
  EXPECT_NEAR(dot(rc, ec), dot(r, x), 1e-12);
  Vector bad(3);
  EXPECT_THROW(prolongate_add(agg, bad, x), InvalidArgument);
}

TEST(Cycle, ZeroInnerStepsIsTheVCycle) {
  const auto h = grid_hierarchy(40, BoundaryCondition::dirichlet, 4, 20);
  ASSERT_GE(h.levels(), 3u);
  std::mt19937_64 rng(79);
  const Vector b = random_vector(rng, h.op(0).rows());
  CycleSpec k;
  k.inner_krylov_steps = 0;
  CycleSpec v;
  v.kind = CycleSpec::Kind::vcycle;
  EXPECT_EQ(cycle(h, k, SmootherSpec::l1_jacobi(), 0, b), cycle(h, v, SmootherSpec::l1_jacobi(), 0, b));
  CycleSpec k2;
  EXPECT_NE(cycle(h, k2, SmootherSpec::l1_jacobi(), 0, b), cycle(h, v, SmootherSpec::l1_jacobi(), 0, b));
}

TEST(Cycle, TwoLevelKCycleEqualsVCycle) {
  const auto h = grid_hierarchy(16, BoundaryCondition::dirichlet, 5, 200);
  ASSERT_EQ(h.levels(), 2u);
  std::mt19937_64 rng(83);
  const Vector b = random_vector(rng, h.op(0).rows());
  CycleSpec v;
  v.kind = CycleSpec::Kind::vcycle;
  EXPECT_EQ(cycle(h, CycleSpec{}, SmootherSpec::l1_jacobi(), 0, b), cycle(h, v, SmootherSpec::l1_jacobi(), 0, b));
}

TEST(Cycle, TwoLevelErrorMatchesDenseOperator) {
  // one V-cycle on A x = b from zero, written as x = (I - E) A^{-1} b with
  // E = S (I - P Ac^{-1} P^T A) S
  const auto h = grid_hierarchy(8, BoundaryCondition::dirichlet, 4, 40);
  ASSERT_EQ(h.levels(), 2u);
  const oracle::Mat A = oracle::dense(h.op(0));
  const oracle::Mat P = oracle::prolongator(h.aggregation(0));
  const oracle::Mat S = oracle::l1_jacobi_propagator(A);
  const auto n = A.rows();
  const oracle::Mat I = oracle::Mat::Identity(n, n);
  const oracle::Mat E = S * (I - P * (P.transpose() * A * P).inverse() * P.transpose() * A) * S;
  std::mt19937_64 rng(89);
  const Vector b = random_vector(rng, static_cast<index_t>(n));
  const oracle::Vec bm = Eigen::Map<const oracle::Vec>(b.data(), n);
  const oracle::Vec ref = (I - E) * A.llt().solve(bm);
  const Vector x = cycle(h, CycleSpec{}, SmootherSpec::l1_jacobi(), 0, b);
  for (Eigen::Index i = 0; i < n; ++i) EXPECT_NEAR(x[static_cast<std::size_t>(i)], ref(i), 1e-12);
}

TEST(Cycle, ZeroRightHandSideGivesZero) {
  const auto h = grid_hierarchy(20, BoundaryCondition::neumann, 4, 10);
  const Vector x = cycle(h, CycleSpec{}, SmootherSpec::l1_jacobi(), 0, Vector(400, 0.0));
  for (double v : x) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(cycle(h, CycleSpec{}, SmootherSpec::l1_jacobi(), 0, Vector(400, 1.0)), NumericalError);
  EXPECT_THROW(cycle(h, CycleSpec{}, SmootherSpec::l1_jacobi(), h.levels(), Vector(1, 0.0)), InvalidArgument);
}

TEST(Npcg, TwoByTwoSystem) {
  const auto A = SparseMatrix::from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 3.0}});
  const auto h = setup(A, HierarchyConfig{});
  ASSERT_EQ(h.levels(), 1u);
  Vector x(2);
  const auto rep = npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), Vector{1.0, 2.0}, x, 1e-12, 10);
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1u);
  EXPECT_NEAR(x[0], 5.0 / 11.0, 1e-12);
  EXPECT_NEAR(x[1], 9.0 / 11.0, 1e-12);
}

TEST(Npcg, MatchesDirectSolveOnSmallGrid) {
  const auto h = grid_hierarchy(8, BoundaryCondition::dirichlet, 3, 4);
  ASSERT_GE(h.levels(), 3u);
  std::mt19937_64 rng(97);
  const Vector b = random_vector(rng, 64);
  Vector x(64);
  const auto rep = npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), b, x, 1e-10, 100);
  EXPECT_TRUE(rep.converged);
  const oracle::Vec ref = oracle::dense(h.op(0)).llt().solve(Eigen::Map<const oracle::Vec>(b.data(), 64));
  for (index_t i = 0; i < 64; ++i) EXPECT_NEAR(x[i], ref(static_cast<Eigen::Index>(i)), 1e-8 * ref.cwiseAbs().maxCoeff());
}

TEST(Npcg, NeumannSolutionHasZeroMean) {
  const auto h = grid_hierarchy(32, BoundaryCondition::neumann);
  ASSERT_TRUE(h.singular());
  std::mt19937_64 rng(101);
  Vector b = random_vector(rng, 1024);
  remove_mean(b);
  Vector x(1024);
  const auto rep = npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), b, x, 1e-8, 200);
  EXPECT_TRUE(rep.converged);
  double mean = 0.0;
  for (double v : x) mean += v;
  EXPECT_NEAR(mean / 1024.0, 0.0, 1e-12);
  EXPECT_LE(residual_norm(h.op(0), x, b), 1e-8 * norm2(b) * 1.0001);
  EXPECT_THROW(npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), Vector(1024, 1.0), x, 1e-8, 10), NumericalError);
}

TEST(Npcg, ReportHistoryIsConsistent) {
  const auto h = grid_hierarchy(64, BoundaryCondition::dirichlet);
  std::mt19937_64 rng(103);
  const Vector b = random_vector(rng, 4096);
  Vector x(4096);
  const auto rep = npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), b, x, 1e-6, 100);
  ASSERT_TRUE(rep.converged);
  ASSERT_EQ(rep.residual_history.size(), rep.iterations + 1);
  EXPECT_EQ(rep.residual_history.front(), 1.0);
  EXPECT_LE(rep.residual_history.back(), 1e-6);
  EXPECT_GT(rep.residual_history[rep.iterations - 1], 1e-6);
  EXPECT_NEAR(rep.residual_history.back(), residual_norm(h.op(0), x, b) / norm2(b), 1e-9);
  EXPECT_LE(rep.iterations, 25u);

  CycleSpec v;
  v.kind = CycleSpec::Kind::vcycle;
  Vector xv(4096);
  const auto repv = npcg_solve(h, v, SmootherSpec::l1_jacobi(), b, xv, 1e-6, 200);
  EXPECT_TRUE(repv.converged);
  EXPECT_LT(rep.iterations, repv.iterations);
}

TEST(Npcg, EdgeCases) {
  const auto h = grid_hierarchy(10, BoundaryCondition::dirichlet, 4, 20);
  Vector x(100, 5.0);
  const auto zero = npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), Vector(100, 0.0), x, 1e-6, 10);
  EXPECT_TRUE(zero.converged);
  EXPECT_EQ(zero.iterations, 0u);
  EXPECT_EQ(zero.residual_history, (std::vector<double>{0.0}));
  for (double v : x) EXPECT_EQ(v, 0.0);

  const auto loose = npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), Vector(100, 1.0), x, 1.0, 10);
  EXPECT_TRUE(loose.converged);
  EXPECT_EQ(loose.iterations, 0u);

  EXPECT_THROW(npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), Vector(100, 1.0), x, 0.0, 10), InvalidArgument);
  EXPECT_THROW(npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), Vector(99, 1.0), x, 1e-6, 10), InvalidArgument);

  const auto capped = npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), Vector(100, 1.0), x, 1e-14, 2);
  EXPECT_FALSE(capped.converged);
  EXPECT_EQ(capped.iterations, 2u);
}

TEST(Npcg, IndefiniteOperatorBreaksDown) {
  const auto A = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}});
  detail::FcgOptions o;
  o.tol = 1e-8;
  o.max_iters = 10;
  o.record = true;
  o.throw_on_breakdown = true;
  Vector x(2);
  auto identity = [](std::span<const double> r, std::span<double> z) { std::copy(r.begin(), r.end(), z.begin()); };
  try {
    detail::flexible_cg(A, Vector{1.0, -1.0}, x, identity, o);
    FAIL() << "expected a breakdown";
  } catch (const SolverBreakdown& e) {
    EXPECT_EQ(e.report().iterations, 0u);
    EXPECT_EQ(e.report().residual_history, (std::vector<double>{1.0}));
  }
}

TEST(Npcg, BitIdenticalAcrossThreadCounts) {
  const auto A = assemble_laplacian(generate_structured_grid(48, BoundaryCondition::neumann));
  std::mt19937_64 rng(107);
  Vector b = random_vector(rng, A.rows());
  remove_mean(b);
  std::vector<Vector> xs;
  for (int t : {1, 2, 8}) {
    set_num_threads(t);
    HierarchyConfig cfg;
    cfg.aggregation.size_cap = 4;
    const auto h = setup(A, cfg);
    Vector x(A.rows());
    (void)npcg_solve(h, CycleSpec{}, SmootherSpec::l1_jacobi(), b, x, 1e-8, 100);
    xs.push_back(x);
  }
  set_num_threads(1);
  EXPECT_EQ(xs[0], xs[1]);
  EXPECT_EQ(xs[0], xs[2]);
}
