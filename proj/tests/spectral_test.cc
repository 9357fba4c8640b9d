// Copyright 2026 The EdgeVeil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "edgeveil/spectral.h"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "test_util.h"

namespace edgeveil {
namespace {

using testing::complete_graph;
using testing::random_adjacency;

MatrixXd triangle() { return complete_graph(3).dense(); }

MatrixXd triangle_minus_edge() {
  MatrixXd a = triangle();
  a(0, 1) = a(1, 0) = 0;
  return a;
}

// Singular values from Eigen's two-sided Jacobi SVD, which shares no code
// with the eigen-route factorization.
VectorXd jacobi_singular_values(const MatrixXd& a) {
  return Eigen::JacobiSVD<MatrixXd>(a).singularValues();
}

void expect_orthonormal(const LowRankFactorization<double>& f) {
  const Index r = f.rank();
  EXPECT_LE((f.U.transpose() * f.U - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff(),
            1e-8);
  EXPECT_LE((f.Vt * f.Vt.transpose() - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff(),
            1e-8);
  for (Index i = 0; i < r; ++i) {
    EXPECT_GE(f.s(i), 0.0);
    if (i > 0) EXPECT_LE(f.s(i), f.s(i - 1));
  }
}

TEST(SvdTruncatedTest, CompleteTriangle) {
  auto f = svd_truncated(triangle(), 3);
  EXPECT_NEAR(f.s(0), 2.0, 1e-9);
  EXPECT_NEAR(f.s(1), 1.0, 1e-9);
  EXPECT_NEAR(f.s(2), 1.0, 1e-9);
  expect_orthonormal(f);
  EXPECT_TRUE(reconstruct_low_rank(f).isApprox(triangle(), 1e-12));
}

TEST(SvdTruncatedTest, TriangleMinusEdge) {
  auto f = svd_truncated(triangle_minus_edge(), 3);
  EXPECT_NEAR(f.s(0), std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(f.s(1), std::sqrt(2.0), 1e-9);
  EXPECT_NEAR(f.s(2), 0.0, 1e-9);
  expect_orthonormal(f);
  // Canonical basis of the tied pair: (1,1,0)/sqrt2 then (0,0,1).
  EXPECT_NEAR(f.U(0, 0), M_SQRT1_2, 1e-12);
  EXPECT_NEAR(f.U(1, 0), M_SQRT1_2, 1e-12);
  EXPECT_NEAR(f.U(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(f.U(2, 1), 1.0, 1e-12);
}

TEST(SvdTruncatedTest, ZeroMatrix) {
  auto f = svd_truncated(MatrixXd::Zero(4, 4), 2);
  EXPECT_EQ(f.s, VectorXd::Zero(2));
  expect_orthonormal(f);
}

TEST(SvdTruncatedTest, RankOutOfRange) {
  EXPECT_THROW(svd_truncated(triangle(), 0), BoundsError);
  EXPECT_THROW(svd_truncated(triangle(), 4), BoundsError);
  EXPECT_THROW(svd_truncated(MatrixXd::Zero(2, 3), 1), DimensionError);
  MatrixXd asym = MatrixXd::Zero(2, 2);
  asym(0, 1) = 1;
  EXPECT_THROW(svd_truncated(asym, 1), ValidationError);
}

TEST(SvdTruncatedTest, MatchesJacobiOracle) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    Index n = 5 + 2 * seed;
    MatrixXd a = random_adjacency(n, 0.3, seed).dense();
    auto f = svd_truncated(a, n);
    VectorXd oracle = jacobi_singular_values(a);
    EXPECT_LE((f.s - oracle).cwiseAbs().maxCoeff(), 1e-9) << "seed " << seed;
    expect_orthonormal(f);
    EXPECT_LE((reconstruct_low_rank(f) - a).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(SvdTruncatedTest, FloatScalar) {
  Eigen::MatrixXf a = random_adjacency(12, 0.4, 7).dense<float>();
  auto f = svd_truncated(a, 12);
  EXPECT_LE((reconstruct_low_rank(f) - a).cwiseAbs().maxCoeff(), 1e-4f);
}

TEST(SvdTruncatedTest, PrefixConsistent) {
  MatrixXd a = random_adjacency(30, 0.2, 3).dense();
  auto full = svd_truncated(a, 30);
  for (Index r : {1, 5, 17}) {
    auto f = svd_truncated(a, r);
    auto t = full.truncated(r);
    EXPECT_EQ(f.U, t.U);
    EXPECT_EQ(f.s, t.s);
    EXPECT_EQ(f.Vt, t.Vt);
  }
  EXPECT_THROW(full.truncated(31), BoundsError);
}

TEST(SvdTruncatedTest, SignConvention) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    auto f = svd_truncated(random_adjacency(15, 0.3, seed).dense(), 6);
    for (Index c = 0; c < f.rank(); ++c) {
      Index anchor = internal::sign_anchor<double>(f.U.col(c));
      EXPECT_GT(f.U(anchor, c), 0.0);
    }
  }
}

TEST(ProjectSingularTest, IdentityAndZero) {
  MatrixXd a = random_adjacency(12, 0.3, 11).dense();
  auto f = svd_truncated(a, 6);
  MatrixXd s = project_singular(a, f);
  EXPECT_LE((s - MatrixXd(f.s.asDiagonal())).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(project_singular(MatrixXd::Zero(12, 12), f), MatrixXd::Zero(6, 6));
  EXPECT_THROW(project_singular(MatrixXd::Zero(5, 5), f), DimensionError);
}

TEST(ProjectSingularTest, RemovedEdgeMatchesLongDoubleOracle) {
  Adjacency adj = random_adjacency(6, 0.6, 5);
  ASSERT_GT(adj.num_edges(), 0);
  MatrixXd a = adj.dense();
  auto f = svd_truncated(a, 6);
  Edge e = adj.edges().front();
  MatrixXd a_prime = adj.with_toggled(e.u, e.v).dense();
  MatrixXd s_prime = project_singular(a_prime, f);

  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  LMatrix oracle = f.U.cast<long double>().transpose() * a_prime.cast<long double>() *
                   f.Vt.cast<long double>().transpose();
  EXPECT_LE((s_prime.cast<long double>() - oracle).cwiseAbs().maxCoeff(), 1e-12L);
  EXPECT_LE((s_prime.diagonal() - f.s).norm(), std::sqrt(2.0) + 1e-9);

  EdgeToggle toggle{e, false};
  EXPECT_LE((project_toggled(f, toggle) - s_prime).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ReconstructTest, OverrideAndErrors) {
  auto f = svd_truncated(triangle(), 2);
  EXPECT_EQ(reconstruct_low_rank(f, VectorXd::Zero(2)), MatrixXd::Zero(3, 3));
  EXPECT_THROW(reconstruct_low_rank(f, VectorXd::Zero(3)), DimensionError);
}

TEST(ReconstructTest, EckartYoungAgainstJacobi) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    MatrixXd a = random_adjacency(20, 0.3, 100 + seed).dense();
    VectorXd all = jacobi_singular_values(a);
    double expected = all.tail(15).norm();
    double error = (a - reconstruct_low_rank(svd_truncated(a, 5))).norm();
    EXPECT_NEAR(error, expected, 1e-8) << "seed " << seed;
  }
}

TEST(ReconstructTest, ErrorNonIncreasingInRank) {
  for (unsigned seed = 0; seed < 8; ++seed) {
    Index n = 10 + 2 * seed;
    MatrixXd a = random_adjacency(n, 0.25, 200 + seed).dense();
    auto full = svd_truncated(a, n);
    double previous = std::numeric_limits<double>::infinity();
    for (Index r = 1; r <= n; ++r) {
      double error = (a - reconstruct_low_rank(full.truncated(r))).norm();
      EXPECT_LE(error, previous + 1e-9);
      previous = error;
    }
    EXPECT_LE(previous, 1e-8);
  }
}

TEST(BasisSimilarityTest, SelfIsOne) {
  MatrixXd a = random_adjacency(15, 0.3, 2).dense();
  auto report = basis_similarity(a, a, 5);
  EXPECT_LE((report.sim_u.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_LE((report.sim_v.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_FALSE(report.degenerate);
}

TEST(BasisSimilarityTest, TrianglePairDoesNotShareLeadingBasis) {
  auto report = basis_similarity(triangle(), triangle_minus_edge(), 1);
  EXPECT_LT(report.sim_u(0), 0.9);
  // Oracle: (1,1,1)/sqrt3 against (1,1,0)/sqrt2.
  EXPECT_NEAR(report.sim_u(0), std::sqrt(2.0 / 3.0), 1e-9);
}

TEST(BasisSimilarityTest, SignInvariantAndBounded) {
  MatrixXd a = random_adjacency(14, 0.3, 8).dense();
  MatrixXd b = random_adjacency(14, 0.3, 9).dense();
  auto fa = svd_truncated(a, 4);
  auto fb = svd_truncated(b, 4);
  auto base = basis_similarity(fa, fb, 4);
  for (Index c = 0; c < 4; ++c) {
    auto flipped = fb;
    flipped.U.col(c) *= -1;
    flipped.Vt.row(c) *= -1;
    auto report = basis_similarity(fa, flipped, 4);
    EXPECT_EQ(report.sim_u, base.sim_u);
    EXPECT_EQ(report.sim_v, base.sim_v);
  }
  EXPECT_LE(base.sim_u.maxCoeff(), 1.0 + 1e-9);
  EXPECT_LE(base.sim_v.maxCoeff(), 1.0 + 1e-9);
}

TEST(BasisSimilarityTest, ZeroVectorIsDegenerate) {
  auto f = svd_truncated(triangle(), 2);
  auto zero = f;
  zero.U.col(1).setZero();
  auto report = basis_similarity(f, zero, 2);
  EXPECT_TRUE(report.degenerate);
  EXPECT_EQ(report.sim_u(1), 0.0);
}

TEST(NeighborSimilaritiesTest, FlagsExactlyOneWorstCase) {
  auto reports = neighbor_similarities(random_adjacency(20, 0.3, 4), 3, 10, 1);
  ASSERT_EQ(reports.size(), 10u);
  int flagged = 0;
  double min_mean = 2;
  for (const auto& r : reports) min_mean = std::min(min_mean, r.mean_similarity());
  for (const auto& r : reports) {
    if (r.worst_case) {
      ++flagged;
      EXPECT_EQ(r.mean_similarity(), min_mean);
    }
  }
  EXPECT_EQ(flagged, 1);
}

TEST(NeighborTest, ToggleDistanceIsSqrtTwo) {
  Adjacency adj = random_adjacency(10, 0.3, 6);
  for (const EdgeToggle& t : sample_toggles(adj, 0, 0, true)) {
    MatrixXd diff = adj.dense() - adj.with_toggled(t.pair.u, t.pair.v).dense();
    EXPECT_EQ(diff.norm(), std::sqrt(2.0));
  }
}

// Two disjoint cliques of distinct sizes; every single-edge neighbour keeps
// the top-2 block diagonal.
Adjacency two_cliques(Index a, Index b) {
  std::vector<Edge> edges;
  for (Index i = 0; i < a; ++i)
    for (Index j = i + 1; j < a; ++j) edges.push_back({i, j});
  for (Index i = a; i < a + b; ++i)
    for (Index j = i + 1; j < a + b; ++j) edges.push_back({i, j});
  return Adjacency(a + b, std::move(edges));
}

TEST(AssumptionCheckTest, BlockGraphPasses) {
  Adjacency adj = two_cliques(20, 30);
  AssumptionCheckOptions opts;
  opts.exhaustive = true;
  AssumptionReport report = assumption_check(adj, 2, opts);
  EXPECT_TRUE(report.aligned);
  EXPECT_EQ(report.neighbors.size(), 50u * 49 / 2);

  // Oracle for the worst neighbour: explicit S' from the dense neighbour.
  const NeighborProjection& worst = report.neighbors[report.worst];
  auto f = svd_truncated(adj.dense(), 2);
  MatrixXd s_prime =
      project_singular(adj.with_toggled(worst.toggle.pair.u, worst.toggle.pair.v).dense(), f);
  EXPECT_NEAR(worst.min_diagonal, s_prime.diagonal().cwiseAbs().minCoeff(), 1e-12);
  s_prime.diagonal().setZero();
  EXPECT_NEAR(worst.max_off_diagonal, s_prime.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GE(worst.ratio, 100.0);
}

TEST(AssumptionCheckTest, TriangleFails) {
  AssumptionCheckOptions opts;
  opts.exhaustive = true;
  AssumptionReport report = assumption_check(complete_graph(3), 3, opts);
  EXPECT_EQ(report.neighbors.size(), 3u);
  EXPECT_FALSE(report.aligned);
}

TEST(AssumptionCheckTest, RejectsZeroTrials) {
  AssumptionCheckOptions opts;
  opts.trials = 0;
  EXPECT_THROW(assumption_check(complete_graph(4), 2, opts), ValidationError);
}

TEST(AssumptionCheckTest, SampledIsDeterministic) {
  Adjacency adj = random_adjacency(25, 0.2, 12);
  AssumptionCheckOptions opts;
  opts.trials = 30;
  opts.seed = 5;
  AssumptionReport a = assumption_check(adj, 4, opts);
  AssumptionReport b = assumption_check(adj, 4, opts);
  ASSERT_EQ(a.neighbors.size(), 30u);
  for (std::size_t i = 0; i < a.neighbors.size(); ++i) {
    EXPECT_EQ(a.neighbors[i].toggle.pair, b.neighbors[i].toggle.pair);
    EXPECT_EQ(a.neighbors[i].ratio, b.neighbors[i].ratio);
  }
}

TEST(FactorizationIoTest, RoundTripIsExact) {
  testing::TempDir dir;
  auto f = svd_truncated(random_adjacency(9, 0.4, 1).dense(), 4);
  write_factorization(dir / "f.txt", f);
  auto back = read_factorization(dir / "f.txt");
  EXPECT_EQ(back.U, f.U);
  EXPECT_EQ(back.s, f.s);
  EXPECT_EQ(back.Vt, f.Vt);
  testing::write_file(dir / "bad.txt", "3 2\n1 2\n");
  EXPECT_THROW(read_factorization(dir / "bad.txt"), ParseError);
}

}  // namespace
}  // namespace edgeveil
