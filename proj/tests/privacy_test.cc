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
#include "edgeveil/privacy.h"

#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <fstream>
#include <random>

#include "edgeveil/rng.h"
#include "test_util.h"

namespace edgeveil {
namespace {

using testing::random_adjacency;

// Sigma evaluated with 50 significant digits from the same double inputs.
double sigma_oracle(double sensitivity, double delta, double epsilon_lr) {
  using boost::multiprecision::cpp_bin_float_50;
  cpp_bin_float_50 d(delta);
  cpp_bin_float_50 root = sqrt(2 * log(cpp_bin_float_50(1.25) / d));
  return static_cast<double>(cpp_bin_float_50(sensitivity) * root /
                             cpp_bin_float_50(epsilon_lr));
}

// Symmetric, binary, loop-free and with the requested number of edges.
void expect_valid(const PerturbedGraph& g, Index n) {
  MatrixXd a = g.adjacency.dense();
  ASSERT_EQ(a.rows(), n);
  EXPECT_EQ(a, a.transpose());
  EXPECT_EQ(a.diagonal(), VectorXd::Zero(n));
  EXPECT_TRUE((a.array() == 0 || a.array() == 1).all());
  EXPECT_EQ(g.adjacency.num_edges(), g.edge_count);
  EXPECT_EQ(g.edge_count, g.provenance.edge_count);
}

TEST(PrivacyBudgetTest, SharesSumExactly) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> eps(1e-3, 50.0);
  std::uniform_real_distribution<double> share(1e-4, 0.9999);
  for (int t = 0; t < 10000; ++t) {
    PrivacyBudget b(eps(gen), 1e-5, share(gen));
    EXPECT_EQ(b.epsilon_e() + b.epsilon_lr(), b.epsilon());
    EXPECT_GT(b.epsilon_e(), 0);
    EXPECT_GT(b.epsilon_lr(), 0);
  }
  PrivacyBudget def(1.0, 1e-5);
  EXPECT_NEAR(def.epsilon_e(), 0.01, 1e-15);
  EXPECT_NEAR(def.epsilon_lr(), 0.99, 1e-15);
}

TEST(PrivacyBudgetTest, RejectsInvalid) {
  EXPECT_THROW(PrivacyBudget(0, 1e-5), ValidationError);
  EXPECT_THROW(PrivacyBudget(-1, 1e-5), ValidationError);
  EXPECT_THROW(PrivacyBudget(1, 0), ValidationError);
  EXPECT_THROW(PrivacyBudget(1, 1), ValidationError);
  EXPECT_THROW(PrivacyBudget(1, 1e-5, 0), ValidationError);
  EXPECT_THROW(PrivacyBudget(1, 1e-5, 1), ValidationError);
  EXPECT_THROW(PrivacyBudget(INFINITY, 1e-5), ValidationError);
}

TEST(CalibrateTest, MatchesHighPrecisionOracle) {
  PrivacyBudget b(1.0, 1e-5, 0.01);
  NoiseSpec spec = calibrate(b);
  EXPECT_EQ(spec.sensitivity, std::sqrt(2.0));
  double oracle = sigma_oracle(std::sqrt(2.0), 1e-5, 0.99);
  EXPECT_LE(std::abs(spec.gaussian_sigma - oracle),
            std::abs(std::nextafter(oracle, 0.0) - oracle));
  EXPECT_EQ(spec.laplace_scale, 1.0 / b.epsilon_e());
}

TEST(CalibrateTest, LinearInEpsilonAndSensitivity) {
  NoiseSpec one = calibrate(PrivacyBudget(0.5, 1e-4));
  NoiseSpec two = calibrate(PrivacyBudget(1.0, 1e-4));
  EXPECT_EQ(two.gaussian_sigma * 2, one.gaussian_sigma);
  EXPECT_EQ(calibrate(PrivacyBudget(1.0, 1e-4), 0.0).gaussian_sigma, 0.0);
  EXPECT_THROW(calibrate(PrivacyBudget(1.0, 1e-4), -1.0), ValidationError);
  NoiseSpec again = calibrate(PrivacyBudget(1.0, 1e-4));
  EXPECT_EQ(again.gaussian_sigma, two.gaussian_sigma);
}

TEST(SamplerTest, GaussianMoments) {
  RandomStream rng(42, "test/gaussian");
  const double sigma = 2.5;
  const int draws = 1000000;
  double sum = 0, sq = 0;
  for (int t = 0; t < draws; ++t) {
    double x = rng.gaussian(sigma);
    sum += x;
    sq += x * x;
  }
  double mean = sum / draws;
  double var = sq / draws - mean * mean;
  EXPECT_LE(std::abs(mean), 0.01 * sigma);
  EXPECT_NEAR(var, sigma * sigma, 0.01 * sigma * sigma);
}

TEST(SamplerTest, LaplaceMoments) {
  RandomStream rng(42, "test/laplace");
  const double b = 0.7;
  const int draws = 1000000;
  double sum = 0, sq = 0;
  for (int t = 0; t < draws; ++t) {
    double x = rng.laplace(b);
    sum += x;
    sq += x * x;
  }
  double mean = sum / draws;
  double var = sq / draws - mean * mean;
  EXPECT_LE(std::abs(mean), 0.02 * b);
  EXPECT_NEAR(var, 2 * b * b, 0.02 * 2 * b * b);
}

TEST(ClampEdgeCountTest, FloorsAndClamps) {
  EXPECT_EQ(clamp_edge_count(10, 0.9, 10).clamped, 10);
  EXPECT_EQ(clamp_edge_count(10, -0.1, 10).clamped, 9);
  NoisyEdgeCount low = clamp_edge_count(3, -50, 10);
  EXPECT_EQ(low.raw, -47);
  EXPECT_EQ(low.clamped, 0);
  EXPECT_EQ(clamp_edge_count(3, 1e30, 10).clamped, 45);
}

TEST(BinarizeTest, TopKWithRowMajorTies) {
  MatrixXd zero = MatrixXd::Zero(4, 4);
  Adjacency a = binarize_top_k(zero, 2);
  EXPECT_EQ(a.edges(), (std::vector<Edge>{{0, 1}, {0, 2}}));
  MatrixXd scores = MatrixXd::Zero(4, 4);
  scores(2, 3) = scores(3, 2) = 5;
  scores(1, 0) = 9;  // lower triangle is ignored
  EXPECT_EQ(binarize_top_k(scores, 1).edges(), (std::vector<Edge>{{2, 3}}));
  EXPECT_EQ(binarize_top_k(scores, 6).num_edges(), 6);
  EXPECT_EQ(binarize_top_k(scores, 0).num_edges(), 0);
  EXPECT_THROW(binarize_top_k(scores, 7), BoundsError);
  EXPECT_THROW(binarize_top_k(scores, -1), BoundsError);
}

TEST(EclipseTest, NoiselessFullRankIsIdentity) {
  // Effectively infinite budget with zero sensitivity.
  PrivacyBudget huge(1e300, 0.5, 0.5);
  for (unsigned seed = 0; seed < 20; ++seed) {
    Adjacency adj = random_adjacency(15 + seed, 0.3, seed);
    PerturbedGraph g = eclipse_perturb(adj, adj.num_nodes(), huge, seed, 0.0);
    EXPECT_EQ(g.adjacency, adj);
  }
}

TEST(EclipseTest, ReplaysSeededSamplers) {
  Adjacency adj = random_adjacency(30, 0.15, 4);
  PrivacyBudget budget(0.8, 1e-5, 0.2);
  const std::uint64_t seed = 1234;
  PerturbedGraph g = eclipse_perturb(adj, 5, budget, seed);
  expect_valid(g, 30);

  // Inverse-CDF Laplace replayed from the raw engine.
  std::mt19937_64 engine(derive_seed(seed, "eclipse/edge-count"));
  double u = (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53 - 0.5;
  double b = 1.0 / budget.epsilon_e();
  double noise = (u < 0 ? 1 : -1) * b * std::log1p(-2 * std::abs(u));
  double expected = std::floor(adj.num_edges() + noise);
  expected = std::clamp(expected, 0.0, 435.0);
  EXPECT_EQ(g.edge_count, static_cast<std::int64_t>(expected));
  EXPECT_EQ(g.provenance.noisy_edge_count,
            static_cast<std::int64_t>(std::floor(adj.num_edges() + noise)));

  // Box-Muller replay for the singular values.
  std::mt19937_64 values(derive_seed(seed, "eclipse/singular-values"));
  const double sigma = calibrate(budget).gaussian_sigma;
  auto f = svd_truncated(adj.dense(), 5);
  VectorXd s = f.s;
  for (Index i = 0; i < 5; ++i) {
    double u1 = (static_cast<double>(values() >> 11) + 0.5) * 0x1.0p-53;
    double u2 = static_cast<double>(values() >> 11) * 0x1.0p-53;
    s(i) += sigma * std::sqrt(-2 * std::log(u1)) * std::cos(2 * M_PI * u2);
  }
  MatrixXd a_lr = f.U * s.asDiagonal() * f.Vt;
  EXPECT_EQ(g.adjacency, binarize_top_k(a_lr, g.edge_count));
}

TEST(EclipseTest, DeterministicAndSeedSensitive) {
  Adjacency adj = random_adjacency(25, 0.2, 9);
  PrivacyBudget budget(2.0, 1e-5);
  PerturbedGraph a = eclipse_perturb(adj, 4, budget, 7);
  PerturbedGraph b = eclipse_perturb(adj, 4, budget, 7);
  EXPECT_EQ(a.adjacency, b.adjacency);
  bool differs = false;
  for (std::uint64_t s = 8; s < 12; ++s) {
    differs |= eclipse_perturb(adj, 4, budget, s).adjacency != a.adjacency;
  }
  EXPECT_TRUE(differs);
}

TEST(EclipseTest, PrecomputedFactorizationMatches) {
  Adjacency adj = random_adjacency(30, 0.2, 2);
  auto full = svd_truncated(adj.dense(), 30);
  PrivacyBudget budget(1.0, 1e-5);
  for (Index r : {1, 3, 10}) {
    EXPECT_EQ(eclipse_perturb(adj, full, r, budget, 5).adjacency,
              eclipse_perturb(adj, r, budget, 5).adjacency);
    EXPECT_EQ(low_rank_only(adj, full, r).adjacency, low_rank_only(adj, r).adjacency);
  }
  EXPECT_THROW(eclipse_perturb(adj, full.truncated(3), 4, budget, 5), BoundsError);
  EXPECT_THROW(eclipse_perturb(adj, 0, budget, 5), BoundsError);
  EXPECT_THROW(eclipse_perturb(adj, 31, budget, 5), BoundsError);
}

TEST(EclipseTest, OutputValidAcrossSeeds) {
  for (unsigned seed = 0; seed < 30; ++seed) {
    Adjacency adj = random_adjacency(12 + seed % 7, 0.05 * (1 + seed % 5), seed);
    Index n = adj.num_nodes();
    PrivacyBudget budget(0.05 + 0.3 * (seed % 4), 1e-5, 0.3);
    PerturbedGraph g = eclipse_perturb(adj, 1 + seed % n, budget, seed);
    expect_valid(g, n);
    EXPECT_EQ(g.edge_count, std::clamp<std::int64_t>(g.provenance.noisy_edge_count, 0,
                                                     Adjacency::max_edges(n)));
    EXPECT_EQ(g.provenance.clamped, g.provenance.noisy_edge_count != g.edge_count);
    expect_valid(dpgcn_perturb(adj, 0.5, seed), n);
    expect_valid(low_rank_only(adj, 1 + seed % n), n);
  }
}

TEST(LowRankOnlyTest, FullRankIsIdentity) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    Adjacency adj = random_adjacency(5 + seed, 0.35, 50 + seed);
    EXPECT_EQ(low_rank_only(adj, adj.num_nodes()).adjacency, adj);
  }
}

TEST(LowRankOnlyTest, RankOneStarKeepsHubPairs) {
  Adjacency star = testing::star_graph(5);
  // The top singular value sqrt(5) is doubly degenerate; the canonical
  // triplet is u = e_hub, v = leaves / sqrt(5). Check it is a singular
  // triplet, then use its outer product as the rank-1 oracle.
  MatrixXd a = star.dense();
  VectorXd u = VectorXd::Zero(6);
  u(0) = 1;
  VectorXd v = VectorXd::Ones(6) / std::sqrt(5.0);
  v(0) = 0;
  EXPECT_LE((a * v - std::sqrt(5.0) * u).norm(), 1e-12);
  EXPECT_LE((a.transpose() * u - std::sqrt(5.0) * v).norm(), 1e-12);
  MatrixXd outer = std::sqrt(5.0) * u * v.transpose();
  auto f = svd_truncated(a, 1);
  EXPECT_LE((reconstruct_low_rank(f) - outer).cwiseAbs().maxCoeff(), 1e-12);
  Adjacency released = low_rank_only(star, 1).adjacency;
  EXPECT_EQ(released, star);
  for (const Edge& e : released.edges()) EXPECT_EQ(e.u, 0);
}

TEST(DpgcnTest, HugeEpsilonKeepsGraph) {
  Adjacency adj = random_adjacency(10, 0.3, 3);
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    exact += dpgcn_perturb(adj, 1e6, seed).adjacency == adj;
  }
  EXPECT_GE(exact, 99);
}

TEST(DpgcnTest, TinyEpsilonLooksLikeRandomSelection) {
  Adjacency adj = random_adjacency(30, 0.15, 8);
  const double pairs = 435;
  const double k = static_cast<double>(adj.num_edges());
  // Hypergeometric overlap of a uniformly random k-subset with the k edges.
  const double mean = k * k / pairs;
  const double var = k * (k / pairs) * ((pairs - k) / pairs) * ((pairs - k) / (pairs - 1));
  const int seeds = 50;
  double total = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    Adjacency out = dpgcn_perturb(adj, 0.01, seed).adjacency;
    double overlap = 0;
    for (const Edge& e : out.edges()) overlap += adj.has_edge(e.u, e.v);
    total += overlap;
  }
  EXPECT_NEAR(total / seeds, mean, 3 * std::sqrt(var / seeds));
}

TEST(DpgcnTest, EmptyGraph) {
  EXPECT_EQ(dpgcn_perturb(Adjacency(8, {}), 1.0, 0).adjacency.num_edges(), 0);
  EXPECT_THROW(dpgcn_perturb(Adjacency(8, {}), 0.0, 0), ValidationError);
}

TEST(DegreeVectorTest, NoiselessTriangle) {
  MatrixXd d = degree_vector_perturb(testing::complete_graph(3), {0, 0, 1}, 2, 1.0, 0, true);
  MatrixXd expected(3, 2);
  expected << 1, 1, 1, 1, 2, 0;
  EXPECT_EQ(d, expected);
}

TEST(DegreeVectorTest, HugeEpsilonIsClose) {
  Adjacency adj = random_adjacency(40, 0.2, 1);
  std::vector<int> assignment(40);
  for (int i = 0; i < 40; ++i) assignment[i] = i % 3;
  MatrixXd exact = degree_vector_perturb(adj, assignment, 3, 1.0, 0, true);
  MatrixXd noisy = degree_vector_perturb(adj, assignment, 3, 1e3, 5);
  EXPECT_LE((noisy - exact).cwiseAbs().maxCoeff(), 0.1);
}

TEST(DegreeVectorTest, EmptyGraphIsPureNoise) {
  std::vector<int> assignment = {0, 1, 0, 1};
  EXPECT_EQ(degree_vector_perturb(Adjacency(4, {}), assignment, 2, 1.0, 0, true),
            MatrixXd::Zero(4, 2));
  MatrixXd noisy = degree_vector_perturb(Adjacency(4, {}), assignment, 2, 1.0, 0);
  EXPECT_GT(noisy.cwiseAbs().sum(), 0.0);
  EXPECT_THROW(degree_vector_perturb(Adjacency(4, {}), {0, 1}, 2, 1.0, 0), DimensionError);
  EXPECT_THROW(degree_vector_perturb(Adjacency(4, {}), {0, 1, 2, 0}, 2, 1.0, 0),
               BoundsError);
}

TEST(SensitivityTest, SelfNeighbourIsZero) {
  MatrixXd a = random_adjacency(10, 0.3, 3).dense();
  EXPECT_LE(anchored_distance(a, svd_truncated(a, 10)), 1e-12);
}

TEST(SensitivityTest, ExhaustiveSixNodeOracle) {
  for (unsigned seed = 0; seed < 10; ++seed) {
    Adjacency adj = random_adjacency(6, 0.5, seed);
    auto f = svd_truncated(adj.dense(), 6);
    double oracle = 0;
    for (Index i = 0; i < 6; ++i) {
      for (Index j = i + 1; j < 6; ++j) {
        oracle = std::max(oracle, anchored_distance(adj.with_toggled(i, j).dense(), f));
      }
    }
    SensitivityReport r = verify_sensitivity(adj, 6, 0, 0, true);
    EXPECT_EQ(r.neighbors, 15);
    EXPECT_NEAR(r.max_distance, oracle, 1e-12);
    EXPECT_LE(r.max_distance, std::sqrt(2.0) + 1e-9);
  }
}

TEST(SensitivityTest, SampledBoundAndErrors) {
  Adjacency adj = random_adjacency(40, 0.1, 77);
  for (Index r : {1, 5, 40}) {
    EXPECT_LE(verify_sensitivity(adj, r, 200, 3).max_distance, std::sqrt(2.0) + 1e-9);
  }
  EXPECT_THROW(verify_sensitivity(adj, 5, 0, 3), ValidationError);
}

TEST(SensitivityTest, SeparateSvdsOfTrianglePair) {
  MatrixXd a = testing::complete_graph(3).dense();
  MatrixXd b = a;
  b(0, 1) = b(1, 0) = 0;
  double d = (svd_truncated(a, 3).s - svd_truncated(b, 3).s).norm();
  VectorXd expected(3);
  expected << 2 - std::sqrt(2.0), 1 - std::sqrt(2.0), 1;
  EXPECT_NEAR(d, expected.norm(), 1e-9);
  EXPECT_NEAR(d, 1.23, 0.005);
  EXPECT_LE(d, std::sqrt(2.0));
}

TEST(WritePerturbedTest, EdgesAndProvenance) {
  testing::TempDir dir;
  Adjacency adj = random_adjacency(12, 0.3, 2);
  PerturbedGraph g = eclipse_perturb(adj, 3, PrivacyBudget(1.0, 1e-5), 9);
  write_perturbed(g, dir.path() / "out");
  EXPECT_EQ(read_edges(dir / "out/edges.tsv", 12), g.adjacency);
  std::ifstream in(dir / "out/provenance.json");
  nlohmann::json j = nlohmann::json::parse(in);
  EXPECT_EQ(j["mechanism"], "eclipse");
  EXPECT_EQ(j["rank"], 3);
  EXPECT_EQ(j["seed"], 9);
  EXPECT_EQ(j["epsilon"], 1.0);
  EXPECT_EQ(j["delta"], 1e-5);
  EXPECT_EQ(j["edge_count"], g.edge_count);
  EXPECT_EQ(j["epsilon_e"].get<double>() + j["epsilon_lr"].get<double>(), 1.0);
}

}  // namespace
}  // namespace edgeveil
