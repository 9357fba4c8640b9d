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
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "edgeveil/eigen_types.h"
#include "edgeveil/graph.h"
#include "edgeveil/spectral.h"

namespace edgeveil {

// L2 sensitivity of the anchored singular values under one edge toggle.
inline constexpr double kEdgeSensitivity = 1.4142135623730951;

// Total (epsilon, delta) split between the Laplace edge count and the
// Gaussian singular-value release. epsilon_e() + epsilon_lr() == epsilon()
// holds exactly in double arithmetic.
class PrivacyBudget {
 public:
  // Throws ValidationError unless epsilon > 0, 0 < delta < 1 and
  // 0 < edge_share < 1.
  PrivacyBudget(double epsilon, double delta, double edge_share = 0.01);

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  double edge_share() const { return edge_share_; }
  double epsilon_e() const { return epsilon_e_; }
  double epsilon_lr() const { return epsilon_lr_; }

 private:
  double epsilon_;
  double delta_;
  double edge_share_;
  double epsilon_e_;
  double epsilon_lr_;
};

struct NoiseSpec {
  double sensitivity = kEdgeSensitivity;
  double gaussian_sigma = 0;  // sensitivity * sqrt(2 ln(1.25/delta)) / epsilon_lr
  double laplace_scale = 0;   // 1 / epsilon_e
  bool operator==(const NoiseSpec&) const = default;
};

// Throws ValidationError for a negative or non-finite sensitivity.
NoiseSpec calibrate(const PrivacyBudget& budget,
                    double sensitivity = kEdgeSensitivity);

// What produced a released graph. Optional fields are absent for mechanisms
// that do not use them.
struct Provenance {
  std::string mechanism;
  std::uint64_t seed = 0;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> epsilon_e;
  std::optional<double> epsilon_lr;
  std::optional<NoiseSpec> noise;
  std::optional<Index> rank;
  std::int64_t true_edge_count = 0;
  std::int64_t noisy_edge_count = 0;  // before clamping
  std::int64_t edge_count = 0;        // realized
  bool clamped = false;
  bool operator==(const Provenance&) const = default;
};

nlohmann::json to_json(const Provenance& provenance);
Provenance provenance_from_json(const nlohmann::json& j);

struct PerturbedGraph {
  Adjacency adjacency;
  std::int64_t edge_count = 0;
  Provenance provenance;
};

// edges.tsv and provenance.json inside `dir`.
void write_perturbed(const PerturbedGraph& graph, const std::filesystem::path& dir);

// The k largest strict-upper-triangle entries of `scores` as edges. Ties go
// to the smaller row-major (i, j). Throws BoundsError unless
// 0 <= k <= n(n-1)/2.
Adjacency binarize_top_k(const MatrixXd& scores, std::int64_t k);

// Edge-count release: floor(true_count + noise) clamped to [0, max_edges].
struct NoisyEdgeCount {
  std::int64_t raw = 0;
  std::int64_t clamped = 0;
};
NoisyEdgeCount clamp_edge_count(std::int64_t true_count, double noise, Index n);

// Low-rank release with perturbed singular values and a Laplace edge count.
// The factorization overload reuses a precomputed (possibly higher-rank)
// factorization of the same adjacency and keeps its top r triplets.
PerturbedGraph eclipse_perturb(const Adjacency& adjacency, Index r,
                               const PrivacyBudget& budget, std::uint64_t seed,
                               double sensitivity = kEdgeSensitivity);
PerturbedGraph eclipse_perturb(const Adjacency& adjacency,
                               const LowRankFactorization<double>& factorization,
                               Index r, const PrivacyBudget& budget,
                               std::uint64_t seed,
                               double sensitivity = kEdgeSensitivity);

// The same pipeline with no noise and the true edge count.
PerturbedGraph low_rank_only(const Adjacency& adjacency, Index r);
PerturbedGraph low_rank_only(const Adjacency& adjacency,
                             const LowRankFactorization<double>& factorization,
                             Index r);

// Laplace(1/epsilon) on every strict-upper-triangle entry, then the top |E|
// entries become edges.
PerturbedGraph dpgcn_perturb(const Adjacency& adjacency, double epsilon,
                             std::uint64_t seed);

// Cluster degree vectors D(i, c) = #{neighbours of i in cluster c}, each
// entry plus Laplace(1/epsilon) unless `noiseless`. Clusters are given by
// `assignment` (one id in [0, num_clusters) per node).
MatrixXd degree_vector_perturb(const Adjacency& adjacency,
                               const std::vector<int>& assignment,
                               int num_clusters, double epsilon,
                               std::uint64_t seed, bool noiseless = false);

// ||diag(U^T A' V) - s|| for the anchored bases of `f`.
double anchored_distance(const MatrixXd& a_prime,
                         const LowRankFactorization<double>& f);

struct SensitivityReport {
  double max_distance = 0;
  EdgeToggle worst;
  Index neighbors = 0;
};

// Largest anchored singular-value shift over sampled (or all) single-edge
// neighbours. Throws ValidationError when trials < 1 and not exhaustive.
SensitivityReport verify_sensitivity(const Adjacency& adjacency, Index r,
                                     Index trials, std::uint64_t seed,
                                     bool exhaustive = false);

}  // namespace edgeveil
