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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "edgeveil/eigen_types.h"
#include "edgeveil/graph.h"
#include "edgeveil/learning.h"

namespace edgeveil {

enum class AttackSetting { kTransductive, kInductive };

std::string_view to_string(AttackSetting setting);
AttackSetting parse_attack_setting(std::string_view name);

struct CandidatePair {
  Index u = 0;
  Index v = 0;
  bool is_edge = false;
};

// Node pairs to score. Pair ids refer to the graph the model is queried on;
// original_ids (when non-empty) maps them back to the private graph, e.g.
// for an inductive subgraph.
struct AttackTask {
  AttackSetting setting = AttackSetting::kTransductive;
  std::vector<CandidatePair> pairs;
  std::vector<Index> original_ids;

  Index original_id(Index node) const {
    return original_ids.empty() ? node : original_ids[node];
  }
  Index num_positive() const;
  Index num_negative() const;
};

// `per_class` distinct edges and `per_class` distinct non-edges, drawn
// uniformly. Throws ValidationError when the graph has too few of either.
AttackTask sample_balanced_task(const Adjacency& adjacency, Index per_class,
                                std::uint64_t seed);

// Every unordered pair of `subgraph`, labelled by presence in it.
AttackTask all_pairs_task(const Adjacency& subgraph,
                          std::vector<Index> original_ids = {});

enum class Distance { kCosine, kEuclidean, kCorrelation };

std::string_view to_string(Distance distance);
Distance parse_distance(std::string_view name);

// Distance between two vectors. Cosine and correlation distances of a zero
// (or constant, for correlation) vector are taken as 1.
template <typename DerivedA, typename DerivedB>
double distance(const Eigen::MatrixBase<DerivedA>& a,
                const Eigen::MatrixBase<DerivedB>& b, Distance metric) {
  switch (metric) {
    case Distance::kEuclidean:
      return (a - b).norm();
    case Distance::kCorrelation: {
      auto ca = (a.array() - a.mean()).matrix().eval();
      auto cb = (b.array() - b.mean()).matrix().eval();
      double denom = ca.norm() * cb.norm();
      return denom > 0 ? 1 - ca.dot(cb) / denom : 1.0;
    }
    case Distance::kCosine:
    default: {
      double denom = a.norm() * b.norm();
      return denom > 0 ? 1 - a.dot(b) / denom : 1.0;
    }
  }
}

struct StratumAuc {
  std::optional<double> low;
  std::optional<double> high;
  bool operator==(const StratumAuc&) const = default;
};

struct AttackReport {
  std::string attack;
  AttackSetting setting = AttackSetting::kTransductive;
  std::vector<double> scores;  // one per task pair; higher means "edge"
  double auc = 0.5;
  StratumAuc strata;
  Index num_pairs = 0;
  Index num_positive = 0;
  bool operator==(const AttackReport&) const = default;
};

// Everything but the per-pair scores.
nlohmann::json to_json(const AttackReport& report);
AttackReport attack_report_from_json(const nlohmann::json& j);

// P(score_pos > score_neg) + P(tie) / 2 over all positive/negative pairs,
// from exact integer counts. Throws ValidationError without both classes or
// for NaN scores, DimensionError on a length mismatch.
double compute_auc(std::span<const double> scores, std::span<const bool> truth);
double compute_auc(const std::vector<double>& scores, const std::vector<bool>& truth);

// score = -distance(posterior_u, posterior_v).
AttackReport lpa_attack(const MatrixXd& posteriors, const AttackTask& task,
                        Distance metric = Distance::kCosine);
AttackReport lpa_attack(const GcnModel& model, const ModelInputs& inputs,
                        const AttackTask& task, Distance metric = Distance::kCosine);

// influence(i -> j) = ||p_j(X with row i scaled by 1 + delta) - p_j(X)||_1 / delta,
// score = influence(u -> v) + influence(v -> u).
AttackReport linkteller_attack(const GcnModel& model, const ModelInputs& inputs,
                               const AttackTask& task, double delta = 1e-4);

// Influence of every node in `sources` on every node, as rows of a
// |sources| x n matrix.
MatrixXd influence_matrix(const GcnModel& model, const ModelInputs& inputs,
                          const std::vector<Index>& sources, double delta = 1e-4);

// score = cosine similarity of raw feature rows (0 for a zero row).
AttackReport feature_similarity_attack(const MatrixXd& features, const AttackTask& task);

// AUC restricted to pairs whose endpoints (mapped through original_ids) are
// both low-degree, respectively both high-degree. A stratum without both
// classes is absent.
StratumAuc stratified_auc(const AttackReport& report, const AttackTask& task,
                          const DegreeStats& stats);

// Relative degree change |deg - deg'| / max(deg, 1) per node, and
// equal-width histograms over [0, 1]. Changes above 1 land in `overflow`.
struct DegreeChangeHistogram {
  std::vector<double> changes;
  std::vector<double> bin_edges;  // bins + 1 values from 0 to 1
  std::vector<Index> all;
  std::vector<Index> low;
  std::vector<Index> high;
  Index overflow_all = 0;
  Index overflow_low = 0;
  Index overflow_high = 0;

  // Share of `nodes` whose change is at least `threshold`.
  double fraction_at_least(double threshold, const std::vector<Index>& nodes) const;
};

DegreeChangeHistogram degree_change_histogram(const Adjacency& original,
                                              const Adjacency& perturbed, int bins,
                                              const DegreeStats& stats);

}  // namespace edgeveil
