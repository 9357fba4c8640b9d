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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "edgeveil/eigen_types.h"

namespace edgeveil {

// Unordered node pair, stored with u < v.
struct Edge {
  Index u = 0;
  Index v = 0;
  auto operator<=>(const Edge&) const = default;
};

// Symmetric, unweighted, loop-free adjacency kept as a sorted set of
// unordered pairs. Dense and sparse matrix views are built on demand.
class Adjacency {
 public:
  Adjacency() = default;

  // Orders endpoints, drops self-loops, sorts and deduplicates. Throws
  // BoundsError when an endpoint is outside [0, n).
  Adjacency(Index n, std::vector<Edge> edges);

  // Edges are the nonzero entries of the strict upper triangle.
  template <typename Derived>
  static Adjacency from_dense(const Eigen::MatrixBase<Derived>& a) {
    std::vector<Edge> edges;
    for (Index i = 0; i < a.rows(); ++i) {
      for (Index j = i + 1; j < a.cols(); ++j) {
        if (a(i, j) != 0) edges.push_back({i, j});
      }
    }
    return Adjacency(a.rows(), std::move(edges));
  }

  Index num_nodes() const { return n_; }
  std::int64_t num_edges() const {
    return static_cast<std::int64_t>(edges_.size());
  }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_edge(Index i, Index j) const;
  std::vector<Index> degrees() const;
  std::vector<std::vector<Index>> neighbor_lists() const;

  // Single-edge neighbour: adds (i, j) when absent, removes it otherwise.
  Adjacency with_toggled(Index i, Index j) const;

  template <typename Scalar = double>
  Matrix<Scalar> dense() const {
    Matrix<Scalar> a = Matrix<Scalar>::Zero(n_, n_);
    for (const Edge& e : edges_) {
      a(e.u, e.v) = Scalar(1);
      a(e.v, e.u) = Scalar(1);
    }
    return a;
  }

  SparseMatrixXd sparse() const;

  static std::int64_t max_edges(Index n) {
    return static_cast<std::int64_t>(n) * (n - 1) / 2;
  }

  bool operator==(const Adjacency&) const = default;

 private:
  Index n_ = 0;
  std::vector<Edge> edges_;
};

struct Splits {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;
  bool operator==(const Splits&) const = default;
};

// Adjacency plus node features, labels and splits. Immutable once built.
class Graph {
 public:
  // Throws ValidationError / BoundsError when the pieces disagree on n, a
  // label is negative, or the splits overlap or repeat a node.
  Graph(Adjacency adjacency, MatrixXd features, std::vector<int> labels,
        Splits splits);

  Index num_nodes() const { return adjacency_.num_nodes(); }
  std::int64_t num_edges() const { return adjacency_.num_edges(); }
  const Adjacency& adjacency() const { return adjacency_; }
  const MatrixXd& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  int num_classes() const { return num_classes_; }
  const Splits& splits() const { return splits_; }

  Graph with_adjacency(Adjacency adjacency) const;
  Graph with_features(MatrixXd features) const;

 private:
  Adjacency adjacency_;
  MatrixXd features_;
  std::vector<int> labels_;
  int num_classes_ = 0;
  Splits splits_;
};

// The induced subgraph on `nodes` (renumbered 0..k-1 in the given order).
// Splits are carried over for nodes that survive.
Graph induced_subgraph(const Graph& graph, const std::vector<Index>& nodes);

// ---------------------------------------------------------------------------
// Normalization

enum class NormalizationScheme {
  kFirstOrderGcn,     // I + D^-1/2 A D^-1/2
  kAugNormAdj,        // (D+I)^-1/2 A (D+I)^-1/2
  kAugNormAdjSelfLoop,  // (D+I)^-1/2 (A+I) (D+I)^-1/2
};

std::string_view to_string(NormalizationScheme scheme);
NormalizationScheme parse_normalization(std::string_view name);

struct NormalizedAdjacency {
  SparseMatrixXd matrix;
  NormalizationScheme scheme;

  MatrixXd dense() const { return MatrixXd(matrix); }
};

// Degree-0 rows contribute nothing off the diagonal (0/0 is taken as 0).
NormalizedAdjacency normalize(const Adjacency& adjacency,
                              NormalizationScheme scheme);

// ---------------------------------------------------------------------------
// Degree statistics

struct DegreeStats {
  std::vector<Index> degrees;
  Index low_threshold = 0;
  Index high_threshold = 0;
  std::vector<Index> low_nodes;   // degree <= low_threshold
  std::vector<Index> high_nodes;  // degree >= high_threshold

  bool is_low(Index node) const;
  bool is_high(Index node) const;
};

// Requires d_low < d_high.
DegreeStats degree_stats(const Adjacency& adjacency, Index d_low,
                         Index d_high);

// ---------------------------------------------------------------------------
// Synthetic fixtures

// Erdos-Renyi edges, standard-normal features, uniform labels, 60/20/20 split.
Graph generate_synthetic(Index n, double edge_prob, Index feature_dim,
                         int num_classes, std::uint64_t seed);

// Stochastic block model with class-dependent feature means; a homophilous
// fixture on which graph models beat feature-only models.
struct PlantedPartitionOptions {
  Index n = 200;
  int num_classes = 3;
  double p_in = 0.08;
  double p_out = 0.005;
  Index feature_dim = 16;
  double feature_signal = 0.6;  // distance of class means from the origin
};
Graph generate_planted_partition(const PlantedPartitionOptions& options,
                                 std::uint64_t seed);

// Scales every nonzero row to unit L1 norm.
MatrixXd row_normalized(const MatrixXd& features);

// ---------------------------------------------------------------------------
// File formats

// edges.tsv: two whitespace-separated 0-based ids per line, '#' comments.
Adjacency read_edges(const std::filesystem::path& path, Index num_nodes);
void write_edges(const std::filesystem::path& path, const Adjacency& adjacency);

// Reads an edge list whose ids may be sparse or arbitrary non-negative
// integers; node k of the result is original_ids[k].
struct RemappedEdgeList {
  Adjacency adjacency;
  std::vector<std::int64_t> original_ids;
};
RemappedEdgeList read_edges_remapped(const std::filesystem::path& path);

// features.csv: comma-separated decimals, one row per node.
MatrixXd read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const MatrixXd& features);

// labels.txt: one integer per line.
std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path,
                  const std::vector<int>& labels);

// splits.json: {"train": [...], "val": [...], "test": [...]}.
Splits read_splits(const std::filesystem::path& path);
void write_splits(const std::filesystem::path& path, const Splits& splits);

struct DatasetPaths {
  std::filesystem::path edges;
  std::filesystem::path features;
  std::filesystem::path labels;
  std::filesystem::path splits;

  // edges.tsv, features.csv, labels.txt and splits.json inside `dir`.
  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

Graph load_graph(const std::filesystem::path& edge_file,
                 const std::filesystem::path& feature_file,
                 const std::filesystem::path& label_file,
                 const std::filesystem::path& split_file);
Graph load_graph(const DatasetPaths& paths);
void save_graph(const Graph& graph, const std::filesystem::path& dir);

}  // namespace edgeveil
