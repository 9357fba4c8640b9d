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
#include "edgeveil/graph.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "edgeveil/errors.h"
#include "edgeveil/rng.h"

namespace edgeveil {

Adjacency::Adjacency(Index n, std::vector<Edge> edges) : n_(n) {
  if (n < 0) throw ValidationError("node count must be non-negative");
  edges_.reserve(edges.size());
  for (Edge e : edges) {
    if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
      throw BoundsError("edge (" + std::to_string(e.u) + ", " +
                        std::to_string(e.v) + ") has an endpoint outside [0, " +
                        std::to_string(n) + ")");
    }
    if (e.u == e.v) continue;
    if (e.u > e.v) std::swap(e.u, e.v);
    edges_.push_back(e);
  }
  std::sort(edges_.begin(), edges_.end());
  edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
}

bool Adjacency::has_edge(Index i, Index j) const {
  if (i == j) return false;
  if (i > j) std::swap(i, j);
  return std::binary_search(edges_.begin(), edges_.end(), Edge{i, j});
}

std::vector<Index> Adjacency::degrees() const {
  std::vector<Index> deg(static_cast<std::size_t>(n_), 0);
  for (const Edge& e : edges_) {
    ++deg[e.u];
    ++deg[e.v];
  }
  return deg;
}

std::vector<std::vector<Index>> Adjacency::neighbor_lists() const {
  std::vector<std::vector<Index>> nbrs(static_cast<std::size_t>(n_));
  for (const Edge& e : edges_) {
    nbrs[e.u].push_back(e.v);
    nbrs[e.v].push_back(e.u);
  }
  for (auto& list : nbrs) std::sort(list.begin(), list.end());
  return nbrs;
}

Adjacency Adjacency::with_toggled(Index i, Index j) const {
  if (i == j) throw ValidationError("cannot toggle a self-loop");
  if (i > j) std::swap(i, j);
  if (i < 0 || j >= n_) throw BoundsError("toggled pair outside the graph");
  Adjacency out = *this;
  Edge e{i, j};
  auto it = std::lower_bound(out.edges_.begin(), out.edges_.end(), e);
  if (it != out.edges_.end() && *it == e) {
    out.edges_.erase(it);
  } else {
    out.edges_.insert(it, e);
  }
  return out;
}

SparseMatrixXd Adjacency::sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(edges_.size() * 2);
  for (const Edge& e : edges_) {
    triplets.emplace_back(e.u, e.v, 1.0);
    triplets.emplace_back(e.v, e.u, 1.0);
  }
  SparseMatrixXd a(n_, n_);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Graph::Graph(Adjacency adjacency, MatrixXd features, std::vector<int> labels,
             Splits splits)
    : adjacency_(std::move(adjacency)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      splits_(std::move(splits)) {
  const Index n = adjacency_.num_nodes();
  if (features_.rows() != n) {
    throw ValidationError("feature matrix has " +
                          std::to_string(features_.rows()) + " rows for " +
                          std::to_string(n) + " nodes");
  }
  if (static_cast<Index>(labels_.size()) != n) {
    throw ValidationError("label count " + std::to_string(labels_.size()) +
                          " does not match node count " + std::to_string(n));
  }
  for (int label : labels_) {
    if (label < 0) throw ValidationError("labels must be non-negative");
    num_classes_ = std::max(num_classes_, label + 1);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto* part : {&splits_.train, &splits_.val, &splits_.test}) {
    for (Index node : *part) {
      if (node < 0 || node >= n) {
        throw BoundsError("split index " + std::to_string(node) +
                          " outside [0, " + std::to_string(n) + ")");
      }
      if (seen[node]) {
        throw ValidationError("node " + std::to_string(node) +
                              " appears more than once across splits");
      }
      seen[node] = 1;
    }
  }
}

Graph Graph::with_adjacency(Adjacency adjacency) const {
  if (adjacency.num_nodes() != num_nodes()) {
    throw DimensionError("replacement adjacency has a different node count");
  }
  Graph g = *this;
  g.adjacency_ = std::move(adjacency);
  return g;
}

Graph Graph::with_features(MatrixXd features) const {
  return Graph(adjacency_, std::move(features), labels_, splits_);
}

Graph induced_subgraph(const Graph& graph, const std::vector<Index>& nodes) {
  std::unordered_map<Index, Index> position;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (!position.emplace(nodes[k], static_cast<Index>(k)).second) {
      throw ValidationError("induced_subgraph: repeated node");
    }
  }
  std::vector<Edge> edges;
  for (const Edge& e : graph.adjacency().edges()) {
    auto a = position.find(e.u);
    auto b = position.find(e.v);
    if (a != position.end() && b != position.end()) {
      edges.push_back({a->second, b->second});
    }
  }
  const Index k = static_cast<Index>(nodes.size());
  MatrixXd features(k, graph.features().cols());
  std::vector<int> labels(nodes.size());
  for (Index i = 0; i < k; ++i) {
    features.row(i) = graph.features().row(nodes[i]);
    labels[i] = graph.labels()[nodes[i]];
  }
  auto remap = [&](const std::vector<Index>& src) {
    std::vector<Index> out;
    for (Index node : src) {
      auto it = position.find(node);
      if (it != position.end()) out.push_back(it->second);
    }
    return out;
  };
  const Splits& s = graph.splits();
  return Graph(Adjacency(k, std::move(edges)), std::move(features),
               std::move(labels), {remap(s.train), remap(s.val), remap(s.test)});
}

std::string_view to_string(NormalizationScheme scheme) {
  switch (scheme) {
    case NormalizationScheme::kFirstOrderGcn:
      return "first-order-gcn";
    case NormalizationScheme::kAugNormAdj:
      return "aug-norm-adj";
    case NormalizationScheme::kAugNormAdjSelfLoop:
      return "aug-norm-adj-self-loop";
  }
  return "unknown";
}

NormalizationScheme parse_normalization(std::string_view name) {
  for (auto scheme : {NormalizationScheme::kFirstOrderGcn,
                      NormalizationScheme::kAugNormAdj,
                      NormalizationScheme::kAugNormAdjSelfLoop}) {
    if (to_string(scheme) == name) return scheme;
  }
  throw ValidationError("unknown normalization scheme '" + std::string(name) +
                        "'");
}

NormalizedAdjacency normalize(const Adjacency& adjacency,
                              NormalizationScheme scheme) {
  const Index n = adjacency.num_nodes();
  const std::vector<Index> deg = adjacency.degrees();
  VectorXd scale(n);
  for (Index i = 0; i < n; ++i) {
    double d = static_cast<double>(deg[i]);
    if (scheme == NormalizationScheme::kFirstOrderGcn) {
      scale(i) = d > 0 ? 1.0 / std::sqrt(d) : 0.0;
    } else {
      scale(i) = 1.0 / std::sqrt(d + 1.0);
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(adjacency.edges().size() * 2 + static_cast<std::size_t>(n));
  for (const Edge& e : adjacency.edges()) {
    double w = scale(e.u) * scale(e.v);
    triplets.emplace_back(e.u, e.v, w);
    triplets.emplace_back(e.v, e.u, w);
  }
  for (Index i = 0; i < n; ++i) {
    switch (scheme) {
      case NormalizationScheme::kFirstOrderGcn:
        triplets.emplace_back(i, i, 1.0);
        break;
      case NormalizationScheme::kAugNormAdjSelfLoop:
        triplets.emplace_back(i, i, scale(i) * scale(i));
        break;
      case NormalizationScheme::kAugNormAdj:
        break;
    }
  }
  NormalizedAdjacency out{SparseMatrixXd(n, n), scheme};
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

bool DegreeStats::is_low(Index node) const {
  return degrees[node] <= low_threshold;
}

bool DegreeStats::is_high(Index node) const {
  return degrees[node] >= high_threshold;
}

DegreeStats degree_stats(const Adjacency& adjacency, Index d_low,
                         Index d_high) {
  if (d_low >= d_high) {
    throw ValidationError("degree_stats requires d_low < d_high");
  }
  DegreeStats stats;
  stats.degrees = adjacency.degrees();
  stats.low_threshold = d_low;
  stats.high_threshold = d_high;
  for (Index i = 0; i < adjacency.num_nodes(); ++i) {
    if (stats.degrees[i] <= d_low) stats.low_nodes.push_back(i);
    if (stats.degrees[i] >= d_high) stats.high_nodes.push_back(i);
  }
  return stats;
}

namespace {

Splits split_60_20_20(Index n, RandomStream& rng) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  rng.shuffle(std::span<Index>(order));
  const Index n_train = (n * 6) / 10;
  const Index n_val = (n * 2) / 10;
  Splits s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  for (auto* part : {&s.train, &s.val, &s.test}) {
    std::sort(part->begin(), part->end());
  }
  return s;
}

}  // namespace

Graph generate_synthetic(Index n, double edge_prob, Index feature_dim,
                         int num_classes, std::uint64_t seed) {
  if (n < 2) throw ValidationError("generate_synthetic requires n >= 2");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw ValidationError("edge_prob must lie in [0, 1]");
  }
  if (num_classes < 1) throw ValidationError("num_classes must be positive");

  RandomStream edge_rng(seed, "synthetic/edges");
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (edge_rng.uniform() < edge_prob) edges.push_back({i, j});
    }
  }
  RandomStream feature_rng(seed, "synthetic/features");
  MatrixXd features(n, feature_dim);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < feature_dim; ++k) {
      features(i, k) = feature_rng.gaussian(1.0);
    }
  }
  RandomStream label_rng(seed, "synthetic/labels");
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& label : labels) {
    label = static_cast<int>(label_rng.below(static_cast<std::uint64_t>(num_classes)));
  }
  RandomStream split_rng(seed, "synthetic/splits");
  Splits splits = split_60_20_20(n, split_rng);
  return Graph(Adjacency(n, std::move(edges)), std::move(features),
               std::move(labels), std::move(splits));
}

Graph generate_planted_partition(const PlantedPartitionOptions& options,
                                 std::uint64_t seed) {
  const Index n = options.n;
  if (n < 2) throw ValidationError("planted partition requires n >= 2");
  RandomStream label_rng(seed, "planted/labels");
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& label : labels) {
    label = static_cast<int>(
        label_rng.below(static_cast<std::uint64_t>(options.num_classes)));
  }
  RandomStream edge_rng(seed, "planted/edges");
  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double p = labels[i] == labels[j] ? options.p_in : options.p_out;
      if (edge_rng.uniform() < p) edges.push_back({i, j});
    }
  }
  RandomStream feature_rng(seed, "planted/features");
  MatrixXd means(options.num_classes, options.feature_dim);
  for (Index c = 0; c < means.rows(); ++c) {
    for (Index k = 0; k < means.cols(); ++k) means(c, k) = feature_rng.gaussian(1.0);
    means.row(c) *= options.feature_signal / std::max(means.row(c).norm(), 1e-12);
  }
  MatrixXd features(n, options.feature_dim);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < options.feature_dim; ++k) {
      features(i, k) = means(labels[i], k) + feature_rng.gaussian(1.0 / std::sqrt(
                                                 static_cast<double>(options.feature_dim)));
    }
  }
  RandomStream split_rng(seed, "planted/splits");
  Splits splits = split_60_20_20(n, split_rng);
  return Graph(Adjacency(n, std::move(edges)), std::move(features),
               std::move(labels), std::move(splits));
}

MatrixXd row_normalized(const MatrixXd& features) {
  MatrixXd out = features;
  for (Index i = 0; i < out.rows(); ++i) {
    double total = out.row(i).cwiseAbs().sum();
    if (total > 0) out.row(i) /= total;
  }
  return out;
}

}  // namespace edgeveil
