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

#include <algorithm>
#include <cmath>
#include <fstream>

#include "edgeveil/errors.h"
#include "edgeveil/rng.h"

namespace edgeveil {
namespace {

struct Score {
  double value;
  std::int32_t i;
  std::int32_t j;
};

// Strict total order: larger value first, then row-major position.
bool ranks_before(const Score& a, const Score& b) {
  if (a.value != b.value) return a.value > b.value;
  if (a.i != b.i) return a.i < b.i;
  return a.j < b.j;
}

Adjacency top_k(Index n, std::vector<Score> scores, std::int64_t k) {
  if (k < 0 || k > static_cast<std::int64_t>(scores.size())) {
    throw BoundsError("cannot keep " + std::to_string(k) + " of " +
                      std::to_string(scores.size()) + " pairs");
  }
  auto kth = scores.begin() + k;
  if (kth != scores.end()) std::nth_element(scores.begin(), kth, scores.end(), ranks_before);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(k));
  for (auto it = scores.begin(); it != kth; ++it) edges.push_back({it->i, it->j});
  return Adjacency(n, std::move(edges));
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) {
    throw ValidationError("epsilon must be positive and finite");
  }
}

void check_rank(Index r, Index n) {
  if (r < 1 || r > n) {
    throw BoundsError("rank " + std::to_string(r) + " outside [1, " +
                      std::to_string(n) + "]");
  }
}

// Shared tail of the low-rank mechanisms: reconstruct with `s`, keep the top
// `edge_count` pairs.
Adjacency release_low_rank(const LowRankFactorization<double>& f, Index r,
                           const VectorXd& s, std::int64_t edge_count) {
  MatrixXd a_lr = f.U.leftCols(r) * s.asDiagonal() * f.Vt.topRows(r);
  return binarize_top_k(a_lr, edge_count);
}

const LowRankFactorization<double>& checked_factorization(
    const Adjacency& adjacency, const LowRankFactorization<double>& f, Index r) {
  if (f.num_nodes() != adjacency.num_nodes()) {
    throw DimensionError("factorization is for n=" + std::to_string(f.num_nodes()) +
                         ", graph has n=" + std::to_string(adjacency.num_nodes()));
  }
  check_rank(r, adjacency.num_nodes());
  if (r > f.rank()) {
    throw BoundsError("rank " + std::to_string(r) +
                      " exceeds the precomputed factorization rank " +
                      std::to_string(f.rank()));
  }
  return f;
}

}  // namespace

PrivacyBudget::PrivacyBudget(double epsilon, double delta, double edge_share)
    : epsilon_(epsilon), delta_(delta), edge_share_(edge_share) {
  check_epsilon(epsilon);
  if (!(delta > 0 && delta < 1)) throw ValidationError("delta must lie in (0, 1)");
  if (!(edge_share > 0 && edge_share < 1)) {
    throw ValidationError("edge share must lie in (0, 1)");
  }
  // The larger share lies in [eps/2, eps], so eps minus it is exact
  // (Sterbenz) and the two parts sum back to eps without rounding.
  if (edge_share <= 0.5) {
    epsilon_lr_ = epsilon - edge_share * epsilon;
    epsilon_e_ = epsilon - epsilon_lr_;
  } else {
    epsilon_e_ = epsilon - (1 - edge_share) * epsilon;
    epsilon_lr_ = epsilon - epsilon_e_;
  }
  if (!(epsilon_e_ > 0) || !(epsilon_lr_ > 0)) {
    throw ValidationError("budget split leaves an empty share");
  }
}

NoiseSpec calibrate(const PrivacyBudget& budget, double sensitivity) {
  if (!(sensitivity >= 0) || !std::isfinite(sensitivity)) {
    throw ValidationError("sensitivity must be finite and non-negative");
  }
  NoiseSpec spec;
  spec.sensitivity = sensitivity;
  // Extended precision keeps the result within half an ulp in practice.
  long double root = std::sqrt(2.0L * std::log(1.25L / budget.delta()));
  spec.gaussian_sigma = static_cast<double>(
      static_cast<long double>(sensitivity) * root / budget.epsilon_lr());
  spec.laplace_scale = 1.0 / budget.epsilon_e();
  return spec;
}

nlohmann::json to_json(const Provenance& p) {
  nlohmann::json j = {{"mechanism", p.mechanism},
                      {"seed", p.seed},
                      {"true_edge_count", p.true_edge_count},
                      {"noisy_edge_count", p.noisy_edge_count},
                      {"edge_count", p.edge_count},
                      {"clamped", p.clamped}};
  if (p.epsilon) j["epsilon"] = *p.epsilon;
  if (p.delta) j["delta"] = *p.delta;
  if (p.epsilon_e) j["epsilon_e"] = *p.epsilon_e;
  if (p.epsilon_lr) j["epsilon_lr"] = *p.epsilon_lr;
  if (p.rank) j["rank"] = *p.rank;
  if (p.noise) {
    j["sensitivity"] = p.noise->sensitivity;
    j["gaussian_sigma"] = p.noise->gaussian_sigma;
    j["laplace_scale"] = p.noise->laplace_scale;
  }
  return j;
}

Provenance provenance_from_json(const nlohmann::json& j) {
  Provenance p;
  p.mechanism = j.at("mechanism").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.true_edge_count = j.at("true_edge_count").get<std::int64_t>();
  p.noisy_edge_count = j.at("noisy_edge_count").get<std::int64_t>();
  p.edge_count = j.at("edge_count").get<std::int64_t>();
  p.clamped = j.at("clamped").get<bool>();
  if (j.contains("epsilon")) p.epsilon = j["epsilon"].get<double>();
  if (j.contains("delta")) p.delta = j["delta"].get<double>();
  if (j.contains("epsilon_e")) p.epsilon_e = j["epsilon_e"].get<double>();
  if (j.contains("epsilon_lr")) p.epsilon_lr = j["epsilon_lr"].get<double>();
  if (j.contains("rank")) p.rank = j["rank"].get<Index>();
  if (j.contains("gaussian_sigma")) {
    p.noise = NoiseSpec{j.at("sensitivity").get<double>(), j["gaussian_sigma"].get<double>(),
                        j.at("laplace_scale").get<double>()};
  }
  return p;
}

void write_perturbed(const PerturbedGraph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_edges(dir / "edges.tsv", graph.adjacency);
  std::ofstream out(dir / "provenance.json");
  if (!out) throw std::runtime_error((dir / "provenance.json").string() + ": cannot open");
  out << to_json(graph.provenance).dump(2) << '\n';
}

Adjacency binarize_top_k(const MatrixXd& scores, std::int64_t k) {
  if (scores.rows() != scores.cols()) throw DimensionError("scores must be square");
  const Index n = scores.rows();
  std::vector<Score> entries;
  entries.reserve(static_cast<std::size_t>(Adjacency::max_edges(n)));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      entries.push_back({scores(i, j), static_cast<std::int32_t>(i),
                         static_cast<std::int32_t>(j)});
    }
  }
  return top_k(n, std::move(entries), k);
}

NoisyEdgeCount clamp_edge_count(std::int64_t true_count, double noise, Index n) {
  const double max = static_cast<double>(Adjacency::max_edges(n));
  double noisy = std::floor(static_cast<double>(true_count) + noise);
  NoisyEdgeCount out;
  // Saturate before converting so huge draws stay well-defined.
  noisy = std::clamp(noisy, -9.0e18, 9.0e18);
  out.raw = static_cast<std::int64_t>(noisy);
  out.clamped = static_cast<std::int64_t>(std::clamp(noisy, 0.0, max));
  return out;
}

PerturbedGraph eclipse_perturb(const Adjacency& adjacency, Index r,
                               const PrivacyBudget& budget, std::uint64_t seed,
                               double sensitivity) {
  check_rank(r, adjacency.num_nodes());
  return eclipse_perturb(adjacency, svd_truncated(adjacency.dense(), r), r, budget,
                         seed, sensitivity);
}

PerturbedGraph eclipse_perturb(const Adjacency& adjacency,
                               const LowRankFactorization<double>& factorization,
                               Index r, const PrivacyBudget& budget,
                               std::uint64_t seed, double sensitivity) {
  const auto& f = checked_factorization(adjacency, factorization, r);
  const NoiseSpec noise = calibrate(budget, sensitivity);

  RandomStream count_rng(seed, "eclipse/edge-count");
  NoisyEdgeCount count = clamp_edge_count(
      adjacency.num_edges(), count_rng.laplace(noise.laplace_scale),
      adjacency.num_nodes());

  RandomStream value_rng(seed, "eclipse/singular-values");
  VectorXd s = f.s.head(r);
  for (Index i = 0; i < r; ++i) s(i) += value_rng.gaussian(noise.gaussian_sigma);

  PerturbedGraph out;
  out.adjacency = release_low_rank(f, r, s, count.clamped);
  out.edge_count = out.adjacency.num_edges();
  Provenance& p = out.provenance;
  p.mechanism = "eclipse";
  p.seed = seed;
  p.epsilon = budget.epsilon();
  p.delta = budget.delta();
  p.epsilon_e = budget.epsilon_e();
  p.epsilon_lr = budget.epsilon_lr();
  p.noise = noise;
  p.rank = r;
  p.true_edge_count = adjacency.num_edges();
  p.noisy_edge_count = count.raw;
  p.edge_count = out.edge_count;
  p.clamped = count.raw != count.clamped;
  return out;
}

PerturbedGraph low_rank_only(const Adjacency& adjacency, Index r) {
  check_rank(r, adjacency.num_nodes());
  return low_rank_only(adjacency, svd_truncated(adjacency.dense(), r), r);
}

PerturbedGraph low_rank_only(const Adjacency& adjacency,
                             const LowRankFactorization<double>& factorization,
                             Index r) {
  const auto& f = checked_factorization(adjacency, factorization, r);
  PerturbedGraph out;
  out.adjacency = release_low_rank(f, r, f.s.head(r), adjacency.num_edges());
  out.edge_count = out.adjacency.num_edges();
  Provenance& p = out.provenance;
  p.mechanism = "low-rank-only";
  p.rank = r;
  p.true_edge_count = adjacency.num_edges();
  p.noisy_edge_count = adjacency.num_edges();
  p.edge_count = out.edge_count;
  return out;
}

PerturbedGraph dpgcn_perturb(const Adjacency& adjacency, double epsilon,
                             std::uint64_t seed) {
  check_epsilon(epsilon);
  const Index n = adjacency.num_nodes();
  const double scale = 1.0 / epsilon;
  RandomStream rng(seed, "dpgcn/matrix");
  std::vector<Score> entries;
  entries.reserve(static_cast<std::size_t>(Adjacency::max_edges(n)));
  auto edge = adjacency.edges().begin();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double value = 0;
      if (edge != adjacency.edges().end() && edge->u == i && edge->v == j) {
        value = 1;
        ++edge;
      }
      entries.push_back({value + rng.laplace(scale), static_cast<std::int32_t>(i),
                         static_cast<std::int32_t>(j)});
    }
  }
  PerturbedGraph out;
  out.adjacency = top_k(n, std::move(entries), adjacency.num_edges());
  out.edge_count = out.adjacency.num_edges();
  Provenance& p = out.provenance;
  p.mechanism = "dpgcn";
  p.seed = seed;
  p.epsilon = epsilon;
  p.noise = NoiseSpec{1.0, 0.0, scale};
  p.true_edge_count = adjacency.num_edges();
  p.noisy_edge_count = adjacency.num_edges();
  p.edge_count = out.edge_count;
  return out;
}

MatrixXd degree_vector_perturb(const Adjacency& adjacency,
                               const std::vector<int>& assignment,
                               int num_clusters, double epsilon,
                               std::uint64_t seed, bool noiseless) {
  const Index n = adjacency.num_nodes();
  if (static_cast<Index>(assignment.size()) != n) {
    throw DimensionError("cluster assignment has " + std::to_string(assignment.size()) +
                         " entries for " + std::to_string(n) + " nodes");
  }
  if (num_clusters < 1) throw ValidationError("need at least one cluster");
  for (int c : assignment) {
    if (c < 0 || c >= num_clusters) {
      throw BoundsError("cluster id " + std::to_string(c) + " outside [0, " +
                        std::to_string(num_clusters) + ")");
    }
  }
  if (!noiseless) check_epsilon(epsilon);
  MatrixXd d = MatrixXd::Zero(n, num_clusters);
  for (const Edge& e : adjacency.edges()) {
    d(e.u, assignment[e.v]) += 1;
    d(e.v, assignment[e.u]) += 1;
  }
  if (noiseless) return d;
  RandomStream rng(seed, "degree-vector/noise");
  const double scale = 1.0 / epsilon;
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < num_clusters; ++c) d(i, c) += rng.laplace(scale);
  }
  return d;
}

double anchored_distance(const MatrixXd& a_prime,
                         const LowRankFactorization<double>& f) {
  return (project_singular(a_prime, f).diagonal() - f.s).norm();
}

SensitivityReport verify_sensitivity(const Adjacency& adjacency, Index r,
                                     Index trials, std::uint64_t seed,
                                     bool exhaustive) {
  if (!exhaustive && trials < 1) throw ValidationError("trials must be at least 1");
  check_rank(r, adjacency.num_nodes());
  const auto f = svd_truncated(adjacency.dense(), r);
  SensitivityReport report;
  for (const EdgeToggle& t : sample_toggles(adjacency, trials, seed, exhaustive)) {
    // Only the diagonal of the rank-two update moves the anchored values.
    const Index a = t.pair.u;
    const Index b = t.pair.v;
    VectorXd shift = f.U.row(a).transpose().cwiseProduct(f.Vt.col(b)) +
                     f.U.row(b).transpose().cwiseProduct(f.Vt.col(a));
    double distance = shift.norm();
    if (report.neighbors == 0 || distance > report.max_distance) {
      report.max_distance = distance;
      report.worst = t;
    }
    ++report.neighbors;
  }
  return report;
}

}  // namespace edgeveil
