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
#include "edgeveil/attacks.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <set>
#include <unordered_map>

#include "edgeveil/errors.h"
#include "edgeveil/rng.h"

namespace edgeveil {
namespace {

AttackReport make_report(std::string attack, const AttackTask& task,
                         std::vector<double> scores) {
  AttackReport report;
  report.attack = std::move(attack);
  report.setting = task.setting;
  report.num_pairs = static_cast<Index>(task.pairs.size());
  report.num_positive = task.num_positive();
  std::vector<bool> truth;
  truth.reserve(task.pairs.size());
  for (const CandidatePair& p : task.pairs) truth.push_back(p.is_edge);
  report.auc = compute_auc(scores, truth);
  report.scores = std::move(scores);
  return report;
}

void check_pairs(const AttackTask& task, Index n) {
  for (const CandidatePair& p : task.pairs) {
    if (p.u < 0 || p.v < 0 || p.u >= n || p.v >= n) {
      throw BoundsError("pair (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                        ") outside a graph of " + std::to_string(n) + " nodes");
    }
  }
}

}  // namespace

std::string_view to_string(AttackSetting setting) {
  return setting == AttackSetting::kTransductive ? "transductive" : "inductive";
}

AttackSetting parse_attack_setting(std::string_view name) {
  if (name == "transductive") return AttackSetting::kTransductive;
  if (name == "inductive") return AttackSetting::kInductive;
  throw ValidationError("unknown setting '" + std::string(name) + "'");
}

std::string_view to_string(Distance distance) {
  switch (distance) {
    case Distance::kEuclidean:
      return "euclidean";
    case Distance::kCorrelation:
      return "correlation";
    case Distance::kCosine:
    default:
      return "cosine";
  }
}

Distance parse_distance(std::string_view name) {
  if (name == "cosine") return Distance::kCosine;
  if (name == "euclidean") return Distance::kEuclidean;
  if (name == "correlation") return Distance::kCorrelation;
  throw ValidationError("unknown distance '" + std::string(name) + "'");
}

Index AttackTask::num_positive() const {
  return std::count_if(pairs.begin(), pairs.end(),
                       [](const CandidatePair& p) { return p.is_edge; });
}

Index AttackTask::num_negative() const {
  return static_cast<Index>(pairs.size()) - num_positive();
}

AttackTask sample_balanced_task(const Adjacency& adjacency, Index per_class,
                                std::uint64_t seed) {
  const Index n = adjacency.num_nodes();
  const std::int64_t edges = adjacency.num_edges();
  const std::int64_t non_edges = Adjacency::max_edges(n) - edges;
  if (per_class < 1) throw ValidationError("need at least one pair per class");
  if (edges < per_class || non_edges < per_class) {
    throw ValidationError("graph has " + std::to_string(edges) + " edges and " +
                          std::to_string(non_edges) + " non-edges, need " +
                          std::to_string(per_class) + " of each");
  }
  AttackTask task;
  task.setting = AttackSetting::kTransductive;

  std::vector<Edge> pool = adjacency.edges();
  RandomStream edge_rng(seed, "attack/edges");
  edge_rng.shuffle(std::span<Edge>(pool));
  for (Index k = 0; k < per_class; ++k) task.pairs.push_back({pool[k].u, pool[k].v, true});

  RandomStream pair_rng(seed, "attack/non-edges");
  if (non_edges <= 4 * per_class) {
    // Dense graph: enumerate the few non-edges instead of rejecting.
    std::vector<Edge> candidates;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        if (!adjacency.has_edge(i, j)) candidates.push_back({i, j});
      }
    }
    pair_rng.shuffle(std::span<Edge>(candidates));
    for (Index k = 0; k < per_class; ++k) {
      task.pairs.push_back({candidates[k].u, candidates[k].v, false});
    }
    return task;
  }
  std::set<Edge> chosen;
  while (static_cast<Index>(chosen.size()) < per_class) {
    Index i = static_cast<Index>(pair_rng.below(static_cast<std::uint64_t>(n)));
    Index j = static_cast<Index>(pair_rng.below(static_cast<std::uint64_t>(n)));
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    if (adjacency.has_edge(i, j) || !chosen.insert({i, j}).second) continue;
    task.pairs.push_back({i, j, false});
  }
  return task;
}

AttackTask all_pairs_task(const Adjacency& subgraph, std::vector<Index> original_ids) {
  const Index n = subgraph.num_nodes();
  if (!original_ids.empty() && static_cast<Index>(original_ids.size()) != n) {
    throw DimensionError("original ids do not match the subgraph size");
  }
  AttackTask task;
  task.setting = AttackSetting::kInductive;
  task.original_ids = std::move(original_ids);
  task.pairs.reserve(static_cast<std::size_t>(Adjacency::max_edges(n)));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) task.pairs.push_back({i, j, subgraph.has_edge(i, j)});
  }
  return task;
}

nlohmann::json to_json(const AttackReport& report) {
  nlohmann::json strata = nlohmann::json::object();
  if (report.strata.low) strata["low"] = *report.strata.low;
  if (report.strata.high) strata["high"] = *report.strata.high;
  return {{"attack", report.attack},
          {"setting", to_string(report.setting)},
          {"auc", report.auc},
          {"strata", strata},
          {"n_pairs", report.num_pairs},
          {"n_positive", report.num_positive}};
}

AttackReport attack_report_from_json(const nlohmann::json& j) {
  AttackReport report;
  report.attack = j.at("attack").get<std::string>();
  report.setting = parse_attack_setting(j.at("setting").get<std::string>());
  report.auc = j.at("auc").get<double>();
  const nlohmann::json& strata = j.at("strata");
  if (strata.contains("low")) report.strata.low = strata["low"].get<double>();
  if (strata.contains("high")) report.strata.high = strata["high"].get<double>();
  report.num_pairs = j.at("n_pairs").get<Index>();
  report.num_positive = j.at("n_positive").get<Index>();
  return report;
}

double compute_auc(std::span<const double> scores, std::span<const bool> truth) {
  if (scores.size() != truth.size()) {
    throw DimensionError("scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double s : scores) {
    if (std::isnan(s)) throw ValidationError("AUC scores must not be NaN");
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
  std::uint64_t wins = 0;
  std::uint64_t ties = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      truth[order[end]] ? ++pos : ++neg;
      ++end;
    }
    wins += pos * negatives;
    ties += pos * neg;
    positives += pos;
    negatives += neg;
    start = end;
  }
  if (positives == 0 || negatives == 0) {
    throw ValidationError("AUC needs at least one positive and one negative");
  }
  return static_cast<double>(2 * wins + ties) /
         static_cast<double>(2 * positives * negatives);
}

double compute_auc(const std::vector<double>& scores, const std::vector<bool>& truth) {
  std::unique_ptr<bool[]> flags(new bool[truth.size()]);
  std::copy(truth.begin(), truth.end(), flags.get());
  return compute_auc(std::span<const double>(scores),
                     std::span<const bool>(flags.get(), truth.size()));
}

AttackReport lpa_attack(const MatrixXd& posteriors, const AttackTask& task,
                        Distance metric) {
  check_pairs(task, posteriors.rows());
  std::vector<double> scores;
  scores.reserve(task.pairs.size());
  for (const CandidatePair& p : task.pairs) {
    scores.push_back(-distance(posteriors.row(p.u), posteriors.row(p.v), metric));
  }
  return make_report("lpa", task, std::move(scores));
}

AttackReport lpa_attack(const GcnModel& model, const ModelInputs& inputs,
                        const AttackTask& task, Distance metric) {
  return lpa_attack(forward(model, inputs), task, metric);
}

MatrixXd influence_matrix(const GcnModel& model, const ModelInputs& inputs,
                          const std::vector<Index>& sources, double delta) {
  if (!(delta > 0)) throw ValidationError("perturbation magnitude must be positive");
  const MatrixXd base = forward(model, inputs);
  ModelInputs probe = inputs;
  probe.features.makeCompressed();
  double* values = probe.features.valuePtr();
  const auto* outer = probe.features.outerIndexPtr();
  MatrixXd influence(static_cast<Index>(sources.size()), base.rows());
  for (std::size_t k = 0; k < sources.size(); ++k) {
    const Index i = sources[k];
    if (i < 0 || i >= base.rows()) throw BoundsError("source node out of range");
    std::vector<double> saved(values + outer[i], values + outer[i + 1]);
    for (auto t = outer[i]; t < outer[i + 1]; ++t) values[t] *= 1 + delta;
    MatrixXd shifted = forward(model, probe);
    std::copy(saved.begin(), saved.end(), values + outer[i]);
    influence.row(static_cast<Index>(k)) =
        (shifted - base).cwiseAbs().rowwise().sum().transpose() / delta;
  }
  return influence;
}

AttackReport linkteller_attack(const GcnModel& model, const ModelInputs& inputs,
                               const AttackTask& task, double delta) {
  check_pairs(task, inputs.num_nodes());
  std::vector<Index> sources;
  for (const CandidatePair& p : task.pairs) {
    sources.push_back(p.u);
    sources.push_back(p.v);
  }
  std::sort(sources.begin(), sources.end());
  sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
  std::unordered_map<Index, Index> row;
  for (std::size_t k = 0; k < sources.size(); ++k) row[sources[k]] = static_cast<Index>(k);

  MatrixXd influence = influence_matrix(model, inputs, sources, delta);
  std::vector<double> scores;
  scores.reserve(task.pairs.size());
  for (const CandidatePair& p : task.pairs) {
    scores.push_back(influence(row[p.u], p.v) + influence(row[p.v], p.u));
  }
  return make_report("linkteller", task, std::move(scores));
}

AttackReport feature_similarity_attack(const MatrixXd& features, const AttackTask& task) {
  check_pairs(task, features.rows());
  VectorXd norms = features.rowwise().norm();
  std::vector<double> scores;
  scores.reserve(task.pairs.size());
  for (const CandidatePair& p : task.pairs) {
    double denom = norms(p.u) * norms(p.v);
    scores.push_back(denom > 0 ? features.row(p.u).dot(features.row(p.v)) / denom : 0.0);
  }
  return make_report("feature-similarity", task, std::move(scores));
}

StratumAuc stratified_auc(const AttackReport& report, const AttackTask& task,
                          const DegreeStats& stats) {
  if (report.scores.size() != task.pairs.size()) {
    throw DimensionError("report and task differ in length");
  }
  auto stratum = [&](auto member) -> std::optional<double> {
    std::vector<double> scores;
    std::vector<bool> truth;
    for (std::size_t k = 0; k < task.pairs.size(); ++k) {
      const CandidatePair& p = task.pairs[k];
      if (member(task.original_id(p.u)) && member(task.original_id(p.v))) {
        scores.push_back(report.scores[k]);
        truth.push_back(p.is_edge);
      }
    }
    bool has_pos = std::find(truth.begin(), truth.end(), true) != truth.end();
    bool has_neg = std::find(truth.begin(), truth.end(), false) != truth.end();
    if (!has_pos || !has_neg) return std::nullopt;
    return compute_auc(scores, truth);
  };
  StratumAuc out;
  out.low = stratum([&](Index node) { return stats.is_low(node); });
  out.high = stratum([&](Index node) { return stats.is_high(node); });
  return out;
}

double DegreeChangeHistogram::fraction_at_least(double threshold,
                                                const std::vector<Index>& nodes) const {
  if (nodes.empty()) return 0;
  Index hits = 0;
  for (Index node : nodes) hits += changes[node] >= threshold;
  return static_cast<double>(hits) / static_cast<double>(nodes.size());
}

DegreeChangeHistogram degree_change_histogram(const Adjacency& original,
                                              const Adjacency& perturbed, int bins,
                                              const DegreeStats& stats) {
  if (original.num_nodes() != perturbed.num_nodes()) {
    throw DimensionError("graphs differ in node count");
  }
  if (bins < 1) throw ValidationError("need at least one bin");
  const Index n = original.num_nodes();
  std::vector<Index> before = original.degrees();
  std::vector<Index> after = perturbed.degrees();
  DegreeChangeHistogram h;
  h.all.assign(bins, 0);
  h.low.assign(bins, 0);
  h.high.assign(bins, 0);
  for (int k = 0; k <= bins; ++k) h.bin_edges.push_back(static_cast<double>(k) / bins);
  for (Index i = 0; i < n; ++i) {
    double change = static_cast<double>(std::abs(before[i] - after[i])) /
                    static_cast<double>(std::max<Index>(before[i], 1));
    h.changes.push_back(change);
    if (change > 1) {
      ++h.overflow_all;
      h.overflow_low += stats.is_low(i);
      h.overflow_high += stats.is_high(i);
      continue;
    }
    int bin = std::min(bins - 1, static_cast<int>(change * bins));
    ++h.all[bin];
    h.low[bin] += stats.is_low(i);
    h.high[bin] += stats.is_high(i);
  }
  return h;
}

}  // namespace edgeveil
