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
#include "edgeveil/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "edgeveil/errors.h"
#include "edgeveil/format.h"
#include "edgeveil/rng.h"
#include "edgeveil/spectral.h"

namespace edgeveil {

// ---------------------------------------------------------------------------
// Names

std::string_view to_string(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kEclipse:
      return "eclipse";
    case Mechanism::kLowRankOnly:
      return "low-rank-only";
    case Mechanism::kDpgcn:
      return "dpgcn";
    case Mechanism::kDegreeVector:
      return "degree-vector";
    case Mechanism::kNone:
      return "none";
    case Mechanism::kMlp:
    default:
      return "mlp";
  }
}

Mechanism parse_mechanism(std::string_view name) {
  for (Mechanism m : {Mechanism::kEclipse, Mechanism::kLowRankOnly, Mechanism::kDpgcn,
                      Mechanism::kDegreeVector, Mechanism::kNone, Mechanism::kMlp}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown mechanism '" + std::string(name) + "'");
}

bool uses_epsilon(Mechanism mechanism) {
  return mechanism == Mechanism::kEclipse || mechanism == Mechanism::kDpgcn ||
         mechanism == Mechanism::kDegreeVector;
}

bool uses_rank(Mechanism mechanism) {
  return mechanism == Mechanism::kEclipse || mechanism == Mechanism::kLowRankOnly;
}

std::string_view to_string(AttackKind attack) {
  switch (attack) {
    case AttackKind::kLpa:
      return "lpa";
    case AttackKind::kLinkTeller:
      return "linkteller";
    case AttackKind::kFeatureSimilarity:
    default:
      return "feature-similarity";
  }
}

AttackKind parse_attack_kind(std::string_view name) {
  for (AttackKind a : {AttackKind::kLpa, AttackKind::kLinkTeller,
                       AttackKind::kFeatureSimilarity}) {
    if (name == to_string(a)) return a;
  }
  throw ConfigError("unknown attack '" + std::string(name) + "'");
}

namespace {

std::string_view metric_name(const std::optional<Metric>& metric) {
  if (!metric) return "auto";
  return *metric == Metric::kMicroF1 ? "micro-f1" : "rare-class-f1";
}

std::optional<Metric> parse_metric(std::string_view name) {
  if (name == "auto") return std::nullopt;
  if (name == "micro-f1") return Metric::kMicroF1;
  if (name == "rare-class-f1") return Metric::kRareClassF1;
  throw ConfigError("unknown metric '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Config parsing

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + where + key + "'");
  }
}

// A scalar or an array of scalars.
template <typename T>
std::vector<T> list_of(const nlohmann::json& value) {
  std::vector<T> out;
  if (value.is_array()) {
    for (const auto& item : value) out.push_back(item.get<T>());
  } else {
    out.push_back(value.get<T>());
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

template <typename F>
void with_key(const nlohmann::json& j, const char* key, const std::string& where, F&& f) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    f(j[key]);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid value for '" + where + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  check_keys(j,
             {"dataset", "test_dataset", "setting", "mechanisms", "epsilons", "delta",
              "edge_share", "ranks", "seeds", "model", "grid_preset", "attacks",
              "attack_options", "output", "unperturbed_test", "workers"},
             "");
  ExperimentConfig c;
  with_key(j, "dataset", "", [&](const auto& v) { c.dataset = resolve(base_dir, v.template get<std::string>()); });
  with_key(j, "test_dataset", "", [&](const auto& v) {
    c.test_dataset = resolve(base_dir, v.template get<std::string>());
  });
  with_key(j, "setting", "", [&](const auto& v) {
    try {
      c.setting = parse_attack_setting(v.template get<std::string>());
    } catch (const ConfigError&) {
      throw;
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  });
  with_key(j, "mechanisms", "", [&](const auto& v) {
    c.mechanisms.clear();
    for (const std::string& name : list_of<std::string>(v)) {
      c.mechanisms.push_back(parse_mechanism(name));
    }
  });
  with_key(j, "epsilons", "", [&](const auto& v) { c.epsilons = list_of<double>(v); });
  with_key(j, "delta", "", [&](const auto& v) { c.delta = v.template get<double>(); });
  with_key(j, "edge_share", "", [&](const auto& v) { c.edge_share = v.template get<double>(); });
  with_key(j, "ranks", "", [&](const auto& v) { c.ranks = list_of<Index>(v); });
  with_key(j, "seeds", "", [&](const auto& v) { c.seeds = list_of<std::uint64_t>(v); });
  with_key(j, "grid_preset", "", [&](const auto& v) { c.grid_preset = v.template get<std::string>(); });
  with_key(j, "attacks", "", [&](const auto& v) {
    c.attacks.clear();
    for (const std::string& name : list_of<std::string>(v)) {
      c.attacks.push_back(parse_attack_kind(name));
    }
  });
  with_key(j, "output", "", [&](const auto& v) { c.output = resolve(base_dir, v.template get<std::string>()); });
  with_key(j, "unperturbed_test", "", [&](const auto& v) { c.unperturbed_test = v.template get<bool>(); });
  with_key(j, "workers", "", [&](const auto& v) { c.workers = v.template get<int>(); });

  if (j.contains("model")) {
    const nlohmann::json& m = j["model"];
    check_keys(m,
               {"learning_rate", "weight_decay", "epochs", "dropout", "hidden",
                "normalization", "normalize_features", "metric"},
               "model.");
    const std::string w = "model.";
    with_key(m, "learning_rate", w, [&](const auto& v) { c.train.learning_rate = v.template get<double>(); });
    with_key(m, "weight_decay", w, [&](const auto& v) { c.train.weight_decay = v.template get<double>(); });
    with_key(m, "epochs", w, [&](const auto& v) { c.train.epochs = v.template get<int>(); });
    with_key(m, "dropout", w, [&](const auto& v) { c.train.dropout = v.template get<double>(); });
    with_key(m, "hidden", w, [&](const auto& v) { c.train.hidden = list_of<Index>(v); });
    with_key(m, "normalization", w, [&](const auto& v) {
      try {
        c.normalization = parse_normalization(v.template get<std::string>());
      } catch (const ValidationError& e) {
        throw ConfigError(e.what());
      }
    });
    with_key(m, "normalize_features", w, [&](const auto& v) { c.normalize_features = v.template get<bool>(); });
    with_key(m, "metric", w, [&](const auto& v) { c.metric = parse_metric(v.template get<std::string>()); });
  }
  if (j.contains("attack_options")) {
    const nlohmann::json& a = j["attack_options"];
    check_keys(a,
               {"pairs_per_class", "inductive_nodes", "lpa_distance", "linkteller_delta",
                "degree_low", "degree_high"},
               "attack_options.");
    const std::string w = "attack_options.";
    AttackOptions& o = c.attack_options;
    with_key(a, "pairs_per_class", w, [&](const auto& v) { o.pairs_per_class = v.template get<Index>(); });
    with_key(a, "inductive_nodes", w, [&](const auto& v) { o.inductive_nodes = v.template get<Index>(); });
    with_key(a, "lpa_distance", w, [&](const auto& v) {
      try {
        o.lpa_distance = parse_distance(v.template get<std::string>());
      } catch (const ValidationError& e) {
        throw ConfigError(e.what());
      }
    });
    with_key(a, "linkteller_delta", w, [&](const auto& v) { o.linkteller_delta = v.template get<double>(); });
    with_key(a, "degree_low", w, [&](const auto& v) { o.degree_low = v.template get<Index>(); });
    with_key(a, "degree_high", w, [&](const auto& v) { o.degree_high = v.template get<Index>(); });
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json mechanisms = nlohmann::json::array();
  for (Mechanism m : c.mechanisms) mechanisms.push_back(to_string(m));
  nlohmann::json attacks = nlohmann::json::array();
  for (AttackKind a : c.attacks) attacks.push_back(to_string(a));
  nlohmann::json j = {
      {"dataset", c.dataset.string()},
      {"test_dataset", c.test_dataset ? nlohmann::json(c.test_dataset->string()) : nlohmann::json()},
      {"setting", to_string(c.setting)},
      {"mechanisms", mechanisms},
      {"epsilons", c.epsilons},
      {"delta", c.delta},
      {"edge_share", c.edge_share},
      {"ranks", c.ranks},
      {"seeds", c.seeds},
      {"model",
       {{"learning_rate", c.train.learning_rate},
        {"weight_decay", c.train.weight_decay},
        {"epochs", c.train.epochs},
        {"dropout", c.train.dropout},
        {"hidden", c.train.hidden},
        {"normalization", to_string(c.normalization)},
        {"normalize_features", c.normalize_features},
        {"metric", metric_name(c.metric)}}},
      {"grid_preset", c.grid_preset},
      {"attacks", attacks},
      {"attack_options",
       {{"pairs_per_class", c.attack_options.pairs_per_class},
        {"inductive_nodes", c.attack_options.inductive_nodes},
        {"lpa_distance", to_string(c.attack_options.lpa_distance)},
        {"linkteller_delta", c.attack_options.linkteller_delta},
        {"degree_low", c.attack_options.degree_low},
        {"degree_high", c.attack_options.degree_high}}},
      {"output", c.output.string()},
      {"unperturbed_test", c.unperturbed_test},
      {"workers", c.workers}};
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.dataset.empty()) throw ConfigError("no dataset given");
  if (c.seeds.empty()) throw ConfigError("at least one seed is required");
  if (c.mechanisms.empty()) throw ConfigError("at least one mechanism is required");
  bool needs_epsilon = std::any_of(c.mechanisms.begin(), c.mechanisms.end(), uses_epsilon);
  bool needs_rank = std::any_of(c.mechanisms.begin(), c.mechanisms.end(), uses_rank);
  if (needs_epsilon) {
    if (c.epsilons.empty()) throw ConfigError("a DP mechanism needs at least one epsilon");
    for (double eps : c.epsilons) {
      if (!(eps > 0) || !std::isfinite(eps)) {
        throw ConfigError("epsilon must be positive and finite, got " + format_double(eps));
      }
    }
  }
  if (std::find(c.mechanisms.begin(), c.mechanisms.end(), Mechanism::kEclipse) !=
      c.mechanisms.end()) {
    try {
      PrivacyBudget(c.epsilons.front(), c.delta, c.edge_share);
    } catch (const ValidationError& e) {
      throw ConfigError(e.what());
    }
  }
  if (needs_rank) {
    if (c.ranks.empty()) throw ConfigError("a low-rank mechanism needs at least one rank");
    for (Index r : c.ranks) {
      if (r < 1) throw ConfigError("rank must be at least 1");
    }
  }
  const TrainConfig& t = c.train;
  if (!(t.learning_rate >= 0) || !std::isfinite(t.learning_rate)) {
    throw ConfigError("learning rate must be non-negative");
  }
  if (!(t.weight_decay >= 0)) throw ConfigError("weight decay must be non-negative");
  if (t.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (!(t.dropout >= 0 && t.dropout < 1)) throw ConfigError("dropout must be in [0, 1)");
  for (Index h : t.hidden) {
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  }
  if (c.grid_preset != "" && c.grid_preset != "search") {
    throw ConfigError("unknown grid preset '" + c.grid_preset + "'");
  }
  const AttackOptions& o = c.attack_options;
  if (o.pairs_per_class < 1) throw ConfigError("pairs_per_class must be positive");
  if (o.inductive_nodes < 2) throw ConfigError("inductive_nodes must be at least 2");
  if (!(o.linkteller_delta > 0)) throw ConfigError("linkteller_delta must be positive");
  if (o.degree_low >= o.degree_high) throw ConfigError("degree_low must be below degree_high");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  if (c.setting == AttackSetting::kTransductive) {
    if (c.unperturbed_test) throw ConfigError("unperturbed_test requires the inductive setting");
    if (c.test_dataset) throw ConfigError("test_dataset requires the inductive setting");
  }
}

void apply_overrides(nlohmann::json& j, const ConfigOverrides& o) {
  if (!o.epsilons.empty()) j["epsilons"] = o.epsilons;
  if (!o.ranks.empty()) j["ranks"] = o.ranks;
  if (!o.mechanisms.empty()) j["mechanisms"] = o.mechanisms;
  if (!o.seeds.empty()) j["seeds"] = o.seeds;
  if (o.setting) j["setting"] = *o.setting;
  if (!o.attacks.empty()) j["attacks"] = o.attacks;
  // Command-line paths are relative to the working directory.
  if (o.output) j["output"] = std::filesystem::absolute(*o.output).string();
  if (o.dataset) j["dataset"] = std::filesystem::absolute(*o.dataset).string();
  if (o.test_dataset) j["test_dataset"] = std::filesystem::absolute(*o.test_dataset).string();
  if (o.epochs) j["model"]["epochs"] = *o.epochs;
  if (o.workers) j["workers"] = *o.workers;
  if (o.grid_preset) j["grid_preset"] = *o.grid_preset;
  if (o.unperturbed_test) j["unperturbed_test"] = true;
}

// ---------------------------------------------------------------------------
// Grid

std::vector<CellSpec> expand_grid(const ExperimentConfig& c, std::vector<std::string>* warnings) {
  std::vector<CellSpec> cells;
  for (Mechanism m : c.mechanisms) {
    std::vector<std::optional<double>> eps = {std::nullopt};
    std::vector<std::optional<Index>> ranks = {std::nullopt};
    if (uses_epsilon(m)) {
      eps.assign(c.epsilons.begin(), c.epsilons.end());
    } else if (warnings && !c.epsilons.empty()) {
      warnings->push_back(std::string(to_string(m)) + " ignores epsilon; one run per seed");
    }
    if (uses_rank(m)) {
      ranks.assign(c.ranks.begin(), c.ranks.end());
    } else if (warnings && !c.ranks.empty() && m != Mechanism::kMlp && m != Mechanism::kNone) {
      warnings->push_back(std::string(to_string(m)) + " ignores rank");
    }
    for (const auto& e : eps) {
      for (const auto& r : ranks) {
        for (std::uint64_t seed : c.seeds) cells.push_back({m, e, r, seed});
      }
    }
  }
  return cells;
}

std::vector<GridPoint> tuning_grid() {
  std::vector<GridPoint> grid;
  for (double lr : {0.001, 0.005, 0.01, 0.05}) {
    for (Index size : {16, 64, 256}) {
      for (int layers : {2, 3}) {
        for (double dropout : {0.1, 0.3, 0.5, 0.8}) {
          grid.push_back({lr, std::vector<Index>(layers - 1, size), dropout});
        }
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Records

const AttackReport* ResultRecord::attack(std::string_view name) const {
  for (const AttackReport& a : attacks) {
    if (a.attack == name) return &a;
  }
  return nullptr;
}

bool same_outcome(const ResultRecord& a, const ResultRecord& b) {
  ResultRecord x = a;
  x.timings = b.timings;
  return x == b;
}

bool ExperimentResult::any_failed() const {
  return std::any_of(records.begin(), records.end(),
                     [](const ResultRecord& r) { return !r.ok; });
}

std::vector<SeedSummary> summarize(const std::vector<ResultRecord>& records) {
  std::vector<SeedSummary> out;
  std::vector<std::map<std::string, Index>> low_counts;
  std::vector<std::map<std::string, Index>> high_counts;
  for (const ResultRecord& r : records) {
    if (!r.ok) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const SeedSummary& s) {
      return s.mechanism == r.cell.mechanism && s.epsilon == r.cell.epsilon &&
             s.rank == r.cell.rank;
    });
    if (it == out.end()) {
      out.push_back({r.cell.mechanism, r.cell.epsilon, r.cell.rank, 0, 0, {}, {}, {}});
      low_counts.emplace_back();
      high_counts.emplace_back();
      it = out.end() - 1;
    }
    const std::size_t k = static_cast<std::size_t>(it - out.begin());
    ++it->num_seeds;
    it->mean_f1 += r.f1;
    for (const AttackReport& a : r.attacks) {
      it->mean_auc[a.attack] += a.auc;
      if (a.strata.low) {
        it->mean_auc_low[a.attack] += *a.strata.low;
        ++low_counts[k][a.attack];
      }
      if (a.strata.high) {
        it->mean_auc_high[a.attack] += *a.strata.high;
        ++high_counts[k][a.attack];
      }
    }
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    SeedSummary& s = out[k];
    const double n = static_cast<double>(s.num_seeds);
    s.mean_f1 /= n;
    for (auto& [name, v] : s.mean_auc) v /= n;
    for (auto& [name, v] : s.mean_auc_low) v /= static_cast<double>(low_counts[k][name]);
    for (auto& [name, v] : s.mean_auc_high) v /= static_cast<double>(high_counts[k][name]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Running

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Utility to_utility(const EvalReport& e) {
  return {e.micro_f1, e.rare_class_f1, e.correct, e.total};
}

double headline(const Utility& u, Metric metric) {
  return metric == Metric::kRareClassF1 && u.rare_class_f1 ? *u.rare_class_f1 : u.micro_f1;
}

ModelKind kind_of(Mechanism m) {
  return m == Mechanism::kMlp || m == Mechanism::kDegreeVector ? ModelKind::kMlp
                                                               : ModelKind::kGcn;
}

ModelInputs make_inputs(ModelKind kind, NormalizationScheme scheme, const Adjacency& adj,
                        const MatrixXd& features) {
  GcnModel shape;
  shape.kind = kind;
  shape.normalization = scheme;
  return prepare_inputs(shape, adj, features);
}

Adjacency induced_adjacency(const Adjacency& adj, const std::vector<Index>& nodes) {
  std::vector<Index> position(static_cast<std::size_t>(adj.num_nodes()), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) position[nodes[k]] = static_cast<Index>(k);
  std::vector<Edge> edges;
  for (const Edge& e : adj.edges()) {
    if (position[e.u] >= 0 && position[e.v] >= 0) {
      edges.push_back({position[e.u], position[e.v]});
    }
  }
  return Adjacency(static_cast<Index>(nodes.size()), std::move(edges));
}

std::vector<Index> all_nodes(Index n) {
  std::vector<Index> nodes(static_cast<std::size_t>(n));
  std::iota(nodes.begin(), nodes.end(), Index{0});
  return nodes;
}

// Read-only state shared by every cell.
struct Workspace {
  const ExperimentConfig& config;
  Graph graph;                 // transductive graph or inductive training graph
  std::optional<Graph> test;   // inductive test graph
  DegreeStats stats;           // degrees of the graph whose edges are attacked
  std::optional<LowRankFactorization<double>> train_factors;
  std::optional<LowRankFactorization<double>> test_factors;
  Metric metric = Metric::kMicroF1;
  TrainConfig gcn_train;
  TrainConfig mlp_train;
};

struct Release {
  Adjacency adjacency;
  std::optional<Provenance> provenance;
};

Release release(const Workspace& ws, const CellSpec& cell, const Adjacency& adj,
                const std::optional<LowRankFactorization<double>>& factors,
                std::uint64_t seed) {
  const ExperimentConfig& c = ws.config;
  switch (cell.mechanism) {
    case Mechanism::kEclipse: {
      PerturbedGraph g = eclipse_perturb(adj, *factors, *cell.rank,
                                         PrivacyBudget(*cell.epsilon, c.delta, c.edge_share),
                                         seed);
      return {std::move(g.adjacency), std::move(g.provenance)};
    }
    case Mechanism::kLowRankOnly: {
      PerturbedGraph g = low_rank_only(adj, *factors, *cell.rank);
      g.provenance.seed = seed;
      return {std::move(g.adjacency), std::move(g.provenance)};
    }
    case Mechanism::kDpgcn: {
      PerturbedGraph g = dpgcn_perturb(adj, *cell.epsilon, seed);
      return {std::move(g.adjacency), std::move(g.provenance)};
    }
    default:
      return {adj, std::nullopt};
  }
}

// Cluster ids for the degree-vector baseline: labels predicted by a
// feature-only model.
std::vector<int> predicted_clusters(const GcnModel& mlp, const MatrixXd& features) {
  MatrixXd probs = forward(mlp, make_inputs(ModelKind::kMlp, mlp.normalization,
                                            Adjacency(features.rows(), {}), features));
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Index i = 0; i < probs.rows(); ++i) {
    Index best = 0;
    probs.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

MatrixXd with_degree_vectors(const MatrixXd& features, const MatrixXd& degree_vectors) {
  MatrixXd out(features.rows(), features.cols() + degree_vectors.cols());
  out << features, row_normalized(degree_vectors);
  return out;
}

struct AttackTarget {
  const ModelInputs& inputs;
  const MatrixXd& raw_features;
  const AttackTask& task;
};

std::vector<AttackReport> run_attacks(const Workspace& ws, const GcnModel& model,
                                      const AttackTarget& target) {
  std::vector<AttackReport> out;
  for (AttackKind kind : ws.config.attacks) {
    AttackReport report;
    switch (kind) {
      case AttackKind::kLpa:
        report = lpa_attack(model, target.inputs, target.task,
                            ws.config.attack_options.lpa_distance);
        break;
      case AttackKind::kLinkTeller:
        report = linkteller_attack(model, target.inputs, target.task,
                                   ws.config.attack_options.linkteller_delta);
        break;
      case AttackKind::kFeatureSimilarity:
        report = feature_similarity_attack(target.raw_features, target.task);
        break;
    }
    report.strata = stratified_auc(report, target.task, ws.stats);
    report.scores.clear();
    out.push_back(std::move(report));
  }
  return out;
}

void fill_utility(ResultRecord& record, const TrainResult& tr, Metric metric) {
  record.best_epoch = tr.best_epoch;
  record.train = to_utility(tr.train);
  if (tr.val) record.val = to_utility(*tr.val);
  if (tr.test) record.test = to_utility(*tr.test);
  if (record.test) record.f1 = headline(*record.test, metric);
}

void run_transductive(const Workspace& ws, const CellSpec& cell, ResultRecord& record) {
  const ExperimentConfig& c = ws.config;
  const Graph& g = ws.graph;
  const ModelKind kind = kind_of(cell.mechanism);

  auto start = Clock::now();
  Release rel = release(ws, cell, g.adjacency(), ws.train_factors, cell.seed);
  MatrixXd features = g.features();
  if (cell.mechanism == Mechanism::kDegreeVector) {
    TrainConfig tc = ws.mlp_train;
    tc.seed = derive_seed(cell.seed, "degree-vector/clusters");
    ModelInputs x = make_inputs(ModelKind::kMlp, c.normalization, g.adjacency(), features);
    GcnModel clusterer = train(ModelKind::kMlp, x, g.labels(), g.splits(), tc,
                               c.normalization, ws.metric).model;
    MatrixXd dv = degree_vector_perturb(g.adjacency(), predicted_clusters(clusterer, features),
                                        g.num_classes(), *cell.epsilon, cell.seed);
    features = with_degree_vectors(features, dv);
  }
  record.train_graph = rel.provenance;
  if (rel.provenance) {
    DegreeChangeHistogram h = degree_change_histogram(g.adjacency(), rel.adjacency, 20, ws.stats);
    record.degree_change = DegreeChangeSummary{h.fraction_at_least(0.95, ws.stats.low_nodes),
                                               h.fraction_at_least(0.95, ws.stats.high_nodes)};
  }
  record.timings.perturb_seconds = seconds_since(start);

  start = Clock::now();
  ModelInputs inputs = make_inputs(kind, c.normalization, rel.adjacency, features);
  TrainConfig tc = kind == ModelKind::kGcn ? ws.gcn_train : ws.mlp_train;
  tc.seed = derive_seed(cell.seed, "train");
  record.train_config = tc;
  TrainResult tr = train(kind, inputs, g.labels(), g.splits(), tc, c.normalization, ws.metric);
  fill_utility(record, tr, ws.metric);
  record.timings.train_seconds = seconds_since(start);

  start = Clock::now();
  if (!c.attacks.empty()) {
    AttackTask task = sample_balanced_task(g.adjacency(), c.attack_options.pairs_per_class,
                                           derive_seed(cell.seed, "attack/task"));
    record.attacks = run_attacks(ws, tr.model, {inputs, g.features(), task});
  }
  record.timings.attack_seconds = seconds_since(start);
}

void run_inductive(const Workspace& ws, const CellSpec& cell, ResultRecord& record) {
  const ExperimentConfig& c = ws.config;
  const Graph& g = ws.graph;
  const Graph& t = *ws.test;
  const ModelKind kind = kind_of(cell.mechanism);

  auto start = Clock::now();
  Release train_rel =
      release(ws, cell, g.adjacency(), ws.train_factors, derive_seed(cell.seed, "inductive/train"));
  Release test_rel = c.unperturbed_test
                         ? Release{t.adjacency(), std::nullopt}
                         : release(ws, cell, t.adjacency(), ws.test_factors,
                                   derive_seed(cell.seed, "inductive/test"));
  MatrixXd train_features = g.features();
  MatrixXd test_features = t.features();
  if (cell.mechanism == Mechanism::kDegreeVector) {
    TrainConfig tc = ws.mlp_train;
    tc.seed = derive_seed(cell.seed, "degree-vector/clusters");
    ModelInputs x = make_inputs(ModelKind::kMlp, c.normalization, g.adjacency(), train_features);
    GcnModel clusterer = train(ModelKind::kMlp, x, g.labels(), g.splits(), tc,
                               c.normalization, ws.metric).model;
    MatrixXd dv_train = degree_vector_perturb(
        g.adjacency(), predicted_clusters(clusterer, train_features), g.num_classes(),
        *cell.epsilon, derive_seed(cell.seed, "inductive/train"));
    MatrixXd dv_test = degree_vector_perturb(
        t.adjacency(), predicted_clusters(clusterer, test_features), g.num_classes(),
        *cell.epsilon, derive_seed(cell.seed, "inductive/test"), c.unperturbed_test);
    train_features = with_degree_vectors(train_features, dv_train);
    test_features = with_degree_vectors(test_features, dv_test);
  }
  record.train_graph = train_rel.provenance;
  record.test_graph = test_rel.provenance;
  if (test_rel.provenance) {
    DegreeChangeHistogram h = degree_change_histogram(t.adjacency(), test_rel.adjacency, 20, ws.stats);
    record.degree_change = DegreeChangeSummary{h.fraction_at_least(0.95, ws.stats.low_nodes),
                                               h.fraction_at_least(0.95, ws.stats.high_nodes)};
  }
  record.timings.perturb_seconds = seconds_since(start);

  start = Clock::now();
  ModelInputs inputs = make_inputs(kind, c.normalization, train_rel.adjacency, train_features);
  TrainConfig tc = kind == ModelKind::kGcn ? ws.gcn_train : ws.mlp_train;
  tc.seed = derive_seed(cell.seed, "train");
  record.train_config = tc;
  TrainResult tr = train(kind, inputs, g.labels(), g.splits(), tc, c.normalization, ws.metric);
  fill_utility(record, tr, ws.metric);
  ModelInputs test_inputs = make_inputs(kind, c.normalization, test_rel.adjacency, test_features);
  record.test = to_utility(
      evaluate(tr.model, test_inputs, t.labels(), all_nodes(t.num_nodes()), ws.metric));
  record.f1 = headline(*record.test, ws.metric);
  record.timings.train_seconds = seconds_since(start);

  start = Clock::now();
  if (!c.attacks.empty()) {
    std::vector<Index> nodes = all_nodes(t.num_nodes());
    RandomStream rng(cell.seed, "attack/nodes");
    rng.shuffle(std::span<Index>(nodes));
    nodes.resize(static_cast<std::size_t>(
        std::min<Index>(c.attack_options.inductive_nodes, t.num_nodes())));
    std::sort(nodes.begin(), nodes.end());
    MatrixXd sub_features(static_cast<Index>(nodes.size()), test_features.cols());
    MatrixXd sub_raw(static_cast<Index>(nodes.size()), t.features().cols());
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      sub_features.row(static_cast<Index>(k)) = test_features.row(nodes[k]);
      sub_raw.row(static_cast<Index>(k)) = t.features().row(nodes[k]);
    }
    ModelInputs sub_inputs = make_inputs(kind, c.normalization,
                                         induced_adjacency(test_rel.adjacency, nodes), sub_features);
    AttackTask task = all_pairs_task(induced_adjacency(t.adjacency(), nodes), nodes);
    record.attacks = run_attacks(ws, tr.model, {sub_inputs, sub_raw, task});
  }
  record.timings.attack_seconds = seconds_since(start);
}

Graph prepare_graph(Graph g, bool normalize_features) {
  return normalize_features ? g.with_features(row_normalized(g.features())) : g;
}

// Best tuning-grid point for `kind` on the unperturbed training graph, by
// validation score (training score without validation nodes).
TrainConfig grid_search(const Workspace& ws, ModelKind kind, nlohmann::json& selected) {
  const ExperimentConfig& c = ws.config;
  const Graph& g = ws.graph;
  ModelInputs inputs = make_inputs(kind, c.normalization, g.adjacency(), g.features());
  TrainConfig best = kind == ModelKind::kGcn ? ws.gcn_train : ws.mlp_train;
  double best_score = -1;
  for (const GridPoint& p : tuning_grid()) {
    TrainConfig tc = c.train;
    tc.learning_rate = p.learning_rate;
    tc.hidden = p.hidden;
    tc.dropout = p.dropout;
    tc.seed = derive_seed(c.seeds.front(), "grid-search");
    TrainResult tr = train(kind, inputs, g.labels(), g.splits(), tc, c.normalization, ws.metric);
    double score = headline(to_utility(tr.val ? *tr.val : tr.train), ws.metric);
    if (score > best_score) {
      best_score = score;
      best = tc;
    }
  }
  selected[std::string(to_string(kind))] = {{"learning_rate", best.learning_rate},
                                            {"hidden", best.hidden},
                                            {"dropout", best.dropout},
                                            {"score", best_score}};
  return best;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const Logger& log) {
  validate(config);
  auto say = [&](const std::string& line) {
    if (log) log(line);
  };
  ExperimentResult result;
  result.config = to_json(config);
  std::vector<CellSpec> cells = expand_grid(config, &result.warnings);
  for (const std::string& w : result.warnings) say("warning: " + w);

  Graph full = prepare_graph(load_graph(DatasetPaths::in_directory(config.dataset)),
                             config.normalize_features);
  std::optional<Graph> test;
  Graph train_graph = full;
  if (config.setting == AttackSetting::kInductive) {
    if (config.test_dataset) {
      test = prepare_graph(load_graph(DatasetPaths::in_directory(*config.test_dataset)),
                           config.normalize_features);
    } else {
      const Splits& s = full.splits();
      if (s.test.empty()) throw ConfigError("inductive split needs test nodes in the dataset");
      std::vector<Index> train_nodes = s.train;
      train_nodes.insert(train_nodes.end(), s.val.begin(), s.val.end());
      std::sort(train_nodes.begin(), train_nodes.end());
      std::vector<Index> test_nodes = s.test;
      std::sort(test_nodes.begin(), test_nodes.end());
      train_graph = induced_subgraph(full, train_nodes);
      test = induced_subgraph(full, test_nodes);
    }
  }
  const Graph& attacked = test ? *test : train_graph;
  Workspace ws{config,
               train_graph,
               test,
               degree_stats(attacked.adjacency(), config.attack_options.degree_low,
                            config.attack_options.degree_high),
               std::nullopt,
               std::nullopt,
               config.metric.value_or(train_graph.num_classes() == 2 ? Metric::kRareClassF1
                                                                     : Metric::kMicroF1),
               config.train,
               config.train};

  Index max_rank = 0;
  for (const CellSpec& cell : cells) {
    if (cell.rank) max_rank = std::max(max_rank, *cell.rank);
  }
  if (max_rank > 0) {
    auto factor = [&](const Graph& g, const char* what) {
      Index r = std::min(max_rank, g.num_nodes());
      say(std::string("factorizing ") + what + " graph (n = " + std::to_string(g.num_nodes()) +
          ", rank " + std::to_string(r) + ")");
      return svd_truncated(g.adjacency().dense(), r);
    };
    ws.train_factors = factor(train_graph, "training");
    if (test && !config.unperturbed_test) ws.test_factors = factor(*test, "test");
  }

  if (config.grid_preset == "search") {
    bool need_gcn = false;
    bool need_mlp = false;
    for (Mechanism m : config.mechanisms) {
      (kind_of(m) == ModelKind::kGcn ? need_gcn : need_mlp) = true;
    }
    if (need_gcn) {
      say("grid search for gcn");
      ws.gcn_train = grid_search(ws, ModelKind::kGcn, result.selected_hyperparameters);
    }
    if (need_mlp) {
      say("grid search for mlp");
      ws.mlp_train = grid_search(ws, ModelKind::kMlp, result.selected_hyperparameters);
    }
  }

  result.records.resize(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t k = next++; k < cells.size(); k = next++) {
      const CellSpec& cell = cells[k];
      ResultRecord& record = result.records[k];
      record.cell = cell;
      record.setting = config.setting;
      try {
        if (config.setting == AttackSetting::kTransductive) {
          run_transductive(ws, cell, record);
        } else {
          run_inductive(ws, cell, record);
        }
      } catch (const std::exception& e) {
        record.ok = false;
        record.error = e.what();
      }
      std::ostringstream line;
      line << "[" << k + 1 << "/" << cells.size() << "] " << to_string(cell.mechanism);
      if (cell.epsilon) line << " eps=" << format_double(*cell.epsilon);
      if (cell.rank) line << " rank=" << *cell.rank;
      line << " seed=" << cell.seed;
      if (record.ok) {
        line << " f1=" << format_double(record.f1);
        for (const AttackReport& a : record.attacks) {
          line << " " << a.attack << "=" << format_double(a.auc);
        }
      } else {
        line << " FAILED: " << record.error;
      }
      std::lock_guard<std::mutex> lock(log_mutex);
      say(line.str());
    }
  };
  const int threads = std::min<int>(config.workers, static_cast<int>(cells.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  result.summaries = summarize(result.records);
  return result;
}

}  // namespace edgeveil
