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
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "edgeveil/attacks.h"
#include "edgeveil/graph.h"
#include "edgeveil/learning.h"
#include "edgeveil/privacy.h"

namespace edgeveil {

inline constexpr int kResultsSchemaVersion = 1;

enum class Mechanism { kEclipse, kLowRankOnly, kDpgcn, kDegreeVector, kNone, kMlp };

std::string_view to_string(Mechanism mechanism);
Mechanism parse_mechanism(std::string_view name);

// Whether a mechanism consumes the epsilon / rank grid axes.
bool uses_epsilon(Mechanism mechanism);
bool uses_rank(Mechanism mechanism);

enum class AttackKind { kLpa, kLinkTeller, kFeatureSimilarity };

std::string_view to_string(AttackKind attack);
AttackKind parse_attack_kind(std::string_view name);

// Thrown for malformed or inconsistent experiment configurations.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct AttackOptions {
  Index pairs_per_class = 500;  // transductive balanced sample
  Index inductive_nodes = 500;  // size of the attacked test subgraph
  Distance lpa_distance = Distance::kCosine;
  double linkteller_delta = 1e-4;
  Index degree_low = 3;
  Index degree_high = 4;
  bool operator==(const AttackOptions&) const = default;
};

struct ExperimentConfig {
  // Transductive graph, or the training graph in the inductive setting.
  std::filesystem::path dataset;
  // Inductive test graph. When absent the dataset is split into a training
  // graph (train and val nodes) and a test graph (test nodes).
  std::optional<std::filesystem::path> test_dataset;
  AttackSetting setting = AttackSetting::kTransductive;
  std::vector<Mechanism> mechanisms = {Mechanism::kEclipse};
  std::vector<double> epsilons = {1.0};
  double delta = 1e-5;
  double edge_share = 0.01;
  std::vector<Index> ranks = {20};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  TrainConfig train = {0.01, 5e-4, 500, 0.5, {16}, 0};
  NormalizationScheme normalization = NormalizationScheme::kAugNormAdjSelfLoop;
  bool normalize_features = true;
  std::optional<Metric> metric;  // absent: rare-class F1 for binary labels
  std::string grid_preset;       // "" or "search"
  std::vector<AttackKind> attacks = {AttackKind::kLpa, AttackKind::kLinkTeller};
  AttackOptions attack_options;
  std::filesystem::path output = "results";
  bool unperturbed_test = false;
  int workers = 1;
};

// Relative dataset and output paths are resolved against `base_dir`.
// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

// Throws ConfigError when the configuration cannot run.
void validate(const ExperimentConfig& config);

// Command-line values that replace the corresponding config entries.
struct ConfigOverrides {
  std::vector<double> epsilons;
  std::vector<Index> ranks;
  std::vector<std::string> mechanisms;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> setting;
  std::vector<std::string> attacks;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> test_dataset;
  std::optional<int> epochs;
  std::optional<int> workers;
  std::optional<std::string> grid_preset;
  bool unperturbed_test = false;
};

void apply_overrides(nlohmann::json& config, const ConfigOverrides& overrides);

// One (mechanism, epsilon, rank, seed) grid cell. Axes a mechanism ignores
// are absent.
struct CellSpec {
  Mechanism mechanism = Mechanism::kEclipse;
  std::optional<double> epsilon;
  std::optional<Index> rank;
  std::uint64_t seed = 0;
  bool operator==(const CellSpec&) const = default;
};

// Cells in mechanism, epsilon, rank, seed order. Ignored axes collapse to a
// single value and add a note to `warnings`.
std::vector<CellSpec> expand_grid(const ExperimentConfig& config,
                                  std::vector<std::string>* warnings = nullptr);

struct Utility {
  double micro_f1 = 0;
  std::optional<double> rare_class_f1;
  Index correct = 0;
  Index total = 0;
  bool operator==(const Utility&) const = default;
};

// Share of low- and high-degree nodes whose degree changed by at least 95%.
struct DegreeChangeSummary {
  double low_at_least_95 = 0;
  double high_at_least_95 = 0;
  bool operator==(const DegreeChangeSummary&) const = default;
};

struct Timings {
  double perturb_seconds = 0;
  double train_seconds = 0;
  double attack_seconds = 0;
  bool operator==(const Timings&) const = default;
};

struct ResultRecord {
  CellSpec cell;
  AttackSetting setting = AttackSetting::kTransductive;
  bool ok = true;
  std::string error;
  std::optional<Provenance> train_graph;  // perturbation of the training graph
  std::optional<Provenance> test_graph;   // inductive only
  std::optional<DegreeChangeSummary> degree_change;
  TrainConfig train_config;
  int best_epoch = 0;
  std::optional<Utility> train;
  std::optional<Utility> val;
  std::optional<Utility> test;
  double f1 = 0;  // the headline test metric
  std::vector<AttackReport> attacks;  // scores are not kept
  Timings timings;
  bool operator==(const ResultRecord&) const = default;

  const AttackReport* attack(std::string_view name) const;
};

// Equality of everything except wall-clock timings.
bool same_outcome(const ResultRecord& a, const ResultRecord& b);

// Means over seeds for one (mechanism, epsilon, rank) point.
struct SeedSummary {
  Mechanism mechanism = Mechanism::kEclipse;
  std::optional<double> epsilon;
  std::optional<Index> rank;
  Index num_seeds = 0;
  double mean_f1 = 0;
  std::map<std::string, double> mean_auc;
  std::map<std::string, double> mean_auc_low;
  std::map<std::string, double> mean_auc_high;
  bool operator==(const SeedSummary&) const = default;
};

std::vector<SeedSummary> summarize(const std::vector<ResultRecord>& records);

struct ExperimentResult {
  nlohmann::json config;
  std::vector<std::string> warnings;
  nlohmann::json selected_hyperparameters = nlohmann::json::object();
  std::vector<ResultRecord> records;
  std::vector<SeedSummary> summaries;

  bool any_failed() const;
};

using Logger = std::function<void(const std::string&)>;

// Runs every grid cell. A failing cell is recorded with ok = false and the
// sweep continues. Throws ConfigError for an invalid config and the loaders'
// errors for unreadable datasets.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const Logger& log = nullptr);

// Learning rate x width x depth x dropout grid searched on the unperturbed graph.
struct GridPoint {
  double learning_rate = 0;
  std::vector<Index> hidden;
  double dropout = 0;
};
std::vector<GridPoint> tuning_grid();

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const ResultRecord& record);
ResultRecord record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SeedSummary& summary);
SeedSummary summary_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentResult& result);
ExperimentResult result_from_json(const nlohmann::json& j);

// Columns of curves.csv for successful records.
std::vector<std::string> curve_columns();

// Writes results.json and curves.csv into `dir`. Throws std::runtime_error
// when the directory cannot be written.
void emit_results(const ExperimentResult& result, const std::filesystem::path& dir);
ExperimentResult read_results(const std::filesystem::path& results_json);

}  // namespace edgeveil
