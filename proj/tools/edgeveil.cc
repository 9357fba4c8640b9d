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

// edgeveil: command-line front end.
//
//   edgeveil run --config cfg.json [--epsilon E]... [--rank R]... [--out DIR]
//   edgeveil perturb --dataset DIR --mechanism eclipse --epsilon 1 --rank 20 --out DIR
//   edgeveil train --dataset DIR [--adjacency edges.tsv] --model gcn --out model.txt
//   edgeveil attack --model model.txt --dataset DIR --attack lpa
//   edgeveil check-assumption --dataset DIR --rank 20 --trials 100
//   edgeveil synth --out DIR
//
// Exit codes: 0 success, 1 configuration or input error, 2 some grid cells
// failed.
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "edgeveil/attacks.h"
#include "edgeveil/errors.h"
#include "edgeveil/graph.h"
#include "edgeveil/harness.h"
#include "edgeveil/learning.h"
#include "edgeveil/privacy.h"
#include "edgeveil/spectral.h"

namespace {

using namespace edgeveil;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

Graph load_dataset(const std::string& dir, bool normalize_features) {
  Graph g = load_graph(DatasetPaths::in_directory(dir));
  return normalize_features ? g.with_features(row_normalized(g.features())) : g;
}

struct RunArgs {
  std::string config;
  ConfigOverrides overrides;
};

int run(const RunArgs& args) {
  std::ifstream in(args.config);
  if (!in) throw ConfigError(args.config + ": cannot open config");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(args.config + ": " + e.what());
  }
  apply_overrides(j, args.overrides);
  ExperimentConfig config =
      parse_config(j, std::filesystem::path(args.config).parent_path());
  ExperimentResult result =
      run_experiment(config, [](const std::string& line) { std::cerr << line << '\n'; });
  emit_results(result, config.output);
  for (const SeedSummary& s : result.summaries) {
    std::cout << to_json(s).dump() << '\n';
  }
  std::cerr << "wrote " << (config.output / "results.json").string() << '\n';
  return result.any_failed() ? kExitPartial : kExitOk;
}

struct PerturbArgs {
  std::string dataset;
  std::string mechanism = "eclipse";
  double epsilon = 1;
  double delta = 1e-5;
  double edge_share = 0.01;
  Index rank = 20;
  std::uint64_t seed = 0;
  std::string out;
};

int perturb(const PerturbArgs& a) {
  Adjacency adj = load_dataset(a.dataset, false).adjacency();
  PerturbedGraph g;
  switch (parse_mechanism(a.mechanism)) {
    case Mechanism::kEclipse:
      g = eclipse_perturb(adj, a.rank, PrivacyBudget(a.epsilon, a.delta, a.edge_share), a.seed);
      break;
    case Mechanism::kLowRankOnly:
      g = low_rank_only(adj, a.rank);
      break;
    case Mechanism::kDpgcn:
      g = dpgcn_perturb(adj, a.epsilon, a.seed);
      break;
    default:
      throw ConfigError("perturb supports eclipse, low-rank-only and dpgcn");
  }
  write_perturbed(g, a.out);
  std::cout << to_json(g.provenance).dump(2) << '\n';
  return kExitOk;
}

struct TrainArgs {
  std::string dataset;
  std::string adjacency;
  std::string model = "gcn";
  TrainConfig config = {0.01, 5e-4, 500, 0.5, {16}, 0};
  std::string normalization = "aug-norm-adj-self-loop";
  bool raw_features = false;
  std::string out;
};

int train_model(const TrainArgs& a) {
  Graph g = load_dataset(a.dataset, !a.raw_features);
  Adjacency adj = a.adjacency.empty() ? g.adjacency() : read_edges(a.adjacency, g.num_nodes());
  GcnModel shape;
  shape.kind = parse_model_kind(a.model);
  shape.normalization = parse_normalization(a.normalization);
  ModelInputs inputs = prepare_inputs(shape, adj, g.features());
  TrainResult r = train(shape.kind, inputs, g.labels(), g.splits(), a.config, shape.normalization);
  save_model(r.model, a.out);
  nlohmann::json report = {{"best_epoch", r.best_epoch}, {"train_micro_f1", r.train.micro_f1}};
  if (r.val) report["val_micro_f1"] = r.val->micro_f1;
  if (r.test) report["test_micro_f1"] = r.test->micro_f1;
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

struct AttackArgs {
  std::string model;
  std::string dataset;
  std::string adjacency;
  std::string attack = "lpa";
  Index pairs = 500;
  std::uint64_t seed = 0;
  std::string distance = "cosine";
  double delta = 1e-4;
  Index degree_low = 3;
  Index degree_high = 4;
  bool raw_features = false;
};

int attack(const AttackArgs& a) {
  Graph g = load_dataset(a.dataset, !a.raw_features);
  GcnModel model = load_model(a.model);
  Adjacency query = a.adjacency.empty() ? g.adjacency() : read_edges(a.adjacency, g.num_nodes());
  ModelInputs inputs = prepare_inputs(model, query, g.features());
  AttackTask task = sample_balanced_task(g.adjacency(), a.pairs, a.seed);
  AttackReport report;
  switch (parse_attack_kind(a.attack)) {
    case AttackKind::kLpa:
      report = lpa_attack(model, inputs, task, parse_distance(a.distance));
      break;
    case AttackKind::kLinkTeller:
      report = linkteller_attack(model, inputs, task, a.delta);
      break;
    case AttackKind::kFeatureSimilarity:
      report = feature_similarity_attack(g.features(), task);
      break;
  }
  report.strata = stratified_auc(report, task, degree_stats(g.adjacency(), a.degree_low, a.degree_high));
  std::cout << to_json(report).dump(2) << '\n';
  return kExitOk;
}

struct AssumptionArgs {
  std::string dataset;
  Index rank = 20;
  AssumptionCheckOptions options;
};

int check_assumption(const AssumptionArgs& a) {
  Adjacency adj = load_dataset(a.dataset, false).adjacency();
  AssumptionReport r = assumption_check(adj, a.rank, a.options);
  const NeighborProjection& worst = r.neighbors.at(r.worst);
  nlohmann::json out = {{"rank", r.rank},
                        {"neighbors", r.neighbors.size()},
                        {"dominance_ratio", r.dominance_ratio},
                        {"worst_ratio", worst.ratio},
                        {"worst_pair", {worst.toggle.pair.u, worst.toggle.pair.v}},
                        {"worst_added", worst.toggle.added},
                        {"aligned", r.aligned}};
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

struct SynthArgs {
  PlantedPartitionOptions options;
  std::uint64_t seed = 0;
  std::string out;
};

int synth(const SynthArgs& a) {
  Graph g = generate_planted_partition(a.options, a.seed);
  save_graph(g, a.out);
  std::cout << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges to "
            << a.out << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-private graph release, GCN training and link-stealing attacks"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run_cmd = app.add_subcommand("run", "Run an experiment grid from a config file");
  run_cmd->add_option("--config", run_args.config, "Experiment config (JSON)")->required();
  ConfigOverrides& o = run_args.overrides;
  run_cmd->add_option("--epsilon", o.epsilons, "Privacy budgets (repeatable)");
  run_cmd->add_option("--rank", o.ranks, "Ranks (repeatable)");
  run_cmd->add_option("--mechanism", o.mechanisms, "Mechanisms (repeatable)");
  run_cmd->add_option("--seed", o.seeds, "Seeds (repeatable)");
  run_cmd->add_option("--setting", o.setting, "transductive or inductive");
  run_cmd->add_option("--attack", o.attacks, "Attacks (repeatable)");
  run_cmd->add_option("--out", o.output, "Output directory");
  run_cmd->add_option("--dataset", o.dataset, "Dataset directory");
  run_cmd->add_option("--test-dataset", o.test_dataset, "Inductive test dataset directory");
  run_cmd->add_option("--epochs", o.epochs, "Training epochs");
  run_cmd->add_option("--workers", o.workers, "Parallel grid cells");
  run_cmd->add_option("--grid-preset", o.grid_preset, "Hyperparameter preset (search)");
  run_cmd->add_flag("--unperturbed-test", o.unperturbed_test,
                    "Evaluate on the raw test graph (inductive only)");

  PerturbArgs perturb_args;
  CLI::App* perturb_cmd = app.add_subcommand("perturb", "Release a private adjacency");
  perturb_cmd->add_option("--dataset", perturb_args.dataset, "Dataset directory")->required();
  perturb_cmd->add_option("--mechanism", perturb_args.mechanism, "eclipse, low-rank-only or dpgcn");
  perturb_cmd->add_option("--epsilon", perturb_args.epsilon, "Privacy budget");
  perturb_cmd->add_option("--delta", perturb_args.delta, "Privacy slack");
  perturb_cmd->add_option("--edge-share", perturb_args.edge_share, "Budget share for the edge count");
  perturb_cmd->add_option("--rank", perturb_args.rank, "Rank");
  perturb_cmd->add_option("--seed", perturb_args.seed, "Seed");
  perturb_cmd->add_option("--out", perturb_args.out, "Output directory")->required();

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and save a checkpoint");
  train_cmd->add_option("--dataset", train_args.dataset, "Dataset directory")->required();
  train_cmd->add_option("--adjacency", train_args.adjacency, "Edge list to train on instead");
  train_cmd->add_option("--model", train_args.model, "gcn or mlp");
  train_cmd->add_option("--lr", train_args.config.learning_rate, "Learning rate");
  train_cmd->add_option("--weight-decay", train_args.config.weight_decay, "Weight decay");
  train_cmd->add_option("--epochs", train_args.config.epochs, "Epochs");
  train_cmd->add_option("--dropout", train_args.config.dropout, "Dropout rate");
  train_cmd->add_option("--hidden", train_args.config.hidden, "Hidden layer sizes");
  train_cmd->add_option("--seed", train_args.config.seed, "Seed");
  train_cmd->add_option("--normalization", train_args.normalization, "Adjacency normalization");
  train_cmd->add_flag("--raw-features", train_args.raw_features, "Skip row normalization");
  train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();

  AttackArgs attack_args;
  CLI::App* attack_cmd = app.add_subcommand("attack", "Attack a trained model");
  attack_cmd->add_option("--model", attack_args.model, "Checkpoint")->required();
  attack_cmd->add_option("--dataset", attack_args.dataset, "Dataset directory")->required();
  attack_cmd->add_option("--adjacency", attack_args.adjacency, "Edge list the model is queried with");
  attack_cmd->add_option("--attack", attack_args.attack, "lpa, linkteller or feature-similarity");
  attack_cmd->add_option("--pairs", attack_args.pairs, "Edges and non-edges sampled");
  attack_cmd->add_option("--seed", attack_args.seed, "Seed");
  attack_cmd->add_option("--distance", attack_args.distance, "LPA distance");
  attack_cmd->add_option("--delta", attack_args.delta, "LINKTELLER perturbation");
  attack_cmd->add_option("--degree-low", attack_args.degree_low, "Low-degree threshold");
  attack_cmd->add_option("--degree-high", attack_args.degree_high, "High-degree threshold");
  attack_cmd->add_flag("--raw-features", attack_args.raw_features, "Skip row normalization");

  AssumptionArgs assumption_args;
  CLI::App* assumption_cmd =
      app.add_subcommand("check-assumption", "Check singular-basis alignment of neighbours");
  assumption_cmd->add_option("--dataset", assumption_args.dataset, "Dataset directory")->required();
  assumption_cmd->add_option("--rank", assumption_args.rank, "Rank");
  assumption_cmd->add_option("--trials", assumption_args.options.trials, "Sampled neighbours");
  assumption_cmd->add_option("--seed", assumption_args.options.seed, "Seed");
  assumption_cmd->add_option("--ratio", assumption_args.options.dominance_ratio,
                             "Required diagonal dominance");
  assumption_cmd->add_flag("--exhaustive", assumption_args.options.exhaustive,
                           "Check every neighbour");

  SynthArgs synth_args;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a planted-partition dataset");
  synth_cmd->add_option("--nodes", synth_args.options.n, "Nodes");
  synth_cmd->add_option("--classes", synth_args.options.num_classes, "Classes");
  synth_cmd->add_option("--p-in", synth_args.options.p_in, "Within-class edge probability");
  synth_cmd->add_option("--p-out", synth_args.options.p_out, "Cross-class edge probability");
  synth_cmd->add_option("--features", synth_args.options.feature_dim, "Feature dimension");
  synth_cmd->add_option("--signal", synth_args.options.feature_signal, "Class mean separation");
  synth_cmd->add_option("--seed", synth_args.seed, "Seed");
  synth_cmd->add_option("--out", synth_args.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run_cmd) return run(run_args);
    if (*perturb_cmd) return perturb(perturb_args);
    if (*train_cmd) return train_model(train_args);
    if (*attack_cmd) return attack(attack_args);
    if (*assumption_cmd) return check_assumption(assumption_args);
    if (*synth_cmd) return synth(synth_args);
  } catch (const std::exception& e) {
    std::cerr << "edgeveil: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
