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
#include "edgeveil/learning.h"

#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "edgeveil/errors.h"
#include "test_util.h"

namespace edgeveil {
namespace {

NormalizedAdjacency identity_propagation(Index n) {
  SparseMatrixXd eye(n, n);
  eye.setIdentity();
  return {eye, NormalizationScheme::kAugNormAdj};
}

// Dense reference forward pass written straight from the layer definition.
MatrixXd oracle_forward(const GcnModel& model, const MatrixXd& a_hat, const MatrixXd& x) {
  MatrixXd h = x;
  for (Index l = 0; l < model.num_layers(); ++l) {
    MatrixXd z = model.kind == ModelKind::kGcn ? MatrixXd(a_hat * h * model.weights[l])
                                               : MatrixXd(h * model.weights[l]);
    if (l + 1 < model.num_layers()) {
      h = z.cwiseMax(0.0);
      continue;
    }
    for (Index i = 0; i < z.rows(); ++i) {
      Eigen::RowVectorXd e = z.row(i).array().exp();
      z.row(i) = e / e.sum();
    }
    return z;
  }
  return h;
}

MatrixXd random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
  return m;
}

Adjacency path_graph(Index n) {
  std::vector<Edge> edges;
  for (Index i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return Adjacency(n, std::move(edges));
}

std::vector<Index> all_nodes(Index n) {
  std::vector<Index> nodes(n);
  std::iota(nodes.begin(), nodes.end(), Index{0});
  return nodes;
}

TEST(ForwardTest, IdentityAggregationSingleLayer) {
  GcnModel model = GcnModel::init(ModelKind::kGcn, {3, 3}, 0, NormalizationScheme::kAugNormAdj, 0);
  model.weights[0] = MatrixXd::Identity(3, 3);
  MatrixXd x = MatrixXd::Identity(3, 3);
  MatrixXd p = gcn_forward(model, identity_propagation(3), x);
  const double e = std::exp(1.0);
  for (Index i = 0; i < 3; ++i) {
    for (Index c = 0; c < 3; ++c) {
      EXPECT_NEAR(p(i, c), (i == c ? e : 1.0) / (e + 2), 1e-15);
    }
  }
}

TEST(ForwardTest, ZeroWeightsGiveUniform) {
  GcnModel model = GcnModel::init(ModelKind::kGcn, {4, 5, 3}, 0, NormalizationScheme::kAugNormAdj, 0);
  for (auto& w : model.weights) w.setZero();
  MatrixXd x = random_matrix(6, 4, 1);
  Adjacency adj = testing::random_adjacency(6, 0.5, 1);
  MatrixXd p = forward(model, prepare_inputs(model, adj, x));
  EXPECT_LE((p.array() - 1.0 / 3).abs().maxCoeff(), 1e-15);
}

TEST(ForwardTest, PathGraphMatchesDenseOracle) {
  Adjacency path = path_graph(5);
  MatrixXd a = path.dense();
  // (D+I)^-1/2 (A+I) (D+I)^-1/2 built by hand.
  VectorXd d = a.rowwise().sum().array() + 1.0;
  MatrixXd a_hat = d.cwiseInverse().cwiseSqrt().asDiagonal() *
                   (a + MatrixXd::Identity(5, 5)) *
                   d.cwiseInverse().cwiseSqrt().asDiagonal();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto sizes : {std::vector<Index>{4, 6, 3}, std::vector<Index>{4, 5, 6, 2}}) {
      GcnModel model = GcnModel::init(ModelKind::kGcn, sizes, 0.5,
                                      NormalizationScheme::kAugNormAdjSelfLoop, seed);
      MatrixXd x = random_matrix(5, 4, 10 + seed);
      MatrixXd p = forward(model, prepare_inputs(model, path, x));
      EXPECT_LE((p - oracle_forward(model, a_hat, x)).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_LE((p.rowwise().sum().array() - 1).abs().maxCoeff(), 1e-9);
    }
  }
}

TEST(ForwardTest, MlpMatchesOracleAndIdentityGcn) {
  GcnModel model = GcnModel::init(ModelKind::kMlp, {4, 7, 3}, 0, NormalizationScheme::kAugNormAdj, 3);
  MatrixXd x = random_matrix(9, 4, 3);
  MatrixXd p = mlp_forward(model, x);
  EXPECT_LE((p - oracle_forward(model, MatrixXd(), x)).cwiseAbs().maxCoeff(), 1e-10);
  GcnModel as_gcn = model;
  as_gcn.kind = ModelKind::kGcn;
  EXPECT_EQ(gcn_forward(as_gcn, identity_propagation(9), x), p);
}

TEST(ForwardTest, PermutationEquivariant) {
  Adjacency adj = testing::random_adjacency(12, 0.3, 4);
  MatrixXd x = random_matrix(12, 5, 4);
  std::vector<Index> perm = all_nodes(12);
  std::mt19937 gen(4);
  std::shuffle(perm.begin(), perm.end(), gen);
  std::vector<Edge> permuted_edges;
  for (const Edge& e : adj.edges()) permuted_edges.push_back({perm[e.u], perm[e.v]});
  Adjacency permuted(12, permuted_edges);
  MatrixXd x_perm(12, 5);
  for (Index i = 0; i < 12; ++i) x_perm.row(perm[i]) = x.row(i);

  for (ModelKind kind : {ModelKind::kGcn, ModelKind::kMlp}) {
    GcnModel model = GcnModel::init(kind, {5, 8, 3}, 0, NormalizationScheme::kFirstOrderGcn, 9);
    MatrixXd p = forward(model, prepare_inputs(model, adj, x));
    MatrixXd q = forward(model, prepare_inputs(model, permuted, x_perm));
    for (Index i = 0; i < 12; ++i) {
      EXPECT_LE((p.row(i) - q.row(perm[i])).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ForwardTest, DropoutIsSeededAndOffAtEval) {
  Adjacency adj = testing::random_adjacency(10, 0.3, 2);
  MatrixXd x = random_matrix(10, 4, 2);
  GcnModel model = GcnModel::init(ModelKind::kGcn, {4, 16, 3}, 0.5,
                                  NormalizationScheme::kAugNormAdjSelfLoop, 1);
  ModelInputs in = prepare_inputs(model, adj, x);
  EXPECT_EQ(forward(model, in, true, 5), forward(model, in, true, 5));
  EXPECT_NE(forward(model, in, true, 5), forward(model, in, true, 6));
  EXPECT_EQ(forward(model, in, false, 5), forward(model, in, false, 6));
}

TEST(ForwardTest, DimensionMismatch) {
  GcnModel model = GcnModel::init(ModelKind::kGcn, {4, 3}, 0, NormalizationScheme::kAugNormAdj, 0);
  Adjacency adj = path_graph(5);
  EXPECT_THROW(prepare_inputs(model, adj, random_matrix(4, 4, 0)), DimensionError);
  ModelInputs in = prepare_inputs(model, adj, random_matrix(5, 3, 0));
  EXPECT_THROW(forward(model, in), DimensionError);
  EXPECT_THROW(GcnModel::init(ModelKind::kGcn, {4}, 0, NormalizationScheme::kAugNormAdj, 0),
               ValidationError);
  EXPECT_THROW(GcnModel::init(ModelKind::kGcn, {4, 2}, 1.0, NormalizationScheme::kAugNormAdj, 0),
               ValidationError);
}

TEST(EvaluateTest, AllCorrectAndMajority) {
  MatrixXd p(4, 2);
  p << 0.9, 0.1, 0.2, 0.8, 0.7, 0.3, 0.4, 0.6;
  std::vector<int> labels = {0, 1, 0, 1};
  EXPECT_EQ(evaluate(p, labels, all_nodes(4)).micro_f1, 1.0);

  MatrixXd majority(5, 2);
  majority.col(0).setOnes();
  majority.col(1).setZero();
  EvalReport r = evaluate(majority, {0, 0, 0, 1, 1}, all_nodes(5), Metric::kRareClassF1);
  EXPECT_EQ(*r.rare_class_f1, 0.0);
  EXPECT_EQ(r.micro_f1, 0.6);
}

TEST(EvaluateTest, ConfusionOracle) {
  // Class 1 is rare (4 of 10). Predictions by hand:
  //   true 0: predicted 0,0,0,0,1,1
  //   true 1: predicted 1,1,1,0
  // TP = 3, FP = 2, FN = 1.
  std::vector<int> labels = {0, 0, 0, 0, 0, 0, 1, 1, 1, 1};
  std::vector<int> predicted = {0, 0, 0, 0, 1, 1, 1, 1, 1, 0};
  MatrixXd p = MatrixXd::Zero(10, 2);
  for (Index i = 0; i < 10; ++i) p(i, predicted[i]) = 1;
  EvalReport r = evaluate(p, labels, all_nodes(10), Metric::kRareClassF1);
  EXPECT_EQ(r.correct, 7);
  EXPECT_DOUBLE_EQ(r.micro_f1, 0.7);
  EXPECT_DOUBLE_EQ(*r.rare_class_f1, 2.0 * 3 / (2 * 3 + 2 + 1));
  EXPECT_EQ(r.confusion[0][1], 2);
  EXPECT_EQ(r.confusion[1][0], 1);
  EvalReport again = evaluate(p, labels, all_nodes(10), Metric::kRareClassF1);
  EXPECT_EQ(again.rare_class_f1, r.rare_class_f1);
}

TEST(EvaluateTest, Errors) {
  MatrixXd p = MatrixXd::Constant(3, 3, 1.0 / 3);
  EXPECT_THROW(evaluate(p, {0, 1, 2}, {}), ValidationError);
  EXPECT_THROW(evaluate(p, {0, 1, 2}, {0, 1}, Metric::kRareClassF1), ValidationError);
  EXPECT_THROW(evaluate(p, {0, 1, 2}, {7}), BoundsError);
}

TEST(GradientCheckTest, SeededInstances) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(gradient_check(ModelKind::kGcn, seed), 1e-4) << "seed " << seed;
    EXPECT_LT(gradient_check(ModelKind::kMlp, seed), 1e-4) << "seed " << seed;
  }
}

TEST(GradientCheckTest, IdentityGcnMatchesMlp) {
  GcnModel mlp = GcnModel::init(ModelKind::kMlp, {4, 6, 3}, 0, NormalizationScheme::kAugNormAdj, 8);
  GcnModel gcn = mlp;
  gcn.kind = ModelKind::kGcn;
  MatrixXd x = random_matrix(7, 4, 8);
  std::vector<int> labels = {0, 1, 2, 0, 1, 2, 0};
  ModelInputs mlp_in{x.sparseView(), std::nullopt};
  ModelInputs gcn_in{x.sparseView(), identity_propagation(7).matrix};
  auto a = loss_and_gradient(mlp, mlp_in, labels, all_nodes(7), 1e-3);
  auto b = loss_and_gradient(gcn, gcn_in, labels, all_nodes(7), 1e-3);
  EXPECT_EQ(a.loss, b.loss);
  for (std::size_t l = 0; l < a.gradients.size(); ++l) EXPECT_EQ(a.gradients[l], b.gradients[l]);
}

TEST(GradientCheckTest, ConfidentCorrectModelHasTinyGradient) {
  GcnModel model = GcnModel::init(ModelKind::kMlp, {3, 3}, 0, NormalizationScheme::kAugNormAdj, 0);
  model.weights[0] = 40 * MatrixXd::Identity(3, 3);
  MatrixXd x = MatrixXd::Identity(3, 3);
  ModelInputs in{x.sparseView(), std::nullopt};
  auto lg = loss_and_gradient(model, in, {0, 1, 2}, all_nodes(3), 0.0);
  EXPECT_LT(lg.loss, 1e-15);
  EXPECT_LT(lg.gradients[0].cwiseAbs().maxCoeff(), 1e-15);
}

Graph separable_graph(Index n, std::uint64_t seed) {
  std::mt19937 gen(static_cast<unsigned>(seed));
  std::normal_distribution<double> noise(0, 0.3);
  MatrixXd x(n, 2);
  std::vector<int> labels(n);
  for (Index i = 0; i < n; ++i) {
    labels[i] = static_cast<int>(i % 2);
    x(i, 0) = (labels[i] ? 1.0 : -1.0) + noise(gen);
    x(i, 1) = noise(gen);
    if (labels[i] == 1 && x(i, 0) < 0.1) x(i, 0) = 0.1;
    if (labels[i] == 0 && x(i, 0) > -0.1) x(i, 0) = -0.1;
  }
  Splits splits;
  for (Index i = 0; i < n; ++i) (i < n / 2 ? splits.train : splits.test).push_back(i);
  return Graph(Adjacency(n, {}), x, labels, splits);
}

TEST(TrainTest, SeparableMlpFitsTraining) {
  Graph g = separable_graph(80, 1);
  TrainConfig config;
  config.epochs = 200;
  config.dropout = 0;
  config.hidden = {8};
  GcnModel probe = GcnModel::init(ModelKind::kMlp, {2, 2}, 0, NormalizationScheme::kAugNormAdj, 0);
  TrainResult r = train(ModelKind::kMlp, prepare_inputs(probe, g), g.labels(), g.splits(), config);
  EXPECT_GE(r.train.micro_f1, 0.99);
  EXPECT_FALSE(r.val.has_value());
  ASSERT_TRUE(r.test.has_value());
}

TEST(TrainTest, ZeroLearningRateKeepsInitialModel) {
  Graph g = generate_planted_partition({}, 3);
  TrainConfig config;
  config.learning_rate = 0;
  config.epochs = 5;
  GcnModel initial = GcnModel::init(ModelKind::kGcn, {16, 16, 3}, config.dropout,
                                    NormalizationScheme::kAugNormAdjSelfLoop, 7);
  ModelInputs in = prepare_inputs(initial, g);
  TrainResult r = train(initial, in, g.labels(), g.splits(), config);
  EXPECT_EQ(r.best_epoch, 0);
  EXPECT_EQ(r.model.weights, initial.weights);
  EvalReport direct = evaluate(initial, in, g.labels(), g.splits().test);
  EXPECT_EQ(r.test->micro_f1, direct.micro_f1);
  EXPECT_EQ(r.test->confusion, direct.confusion);
}

TEST(TrainTest, SmallStepLossNonIncreasing) {
  Graph g = generate_synthetic(10, 0.3, 4, 3, 5);
  TrainConfig config;
  config.learning_rate = 1e-4;
  config.dropout = 0;
  config.epochs = 50;
  GcnModel probe = GcnModel::init(ModelKind::kGcn, {4, 3}, 0, NormalizationScheme::kAugNormAdjSelfLoop, 0);
  TrainResult r = train(ModelKind::kGcn, prepare_inputs(probe, g), g.labels(), g.splits(), config);
  for (std::size_t t = 1; t < r.loss_history.size(); ++t) {
    EXPECT_LE(r.loss_history[t], r.loss_history[t - 1]);
  }
}

TEST(TrainTest, GcnBeatsMlpOnPlantedPartition) {
  PlantedPartitionOptions opts;
  opts.feature_signal = 0.35;
  Graph g = generate_planted_partition(opts, 11);
  TrainConfig config;
  config.epochs = 100;
  GcnModel gcn_probe = GcnModel::init(ModelKind::kGcn, {16, 3}, 0, NormalizationScheme::kAugNormAdjSelfLoop, 0);
  GcnModel mlp_probe = gcn_probe;
  mlp_probe.kind = ModelKind::kMlp;
  TrainResult gcn = train(ModelKind::kGcn, prepare_inputs(gcn_probe, g), g.labels(), g.splits(), config);
  TrainResult mlp = train(ModelKind::kMlp, prepare_inputs(mlp_probe, g), g.labels(), g.splits(), config);
  EXPECT_GT(gcn.test->micro_f1, mlp.test->micro_f1);
}

TEST(TrainTest, DeterministicPerSeed) {
  Graph g = generate_planted_partition({}, 4);
  TrainConfig config;
  config.epochs = 20;
  config.seed = 3;
  GcnModel probe = GcnModel::init(ModelKind::kGcn, {16, 3}, 0, NormalizationScheme::kAugNormAdjSelfLoop, 0);
  ModelInputs in = prepare_inputs(probe, g);
  TrainResult a = train(ModelKind::kGcn, in, g.labels(), g.splits(), config);
  TrainResult b = train(ModelKind::kGcn, in, g.labels(), g.splits(), config);
  EXPECT_EQ(a.model.weights, b.model.weights);
  EXPECT_EQ(a.loss_history, b.loss_history);
}

TEST(TrainTest, RejectsBadConfig) {
  Graph g = generate_synthetic(10, 0.3, 4, 2, 5);
  GcnModel probe = GcnModel::init(ModelKind::kGcn, {4, 2}, 0, NormalizationScheme::kAugNormAdj, 0);
  ModelInputs in = prepare_inputs(probe, g);
  TrainConfig config;
  Splits empty = g.splits();
  empty.train.clear();
  EXPECT_THROW(train(ModelKind::kGcn, in, g.labels(), empty, config), ValidationError);
  config.epochs = 0;
  EXPECT_THROW(train(ModelKind::kGcn, in, g.labels(), g.splits(), config), ValidationError);
}

TEST(CheckpointTest, RoundTripIsExact) {
  testing::TempDir dir;
  GcnModel model = GcnModel::init(ModelKind::kGcn, {5, 7, 4, 3}, 0.3,
                                  NormalizationScheme::kFirstOrderGcn, 12);
  save_model(model, dir / "m.txt");
  GcnModel back = load_model(dir / "m.txt");
  EXPECT_EQ(back.kind, model.kind);
  EXPECT_EQ(back.layer_sizes, model.layer_sizes);
  EXPECT_EQ(back.weights, model.weights);
  EXPECT_EQ(back.dropout, model.dropout);
  EXPECT_EQ(back.normalization, model.normalization);
}

TEST(CheckpointTest, RejectsMalformed) {
  testing::TempDir dir;
  testing::write_file(dir / "a.txt", "edgeveil-model 2\n");
  EXPECT_THROW(load_model(dir / "a.txt"), ParseError);
  testing::write_file(dir / "b.txt",
                      "edgeveil-model 1\nkind gcn\nnormalization aug-norm-adj\n"
                      "dropout 0\nlayers 2 2 1\n1\n");
  try {
    load_model(dir / "b.txt");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
  testing::write_file(dir / "c.txt", "edgeveil-model 1\nkind cnn\n");
  EXPECT_THROW(load_model(dir / "c.txt"), ParseError);
}

}  // namespace
}  // namespace edgeveil
