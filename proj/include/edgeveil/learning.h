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
#include <string_view>
#include <vector>

#include "edgeveil/eigen_types.h"
#include "edgeveil/graph.h"

namespace edgeveil {

enum class ModelKind { kGcn, kMlp };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// Bias-free stack of layers. A GCN layer computes A_norm * H * W, an MLP
// layer H * W. Hidden layers use ReLU followed by inverted dropout; the last
// layer is a row-wise softmax.
struct GcnModel {
  ModelKind kind = ModelKind::kGcn;
  std::vector<Index> layer_sizes;  // [input, hidden..., classes]
  std::vector<MatrixXd> weights;   // weights[l] is layer_sizes[l] x layer_sizes[l+1]
  double dropout = 0;
  NormalizationScheme normalization = NormalizationScheme::kAugNormAdjSelfLoop;

  Index num_layers() const { return static_cast<Index>(weights.size()); }
  Index num_classes() const { return layer_sizes.back(); }

  // Glorot-uniform weights. Throws ValidationError for fewer than two sizes,
  // a non-positive size, or dropout outside [0, 1).
  static GcnModel init(ModelKind kind, std::vector<Index> layer_sizes,
                       double dropout, NormalizationScheme normalization,
                       std::uint64_t seed);
};

// What a forward pass reads besides the weights. `propagation` is the
// normalized adjacency and is unused (and may be absent) for an MLP.
struct ModelInputs {
  SparseMatrixXd features;
  std::optional<SparseMatrixXd> propagation;

  Index num_nodes() const { return features.rows(); }
};

// Sparse features plus, for a GCN, the adjacency normalized with the
// model's scheme.
ModelInputs prepare_inputs(const GcnModel& model, const Adjacency& adjacency,
                           const MatrixXd& features);
ModelInputs prepare_inputs(const GcnModel& model, const Graph& graph);

// Class probabilities (n x C). With train_mode set, hidden activations are
// dropped using a stream derived from `seed`. Throws DimensionError when the
// inputs do not fit the model.
MatrixXd forward(const GcnModel& model, const ModelInputs& inputs,
                 bool train_mode = false, std::uint64_t seed = 0);

template <typename FeatureDerived>
MatrixXd gcn_forward(const GcnModel& model, const NormalizedAdjacency& a_norm,
                     const Eigen::EigenBase<FeatureDerived>& x,
                     bool train_mode = false, std::uint64_t seed = 0) {
  ModelInputs inputs{SparseMatrixXd(x.derived().sparseView()), a_norm.matrix};
  return forward(model, inputs, train_mode, seed);
}

template <typename FeatureDerived>
MatrixXd mlp_forward(const GcnModel& model, const Eigen::EigenBase<FeatureDerived>& x,
                     bool train_mode = false, std::uint64_t seed = 0) {
  ModelInputs inputs{SparseMatrixXd(x.derived().sparseView()), std::nullopt};
  GcnModel as_mlp = model;
  as_mlp.kind = ModelKind::kMlp;
  return forward(as_mlp, inputs, train_mode, seed);
}

// Mean cross-entropy over `nodes` plus weight_decay / 2 * sum ||W||^2, and its
// gradient with respect to every weight matrix.
struct LossAndGradient {
  double loss = 0;
  std::vector<MatrixXd> gradients;
};
LossAndGradient loss_and_gradient(const GcnModel& model, const ModelInputs& inputs,
                                  const std::vector<int>& labels,
                                  const std::vector<Index>& nodes,
                                  double weight_decay, bool train_mode = false,
                                  std::uint64_t seed = 0);

struct TrainConfig {
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  int epochs = 200;
  double dropout = 0.5;
  std::vector<Index> hidden = {16};
  std::uint64_t seed = 0;
  bool operator==(const TrainConfig&) const = default;
};

enum class Metric { kMicroF1, kRareClassF1 };

struct EvalReport {
  double micro_f1 = 0;
  std::optional<double> rare_class_f1;  // binary tasks only
  Index correct = 0;
  Index total = 0;
  // confusion[true][predicted]
  std::vector<std::vector<Index>> confusion;
};

// Argmax predictions scored over `nodes`. The rare class is the class with
// fewer entries in the full `labels` vector. Throws ValidationError for an
// empty node set or a rare-class request with more than two classes.
EvalReport evaluate(const MatrixXd& probabilities, const std::vector<int>& labels,
                    const std::vector<Index>& nodes, Metric metric = Metric::kMicroF1);
EvalReport evaluate(const GcnModel& model, const ModelInputs& inputs,
                    const std::vector<int>& labels, const std::vector<Index>& nodes,
                    Metric metric = Metric::kMicroF1);

struct TrainResult {
  GcnModel model;           // best checkpoint
  int best_epoch = 0;       // 0 means the initial weights
  EvalReport train;
  std::optional<EvalReport> val;
  std::optional<EvalReport> test;
  std::vector<double> loss_history;  // training loss per epoch
};

// Adam on the training nodes. The checkpoint with the best validation score
// (validation loss breaks ties) is kept, or the one with the lowest training
// loss when there are no validation nodes. Throws ValidationError when the
// training split is empty or the config is invalid. config.dropout replaces
// the initial model's rate.
TrainResult train(ModelKind kind, const ModelInputs& inputs,
                  const std::vector<int>& labels, const Splits& splits,
                  const TrainConfig& config,
                  NormalizationScheme normalization = NormalizationScheme::kAugNormAdjSelfLoop,
                  Metric metric = Metric::kMicroF1);
TrainResult train(GcnModel initial, const ModelInputs& inputs,
                  const std::vector<int>& labels, const Splits& splits,
                  const TrainConfig& config, Metric metric = Metric::kMicroF1);

// Largest relative difference between analytic gradients and central
// differences (step `step`) over every weight, with dropout disabled.
double gradient_check(const GcnModel& model, const ModelInputs& inputs,
                      const std::vector<int>& labels, const std::vector<Index>& nodes,
                      double weight_decay, double step = 1e-5);

// The same on a seeded random instance: n <= 10 nodes, dimensions <= 8.
double gradient_check(ModelKind kind, std::uint64_t seed);

// Versioned text checkpoint.
void save_model(const GcnModel& model, const std::filesystem::path& path);
GcnModel load_model(const std::filesystem::path& path);

}  // namespace edgeveil
