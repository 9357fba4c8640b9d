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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "edgeveil/errors.h"
#include "edgeveil/rng.h"

namespace edgeveil {
namespace {

struct ForwardCache {
  std::vector<MatrixXd> hidden;       // H_1..H_{L-1} after ReLU and dropout
  std::vector<MatrixXd> pre;          // A_norm * H_l * W_l for every layer
  std::vector<Eigen::ArrayXXd> masks; // dropout scale per hidden layer
  MatrixXd probabilities;
};

void check_inputs(const GcnModel& model, const ModelInputs& inputs) {
  if (model.weights.empty()) throw ValidationError("model has no layers");
  if (inputs.features.cols() != model.layer_sizes.front()) {
    throw DimensionError("features have " + std::to_string(inputs.features.cols()) +
                         " columns, model expects " +
                         std::to_string(model.layer_sizes.front()));
  }
  for (Index l = 0; l < model.num_layers(); ++l) {
    const MatrixXd& w = model.weights[l];
    if (w.rows() != model.layer_sizes[l] || w.cols() != model.layer_sizes[l + 1]) {
      throw DimensionError("weight " + std::to_string(l) + " has the wrong shape");
    }
  }
  if (model.kind == ModelKind::kGcn) {
    if (!inputs.propagation) throw ValidationError("a GCN needs a normalized adjacency");
    const Index n = inputs.num_nodes();
    if (inputs.propagation->rows() != n || inputs.propagation->cols() != n) {
      throw DimensionError("normalized adjacency is " +
                           std::to_string(inputs.propagation->rows()) + "x" +
                           std::to_string(inputs.propagation->cols()) + " for " +
                           std::to_string(n) + " nodes");
    }
  }
}

// The normalized adjacency is symmetric, so it is its own transpose in the
// backward pass.
MatrixXd propagate(const GcnModel& model, const ModelInputs& inputs, MatrixXd m) {
  if (model.kind == ModelKind::kMlp) return m;
  return *inputs.propagation * m;
}

void softmax_rows(MatrixXd& z) {
  for (Index i = 0; i < z.rows(); ++i) {
    double max = z.row(i).maxCoeff();
    z.row(i) = (z.row(i).array() - max).exp();
    z.row(i) /= z.row(i).sum();
  }
}

ForwardCache run_forward(const GcnModel& model, const ModelInputs& inputs,
                         bool train_mode, std::uint64_t seed) {
  check_inputs(model, inputs);
  ForwardCache cache;
  RandomStream rng(seed, "dropout");
  const double keep_scale = 1.0 / (1.0 - model.dropout);
  const bool drop = train_mode && model.dropout > 0;
  for (Index l = 0; l < model.num_layers(); ++l) {
    MatrixXd xw = l == 0 ? MatrixXd(inputs.features * model.weights[0])
                         : MatrixXd(cache.hidden.back() * model.weights[l]);
    cache.pre.push_back(propagate(model, inputs, std::move(xw)));
    if (l + 1 == model.num_layers()) break;
    MatrixXd h = cache.pre.back().cwiseMax(0.0);
    Eigen::ArrayXXd mask = Eigen::ArrayXXd::Ones(h.rows(), h.cols());
    if (drop) {
      for (Index c = 0; c < mask.cols(); ++c) {
        for (Index r = 0; r < mask.rows(); ++r) {
          mask(r, c) = rng.uniform() < model.dropout ? 0.0 : keep_scale;
        }
      }
      h.array() *= mask;
    }
    cache.masks.push_back(std::move(mask));
    cache.hidden.push_back(std::move(h));
  }
  cache.probabilities = cache.pre.back();
  softmax_rows(cache.probabilities);
  return cache;
}

void check_labels(const std::vector<int>& labels, Index n, Index classes,
                  const std::vector<Index>& nodes) {
  if (static_cast<Index>(labels.size()) != n) {
    throw DimensionError("expected " + std::to_string(n) + " labels, got " +
                         std::to_string(labels.size()));
  }
  for (Index node : nodes) {
    if (node < 0 || node >= n) throw BoundsError("node " + std::to_string(node) + " out of range");
    if (labels[node] < 0 || labels[node] >= classes) {
      throw ValidationError("label " + std::to_string(labels[node]) + " of node " +
                            std::to_string(node) + " exceeds the model's classes");
    }
  }
}

// Mean cross-entropy over `nodes` from pre-softmax scores.
double cross_entropy(const MatrixXd& logits, const std::vector<int>& labels,
                     const std::vector<Index>& nodes) {
  double total = 0;
  for (Index i : nodes) {
    double max = logits.row(i).maxCoeff();
    double log_sum = std::log((logits.row(i).array() - max).exp().sum()) + max;
    total += log_sum - logits(i, labels[i]);
  }
  return total / static_cast<double>(nodes.size());
}

double weight_penalty(const GcnModel& model, double weight_decay) {
  double sum = 0;
  for (const MatrixXd& w : model.weights) sum += w.squaredNorm();
  return 0.5 * weight_decay * sum;
}

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int step = 0;
  std::vector<MatrixXd> m;
  std::vector<MatrixXd> v;

  explicit Adam(const GcnModel& model) {
    for (const MatrixXd& w : model.weights) {
      m.push_back(MatrixXd::Zero(w.rows(), w.cols()));
      v.push_back(MatrixXd::Zero(w.rows(), w.cols()));
    }
  }

  void apply(GcnModel& model, const std::vector<MatrixXd>& grads, double lr) {
    ++step;
    const double c1 = 1 - std::pow(beta1, step);
    const double c2 = 1 - std::pow(beta2, step);
    for (std::size_t l = 0; l < grads.size(); ++l) {
      m[l] = beta1 * m[l] + (1 - beta1) * grads[l];
      v[l] = beta2 * v[l] + (1 - beta2) * grads[l].cwiseProduct(grads[l]);
      model.weights[l].array() -=
          lr * (m[l].array() / c1) / ((v[l].array() / c2).sqrt() + eps);
    }
  }
};

}  // namespace

std::string_view to_string(ModelKind kind) {
  return kind == ModelKind::kGcn ? "gcn" : "mlp";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "gcn") return ModelKind::kGcn;
  if (name == "mlp") return ModelKind::kMlp;
  throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

GcnModel GcnModel::init(ModelKind kind, std::vector<Index> layer_sizes,
                        double dropout, NormalizationScheme normalization,
                        std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw ValidationError("a model needs at least one layer");
  for (Index size : layer_sizes) {
    if (size < 1) throw ValidationError("layer sizes must be positive");
  }
  if (!(dropout >= 0 && dropout < 1)) throw ValidationError("dropout must lie in [0, 1)");
  GcnModel model{kind, std::move(layer_sizes), {}, dropout, normalization};
  RandomStream rng(seed, "model/init");
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    const Index in = model.layer_sizes[l];
    const Index out = model.layer_sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    MatrixXd w(in, out);
    for (Index c = 0; c < out; ++c) {
      for (Index r = 0; r < in; ++r) w(r, c) = (2 * rng.uniform() - 1) * limit;
    }
    model.weights.push_back(std::move(w));
  }
  return model;
}

ModelInputs prepare_inputs(const GcnModel& model, const Adjacency& adjacency,
                           const MatrixXd& features) {
  if (features.rows() != adjacency.num_nodes()) {
    throw DimensionError("features have " + std::to_string(features.rows()) +
                         " rows for " + std::to_string(adjacency.num_nodes()) + " nodes");
  }
  ModelInputs inputs{features.sparseView(), std::nullopt};
  if (model.kind == ModelKind::kGcn) {
    inputs.propagation = normalize(adjacency, model.normalization).matrix;
  }
  return inputs;
}

ModelInputs prepare_inputs(const GcnModel& model, const Graph& graph) {
  return prepare_inputs(model, graph.adjacency(), graph.features());
}

MatrixXd forward(const GcnModel& model, const ModelInputs& inputs, bool train_mode,
                 std::uint64_t seed) {
  return run_forward(model, inputs, train_mode, seed).probabilities;
}

LossAndGradient loss_and_gradient(const GcnModel& model, const ModelInputs& inputs,
                                  const std::vector<int>& labels,
                                  const std::vector<Index>& nodes,
                                  double weight_decay, bool train_mode,
                                  std::uint64_t seed) {
  if (nodes.empty()) throw ValidationError("loss needs at least one node");
  ForwardCache cache = run_forward(model, inputs, train_mode, seed);
  check_labels(labels, inputs.num_nodes(), model.num_classes(), nodes);

  LossAndGradient out;
  out.loss = cross_entropy(cache.pre.back(), labels, nodes) +
             weight_penalty(model, weight_decay);

  const double inv = 1.0 / static_cast<double>(nodes.size());
  MatrixXd dz = MatrixXd::Zero(cache.probabilities.rows(), cache.probabilities.cols());
  for (Index i : nodes) {
    dz.row(i) += cache.probabilities.row(i) * inv;
    dz(i, labels[i]) -= inv;
  }
  out.gradients.resize(model.weights.size());
  for (Index l = model.num_layers() - 1; l >= 0; --l) {
    MatrixXd g = propagate(model, inputs, std::move(dz));
    if (l == 0) {
      out.gradients[0] = inputs.features.transpose() * g;
    } else {
      out.gradients[l] = cache.hidden[l - 1].transpose() * g;
      MatrixXd dh = g * model.weights[l].transpose();
      dz = (dh.array() * cache.masks[l - 1] *
            (cache.pre[l - 1].array() > 0).cast<double>())
               .matrix();
    }
    out.gradients[l] += weight_decay * model.weights[l];
  }
  return out;
}

EvalReport evaluate(const MatrixXd& probabilities, const std::vector<int>& labels,
                    const std::vector<Index>& nodes, Metric metric) {
  if (nodes.empty()) throw ValidationError("evaluation needs at least one node");
  const Index classes = probabilities.cols();
  check_labels(labels, probabilities.rows(), classes, nodes);
  if (metric == Metric::kRareClassF1 && classes != 2) {
    throw ValidationError("rare-class F1 is defined for binary tasks only");
  }
  EvalReport report;
  report.confusion.assign(classes, std::vector<Index>(classes, 0));
  for (Index i : nodes) {
    Index predicted = 0;
    probabilities.row(i).maxCoeff(&predicted);
    report.confusion[labels[i]][predicted] += 1;
    report.correct += predicted == labels[i];
    ++report.total;
  }
  report.micro_f1 = static_cast<double>(report.correct) / static_cast<double>(report.total);
  if (metric == Metric::kRareClassF1) {
    Index count1 = std::count(labels.begin(), labels.end(), 1);
    Index count0 = static_cast<Index>(labels.size()) - count1;
    const int rare = count1 <= count0 ? 1 : 0;
    const int common = 1 - rare;
    double tp = static_cast<double>(report.confusion[rare][rare]);
    double fp = static_cast<double>(report.confusion[common][rare]);
    double fn = static_cast<double>(report.confusion[rare][common]);
    report.rare_class_f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
  }
  return report;
}

EvalReport evaluate(const GcnModel& model, const ModelInputs& inputs,
                    const std::vector<int>& labels, const std::vector<Index>& nodes,
                    Metric metric) {
  return evaluate(forward(model, inputs), labels, nodes, metric);
}

TrainResult train(ModelKind kind, const ModelInputs& inputs,
                  const std::vector<int>& labels, const Splits& splits,
                  const TrainConfig& config, NormalizationScheme normalization,
                  Metric metric) {
  int classes = 0;
  for (int label : labels) classes = std::max(classes, label + 1);
  std::vector<Index> sizes = {inputs.features.cols()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(classes);
  return train(GcnModel::init(kind, sizes, config.dropout, normalization, config.seed),
               inputs, labels, splits, config, metric);
}

TrainResult train(GcnModel model, const ModelInputs& inputs,
                  const std::vector<int>& labels, const Splits& splits,
                  const TrainConfig& config, Metric metric) {
  if (splits.train.empty()) throw ValidationError("training split is empty");
  if (config.epochs < 1) throw ValidationError("epochs must be at least 1");
  if (!(config.learning_rate >= 0)) throw ValidationError("learning rate must be non-negative");
  if (!(config.weight_decay >= 0)) throw ValidationError("weight decay must be non-negative");
  model.dropout = config.dropout;
  check_inputs(model, inputs);

  const bool use_val = !splits.val.empty();
  auto score = [&](const EvalReport& r) {
    return metric == Metric::kRareClassF1 ? *r.rare_class_f1 : r.micro_f1;
  };

  TrainResult result;
  result.model = model;
  double best_score = -1;
  double best_loss = std::numeric_limits<double>::infinity();
  // Eval-mode snapshot of the current weights as a checkpoint candidate.
  auto consider = [&](int epoch) {
    ForwardCache eval = run_forward(model, inputs, false, 0);
    double candidate_score = 0;
    double candidate_loss = 0;
    if (use_val) {
      candidate_score = score(evaluate(eval.probabilities, labels, splits.val, metric));
      candidate_loss = cross_entropy(eval.pre.back(), labels, splits.val);
    } else {
      candidate_loss = cross_entropy(eval.pre.back(), labels, splits.train);
    }
    bool better = use_val ? candidate_score > best_score ||
                                (candidate_score == best_score && candidate_loss < best_loss)
                          : candidate_loss < best_loss;
    if (!better) return;
    best_score = candidate_score;
    best_loss = candidate_loss;
    result.model = model;
    result.best_epoch = epoch;
  };

  consider(0);
  Adam adam(model);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::uint64_t epoch_seed =
        derive_seed(config.seed, "train/epoch/" + std::to_string(epoch));
    LossAndGradient lg = loss_and_gradient(model, inputs, labels, splits.train,
                                           config.weight_decay, true, epoch_seed);
    result.loss_history.push_back(lg.loss);
    adam.apply(model, lg.gradients, config.learning_rate);
    consider(epoch);
  }

  MatrixXd probabilities = forward(result.model, inputs);
  result.train = evaluate(probabilities, labels, splits.train, metric);
  if (use_val) result.val = evaluate(probabilities, labels, splits.val, metric);
  if (!splits.test.empty()) result.test = evaluate(probabilities, labels, splits.test, metric);
  return result;
}

double gradient_check(const GcnModel& model, const ModelInputs& inputs,
                      const std::vector<int>& labels, const std::vector<Index>& nodes,
                      double weight_decay, double step) {
  LossAndGradient analytic = loss_and_gradient(model, inputs, labels, nodes, weight_decay);
  GcnModel probe = model;
  double worst = 0;
  for (Index l = 0; l < model.num_layers(); ++l) {
    for (Index k = 0; k < probe.weights[l].size(); ++k) {
      double& w = probe.weights[l].data()[k];
      const double saved = w;
      w = saved + step;
      double plus = loss_and_gradient(probe, inputs, labels, nodes, weight_decay).loss;
      w = saved - step;
      double minus = loss_and_gradient(probe, inputs, labels, nodes, weight_decay).loss;
      w = saved;
      double numeric = (plus - minus) / (2 * step);
      double exact = analytic.gradients[l].data()[k];
      double scale = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      worst = std::max(worst, std::abs(numeric - exact) / scale);
    }
  }
  return worst;
}

double gradient_check(ModelKind kind, std::uint64_t seed) {
  RandomStream rng(seed, "gradient-check");
  const Index n = 6 + static_cast<Index>(rng.below(5));
  const Index d = 3 + static_cast<Index>(rng.below(6));
  const Index classes = 2 + static_cast<Index>(rng.below(3));
  std::vector<Index> sizes = {d};
  const int hidden_layers = 1 + static_cast<int>(rng.below(2));
  for (int h = 0; h < hidden_layers; ++h) sizes.push_back(2 + static_cast<Index>(rng.below(7)));
  sizes.push_back(classes);

  std::vector<Edge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (rng.uniform() < 0.4) edges.push_back({i, j});
    }
  }
  MatrixXd x(n, d);
  for (Index c = 0; c < d; ++c) {
    for (Index r = 0; r < n; ++r) x(r, c) = rng.gaussian(1.0);
  }
  std::vector<int> labels(n);
  for (int& label : labels) label = static_cast<int>(rng.below(classes));
  std::vector<Index> nodes(n);
  for (Index i = 0; i < n; ++i) nodes[i] = i;

  GcnModel model = GcnModel::init(kind, sizes, 0.0,
                                  NormalizationScheme::kAugNormAdjSelfLoop,
                                  derive_seed(seed, "gradient-check/init"));
  ModelInputs inputs = prepare_inputs(model, Adjacency(n, std::move(edges)), x);
  return gradient_check(model, inputs, labels, nodes, 1e-3);
}

}  // namespace edgeveil
