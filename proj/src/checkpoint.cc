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

// Checkpoint layout:
//
//   edgeveil-model 1
//   kind gcn
//   normalization aug-norm-adj-self-loop
//   dropout 0.5
//   layers 3 1433 16 7
//   <layer_sizes[0] rows of layer 0 weights>
//   <layer_sizes[1] rows of layer 1 weights>
//   ...
#include <fstream>
#include <sstream>

#include "edgeveil/errors.h"
#include "edgeveil/format.h"
#include "edgeveil/learning.h"

namespace edgeveil {
namespace {

constexpr std::string_view kMagic = "edgeveil-model";
constexpr int kVersion = 1;

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path)
      : path_(path.string()), in_(path) {
    if (!in_) throw ParseError(path_, 0, "cannot open file");
  }

  std::vector<std::string> next() {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file", line_ + 1);
    ++line_;
    std::istringstream row(line);
    std::vector<std::string> tokens;
    for (std::string t; row >> t;) tokens.push_back(t);
    return tokens;
  }

  // "key value..." with the expected key; returns the values.
  std::vector<std::string> keyed(std::string_view key) {
    std::vector<std::string> tokens = next();
    if (tokens.empty() || tokens[0] != key) fail("expected '" + std::string(key) + "'");
    tokens.erase(tokens.begin());
    return tokens;
  }

  [[noreturn]] void fail(const std::string& what) { fail(what, line_); }
  [[noreturn]] void fail(const std::string& what, std::size_t line) {
    throw ParseError(path_, line, what);
  }

  double number(const std::string& token) {
    try {
      return parse_double(token);
    } catch (const std::invalid_argument&) {
      fail("invalid number '" + token + "'");
    }
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t line_ = 0;
};

}  // namespace

void save_model(const GcnModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << kMagic << ' ' << kVersion << '\n';
  out << "kind " << to_string(model.kind) << '\n';
  out << "normalization " << to_string(model.normalization) << '\n';
  out << "dropout " << format_double(model.dropout) << '\n';
  out << "layers " << model.layer_sizes.size();
  for (Index size : model.layer_sizes) out << ' ' << size;
  out << '\n';
  for (const MatrixXd& w : model.weights) {
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) {
        if (c > 0) out << ' ';
        out << format_double(w(r, c));
      }
      out << '\n';
    }
  }
}

GcnModel load_model(const std::filesystem::path& path) {
  LineReader reader(path);
  std::vector<std::string> header = reader.next();
  if (header.size() != 2 || header[0] != kMagic) reader.fail("not an edgeveil model");
  if (header[1] != std::to_string(kVersion)) {
    reader.fail("unsupported model version " + header[1]);
  }
  GcnModel model;
  try {
    auto kind = reader.keyed("kind");
    if (kind.size() != 1) reader.fail("expected one model kind");
    model.kind = parse_model_kind(kind[0]);
    auto scheme = reader.keyed("normalization");
    if (scheme.size() != 1) reader.fail("expected one normalization scheme");
    model.normalization = parse_normalization(scheme[0]);
  } catch (const ValidationError& e) {
    reader.fail(e.what());
  }
  auto dropout = reader.keyed("dropout");
  if (dropout.size() != 1) reader.fail("expected one dropout rate");
  model.dropout = reader.number(dropout[0]);
  if (!(model.dropout >= 0 && model.dropout < 1)) reader.fail("dropout outside [0, 1)");

  auto layers = reader.keyed("layers");
  if (layers.empty()) reader.fail("missing layer count");
  const double count = reader.number(layers[0]);
  if (count < 2 || count != static_cast<double>(layers.size() - 1)) {
    reader.fail("layer count does not match the listed sizes");
  }
  for (std::size_t k = 1; k < layers.size(); ++k) {
    double size = reader.number(layers[k]);
    if (size < 1 || size != static_cast<double>(static_cast<Index>(size))) {
      reader.fail("invalid layer size '" + layers[k] + "'");
    }
    model.layer_sizes.push_back(static_cast<Index>(size));
  }
  for (std::size_t l = 0; l + 1 < model.layer_sizes.size(); ++l) {
    MatrixXd w(model.layer_sizes[l], model.layer_sizes[l + 1]);
    for (Index r = 0; r < w.rows(); ++r) {
      auto row = reader.next();
      if (static_cast<Index>(row.size()) != w.cols()) {
        reader.fail("expected " + std::to_string(w.cols()) + " weights, found " +
                    std::to_string(row.size()));
      }
      for (Index c = 0; c < w.cols(); ++c) w(r, c) = reader.number(row[c]);
    }
    model.weights.push_back(std::move(w));
  }
  return model;
}

}  // namespace edgeveil
