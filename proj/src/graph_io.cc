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
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "edgeveil/errors.h"
#include "edgeveil/format.h"
#include "edgeveil/graph.h"

namespace edgeveil {
namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  return out;
}

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string_view strip_comment(std::string_view line) {
  auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  token = trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  return ec == std::errc() && ptr == token.data() + token.size();
}

// Splits on runs of whitespace.
std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

struct RawEdge {
  std::int64_t u;
  std::int64_t v;
  std::size_t line;
};

std::vector<RawEdge> read_raw_edges(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<RawEdge> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto toks = tokens(strip_comment(line));
    if (toks.empty()) continue;
    RawEdge e{0, 0, line_no};
    if (toks.size() != 2 || !parse_number(toks[0], e.u) ||
        !parse_number(toks[1], e.v)) {
      throw ParseError(path.string(), line_no,
                       "expected two integer node ids, got '" + line + "'");
    }
    out.push_back(e);
  }
  return out;
}

}  // namespace

Adjacency read_edges(const std::filesystem::path& path, Index num_nodes) {
  std::vector<Edge> edges;
  for (const RawEdge& e : read_raw_edges(path)) {
    if (e.u < 0 || e.v < 0 || e.u >= num_nodes || e.v >= num_nodes) {
      throw BoundsError(path.string() + ":" + std::to_string(e.line) +
                        ": edge (" + std::to_string(e.u) + ", " +
                        std::to_string(e.v) + ") outside [0, " +
                        std::to_string(num_nodes) + ")");
    }
    edges.push_back({static_cast<Index>(e.u), static_cast<Index>(e.v)});
  }
  return Adjacency(num_nodes, std::move(edges));
}

RemappedEdgeList read_edges_remapped(const std::filesystem::path& path) {
  std::vector<RawEdge> raw = read_raw_edges(path);
  std::map<std::int64_t, Index> ids;
  for (const RawEdge& e : raw) {
    if (e.u < 0 || e.v < 0) {
      throw BoundsError(path.string() + ":" + std::to_string(e.line) +
                        ": negative node id");
    }
    ids.emplace(e.u, 0);
    ids.emplace(e.v, 0);
  }
  RemappedEdgeList out;
  Index next = 0;
  for (auto& [original, dense] : ids) {
    dense = next++;
    out.original_ids.push_back(original);
  }
  std::vector<Edge> edges;
  edges.reserve(raw.size());
  for (const RawEdge& e : raw) edges.push_back({ids[e.u], ids[e.v]});
  out.adjacency = Adjacency(next, std::move(edges));
  return out;
}

void write_edges(const std::filesystem::path& path, const Adjacency& adjacency) {
  std::ofstream out = open_output(path);
  out << "# " << adjacency.num_nodes() << " nodes, " << adjacency.num_edges()
      << " undirected edges\n";
  for (const Edge& e : adjacency.edges()) out << e.u << '\t' << e.v << '\n';
}

MatrixXd read_features(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    Index count = 0;
    std::string_view rest(line);
    while (true) {
      auto comma = rest.find(',');
      std::string_view cell = rest.substr(0, comma);
      double value = 0;
      if (!parse_number(cell, value)) {
        throw ParseError(path.string(), line_no,
                         "invalid decimal '" + std::string(trim(cell)) + "'");
      }
      values.push_back(value);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols < 0) cols = count;
    if (count != cols) {
      throw ParseError(path.string(), line_no,
                       "row has " + std::to_string(count) + " values, expected " +
                           std::to_string(cols));
    }
    ++rows;
  }
  if (cols < 0) cols = 0;
  MatrixXd features(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index k = 0; k < cols; ++k) features(i, k) = values[i * cols + k];
  }
  return features;
}

void write_features(const std::filesystem::path& path, const MatrixXd& features) {
  std::ofstream out = open_output(path);
  for (Index i = 0; i < features.rows(); ++i) {
    for (Index k = 0; k < features.cols(); ++k) {
      if (k > 0) out << ',';
      out << format_double(features(i, k));
    }
    out << '\n';
  }
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    int label = 0;
    if (!parse_number(trim(line), label)) {
      throw ParseError(path.string(), line_no,
                       "invalid label '" + std::string(trim(line)) + "'");
    }
    labels.push_back(label);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path,
                  const std::vector<int>& labels) {
  std::ofstream out = open_output(path);
  for (int label : labels) out << label << '\n';
}

Splits read_splits(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  Splits s;
  auto read_part = [&](const char* key, std::vector<Index>& part) {
    if (!doc.contains(key)) return;
    const auto& arr = doc.at(key);
    if (!arr.is_array()) {
      throw ParseError(path.string(), 0, std::string("'") + key + "' is not an array");
    }
    for (const auto& v : arr) {
      if (!v.is_number_integer()) {
        throw ParseError(path.string(), 0,
                         std::string("non-integer entry in '") + key + "'");
      }
      part.push_back(v.get<Index>());
    }
  };
  if (!doc.is_object()) throw ParseError(path.string(), 0, "expected a JSON object");
  read_part("train", s.train);
  read_part("val", s.val);
  read_part("test", s.test);
  return s;
}

void write_splits(const std::filesystem::path& path, const Splits& splits) {
  nlohmann::json doc = {
      {"train", splits.train}, {"val", splits.val}, {"test", splits.test}};
  std::ofstream out = open_output(path);
  out << doc.dump() << '\n';
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "edges.tsv", dir / "features.csv", dir / "labels.txt",
          dir / "splits.json"};
}

Graph load_graph(const std::filesystem::path& edge_file,
                 const std::filesystem::path& feature_file,
                 const std::filesystem::path& label_file,
                 const std::filesystem::path& split_file) {
  MatrixXd features = read_features(feature_file);
  const Index n = features.rows();
  Adjacency adjacency = read_edges(edge_file, n);
  std::vector<int> labels = read_labels(label_file);
  Splits splits = read_splits(split_file);
  return Graph(std::move(adjacency), std::move(features), std::move(labels),
               std::move(splits));
}

Graph load_graph(const DatasetPaths& paths) {
  return load_graph(paths.edges, paths.features, paths.labels, paths.splits);
}

void save_graph(const Graph& graph, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  DatasetPaths paths = DatasetPaths::in_directory(dir);
  write_edges(paths.edges, graph.adjacency());
  write_features(paths.features, graph.features());
  write_labels(paths.labels, graph.labels());
  write_splits(paths.splits, graph.splits());
}

}  // namespace edgeveil
