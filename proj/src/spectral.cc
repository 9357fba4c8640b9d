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
#include "edgeveil/spectral.h"

#include <fstream>
#include <sstream>

#include "edgeveil/format.h"
#include "edgeveil/rng.h"

namespace edgeveil {

std::vector<EdgeToggle> sample_toggles(const Adjacency& adjacency, Index trials,
                                       std::uint64_t seed, bool exhaustive) {
  const Index n = adjacency.num_nodes();
  if (n < 2) throw ValidationError("single-edge neighbours need n >= 2");
  std::vector<EdgeToggle> out;
  if (exhaustive) {
    out.reserve(static_cast<std::size_t>(Adjacency::max_edges(n)));
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        out.push_back({{i, j}, !adjacency.has_edge(i, j)});
      }
    }
    return out;
  }
  RandomStream rng(seed, "neighbors/toggles");
  out.reserve(static_cast<std::size_t>(trials));
  for (Index t = 0; t < trials; ++t) {
    Index i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    Index j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
    if (j >= i) ++j;
    if (i > j) std::swap(i, j);
    out.push_back({{i, j}, !adjacency.has_edge(i, j)});
  }
  return out;
}

MatrixXd project_toggled(const LowRankFactorization<double>& f,
                         const EdgeToggle& toggle) {
  const Index a = toggle.pair.u;
  const Index b = toggle.pair.v;
  const double sign = toggle.added ? 1.0 : -1.0;
  MatrixXd s_prime = f.s.asDiagonal();
  s_prime += sign * (f.U.row(a).transpose() * f.Vt.col(b).transpose() +
                     f.U.row(b).transpose() * f.Vt.col(a).transpose());
  return s_prime;
}

std::vector<BasisSimilarityReport<double>> neighbor_similarities(
    const Adjacency& adjacency, Index k, Index trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("trials must be at least 1");
  const MatrixXd a = adjacency.dense();
  const LowRankFactorization<double> base = svd_truncated(a, k);
  std::vector<BasisSimilarityReport<double>> reports;
  std::size_t worst = 0;
  for (const EdgeToggle& t : sample_toggles(adjacency, trials, seed, false)) {
    MatrixXd a_prime = a;
    double v = t.added ? 1.0 : 0.0;
    a_prime(t.pair.u, t.pair.v) = v;
    a_prime(t.pair.v, t.pair.u) = v;
    reports.push_back(basis_similarity(base, svd_truncated(a_prime, k), k));
    if (reports.back().mean_similarity() < reports[worst].mean_similarity()) {
      worst = reports.size() - 1;
    }
  }
  reports[worst].worst_case = true;
  return reports;
}

AssumptionReport assumption_check(const Adjacency& adjacency, Index r,
                                  const AssumptionCheckOptions& options) {
  if (options.trials < 1) throw ValidationError("trials must be at least 1");
  return assumption_check(adjacency, svd_truncated(adjacency.dense(), r), options);
}

AssumptionReport assumption_check(const Adjacency& adjacency,
                                  const LowRankFactorization<double>& f,
                                  const AssumptionCheckOptions& options) {
  if (options.trials < 1) throw ValidationError("trials must be at least 1");
  if (f.num_nodes() != adjacency.num_nodes()) {
    throw DimensionError("factorization does not match the graph");
  }
  AssumptionReport report;
  report.rank = f.rank();
  report.dominance_ratio = options.dominance_ratio;
  for (const EdgeToggle& t :
       sample_toggles(adjacency, options.trials, options.seed, options.exhaustive)) {
    MatrixXd s_prime = project_toggled(f, t);
    NeighborProjection p{t};
    p.min_diagonal = s_prime.diagonal().cwiseAbs().minCoeff();
    MatrixXd off = s_prime;
    off.diagonal().setZero();
    p.max_off_diagonal = off.cwiseAbs().maxCoeff();
    p.ratio = p.max_off_diagonal > 0 ? p.min_diagonal / p.max_off_diagonal
                                     : std::numeric_limits<double>::infinity();
    report.neighbors.push_back(p);
    if (p.ratio < report.neighbors[report.worst].ratio) {
      report.worst = report.neighbors.size() - 1;
    }
  }
  report.aligned = report.neighbors[report.worst].ratio >= options.dominance_ratio;
  return report;
}

void write_factorization(const std::filesystem::path& path,
                         const LowRankFactorization<double>& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  auto write_row = [&](const auto& row) {
    for (Index k = 0; k < row.size(); ++k) {
      if (k > 0) out << ' ';
      out << format_double(row(k));
    }
    out << '\n';
  };
  out << f.num_nodes() << ' ' << f.rank() << '\n';
  for (Index i = 0; i < f.U.rows(); ++i) write_row(f.U.row(i));
  write_row(f.s.transpose());
  for (Index i = 0; i < f.Vt.rows(); ++i) write_row(f.Vt.row(i));
}

LowRankFactorization<double> read_factorization(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::size_t line_no = 0;
  std::string line;
  auto next_row = [&](Index expected) {
    if (!std::getline(in, line)) {
      throw ParseError(path.string(), line_no + 1, "unexpected end of file");
    }
    ++line_no;
    std::istringstream row(line);
    std::vector<double> values;
    std::string token;
    while (row >> token) {
      try {
        values.push_back(parse_double(token));
      } catch (const std::invalid_argument&) {
        throw ParseError(path.string(), line_no, "invalid number '" + token + "'");
      }
    }
    if (static_cast<Index>(values.size()) != expected) {
      throw ParseError(path.string(), line_no,
                       "expected " + std::to_string(expected) + " values, found " +
                           std::to_string(values.size()));
    }
    return values;
  };
  std::vector<double> header = next_row(2);
  const Index n = static_cast<Index>(header[0]);
  const Index r = static_cast<Index>(header[1]);
  if (n < 1 || r < 1 || r > n || header[0] != double(n) || header[1] != double(r)) {
    throw ParseError(path.string(), 1, "invalid header");
  }
  LowRankFactorization<double> f{MatrixXd(n, r), VectorXd(r), MatrixXd(r, n)};
  for (Index i = 0; i < n; ++i) {
    std::vector<double> row = next_row(r);
    for (Index k = 0; k < r; ++k) f.U(i, k) = row[k];
  }
  std::vector<double> s = next_row(r);
  for (Index k = 0; k < r; ++k) f.s(k) = s[k];
  for (Index i = 0; i < r; ++i) {
    std::vector<double> row = next_row(n);
    for (Index k = 0; k < n; ++k) f.Vt(i, k) = row[k];
  }
  return f;
}

}  // namespace edgeveil
