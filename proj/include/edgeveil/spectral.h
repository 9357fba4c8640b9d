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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Eigenvalues>

#include "edgeveil/eigen_types.h"
#include "edgeveil/errors.h"
#include "edgeveil/graph.h"

namespace edgeveil {

// Top-r singular triplets of an n x n matrix: A ~= U * diag(s) * Vt.
template <typename Scalar>
struct LowRankFactorization {
  Matrix<Scalar> U;   // n x r, orthonormal columns
  Vector<Scalar> s;   // r, non-negative, descending
  Matrix<Scalar> Vt;  // r x n, orthonormal rows

  Index rank() const { return s.size(); }
  Index num_nodes() const { return U.rows(); }

  // The leading r triplets. Factorizations are prefix-consistent, so this
  // equals svd_truncated(A, r) for the A this one came from.
  LowRankFactorization truncated(Index r) const {
    if (r < 1 || r > rank()) {
      throw BoundsError("truncation rank " + std::to_string(r) +
                        " outside [1, " + std::to_string(rank()) + "]");
    }
    return {U.leftCols(r), s.head(r), Vt.topRows(r)};
  }
};

namespace internal {

// Orthonormal basis (as columns of a k x k matrix, coordinates w.r.t. the
// columns of `q`) for the span of q's columns, built by Gram-Schmidt over the
// projections of e_0, e_1, ... onto that span. The result depends only on the
// subspace, not on which orthonormal basis the eigensolver returned.
template <typename Scalar>
Matrix<Scalar> canonical_subspace_basis(const Matrix<Scalar>& q) {
  const Index n = q.rows();
  const Index k = q.cols();
  const Scalar threshold = Scalar(100) * std::sqrt(std::numeric_limits<Scalar>::epsilon());
  Matrix<Scalar> basis = Matrix<Scalar>::Zero(k, k);
  Index found = 0;
  auto residual = [&](Index row) {
    Vector<Scalar> r = q.row(row).transpose();
    for (int pass = 0; pass < 2; ++pass) {
      for (Index t = 0; t < found; ++t) r -= basis.col(t).dot(r) * basis.col(t);
    }
    return r;
  };
  for (Index row = 0; row < n && found < k; ++row) {
    Vector<Scalar> r = residual(row);
    Scalar norm = r.norm();
    if (norm > threshold) basis.col(found++) = r / norm;
  }
  // Pivoted completion; only reached when every remaining projection is tiny.
  while (found < k) {
    Index best = 0;
    Scalar best_norm = -1;
    for (Index row = 0; row < n; ++row) {
      Scalar norm = residual(row).norm();
      if (norm > best_norm) {
        best_norm = norm;
        best = row;
      }
    }
    Vector<Scalar> r = residual(best);
    basis.col(found++) = r / r.norm();
  }
  return basis;
}

// First entry whose magnitude is (within rounding) the column maximum.
template <typename Scalar, typename Derived>
Index sign_anchor(const Eigen::MatrixBase<Derived>& column) {
  Scalar max_abs = column.cwiseAbs().maxCoeff();
  Scalar slack = max_abs * Scalar(1e-9);
  for (Index i = 0; i < column.size(); ++i) {
    if (std::abs(column(i)) >= max_abs - slack) return i;
  }
  return 0;
}

}  // namespace internal

template <typename Derived>
void check_symmetric(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) {
    throw DimensionError("expected a square matrix, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
  }
  if (a.size() == 0) return;
  Scalar scale = std::max(Scalar(1), a.cwiseAbs().maxCoeff());
  Scalar asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(1e-12) * scale) {
    throw ValidationError("expected a symmetric matrix");
  }
}

// Top-r SVD of a symmetric matrix through its eigendecomposition:
// s = |lambda|, U = eigenvectors, Vt rows = sign(lambda) * eigenvectors.
//
// Output is fully deterministic:
//  * singular values that agree to rounding form a cluster whose basis is
//    replaced by the canonical one above, in discovery order;
//  * each U column's first maximal-magnitude entry is positive, and the
//    matching Vt row is flipped with it.
//
// Throws BoundsError unless 1 <= r <= n.
template <typename Derived>
LowRankFactorization<typename Derived::Scalar> svd_truncated(
    const Eigen::MatrixBase<Derived>& a, Index r) {
  using Scalar = typename Derived::Scalar;
  check_symmetric(a);
  const Index n = a.rows();
  if (r < 1 || r > n) {
    throw BoundsError("rank " + std::to_string(r) + " outside [1, " +
                      std::to_string(n) + "]");
  }

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(a.eval(), Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigendecomposition did not converge");
  }
  const Vector<Scalar>& lambda = eig.eigenvalues();
  const Matrix<Scalar>& q = eig.eigenvectors();

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return std::abs(lambda(x)) > std::abs(lambda(y));
  });
  const Scalar top = std::abs(lambda(order[0]));
  const Scalar tol = Scalar(64) * Scalar(n) *
                     std::numeric_limits<Scalar>::epsilon() *
                     std::max(top, Scalar(1));

  LowRankFactorization<Scalar> f{Matrix<Scalar>(n, r), Vector<Scalar>(r),
                                 Matrix<Scalar>(r, n)};
  Index pos = 0;
  while (pos < r) {
    Index end = pos + 1;
    while (end < n && std::abs(lambda(order[end - 1])) -
                              std::abs(lambda(order[end])) <= tol) {
      ++end;
    }
    const Index k = end - pos;
    Scalar value = 0;
    for (Index c = pos; c < end; ++c) value += std::abs(lambda(order[c]));
    value /= Scalar(k);

    Matrix<Scalar> cluster_u(n, k);
    Matrix<Scalar> cluster_v(n, k);
    if (k == 1) {
      cluster_u.col(0) = q.col(order[pos]);
      cluster_v.col(0) = lambda(order[pos]) < 0 && value > tol
                             ? Vector<Scalar>(-q.col(order[pos]))
                             : Vector<Scalar>(q.col(order[pos]));
      value = std::abs(lambda(order[pos]));
    } else {
      Matrix<Scalar> qc(n, k);
      Vector<Scalar> signs(k);
      for (Index c = 0; c < k; ++c) {
        qc.col(c) = q.col(order[pos + c]);
        signs(c) = (lambda(order[pos + c]) < 0 && value > tol) ? Scalar(-1) : Scalar(1);
      }
      Matrix<Scalar> basis = internal::canonical_subspace_basis(qc);
      cluster_u = qc * basis;
      cluster_v = qc * signs.asDiagonal() * basis;
    }

    for (Index c = 0; c < k && pos + c < r; ++c) {
      Index anchor = internal::sign_anchor<Scalar>(cluster_u.col(c));
      Scalar flip = cluster_u(anchor, c) < 0 ? Scalar(-1) : Scalar(1);
      f.U.col(pos + c) = flip * cluster_u.col(c);
      f.Vt.row(pos + c) = flip * cluster_v.col(c).transpose();
      f.s(pos + c) = value;
    }
    pos = end;
  }
  return f;
}

// Projection of a neighbouring matrix onto the anchored bases:
// S' = U^T * A' * V (r x r). Equals diag(s) when A' is the source matrix.
template <typename Scalar, typename Derived>
Matrix<Scalar> project_singular(const Eigen::MatrixBase<Derived>& a_prime,
                                const LowRankFactorization<Scalar>& f) {
  if (a_prime.rows() != f.num_nodes() || a_prime.cols() != f.num_nodes()) {
    throw DimensionError("project_singular: matrix is " +
                         std::to_string(a_prime.rows()) + "x" +
                         std::to_string(a_prime.cols()) + ", bases are for n=" +
                         std::to_string(f.num_nodes()));
  }
  return f.U.transpose() * a_prime.template cast<Scalar>() * f.Vt.transpose();
}

// U * diag(s or s_override) * Vt.
template <typename Scalar>
Matrix<Scalar> reconstruct_low_rank(
    const LowRankFactorization<Scalar>& f,
    const std::optional<std::type_identity_t<Vector<Scalar>>>& s_override =
        std::nullopt) {
  if (s_override && s_override->size() != f.rank()) {
    throw DimensionError("s_override has length " +
                         std::to_string(s_override->size()) + ", rank is " +
                         std::to_string(f.rank()));
  }
  const Vector<Scalar>& s = s_override ? *s_override : f.s;
  return f.U * s.asDiagonal() * f.Vt;
}

// Cosine similarity of corresponding principal bases of two matrices.
// Values are absolute (basis signs are arbitrary); a zero-norm vector yields
// similarity 0 and marks the report degenerate.
template <typename Scalar>
struct BasisSimilarityReport {
  Vector<Scalar> sim_u;
  Vector<Scalar> sim_v;
  bool degenerate = false;
  bool worst_case = false;

  Scalar mean_similarity() const {
    return (sim_u.sum() + sim_v.sum()) / Scalar(sim_u.size() + sim_v.size());
  }
};

template <typename Scalar>
BasisSimilarityReport<Scalar> basis_similarity(
    const LowRankFactorization<Scalar>& a, const LowRankFactorization<Scalar>& b,
    Index k) {
  if (k < 1 || k > a.rank() || k > b.rank()) {
    throw BoundsError("basis_similarity: k exceeds the available rank");
  }
  BasisSimilarityReport<Scalar> report{Vector<Scalar>(k), Vector<Scalar>(k)};
  auto cosine = [&](const auto& x, const auto& y) {
    Scalar denom = x.norm() * y.norm();
    if (denom == Scalar(0)) {
      report.degenerate = true;
      return Scalar(0);
    }
    return std::abs(x.dot(y)) / denom;
  };
  for (Index i = 0; i < k; ++i) {
    report.sim_u(i) = cosine(a.U.col(i), b.U.col(i));
    report.sim_v(i) = cosine(a.Vt.row(i), b.Vt.row(i));
  }
  return report;
}

template <typename DerivedA, typename DerivedB>
BasisSimilarityReport<typename DerivedA::Scalar> basis_similarity(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& a_prime,
    Index k) {
  if (a.rows() != a_prime.rows() || a.cols() != a_prime.cols()) {
    throw DimensionError("basis_similarity: matrices differ in shape");
  }
  return basis_similarity(svd_truncated(a, k), svd_truncated(a_prime, k), k);
}

// ---------------------------------------------------------------------------
// Single-edge neighbour diagnostics (double precision, adjacency inputs).

// A sampled neighbour: the unordered pair whose presence was flipped.
struct EdgeToggle {
  Edge pair;
  bool added = false;
};

// Toggles drawn uniformly over unordered pairs, or all C(n, 2) in row-major
// order when `exhaustive` is set.
std::vector<EdgeToggle> sample_toggles(const Adjacency& adjacency, Index trials,
                                       std::uint64_t seed, bool exhaustive);

// Anchored projection for A' = A with `toggle` applied, using the closed form
// diag(s) +/- (U_a V_b^T + U_b V_a^T).
MatrixXd project_toggled(const LowRankFactorization<double>& f,
                         const EdgeToggle& toggle);

// Per-neighbour similarity of the top-k bases, with the neighbour of smallest
// mean similarity flagged worst_case.
std::vector<BasisSimilarityReport<double>> neighbor_similarities(
    const Adjacency& adjacency, Index k, Index trials, std::uint64_t seed);

struct AssumptionCheckOptions {
  Index trials = 100;
  std::uint64_t seed = 0;
  double dominance_ratio = 100.0;
  bool exhaustive = false;
};

struct NeighborProjection {
  EdgeToggle toggle;
  double min_diagonal = 0;     // min |S'(i,i)|
  double max_off_diagonal = 0; // max |S'(i,j)|, i != j
  double ratio = 0;            // min_diagonal / max_off_diagonal (inf if 0)
};

struct AssumptionReport {
  Index rank = 0;
  double dominance_ratio = 0;
  std::vector<NeighborProjection> neighbors;
  std::size_t worst = 0;  // index into neighbors with the smallest ratio
  bool aligned = false;   // worst ratio >= dominance_ratio
};

// Checks whether single-edge neighbours keep the top-r block of S' diagonally
// dominant. Throws ValidationError when trials < 1.
AssumptionReport assumption_check(const Adjacency& adjacency, Index r,
                                  const AssumptionCheckOptions& options);
AssumptionReport assumption_check(const Adjacency& adjacency,
                                  const LowRankFactorization<double>& f,
                                  const AssumptionCheckOptions& options);

// ---------------------------------------------------------------------------
// Text dump: "n r", then n rows of U, one row of s, r rows of Vt.

void write_factorization(const std::filesystem::path& path,
                         const LowRankFactorization<double>& f);
LowRankFactorization<double> read_factorization(const std::filesystem::path& path);

}  // namespace edgeveil
