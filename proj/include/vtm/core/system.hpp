#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace vtm {

using VertexId = std::int32_t;
using SubdomainId = std::int32_t;

using SparseMatrix = Eigen::SparseMatrix<double>;

/// One stored coefficient of a symmetric matrix, upper triangle (row <= col).
struct MatrixEntry {
  VertexId row = 0;
  VertexId col = 0;
  double value = 0.0;

  friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

/// Symmetric linear system A x = b in upper-triangular coordinate storage.
///
/// The stored form is canonical: entries are sorted by (row, col), every
/// diagonal entry is present (explicit zero when absent from the input) and
/// zero-valued off-diagonal entries are dropped. Lower-triangle input entries
/// are mirrored into the upper triangle; storing both (i, j) and (j, i) is a
/// duplicate.
class SparseSymmetricSystem {
 public:
  SparseSymmetricSystem() = default;

  /// Throws InputError on dim < 1, out-of-range indices, duplicate pairs,
  /// non-finite values or an rhs of the wrong length.
  SparseSymmetricSystem(int dim, std::vector<MatrixEntry> entries,
                        std::vector<double> rhs);

  int dim() const { return dim_; }
  std::span<const MatrixEntry> entries() const { return entries_; }
  std::span<const double> rhs() const { return rhs_; }

  double diagonal(VertexId i) const;

  /// Full (both triangles) sparse matrix.
  SparseMatrix matrix() const;
  Eigen::MatrixXd dense() const;
  Eigen::VectorXd rhs_vector() const;

  friend bool operator==(const SparseSymmetricSystem&,
                         const SparseSymmetricSystem&) = default;

 private:
  int dim_ = 0;
  std::vector<MatrixEntry> entries_;
  std::vector<double> rhs_;
  std::vector<std::size_t> diagonal_slot_;
};

struct Vertex {
  VertexId id = 0;
  double weight = 0.0;  // a_ii
  double source = 0.0;  // b_i, inflow current source

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

struct Edge {
  VertexId a = 0;  // a < b
  VertexId b = 0;
  double weight = 0.0;  // a_ab

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  VertexId vertex = 0;
  double weight = 0.0;
};

/// Weighted undirected graph with per-vertex current sources. One-to-one
/// with a symmetric linear system: vertex weights are the diagonal, edge
/// weights the off-diagonal coefficients, sources the right-hand side.
struct ElectricGraph {
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  int size() const { return static_cast<int>(vertices.size()); }

  /// Throws InputError when ids are not 0..n-1 in order, an edge is a
  /// self-loop, out of range, zero-weighted or duplicated.
  void validate() const;

  /// Neighbor lists sorted by vertex id.
  std::vector<std::vector<Neighbor>> adjacency() const;

  friend bool operator==(const ElectricGraph&, const ElectricGraph&) = default;
};

ElectricGraph system_to_graph(const SparseSymmetricSystem& sys);
SparseSymmetricSystem graph_to_system(const ElectricGraph& g);

/// True iff a symmetric factorization with strictly positive pivots exists,
/// pivots measured against kPivotTolerance * max|a_ii|.
bool is_spd(const SparseSymmetricSystem& sys);

/// Quadratic form v^T A v.
double quadratic_form(const SparseSymmetricSystem& sys,
                      const Eigen::VectorXd& v);

}  // namespace vtm
