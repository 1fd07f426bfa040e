#include "vtm/core/system.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vtm/core/errors.hpp"
#include "vtm/core/linalg.hpp"

namespace vtm {

SparseSymmetricSystem::SparseSymmetricSystem(int dim,
                                             std::vector<MatrixEntry> entries,
                                             std::vector<double> rhs)
    : dim_(dim), rhs_(std::move(rhs)) {
  if (dim < 1) {
    throw InputError("system dimension must be at least 1, got " +
                     std::to_string(dim));
  }
  if (rhs_.size() != static_cast<std::size_t>(dim)) {
    throw InputError("rhs length " + std::to_string(rhs_.size()) +
                     " does not match dimension " + std::to_string(dim));
  }
  for (double v : rhs_) {
    if (!std::isfinite(v)) throw InputError("rhs contains a non-finite value");
  }
  for (auto& e : entries) {
    if (e.row < 0 || e.col < 0 || e.row >= dim || e.col >= dim) {
      throw InputError("entry (" + std::to_string(e.row) + ", " +
                       std::to_string(e.col) + ") out of range");
    }
    if (!std::isfinite(e.value)) {
      throw InputError("matrix contains a non-finite value");
    }
    if (e.row > e.col) std::swap(e.row, e.col);
  }
  std::sort(entries.begin(), entries.end(),
            [](const MatrixEntry& x, const MatrixEntry& y) {
              return x.row != y.row ? x.row < y.row : x.col < y.col;
            });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].row == entries[k - 1].row &&
        entries[k].col == entries[k - 1].col) {
      throw InputError("duplicate entry for pair (" +
                       std::to_string(entries[k].row) + ", " +
                       std::to_string(entries[k].col) + ")");
    }
  }

  entries_.reserve(entries.size() + static_cast<std::size_t>(dim));
  diagonal_slot_.assign(static_cast<std::size_t>(dim), 0);
  std::size_t k = 0;
  for (VertexId i = 0; i < dim; ++i) {
    bool has_diagonal = k < entries.size() && entries[k].row == i &&
                        entries[k].col == i;
    diagonal_slot_[static_cast<std::size_t>(i)] = entries_.size();
    if (has_diagonal) {
      entries_.push_back(entries[k++]);
    } else {
      entries_.push_back({i, i, 0.0});
    }
    for (; k < entries.size() && entries[k].row == i; ++k) {
      if (entries[k].value != 0.0) entries_.push_back(entries[k]);
    }
  }
}

double SparseSymmetricSystem::diagonal(VertexId i) const {
  return entries_[diagonal_slot_.at(static_cast<std::size_t>(i))].value;
}

SparseMatrix SparseSymmetricSystem::matrix() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * entries_.size());
  for (const auto& e : entries_) {
    triplets.emplace_back(e.row, e.col, e.value);
    if (e.row != e.col) triplets.emplace_back(e.col, e.row, e.value);
  }
  SparseMatrix a(dim_, dim_);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

Eigen::MatrixXd SparseSymmetricSystem::dense() const {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim_, dim_);
  for (const auto& e : entries_) {
    a(e.row, e.col) = e.value;
    a(e.col, e.row) = e.value;
  }
  return a;
}

Eigen::VectorXd SparseSymmetricSystem::rhs_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(rhs_.data(),
                                           static_cast<Eigen::Index>(dim_));
}

void ElectricGraph::validate() const {
  const auto n = static_cast<VertexId>(vertices.size());
  for (VertexId i = 0; i < n; ++i) {
    const auto& v = vertices[static_cast<std::size_t>(i)];
    if (v.id != i) {
      throw InputError("vertex ids must be 0..n-1 in order; position " +
                       std::to_string(i) + " holds id " + std::to_string(v.id));
    }
  }
  std::vector<std::pair<VertexId, VertexId>> pairs;
  pairs.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.a == e.b) {
      throw InputError("self-loop on vertex " + std::to_string(e.a));
    }
    if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) {
      throw InputError("edge endpoint out of range");
    }
    if (e.weight == 0.0 || !std::isfinite(e.weight)) {
      throw InputError("edge (" + std::to_string(e.a) + ", " +
                       std::to_string(e.b) + ") has zero or non-finite weight");
    }
    pairs.emplace_back(std::min(e.a, e.b), std::max(e.a, e.b));
  }
  std::sort(pairs.begin(), pairs.end());
  if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
    throw InputError("more than one edge between the same pair of vertices");
  }
}

std::vector<std::vector<Neighbor>> ElectricGraph::adjacency() const {
  std::vector<std::vector<Neighbor>> adj(vertices.size());
  for (const auto& e : edges) {
    adj[static_cast<std::size_t>(e.a)].push_back({e.b, e.weight});
    adj[static_cast<std::size_t>(e.b)].push_back({e.a, e.weight});
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end(),
              [](const Neighbor& x, const Neighbor& y) {
                return x.vertex < y.vertex;
              });
  }
  return adj;
}

ElectricGraph system_to_graph(const SparseSymmetricSystem& sys) {
  ElectricGraph g;
  g.vertices.reserve(static_cast<std::size_t>(sys.dim()));
  for (VertexId i = 0; i < sys.dim(); ++i) {
    g.vertices.push_back(
        {i, sys.diagonal(i), sys.rhs()[static_cast<std::size_t>(i)]});
  }
  for (const auto& e : sys.entries()) {
    if (e.row != e.col) g.edges.push_back({e.row, e.col, e.value});
  }
  return g;
}

SparseSymmetricSystem graph_to_system(const ElectricGraph& g) {
  g.validate();
  if (g.vertices.empty()) throw InputError("graph has no vertices");
  std::vector<MatrixEntry> entries;
  std::vector<double> rhs;
  entries.reserve(g.vertices.size() + g.edges.size());
  rhs.reserve(g.vertices.size());
  for (const auto& v : g.vertices) {
    entries.push_back({v.id, v.id, v.weight});
    rhs.push_back(v.source);
  }
  for (const auto& e : g.edges) {
    entries.push_back({std::min(e.a, e.b), std::max(e.a, e.b), e.weight});
  }
  return SparseSymmetricSystem(g.size(), std::move(entries), std::move(rhs));
}

bool is_spd(const SparseSymmetricSystem& sys) {
  return classify(sys.matrix()) == Definiteness::kPositiveDefinite;
}

double quadratic_form(const SparseSymmetricSystem& sys,
                      const Eigen::VectorXd& v) {
  double sum = 0.0;
  for (const auto& e : sys.entries()) {
    double term = e.value * v(e.row) * v(e.col);
    sum += e.row == e.col ? term : 2.0 * term;
  }
  return sum;
}

}  // namespace vtm
