#pragma once

#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include "vtm/core/system.hpp"
#include "vtm/core/text_io.hpp"

namespace vtm {

/// Owner value marking a vertex of the splitting boundary.
inline constexpr SubdomainId kBoundary = -1;

/// Caller-provided vertex placement used to derive a partition scheme.
///
/// A vertex is a boundary vertex when its owner is kBoundary, or when it is
/// owned but adjacent to an owned vertex of another subdomain. The subdomains
/// a boundary vertex is split across ("sides") are inferred from its
/// neighbors unless listed in `sides`; an explicit list also fixes the ring
/// order used to link four-way children.
struct Assignment {
  int num_subdomains = 0;  // 0: one more than the largest owner
  std::vector<SubdomainId> owner;
  std::map<VertexId, std::vector<SubdomainId>> sides;
};

/// How one boundary vertex is split: one child per side, carrying the given
/// weight and source shares. `links` lists child-index pairs joined by a
/// virtual transmission line.
struct VertexSplit {
  VertexId vertex = 0;
  std::vector<SubdomainId> sides;
  std::vector<double> weights;
  std::vector<double> sources;
  std::vector<std::pair<int, int>> links;

  int children() const { return static_cast<int>(sides.size()); }
  int child_on(SubdomainId side) const;  // -1 when absent

  friend bool operator==(const VertexSplit&, const VertexSplit&) = default;
};

/// Weight shares of an edge whose endpoints are both boundary vertices.
struct EdgeSplit {
  VertexId a = 0;  // a < b
  VertexId b = 0;
  std::vector<SubdomainId> sides;
  std::vector<double> weights;

  friend bool operator==(const EdgeSplit&, const EdgeSplit&) = default;
};

/// Electric vertex splitting scheme: inner vertex placement plus the weight,
/// source and edge shares of every boundary vertex.
struct PartitionScheme {
  int num_subdomains = 0;
  std::vector<SubdomainId> owner;   // kBoundary for boundary vertices
  std::vector<VertexSplit> boundary;  // ascending vertex
  std::vector<EdgeSplit> edges;       // ascending (a, b)

  /// 0 without boundary, 1 for twin splits, 2 for up to four-way splits.
  int split_level() const;

  const VertexSplit* find_boundary(VertexId v) const;
  const EdgeSplit* find_edge(VertexId a, VertexId b) const;

  /// Structural and conservation checks against the graph; shares must sum
  /// to the parent value within 1e-12 relative. Throws InputError.
  void validate(const ElectricGraph& g) const;

  friend bool operator==(const PartitionScheme&, const PartitionScheme&) = default;
};

/// Child-index pairs for a vertex split into k children: one line for twins,
/// a ring otherwise.
std::vector<std::pair<int, int>> default_links(int children);

/// Diagonal-dominance based conformal scheme. Each child receives the
/// magnitude of its incident edge shares plus an equal part of the vertex's
/// diagonal surplus a_ii - sum|a_ij|; boundary-boundary edges and sources are
/// split evenly. Throws InputError when a boundary vertex has a negative
/// surplus (supply a manual scheme instead) or the assignment is invalid.
PartitionScheme default_conformal_scheme(const ElectricGraph& g,
                                         const Assignment& assignment);

KeyValueDocument to_document(const PartitionScheme& scheme);
PartitionScheme scheme_from_document(const KeyValueDocument& doc);
void save_scheme(const PartitionScheme& scheme, const std::filesystem::path& path);
PartitionScheme load_scheme(const std::filesystem::path& path);

}  // namespace vtm
