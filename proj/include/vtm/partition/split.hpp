#pragma once

#include <filesystem>
#include <vector>

#include "vtm/core/linalg.hpp"
#include "vtm/core/system.hpp"
#include "vtm/partition/scheme.hpp"

namespace vtm {

/// Addresses one line attachment: terminal index inside a subdomain.
struct TerminalRef {
  SubdomainId subdomain = 0;
  int terminal = 0;

  friend bool operator==(const TerminalRef&, const TerminalRef&) = default;
};

/// Attachment point of a virtual transmission line on a port. Twin splits
/// give each port exactly one terminal (same order as the ports); four-way
/// children carry two.
struct Terminal {
  int port = 0;  // local port index
  int line = 0;  // index into SplitSystem::lines
  TerminalRef twin;
};

/// One split subgraph. Local vertex order is ports first (ascending parent
/// id), then inner vertices (ascending id).
struct Subdomain {
  SubdomainId id = 0;
  std::vector<VertexId> parents;  // local vertex -> original vertex
  int num_ports = 0;
  std::vector<Terminal> terminals;
  SparseSymmetricSystem system;  // split matrix and sources, local order

  int dim() const { return static_cast<int>(parents.size()); }
  int num_inner() const { return dim() - num_ports; }
  int num_terminals() const { return static_cast<int>(terminals.size()); }
};

/// Virtual transmission line between two children of the same parent.
/// Endpoint a is the senior side (first side of the pair).
struct VirtualTransmissionLine {
  int id = 0;
  VertexId parent = 0;
  TerminalRef a;
  TerminalRef b;
};

struct SplitSystem {
  SparseSymmetricSystem original;
  PartitionScheme scheme;
  std::vector<Subdomain> subdomains;
  std::vector<VirtualTransmissionLine> lines;

  int num_vertices() const { return original.dim(); }
  int total_local_vertices() const;
};

/// Electric vertex splitting of `g` under `scheme`. Throws InputError on a
/// scheme/graph mismatch or a cross-subdomain edge with an inner endpoint.
SplitSystem split(const ElectricGraph& g, const PartitionScheme& scheme);

struct ConformalityReport {
  std::vector<Definiteness> subdomains;

  bool conformal() const;  // every subgraph SPD or SNND
  bool all_spd() const;
};

ConformalityReport verify_conformal(const SplitSystem& s);

struct MergeResult {
  Eigen::VectorXd x;
  double max_disagreement = 0.0;  // largest spread among children of a parent
};

/// Inner potentials are copied; a parent's potential is the mean of its
/// children's potentials.
MergeResult merge(const SplitSystem& s,
                  const std::vector<Eigen::VectorXd>& local_solutions);

/// Copies a global vector onto every subdomain's local ordering.
std::vector<Eigen::VectorXd> scatter(const SplitSystem& s,
                                     const Eigen::VectorXd& x);

/// Sums every subgraph back onto its parent vertices, the system obtained by
/// tying children together with opposite inflow currents.
SparseSymmetricSystem fold(const SplitSystem& s);

/// Largest |fold(s) - original| entry relative to max(1, |original entry|).
double reversibility_residual(const SplitSystem& s);

/// Writes subdomain_<j>.mtx, subdomain_<j>.rhs and subdomain_<j>.ports
/// (port table: local index, parent, line, twin subdomain, twin terminal).
void export_split(const SplitSystem& s, const std::filesystem::path& dir);

}  // namespace vtm
