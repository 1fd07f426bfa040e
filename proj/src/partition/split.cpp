#include "vtm/partition/split.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <unordered_map>

#include "vtm/core/errors.hpp"
#include "vtm/core/text_io.hpp"

namespace vtm {

int SplitSystem::total_local_vertices() const {
  int total = 0;
  for (const auto& s : subdomains) total += s.dim();
  return total;
}

SplitSystem split(const ElectricGraph& g, const PartitionScheme& scheme) {
  scheme.validate(g);
  const int n = g.size();
  const int N = scheme.num_subdomains;

  SplitSystem out;
  out.original = graph_to_system(g);
  out.scheme = scheme;
  out.subdomains.resize(static_cast<std::size_t>(N));

  // child_local[i][c]: local index of child c of boundary[i] on its side.
  std::vector<std::vector<int>> child_local(scheme.boundary.size());
  std::vector<int> inner_local(static_cast<std::size_t>(n), -1);
  std::unordered_map<VertexId, std::size_t> boundary_index;
  for (std::size_t i = 0; i < scheme.boundary.size(); ++i) {
    boundary_index[scheme.boundary[i].vertex] = i;
  }

  for (SubdomainId j = 0; j < N; ++j) {
    auto& sub = out.subdomains[static_cast<std::size_t>(j)];
    sub.id = j;
  }
  for (std::size_t i = 0; i < scheme.boundary.size(); ++i) {
    const auto& b = scheme.boundary[i];
    child_local[i].resize(b.sides.size());
    for (std::size_t c = 0; c < b.sides.size(); ++c) {
      auto& sub = out.subdomains[static_cast<std::size_t>(b.sides[c])];
      child_local[i][c] = sub.dim();
      sub.parents.push_back(b.vertex);
    }
  }
  for (auto& sub : out.subdomains) sub.num_ports = sub.dim();
  for (VertexId v = 0; v < n; ++v) {
    const SubdomainId o = scheme.owner[static_cast<std::size_t>(v)];
    if (o == kBoundary) continue;
    auto& sub = out.subdomains[static_cast<std::size_t>(o)];
    inner_local[static_cast<std::size_t>(v)] = sub.dim();
    sub.parents.push_back(v);
  }

  std::vector<std::vector<MatrixEntry>> entries(static_cast<std::size_t>(N));
  std::vector<std::vector<double>> rhs(static_cast<std::size_t>(N));
  for (SubdomainId j = 0; j < N; ++j) {
    rhs[static_cast<std::size_t>(j)].assign(
        static_cast<std::size_t>(out.subdomains[static_cast<std::size_t>(j)].dim()), 0.0);
  }
  auto add = [&](SubdomainId j, int r, int c, double value) {
    entries[static_cast<std::size_t>(j)].push_back({r, c, value});
  };

  for (VertexId v = 0; v < n; ++v) {
    const auto& vert = g.vertices[static_cast<std::size_t>(v)];
    const SubdomainId o = scheme.owner[static_cast<std::size_t>(v)];
    if (o != kBoundary) {
      const int l = inner_local[static_cast<std::size_t>(v)];
      add(o, l, l, vert.weight);
      rhs[static_cast<std::size_t>(o)][static_cast<std::size_t>(l)] = vert.source;
      continue;
    }
    const std::size_t i = boundary_index.at(v);
    const auto& b = scheme.boundary[i];
    for (std::size_t c = 0; c < b.sides.size(); ++c) {
      const int l = child_local[i][c];
      add(b.sides[c], l, l, b.weights[c]);
      rhs[static_cast<std::size_t>(b.sides[c])][static_cast<std::size_t>(l)] = b.sources[c];
    }
  }

  for (const auto& e : g.edges) {
    const VertexId a = std::min(e.a, e.b), b = std::max(e.a, e.b);
    const SubdomainId oa = scheme.owner[static_cast<std::size_t>(a)];
    const SubdomainId ob = scheme.owner[static_cast<std::size_t>(b)];
    if (oa != kBoundary && ob != kBoundary) {
      add(oa, inner_local[static_cast<std::size_t>(a)],
          inner_local[static_cast<std::size_t>(b)], e.weight);
    } else if (oa == kBoundary && ob == kBoundary) {
      const EdgeSplit* es = scheme.find_edge(a, b);
      const std::size_t ia = boundary_index.at(a), ib = boundary_index.at(b);
      for (std::size_t s = 0; s < es->sides.size(); ++s) {
        const SubdomainId side = es->sides[s];
        const int ca = scheme.boundary[ia].child_on(side);
        const int cb = scheme.boundary[ib].child_on(side);
        add(side, child_local[ia][static_cast<std::size_t>(ca)],
            child_local[ib][static_cast<std::size_t>(cb)], es->weights[s]);
      }
    } else {
      const VertexId v = oa == kBoundary ? a : b;
      const VertexId u = oa == kBoundary ? b : a;
      const SubdomainId o = oa == kBoundary ? ob : oa;
      const std::size_t iv = boundary_index.at(v);
      const int c = scheme.boundary[iv].child_on(o);
      add(o, child_local[iv][static_cast<std::size_t>(c)],
          inner_local[static_cast<std::size_t>(u)], e.weight);
    }
  }

  for (SubdomainId j = 0; j < N; ++j) {
    auto& sub = out.subdomains[static_cast<std::size_t>(j)];
    sub.system = SparseSymmetricSystem(sub.dim(),
                                       std::move(entries[static_cast<std::size_t>(j)]),
                                       std::move(rhs[static_cast<std::size_t>(j)]));
  }

  for (std::size_t i = 0; i < scheme.boundary.size(); ++i) {
    const auto& b = scheme.boundary[i];
    for (auto [c1, c2] : b.links) {
      const int id = static_cast<int>(out.lines.size());
      auto& sa = out.subdomains[static_cast<std::size_t>(b.sides[static_cast<std::size_t>(c1)])];
      auto& sb = out.subdomains[static_cast<std::size_t>(b.sides[static_cast<std::size_t>(c2)])];
      TerminalRef ra{sa.id, sa.num_terminals()};
      sa.terminals.push_back({child_local[i][static_cast<std::size_t>(c1)], id, {}});
      TerminalRef rb{sb.id, sb.num_terminals()};
      sb.terminals.push_back({child_local[i][static_cast<std::size_t>(c2)], id, {}});
      sa.terminals.back().twin = rb;
      sb.terminals.back().twin = ra;
      out.lines.push_back({id, b.vertex, ra, rb});
    }
  }
  return out;
}

bool ConformalityReport::conformal() const {
  return std::all_of(subdomains.begin(), subdomains.end(), [](Definiteness d) {
    return d != Definiteness::kIndefinite;
  });
}

bool ConformalityReport::all_spd() const {
  return std::all_of(subdomains.begin(), subdomains.end(), [](Definiteness d) {
    return d == Definiteness::kPositiveDefinite;
  });
}

ConformalityReport verify_conformal(const SplitSystem& s) {
  ConformalityReport report;
  for (const auto& sub : s.subdomains) {
    report.subdomains.push_back(classify(sub.system.matrix()));
  }
  return report;
}

MergeResult merge(const SplitSystem& s,
                  const std::vector<Eigen::VectorXd>& local_solutions) {
  if (local_solutions.size() != s.subdomains.size()) {
    throw InputError("merge needs one local solution per subdomain");
  }
  const int n = s.num_vertices();
  MergeResult out;
  out.x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd first = Eigen::VectorXd::Constant(n, NAN);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, INFINITY);
  Eigen::VectorXd hi = Eigen::VectorXd::Constant(n, -INFINITY);
  std::vector<int> count(static_cast<std::size_t>(n), 0);
  for (std::size_t j = 0; j < s.subdomains.size(); ++j) {
    const auto& sub = s.subdomains[j];
    const auto& x = local_solutions[j];
    if (x.size() != sub.dim()) {
      throw InputError("local solution " + std::to_string(j) + " has length " +
                       std::to_string(x.size()) + ", expected " +
                       std::to_string(sub.dim()));
    }
    for (int l = 0; l < sub.dim(); ++l) {
      const VertexId v = sub.parents[static_cast<std::size_t>(l)];
      if (count[static_cast<std::size_t>(v)]++ == 0) first(v) = x(l);
      // Mean taken as first + mean offset, exact when all children agree.
      offset(v) += x(l) - first(v);
      lo(v) = std::min(lo(v), x(l));
      hi(v) = std::max(hi(v), x(l));
    }
  }
  for (VertexId v = 0; v < n; ++v) {
    const int c = count[static_cast<std::size_t>(v)];
    if (c == 0) throw InputError("vertex " + std::to_string(v) + " has no local copy");
    out.x(v) = first(v) + offset(v) / c;
    out.max_disagreement = std::max(out.max_disagreement, hi(v) - lo(v));
  }
  return out;
}

std::vector<Eigen::VectorXd> scatter(const SplitSystem& s, const Eigen::VectorXd& x) {
  if (x.size() != s.num_vertices()) throw InputError("scatter: wrong vector length");
  std::vector<Eigen::VectorXd> out;
  for (const auto& sub : s.subdomains) {
    Eigen::VectorXd local(sub.dim());
    for (int l = 0; l < sub.dim(); ++l) local(l) = x(sub.parents[static_cast<std::size_t>(l)]);
    out.push_back(std::move(local));
  }
  return out;
}

SparseSymmetricSystem fold(const SplitSystem& s) {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<double> rhs(static_cast<std::size_t>(s.num_vertices()), 0.0);
  for (const auto& sub : s.subdomains) {
    for (const auto& e : sub.system.entries()) {
      VertexId r = sub.parents[static_cast<std::size_t>(e.row)];
      VertexId c = sub.parents[static_cast<std::size_t>(e.col)];
      triplets.emplace_back(std::min(r, c), std::max(r, c), e.value);
    }
    for (int l = 0; l < sub.dim(); ++l) {
      rhs[static_cast<std::size_t>(sub.parents[static_cast<std::size_t>(l)])] +=
          sub.system.rhs()[static_cast<std::size_t>(l)];
    }
  }
  SparseMatrix upper(s.num_vertices(), s.num_vertices());
  upper.setFromTriplets(triplets.begin(), triplets.end());
  std::vector<MatrixEntry> entries;
  for (int k = 0; k < upper.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(upper, k); it; ++it) {
      entries.push_back({static_cast<VertexId>(it.row()),
                         static_cast<VertexId>(it.col()), it.value()});
    }
  }
  return SparseSymmetricSystem(s.num_vertices(), std::move(entries), std::move(rhs));
}

double reversibility_residual(const SplitSystem& s) {
  const auto folded = fold(s);
  double worst = 0.0;
  const SparseMatrix a = s.original.matrix();
  const SparseMatrix f = folded.matrix();
  const SparseMatrix d = f - a;
  for (int k = 0; k < d.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) {
      const double ref = std::max(1.0, std::abs(a.coeff(it.row(), it.col())));
      worst = std::max(worst, std::abs(it.value()) / ref);
    }
  }
  for (int i = 0; i < s.num_vertices(); ++i) {
    const double ref = std::max(1.0, std::abs(s.original.rhs()[static_cast<std::size_t>(i)]));
    worst = std::max(worst, std::abs(folded.rhs()[static_cast<std::size_t>(i)] -
                                     s.original.rhs()[static_cast<std::size_t>(i)]) /
                                ref);
  }
  return worst;
}

void export_split(const SplitSystem& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& sub : s.subdomains) {
    const std::string stem = "subdomain_" + std::to_string(sub.id);
    save_system(sub.system, dir / (stem + ".mtx"), dir / (stem + ".rhs"));
    std::ofstream ports(dir / (stem + ".ports"));
    if (!ports) throw InputError("cannot write port table in " + dir.string());
    ports << "# local parent line twin_subdomain twin_terminal\n";
    for (const auto& t : sub.terminals) {
      ports << t.port << ' ' << sub.parents[static_cast<std::size_t>(t.port)] << ' '
            << t.line << ' ' << t.twin.subdomain << ' ' << t.twin.terminal << '\n';
    }
  }
}

}  // namespace vtm
