#include "vtm/partition/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "vtm/core/errors.hpp"

namespace vtm {
namespace {

constexpr double kShareTolerance = 1e-12;

std::string vertex_label(VertexId v) { return "vertex " + std::to_string(v); }

void check_shares(const std::vector<double>& shares, double total,
                  const std::string& what) {
  double sum = 0.0, magnitude = std::abs(total);
  for (double s : shares) {
    if (!std::isfinite(s)) throw InputError(what + " has a non-finite share");
    sum += s;
    magnitude += std::abs(s);
  }
  if (std::abs(sum - total) > kShareTolerance * std::max(magnitude, 1e-300)) {
    throw InputError(what + " shares sum to " + std::to_string(sum) +
                     " instead of " + std::to_string(total));
  }
}

// Equal split whose last part absorbs rounding so the parts sum exactly.
std::vector<double> even_split(double total, int parts) {
  std::vector<double> out(static_cast<std::size_t>(parts), total / parts);
  double rest = total;
  for (int i = 0; i + 1 < parts; ++i) rest -= out[static_cast<std::size_t>(i)];
  out.back() = rest;
  return out;
}

// Orders four or more sides so that consecutive sides (cyclically) co-occur
// on some neighboring boundary vertex; keeps ascending order otherwise.
std::vector<SubdomainId> ring_order(
    std::vector<SubdomainId> sides,
    const std::set<std::pair<SubdomainId, SubdomainId>>& adjacent) {
  if (sides.size() < 4 || sides.size() > 6) return sides;
  auto linked = [&](SubdomainId x, SubdomainId y) {
    return adjacent.count({std::min(x, y), std::max(x, y)}) > 0;
  };
  std::vector<SubdomainId> perm = sides;
  do {
    if (perm.front() != sides.front()) break;
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i) {
      ok = linked(perm[i], perm[(i + 1) % perm.size()]);
    }
    if (ok) return perm;
  } while (std::next_permutation(perm.begin() + 1, perm.end()));
  return sides;
}

std::string join_ints(const std::vector<SubdomainId>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  for (auto f : split_whitespace(text)) out.push_back(parse_double(f));
  return out;
}

std::vector<SubdomainId> parse_ints(const std::string& text) {
  std::vector<SubdomainId> out;
  for (auto f : split_whitespace(text)) {
    out.push_back(static_cast<SubdomainId>(parse_int(f)));
  }
  return out;
}

}  // namespace

int VertexSplit::child_on(SubdomainId side) const {
  for (int c = 0; c < children(); ++c) {
    if (sides[static_cast<std::size_t>(c)] == side) return c;
  }
  return -1;
}

int PartitionScheme::split_level() const {
  int level = 0;
  for (const auto& v : boundary) {
    int k = v.children(), l = 0;
    while ((1 << l) < k) ++l;
    level = std::max(level, l);
  }
  return level;
}

const VertexSplit* PartitionScheme::find_boundary(VertexId v) const {
  auto it = std::lower_bound(
      boundary.begin(), boundary.end(), v,
      [](const VertexSplit& s, VertexId id) { return s.vertex < id; });
  return it != boundary.end() && it->vertex == v ? &*it : nullptr;
}

const EdgeSplit* PartitionScheme::find_edge(VertexId a, VertexId b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{a, b},
                             [](const EdgeSplit& e, std::pair<VertexId, VertexId> k) {
                               return std::pair{e.a, e.b} < k;
                             });
  return it != edges.end() && it->a == a && it->b == b ? &*it : nullptr;
}

void PartitionScheme::validate(const ElectricGraph& g) const {
  g.validate();
  const int n = g.size();
  if (num_subdomains < 1) throw InputError("scheme needs at least one subdomain");
  if (static_cast<int>(owner.size()) != n) {
    throw InputError("scheme covers " + std::to_string(owner.size()) +
                     " vertices, graph has " + std::to_string(n));
  }
  std::vector<int> population(static_cast<std::size_t>(num_subdomains), 0);
  for (VertexId v = 0; v < n; ++v) {
    SubdomainId o = owner[static_cast<std::size_t>(v)];
    if (o < kBoundary || o >= num_subdomains) {
      throw InputError(vertex_label(v) + " has invalid owner " + std::to_string(o));
    }
    if (o != kBoundary) ++population[static_cast<std::size_t>(o)];
  }

  std::size_t marked = 0;
  for (VertexId v = 0; v < n; ++v) {
    if (owner[static_cast<std::size_t>(v)] == kBoundary) ++marked;
  }
  if (marked != boundary.size()) {
    throw InputError("boundary list does not match the vertices marked boundary");
  }
  for (std::size_t i = 0; i < boundary.size(); ++i) {
    const auto& s = boundary[i];
    const std::string label = vertex_label(s.vertex);
    if (i > 0 && boundary[i - 1].vertex >= s.vertex) {
      throw InputError("boundary list must be strictly ascending");
    }
    if (s.vertex < 0 || s.vertex >= n ||
        owner[static_cast<std::size_t>(s.vertex)] != kBoundary) {
      throw InputError(label + " is listed as boundary but not marked so");
    }
    const int k = s.children();
    if (k < 2) throw InputError(label + " must be split across at least two sides");
    std::set<SubdomainId> distinct(s.sides.begin(), s.sides.end());
    if (static_cast<int>(distinct.size()) != k) {
      throw InputError(label + " lists a side twice");
    }
    for (SubdomainId side : s.sides) {
      if (side < 0 || side >= num_subdomains) {
        throw InputError(label + " has invalid side " + std::to_string(side));
      }
      ++population[static_cast<std::size_t>(side)];
    }
    if (static_cast<int>(s.weights.size()) != k ||
        static_cast<int>(s.sources.size()) != k) {
      throw InputError(label + " needs one weight and source share per side");
    }
    const auto& parent = g.vertices[static_cast<std::size_t>(s.vertex)];
    check_shares(s.weights, parent.weight, label + " weight");
    check_shares(s.sources, parent.source, label + " source");

    // Links must connect all children, or a child would float freely.
    if (s.links.empty()) throw InputError(label + " has no transmission lines");
    std::vector<int> group(static_cast<std::size_t>(k));
    std::iota(group.begin(), group.end(), 0);
    auto root = [&](int x) {
      while (group[static_cast<std::size_t>(x)] != x) x = group[static_cast<std::size_t>(x)];
      return x;
    };
    std::set<std::pair<int, int>> seen;
    for (auto [c1, c2] : s.links) {
      if (c1 < 0 || c2 < 0 || c1 >= k || c2 >= k || c1 == c2) {
        throw InputError(label + " has an invalid line between children");
      }
      if (!seen.insert({std::min(c1, c2), std::max(c1, c2)}).second) {
        throw InputError(label + " links the same children twice");
      }
      group[static_cast<std::size_t>(root(c1))] = root(c2);
    }
    for (int c = 1; c < k; ++c) {
      if (root(c) != root(0)) {
        throw InputError(label + " children are not connected by lines");
      }
    }
  }
  for (int j = 0; j < num_subdomains; ++j) {
    if (population[static_cast<std::size_t>(j)] == 0) {
      throw InputError("subdomain " + std::to_string(j) + " is empty");
    }
  }

  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    if (e.a >= e.b) throw InputError("edge split endpoints must satisfy a < b");
    if (i > 0 && std::pair{edges[i - 1].a, edges[i - 1].b} >= std::pair{e.a, e.b}) {
      throw InputError("edge split list must be strictly ascending");
    }
  }
  std::size_t split_edges = 0;
  for (const auto& e : g.edges) {
    const VertexId a = std::min(e.a, e.b), b = std::max(e.a, e.b);
    const SubdomainId oa = owner[static_cast<std::size_t>(a)];
    const SubdomainId ob = owner[static_cast<std::size_t>(b)];
    const std::string label =
        "edge (" + std::to_string(a) + ", " + std::to_string(b) + ")";
    if (oa != kBoundary && ob != kBoundary) {
      if (oa != ob) {
        throw InputError(label + " crosses subdomains without a boundary vertex");
      }
      continue;
    }
    if (oa == kBoundary && ob == kBoundary) {
      const EdgeSplit* es = find_edge(a, b);
      if (es == nullptr) throw InputError(label + " between boundary vertices has no split");
      ++split_edges;
      if (es->sides.empty() || es->sides.size() != es->weights.size()) {
        throw InputError(label + " needs one weight share per side");
      }
      std::set<SubdomainId> distinct(es->sides.begin(), es->sides.end());
      if (distinct.size() != es->sides.size()) {
        throw InputError(label + " lists a side twice");
      }
      const auto* va = find_boundary(a);
      const auto* vb = find_boundary(b);
      for (SubdomainId side : es->sides) {
        if (va->child_on(side) < 0 || vb->child_on(side) < 0) {
          throw InputError(label + " is placed on side " + std::to_string(side) +
                           " which one endpoint does not touch");
        }
      }
      check_shares(es->weights, e.weight, label);
      continue;
    }
    const VertexId v = oa == kBoundary ? a : b;
    const SubdomainId inner_owner = oa == kBoundary ? ob : oa;
    if (find_boundary(v)->child_on(inner_owner) < 0) {
      throw InputError(label + " joins " + vertex_label(v) +
                       " to subdomain " + std::to_string(inner_owner) +
                       " which it is not split into");
    }
  }
  if (split_edges != edges.size()) {
    throw InputError("edge split given for a pair that is not a boundary edge");
  }
}

std::vector<std::pair<int, int>> default_links(int children) {
  if (children < 2) return {};
  if (children == 2) return {{0, 1}};
  std::vector<std::pair<int, int>> links;
  for (int c = 0; c < children; ++c) links.emplace_back(c, (c + 1) % children);
  return links;
}

PartitionScheme default_conformal_scheme(const ElectricGraph& g,
                                         const Assignment& assignment) {
  g.validate();
  const int n = g.size();
  if (static_cast<int>(assignment.owner.size()) != n) {
    throw InputError("assignment covers " + std::to_string(assignment.owner.size()) +
                     " vertices, graph has " + std::to_string(n));
  }
  int num_subdomains = assignment.num_subdomains;
  if (num_subdomains == 0) {
    for (SubdomainId o : assignment.owner) num_subdomains = std::max(num_subdomains, o + 1);
  }
  if (num_subdomains < 1) throw InputError("assignment has no subdomain");
  for (SubdomainId o : assignment.owner) {
    if (o < kBoundary || o >= num_subdomains) {
      throw InputError("assignment owner " + std::to_string(o) + " out of range");
    }
  }
  const auto adj = g.adjacency();
  auto own = [&](VertexId v) { return assignment.owner[static_cast<std::size_t>(v)]; };

  PartitionScheme scheme;
  scheme.num_subdomains = num_subdomains;
  scheme.owner = assignment.owner;
  for (VertexId v = 0; v < n; ++v) {
    if (own(v) == kBoundary) continue;
    for (const auto& nb : adj[static_cast<std::size_t>(v)]) {
      if (own(nb.vertex) != kBoundary && own(nb.vertex) != own(v)) {
        scheme.owner[static_cast<std::size_t>(v)] = kBoundary;
        break;
      }
    }
  }
  for (const auto& [v, _] : assignment.sides) {
    if (v < 0 || v >= n || scheme.owner[static_cast<std::size_t>(v)] != kBoundary) {
      throw InputError("explicit sides given for non-boundary " + vertex_label(v));
    }
  }

  // Sides: explicit, else own subdomain plus those of owned neighbors.
  std::vector<std::vector<SubdomainId>> sides(static_cast<std::size_t>(n));
  for (VertexId v = 0; v < n; ++v) {
    if (scheme.owner[static_cast<std::size_t>(v)] != kBoundary) continue;
    if (auto it = assignment.sides.find(v); it != assignment.sides.end()) {
      sides[static_cast<std::size_t>(v)] = it->second;
      continue;
    }
    std::set<SubdomainId> found;
    if (own(v) != kBoundary) found.insert(own(v));
    for (const auto& nb : adj[static_cast<std::size_t>(v)]) {
      if (own(nb.vertex) != kBoundary) found.insert(own(nb.vertex));
    }
    sides[static_cast<std::size_t>(v)].assign(found.begin(), found.end());
  }
  // Boundary vertices surrounded by boundary vertices inherit their sides.
  for (VertexId v = 0; v < n; ++v) {
    auto& sv = sides[static_cast<std::size_t>(v)];
    if (scheme.owner[static_cast<std::size_t>(v)] != kBoundary || sv.size() >= 2) continue;
    std::set<SubdomainId> found(sv.begin(), sv.end());
    for (const auto& nb : adj[static_cast<std::size_t>(v)]) {
      const auto& sn = sides[static_cast<std::size_t>(nb.vertex)];
      if (sn.size() >= 2) found.insert(sn.begin(), sn.end());
    }
    sv.assign(found.begin(), found.end());
    if (sv.size() < 2) {
      throw InputError(vertex_label(v) + " touches fewer than two subdomains");
    }
  }
  for (VertexId v = 0; v < n; ++v) {
    auto& sv = sides[static_cast<std::size_t>(v)];
    if (sv.size() < 4 || assignment.sides.count(v)) continue;
    std::set<std::pair<SubdomainId, SubdomainId>> adjacent;
    for (const auto& nb : adj[static_cast<std::size_t>(v)]) {
      const auto& sn = sides[static_cast<std::size_t>(nb.vertex)];
      for (std::size_t i = 0; i < sn.size(); ++i) {
        for (std::size_t j = i + 1; j < sn.size(); ++j) {
          adjacent.insert({std::min(sn[i], sn[j]), std::max(sn[i], sn[j])});
        }
      }
    }
    sv = ring_order(sv, adjacent);
  }

  // Edge shares between boundary vertices: even over the common sides.
  for (const auto& e : g.edges) {
    const VertexId a = std::min(e.a, e.b), b = std::max(e.a, e.b);
    if (scheme.owner[static_cast<std::size_t>(a)] != kBoundary ||
        scheme.owner[static_cast<std::size_t>(b)] != kBoundary) {
      continue;
    }
    EdgeSplit es{a, b, {}, {}};
    const auto& sb = sides[static_cast<std::size_t>(b)];
    for (SubdomainId s : sides[static_cast<std::size_t>(a)]) {
      if (std::find(sb.begin(), sb.end(), s) != sb.end()) es.sides.push_back(s);
    }
    if (es.sides.empty()) {
      throw InputError("boundary edge (" + std::to_string(a) + ", " +
                       std::to_string(b) + ") has no common side");
    }
    std::sort(es.sides.begin(), es.sides.end());
    es.weights = even_split(e.weight, static_cast<int>(es.sides.size()));
    scheme.edges.push_back(std::move(es));
  }
  std::sort(scheme.edges.begin(), scheme.edges.end(),
            [](const EdgeSplit& x, const EdgeSplit& y) {
              return std::pair{x.a, x.b} < std::pair{y.a, y.b};
            });

  for (VertexId v = 0; v < n; ++v) {
    if (scheme.owner[static_cast<std::size_t>(v)] != kBoundary) continue;
    VertexSplit split;
    split.vertex = v;
    split.sides = sides[static_cast<std::size_t>(v)];
    const int k = split.children();
    std::vector<double> incident(static_cast<std::size_t>(k), 0.0);
    double off_sum = 0.0;
    for (const auto& nb : adj[static_cast<std::size_t>(v)]) {
      off_sum += std::abs(nb.weight);
      const SubdomainId o = scheme.owner[static_cast<std::size_t>(nb.vertex)];
      if (o != kBoundary) {
        int c = split.child_on(o);
        if (c < 0) {
          throw InputError(vertex_label(v) + " is not split into subdomain " +
                           std::to_string(o) + " of its neighbor " +
                           std::to_string(nb.vertex));
        }
        incident[static_cast<std::size_t>(c)] += std::abs(nb.weight);
        continue;
      }
      const EdgeSplit* es = scheme.find_edge(v, nb.vertex);
      for (std::size_t i = 0; i < es->sides.size(); ++i) {
        incident[static_cast<std::size_t>(split.child_on(es->sides[i]))] +=
            std::abs(es->weights[i]);
      }
    }
    const auto& parent = g.vertices[static_cast<std::size_t>(v)];
    const double surplus = parent.weight - off_sum;
    if (surplus < -kShareTolerance * std::max(std::abs(parent.weight), off_sum)) {
      throw InputError(vertex_label(v) +
                       " is not diagonally dominant (surplus " +
                       std::to_string(surplus) +
                       "); supply a manual partition scheme");
    }
    split.weights.resize(static_cast<std::size_t>(k));
    double rest = parent.weight;
    for (int c = 0; c + 1 < k; ++c) {
      split.weights[static_cast<std::size_t>(c)] =
          incident[static_cast<std::size_t>(c)] + surplus / k;
      rest -= split.weights[static_cast<std::size_t>(c)];
    }
    split.weights.back() = rest;
    split.sources = even_split(parent.source, k);
    split.links = default_links(k);
    scheme.boundary.push_back(std::move(split));
  }

  scheme.validate(g);
  return scheme;
}

KeyValueDocument to_document(const PartitionScheme& scheme) {
  KeyValueDocument doc;
  auto& head = doc.add_section("scheme");
  head.entries.emplace_back("subdomains", std::to_string(scheme.num_subdomains));
  head.entries.emplace_back("vertices", std::to_string(scheme.owner.size()));
  head.entries.emplace_back("owner", join_ints(scheme.owner));
  for (const auto& v : scheme.boundary) {
    auto& s = doc.add_section("boundary " + std::to_string(v.vertex));
    s.entries.emplace_back("sides", join_ints(v.sides));
    s.entries.emplace_back("weights", join_doubles(v.weights));
    s.entries.emplace_back("sources", join_doubles(v.sources));
    std::string links;
    for (auto [c1, c2] : v.links) {
      if (!links.empty()) links += ' ';
      links += std::to_string(c1) + '-' + std::to_string(c2);
    }
    s.entries.emplace_back("links", links);
  }
  for (const auto& e : scheme.edges) {
    auto& s = doc.add_section("edge " + std::to_string(e.a) + ' ' + std::to_string(e.b));
    s.entries.emplace_back("sides", join_ints(e.sides));
    s.entries.emplace_back("weights", join_doubles(e.weights));
  }
  return doc;
}

PartitionScheme scheme_from_document(const KeyValueDocument& doc) {
  PartitionScheme scheme;
  const auto& head = doc.at("scheme");
  scheme.num_subdomains = static_cast<int>(parse_int(head.at("subdomains")));
  scheme.owner = parse_ints(head.at("owner"));
  if (static_cast<long long>(scheme.owner.size()) != parse_int(head.at("vertices"))) {
    throw InputError("scheme owner list does not match its vertex count");
  }
  for (const auto& section : doc.sections()) {
    auto words = split_whitespace(section.name);
    if (words.empty() || words[0] == "scheme") continue;
    if (words[0] == "boundary" && words.size() == 2) {
      VertexSplit v;
      v.vertex = static_cast<VertexId>(parse_int(words[1]));
      v.sides = parse_ints(section.at("sides"));
      v.weights = parse_doubles(section.at("weights"));
      v.sources = parse_doubles(section.at("sources"));
      for (auto link : split_whitespace(section.at("links"))) {
        auto dash = link.find('-');
        if (dash == std::string_view::npos) throw InputError("malformed link '" + std::string(link) + "'");
        v.links.emplace_back(static_cast<int>(parse_int(link.substr(0, dash))),
                             static_cast<int>(parse_int(link.substr(dash + 1))));
      }
      scheme.boundary.push_back(std::move(v));
    } else if (words[0] == "edge" && words.size() == 3) {
      EdgeSplit e;
      e.a = static_cast<VertexId>(parse_int(words[1]));
      e.b = static_cast<VertexId>(parse_int(words[2]));
      e.sides = parse_ints(section.at("sides"));
      e.weights = parse_doubles(section.at("weights"));
      scheme.edges.push_back(std::move(e));
    } else {
      throw InputError("unknown scheme section [" + section.name + "]");
    }
  }
  return scheme;
}

void save_scheme(const PartitionScheme& scheme, const std::filesystem::path& path) {
  to_document(scheme).save(path);
}

PartitionScheme load_scheme(const std::filesystem::path& path) {
  return scheme_from_document(KeyValueDocument::load(path));
}

}  // namespace vtm
