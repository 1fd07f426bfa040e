#pragma once

// Random strictly diagonally dominant systems with random conformal twin
// splits, shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "vtm/core/system.hpp"
#include "vtm/local/local.hpp"
#include "vtm/partition/scheme.hpp"

namespace vtm::testing {

struct RandomCase {
  ElectricGraph graph;
  PartitionScheme scheme;
};

class CaseRng {
 public:
  explicit CaseRng(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::ldexp(static_cast<double>(rng_() >> 11), -53);
  }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(rng_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool chance(double p) { return uniform(0.0, 1.0) < p; }

 private:
  std::mt19937_64 rng_;
};

inline ElectricGraph random_dominant_graph(CaseRng& rng, int n) {
  ElectricGraph g;
  std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
  for (VertexId i = 0; i < n; ++i) {
    for (VertexId j = i + 1; j < n; ++j) {
      // Path edges keep the graph connected; the rest are random.
      if (j == i + 1 || rng.chance(0.3)) {
        double w = rng.uniform(0.1, 2.0) * (rng.chance(0.8) ? -1.0 : 1.0);
        g.edges.push_back({i, j, w});
        row_sum[static_cast<std::size_t>(i)] += std::abs(w);
        row_sum[static_cast<std::size_t>(j)] += std::abs(w);
      }
    }
  }
  for (VertexId i = 0; i < n; ++i) {
    g.vertices.push_back({i, row_sum[static_cast<std::size_t>(i)] + rng.uniform(0.1, 2.0),
                          rng.uniform(-1.0, 1.0)});
  }
  return g;
}

// Twin-split scheme from a random colouring; returns false when the
// colouring yields a vertex on more than two sides or no boundary.
inline bool random_twin_scheme(CaseRng& rng, const ElectricGraph& g, int parts,
                               PartitionScheme& out) {
  const int n = g.size();
  std::vector<SubdomainId> colour(static_cast<std::size_t>(n));
  for (auto& c : colour) c = rng.integer(0, parts - 1);
  const auto adj = g.adjacency();

  PartitionScheme s;
  s.num_subdomains = parts;
  s.owner = colour;
  std::vector<std::vector<SubdomainId>> sides(static_cast<std::size_t>(n));
  for (VertexId v = 0; v < n; ++v) {
    std::set<SubdomainId> touched{colour[static_cast<std::size_t>(v)]};
    for (const auto& nb : adj[static_cast<std::size_t>(v)]) {
      touched.insert(colour[static_cast<std::size_t>(nb.vertex)]);
    }
    if (touched.size() > 2) return false;
    if (touched.size() == 2) {
      s.owner[static_cast<std::size_t>(v)] = kBoundary;
      sides[static_cast<std::size_t>(v)].assign(touched.begin(), touched.end());
      if (rng.chance(0.5)) std::swap(sides[static_cast<std::size_t>(v)][0],
                                     sides[static_cast<std::size_t>(v)][1]);
    }
  }

  std::vector<std::vector<double>> incident(static_cast<std::size_t>(n));
  for (VertexId v = 0; v < n; ++v) incident[static_cast<std::size_t>(v)].assign(2, 0.0);
  auto child = [&](VertexId v, SubdomainId side) {
    const auto& sv = sides[static_cast<std::size_t>(v)];
    return static_cast<int>(std::find(sv.begin(), sv.end(), side) - sv.begin());
  };
  for (const auto& e : g.edges) {
    const bool ba = s.owner[static_cast<std::size_t>(e.a)] == kBoundary;
    const bool bb = s.owner[static_cast<std::size_t>(e.b)] == kBoundary;
    if (ba && bb) {
      std::vector<SubdomainId> common;
      for (SubdomainId x : sides[static_cast<std::size_t>(e.a)]) {
        const auto& sb = sides[static_cast<std::size_t>(e.b)];
        if (std::find(sb.begin(), sb.end(), x) != sb.end()) common.push_back(x);
      }
      if (common.empty()) return false;
      std::sort(common.begin(), common.end());
      EdgeSplit es{e.a, e.b, common, {}};
      if (common.size() == 1) {
        es.weights = {e.weight};
      } else {
        const double first = rng.uniform(0.1, 0.9) * e.weight;
        es.weights = {first, e.weight - first};
      }
      for (std::size_t k = 0; k < common.size(); ++k) {
        incident[static_cast<std::size_t>(e.a)][static_cast<std::size_t>(child(e.a, common[k]))] +=
            std::abs(es.weights[k]);
        incident[static_cast<std::size_t>(e.b)][static_cast<std::size_t>(child(e.b, common[k]))] +=
            std::abs(es.weights[k]);
      }
      s.edges.push_back(es);
    } else if (ba || bb) {
      const VertexId v = ba ? e.a : e.b;
      const VertexId u = ba ? e.b : e.a;
      incident[static_cast<std::size_t>(v)][static_cast<std::size_t>(
          child(v, s.owner[static_cast<std::size_t>(u)]))] += std::abs(e.weight);
    }
  }
  std::sort(s.edges.begin(), s.edges.end(), [](const EdgeSplit& x, const EdgeSplit& y) {
    return std::pair{x.a, x.b} < std::pair{y.a, y.b};
  });

  for (VertexId v = 0; v < n; ++v) {
    if (s.owner[static_cast<std::size_t>(v)] != kBoundary) continue;
    const auto& parent = g.vertices[static_cast<std::size_t>(v)];
    const auto& inc = incident[static_cast<std::size_t>(v)];
    const double surplus = parent.weight - inc[0] - inc[1];
    const double w0 = inc[0] + rng.uniform(0.1, 0.9) * surplus;
    const double b0 = rng.uniform(0.0, 1.0) * parent.source;
    s.boundary.push_back({v, sides[static_cast<std::size_t>(v)], {w0, parent.weight - w0},
                          {b0, parent.source - b0}, {{0, 1}}});
  }
  if (s.boundary.empty()) return false;
  std::vector<int> population(static_cast<std::size_t>(parts), 0);
  for (SubdomainId o : s.owner) {
    if (o != kBoundary) ++population[static_cast<std::size_t>(o)];
  }
  for (const auto& b : s.boundary) {
    for (SubdomainId side : b.sides) ++population[static_cast<std::size_t>(side)];
  }
  if (std::count(population.begin(), population.end(), 0) > 0) return false;
  out = std::move(s);
  return true;
}

inline RandomCase random_case(std::uint64_t seed) {
  CaseRng rng(seed);
  for (;;) {
    const int n = rng.integer(4, 12);
    const int parts = rng.integer(2, 3);
    RandomCase c;
    c.graph = random_dominant_graph(rng, n);
    if (random_twin_scheme(rng, c.graph, parts, c.scheme)) return c;
  }
}

// Matched impedances scaled per line by a log-uniform factor in [0.2, 5].
inline ImpedanceAssignment perturbed_impedances(const ImpedanceAssignment& matched,
                                                std::uint64_t seed) {
  CaseRng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  ImpedanceAssignment z = matched;
  for (auto& v : z.line) v *= std::exp(rng.uniform(std::log(0.2), std::log(5.0)));
  return z;
}

}  // namespace vtm::testing
