#include "vtm/testbench/testbench.hpp"

#include <random>
#include <string>

#include "vtm/core/errors.hpp"

namespace vtm {
namespace {

struct LineRole {
  bool cut = false;
  int part = 0;  // part owning an inner line, or the part after a cut
};

std::vector<LineRole> line_roles(int side, int parts) {
  const auto extents = grid_part_extents(side, parts);
  std::vector<LineRole> roles(static_cast<std::size_t>(side));
  int start = 0;
  for (int j = 0; j < parts; ++j) {
    const int end = start + extents[static_cast<std::size_t>(j)] - 1;
    for (int c = start; c <= end; ++c) roles[static_cast<std::size_t>(c)] = {false, j};
    if (j > 0) roles[static_cast<std::size_t>(start)] = {true, j};
    start = end;
  }
  return roles;
}

}  // namespace

ElectricGraph grid_system(const GridSpec& spec) {
  const int m = spec.side;
  if (m < 2) throw InputError("grid side must be at least 2, got " + std::to_string(m));
  if (!(spec.shift >= 0.0)) throw InputError("grid shift must be non-negative");
  ElectricGraph g;
  std::mt19937_64 rng(spec.rhs_seed.value_or(0));
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const int degree = (r > 0) + (r + 1 < m) + (c > 0) + (c + 1 < m);
      double source = 1.0;
      if (spec.rhs_seed) {
        // Uniform in [-1, 1) from the top 53 bits; portable across libraries.
        source = 2.0 * std::ldexp(static_cast<double>(rng() >> 11), -53) - 1.0;
      }
      g.vertices.push_back({r * m + c, degree + spec.shift, source});
    }
  }
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const VertexId v = r * m + c;
      if (c + 1 < m) g.edges.push_back({v, v + 1, -1.0});
      if (r + 1 < m) g.edges.push_back({v, v + m, -1.0});
    }
  }
  return g;
}

std::vector<int> grid_part_extents(int side, int parts) {
  if (parts < 1) throw InputError("need at least one part");
  if (parts > side) {
    throw InputError(std::to_string(parts) + " parts do not fit in " + std::to_string(side) +
                     " grid lines");
  }
  if (parts == 1) return {side};
  const int total = side + parts - 1;  // cut lines count for both neighbors
  const int base = total / parts;
  int extra = total % parts;
  std::vector<int> extents(static_cast<std::size_t>(parts), base);
  std::vector<int> order;
  auto ends = {0, parts - 1};
  std::vector<int> middles;
  for (int j = 1; j + 1 < parts; ++j) middles.push_back(j);
  // Middle parts need two lines (both cuts); serve them first when tight.
  if (base >= 2) {
    order.assign(ends.begin(), ends.end());
    order.insert(order.end(), middles.begin(), middles.end());
  } else {
    order = middles;
    order.insert(order.end(), ends.begin(), ends.end());
  }
  for (int j : order) {
    if (extra == 0) break;
    ++extents[static_cast<std::size_t>(j)];
    --extra;
  }
  return extents;
}

GridPartition grid_partition(const GridSpec& spec) {
  const int m = spec.side;
  const auto g = grid_system(spec);
  GridPartition out;
  auto& a = out.assignment;
  a.num_subdomains = spec.parts();
  a.owner.assign(static_cast<std::size_t>(m * m), kBoundary);

  if (spec.layout == GridSpec::Layout::kStrips) {
    const auto cols = line_roles(m, spec.strips);
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) {
        const VertexId v = r * m + c;
        const auto& role = cols[static_cast<std::size_t>(c)];
        if (role.cut) {
          a.sides[v] = {role.part - 1, role.part};
        } else {
          a.owner[static_cast<std::size_t>(v)] = role.part;
        }
      }
    }
  } else {
    if (spec.block_rows < 1 || spec.block_cols < 1) {
      throw InputError("block layout needs positive row and column counts");
    }
    const auto rows = line_roles(m, spec.block_rows);
    const auto cols = line_roles(m, spec.block_cols);
    const int bc = spec.block_cols;
    auto id = [bc](int i, int j) { return i * bc + j; };
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) {
        const VertexId v = r * m + c;
        const auto& rr = rows[static_cast<std::size_t>(r)];
        const auto& cr = cols[static_cast<std::size_t>(c)];
        if (!rr.cut && !cr.cut) {
          a.owner[static_cast<std::size_t>(v)] = id(rr.part, cr.part);
        } else if (rr.cut && !cr.cut) {
          a.sides[v] = {id(rr.part - 1, cr.part), id(rr.part, cr.part)};
        } else if (!rr.cut && cr.cut) {
          a.sides[v] = {id(rr.part, cr.part - 1), id(rr.part, cr.part)};
        } else {
          // Ring order around the crossing: top-left, top-right,
          // bottom-right, bottom-left.
          a.sides[v] = {id(rr.part - 1, cr.part - 1), id(rr.part - 1, cr.part),
                        id(rr.part, cr.part), id(rr.part, cr.part - 1)};
        }
      }
    }
  }
  out.scheme = default_conformal_scheme(g, a);
  return out;
}

ElectricGraph example_system() {
  ElectricGraph g;
  const double weights[] = {6, 7, 8, 9, 10, 11};
  for (VertexId i = 0; i < 6; ++i) g.vertices.push_back({i, weights[i], static_cast<double>(i + 1)});
  g.edges = {{0, 1, -1}, {0, 2, -2}, {1, 3, -1}, {2, 3, -2},
             {2, 4, -1}, {3, 5, -3}, {4, 5, -5}};
  return g;
}

Assignment example_assignment() {
  return {2, {0, 0, kBoundary, kBoundary, 1, 1}, {{2, {0, 1}}, {3, {0, 1}}}};
}

PartitionScheme example_scheme() {
  PartitionScheme s;
  s.num_subdomains = 2;
  s.owner = {0, 0, kBoundary, kBoundary, 1, 1};
  s.boundary = {{2, {0, 1}, {4.8, 3.2}, {1.6, 1.4}, {{0, 1}}},
                {3, {0, 1}, {3.5, 5.5}, {1.8, 2.2}, {{0, 1}}}};
  s.edges = {{2, 3, {0, 1}, {-0.9, -1.1}}};
  return s;
}

ImpedanceAssignment example_impedances() { return {{1.0, 0.5}, {}}; }

}  // namespace vtm
