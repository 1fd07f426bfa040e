#include <doctest.h>

#include <algorithm>
#include <set>

#include "vtm/core/errors.hpp"
#include "vtm/partition/split.hpp"
#include "vtm/testbench/testbench.hpp"

using namespace vtm;

TEST_CASE("grid systems") {
  SUBCASE("two by two") {
    GridSpec spec;
    spec.side = 2;
    const auto g = grid_system(spec);
    CHECK(g.size() == 4);
    CHECK(g.edges.size() == 4);
    for (const auto& v : g.vertices) CHECK(v.weight == 2.0 + spec.shift);
    for (const auto& e : g.edges) CHECK(e.weight == -1.0);
    for (const auto& v : g.vertices) CHECK(v.source == 1.0);
  }
  SUBCASE("interior degree") {
    GridSpec spec;
    spec.side = 5;
    spec.shift = 0.25;
    const auto g = grid_system(spec);
    CHECK(g.vertices[12].weight == 4.25);  // centre
    CHECK(g.vertices[0].weight == 2.25);   // corner
    CHECK(g.vertices[2].weight == 3.25);   // edge
    CHECK(g.edges.size() == 2 * 5 * 4);
  }
  SUBCASE("n = 289 is SPD") {
    GridSpec spec;
    spec.side = 17;
    CHECK(is_spd(graph_to_system(grid_system(spec))));
  }
  SUBCASE("seeded sources are reproducible") {
    GridSpec spec;
    spec.side = 6;
    spec.rhs_seed = 42;
    const auto a = grid_system(spec);
    const auto b = grid_system(spec);
    std::set<double> values;
    for (std::size_t i = 0; i < a.vertices.size(); ++i) {
      CHECK(a.vertices[i].source == b.vertices[i].source);
      CHECK(a.vertices[i].source >= -1.0);
      CHECK(a.vertices[i].source < 1.0);
      values.insert(a.vertices[i].source);
    }
    CHECK(values.size() == a.vertices.size());
    spec.rhs_seed = 43;
    CHECK(grid_system(spec).vertices[0].source != a.vertices[0].source);
  }
  SUBCASE("errors") {
    GridSpec spec;
    spec.side = 1;
    CHECK_THROWS_AS(grid_system(spec), InputError);
    spec.side = 4;
    spec.shift = -0.1;
    CHECK_THROWS_AS(grid_system(spec), InputError);
  }
}

TEST_CASE("grid strip partitions") {
  SUBCASE("four by four in two strips") {
    GridSpec spec;
    spec.side = 4;
    spec.strips = 2;
    const auto gp = grid_partition(spec);
    REQUIRE(gp.scheme.boundary.size() == 4);
    std::set<int> columns;
    for (const auto& b : gp.scheme.boundary) {
      columns.insert(b.vertex % 4);
      CHECK(b.children() == 2);
    }
    CHECK(columns.size() == 1);
    CHECK(gp.scheme.split_level() == 1);
  }
  SUBCASE("seventeen in four strips") {
    GridSpec spec;
    spec.side = 17;
    spec.strips = 4;
    const auto gp = grid_partition(spec);
    const auto s = split(grid_system(spec), gp.scheme);
    CHECK(verify_conformal(s).conformal());
    std::vector<int> widths;
    for (const auto& sub : s.subdomains) {
      CHECK(sub.dim() % 17 == 0);
      widths.push_back(sub.dim() / 17);
    }
    CHECK(*std::max_element(widths.begin(), widths.end()) -
              *std::min_element(widths.begin(), widths.end()) <=
          1);
    CHECK(s.lines.size() == 3 * 17);
  }
  SUBCASE("part extents cover the grid") {
    for (int side : {4, 9, 17, 33, 65}) {
      for (int parts : {1, 2, 3, 4, 8}) {
        if (parts > side) continue;
        const auto ext = grid_part_extents(side, parts);
        REQUIRE(static_cast<int>(ext.size()) == parts);
        int total = 0;
        for (int e : ext) total += e;
        // Each of the parts - 1 cut lines is counted twice.
        CHECK(total == side + parts - 1);
        CHECK(*std::max_element(ext.begin(), ext.end()) -
                  *std::min_element(ext.begin(), ext.end()) <=
              1);
      }
    }
  }
  SUBCASE("too many strips") {
    GridSpec spec;
    spec.side = 4;
    spec.strips = 5;
    CHECK_THROWS_AS(grid_partition(spec), InputError);
  }
}

TEST_CASE("grid block partitions") {
  GridSpec spec;
  spec.side = 8;
  spec.layout = GridSpec::Layout::kBlocks;
  spec.block_rows = 2;
  spec.block_cols = 2;
  const auto gp = grid_partition(spec);
  CHECK(gp.scheme.split_level() == 2);
  int crossings = 0;
  for (const auto& b : gp.scheme.boundary) {
    if (b.children() == 4) {
      ++crossings;
      CHECK(b.links.size() == 4);
    } else {
      CHECK(b.children() == 2);
    }
  }
  CHECK(crossings == 1);
  const auto s = split(grid_system(spec), gp.scheme);
  CHECK(verify_conformal(s).conformal());
  // 14 twin cut vertices plus the 4-line ring at the crossing.
  CHECK(gp.scheme.boundary.size() == 15);
  CHECK(s.lines.size() == 14 + 4);

  SUBCASE("three by three blocks") {
    GridSpec big;
    big.side = 12;
    big.layout = GridSpec::Layout::kBlocks;
    big.block_rows = 3;
    big.block_cols = 3;
    const auto p = grid_partition(big);
    int four = 0;
    for (const auto& b : p.scheme.boundary) four += b.children() == 4;
    CHECK(four == 4);
    CHECK(verify_conformal(split(grid_system(big), p.scheme)).conformal());
  }
}

TEST_CASE("running example data") {
  const auto g = example_system();
  CHECK(g.size() == 6);
  CHECK_NOTHROW(example_scheme().validate(g));
  CHECK(example_impedances().line == std::vector<double>{1.0, 0.5});
  const auto a = example_assignment();
  CHECK(a.owner[2] == kBoundary);
  CHECK(a.owner[3] == kBoundary);
}
