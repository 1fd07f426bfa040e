#pragma once

#include <cstdint>
#include <optional>

#include "vtm/core/system.hpp"
#include "vtm/local/local.hpp"
#include "vtm/partition/scheme.hpp"

namespace vtm {

/// m x m grid with a 5-point stencil: edge weight -1 between 4-neighbors,
/// vertex weight degree + shift. Vertex id = row * m + column.
struct GridSpec {
  enum class Layout { kStrips, kBlocks };

  int side = 2;
  double shift = 0.01;
  Layout layout = Layout::kStrips;
  int strips = 1;
  int block_rows = 1;
  int block_cols = 1;
  std::optional<std::uint64_t> rhs_seed;  // all-ones sources when unset

  int size() const { return side * side; }
  int parts() const { return layout == Layout::kStrips ? strips : block_rows * block_cols; }
};

/// Throws InputError when side < 2 or shift < 0.
ElectricGraph grid_system(const GridSpec& spec);

struct GridPartition {
  Assignment assignment;
  PartitionScheme scheme;
};

/// Regular strip (vertical cut columns) or block (cut rows and columns)
/// partition. Cut lines are the boundary; cut crossings are split four ways.
/// Part sizes, counting the cut lines they touch, differ by at most one line.
/// Throws InputError when there are more strips or blocks than grid lines.
GridPartition grid_partition(const GridSpec& spec);

/// Line sizes (columns or rows) of each part including the cut lines they
/// touch; exposed for tests.
std::vector<int> grid_part_extents(int side, int parts);

/// The six-vertex system used as the running example.
ElectricGraph example_system();
/// V_3 and V_4 on the boundary, V_1, V_2 in subdomain 0 and V_5, V_6 in 1.
Assignment example_assignment();
/// Weight shares (4.8, 3.2) and (3.5, 5.5), source shares (1.6, 1.4) and
/// (1.8, 2.2), edge V_3-V_4 shares (-0.9, -1.1).
PartitionScheme example_scheme();
/// Line impedances 1 (V_3) and 0.5 (V_4).
ImpedanceAssignment example_impedances();

}  // namespace vtm
