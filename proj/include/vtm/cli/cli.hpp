#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vtm/local/local.hpp"
#include "vtm/partition/split.hpp"
#include "vtm/runtime/runtime.hpp"

namespace vtm::cli {

enum ExitCode { kOk = 0, kInputError = 1, kNotConverged = 2 };

/// One source per category: input (demo | matrix files | grid), partition
/// (scheme file | strips | blocks | parts), impedance (file | match policy |
/// constant).
struct RunManifest {
  std::string demo;
  std::filesystem::path matrix;
  std::filesystem::path rhs;
  int grid = 0;
  double sigma = 0.01;
  std::optional<std::uint64_t> rhs_seed;

  std::filesystem::path scheme;
  int strips = 0;
  std::string blocks;  // "RxC"
  int parts = 0;       // contiguous index ranges for matrix input

  std::filesystem::path impedance;
  std::string match;
  std::optional<double> z_const;

  double eps = 1e-12;
  int max_iter = 1000;
  int threads = 1;
  std::string metric = "boundary_change";
  std::filesystem::path out = "vtm_out";
  bool trace = false;
  bool message_log = false;
};

struct BenchManifest {
  std::vector<int> n;
  std::vector<int> p;
  double eps = 1e-12;
  std::string layout = "strips";
  std::string match = "mean";
  int max_iter = 5000;
  double sigma = 0.01;
  double alpha = 0.0;
  double beta = 0.0;
  std::filesystem::path out = "bench.csv";
};

/// Loaded problem: split system plus the impedances chosen for it.
struct Problem {
  SplitSystem split;
  ImpedanceAssignment impedance;
  std::string description;
};

/// Throws InputError on an invalid or ambiguous manifest.
Problem load_problem(const RunManifest& m);

int cmd_solve(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_certify(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_partition(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_match(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_gen_grid(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchManifest& m, std::ostream& out, std::ostream& err);

/// Parses arguments and dispatches to a command.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vtm::cli
