#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "vtm/analysis/analysis.hpp"
#include "vtm/core/errors.hpp"
#include "vtm/perf/perf.hpp"
#include "vtm/testbench/testbench.hpp"

using namespace vtm;

namespace {

// Extended-precision calculator for the cost model.
long double calc_parallel(long double n, long double p, long double k, long double alpha,
                          long double beta) {
  const long double b = n / p + 2.0L * sqrtl(n / p);
  return b * sqrtl(b) + k * (2.0L * b + alpha + beta * sqrtl(b));
}

long double calc_sequential(long double n) { return n * sqrtl(n) + 2.0L * n; }

bool close(double got, long double want, double rel = 1e-12) {
  return std::abs(static_cast<long double>(got) - want) <= rel * fabsl(want);
}

}  // namespace

TEST_CASE("cost model spot values") {
  CHECK(subdomain_size(4096, 1) == 4224.0);
  CHECK(close(parallel_time(4096, 1, {1, 0, 0}), 4224.0L * sqrtl(4224.0L) + 2 * 4224.0L));
  CHECK(close(parallel_time(7, 7, {1, 0, 0}), 3.0L * sqrtl(3.0L) + 6.0L));
  CHECK(sequential_time(1) == 3.0);
  CHECK(sequential_time(100) == 1200.0);
  CHECK(close(sequential_time(4225), 4225.0L * 65.0L + 8450.0L));

  struct Spot {
    double n, p, k, alpha, beta;
  };
  const Spot spots[] = {{289, 2, 118, 0, 0},    {1089, 4, 155, 10, 1},   {4225, 8, 251, 100, 2},
                        {4225, 16, 378, 0, 5},  {14641, 64, 30, 0, 0},   {2401, 3, 77, 1e3, 0.5},
                        {100, 1, 1, 0, 0},      {65536, 128, 500, 1e4, 4}, {9, 9, 2, 0.25, 0.125},
                        {1e6, 1000, 1000, 50, 10}};
  for (const auto& s : spots) {
    const CostModel c{s.k, s.alpha, s.beta};
    const long double tp = calc_parallel(s.n, s.p, s.k, s.alpha, s.beta);
    const long double ts = calc_sequential(s.n);
    CHECK(close(parallel_time(s.n, s.p, c), tp));
    CHECK(close(sequential_time(s.n), ts));
    CHECK(close(speedup(s.n, s.p, c), ts / tp));
  }
}

TEST_CASE("cost model properties") {
  SUBCASE("latency enters linearly") {
    const CostModel a{40, 3, 1};
    const CostModel b{40, 3 + 0.5, 1};
    CHECK(parallel_time(4225, 8, b) - parallel_time(4225, 8, a) ==
          doctest::Approx(40 * 0.5).epsilon(1e-12));
  }
  SUBCASE("speedup grows with p") {
    const CostModel c{30, 0, 0};
    double previous = 0.0;
    for (int p = 1; p <= 64; ++p) {
      const double s = speedup(14641, p, c);
      CHECK(s > previous);
      previous = s;
    }
    CHECK(speedup(14641, 1, {1, 0, 0}) < 1.0);
  }
  SUBCASE("large-n form") {
    const CostModel c{30, 0, 0};
    const double exact = speedup(14641, 64, c);
    const double approx = speedup_asymptotic(14641, 64, c);
    const double hand = std::pow(64.0, 1.5) / (1 + 2 * 30 * std::sqrt(64.0 / 14641));
    CHECK(approx == doctest::Approx(hand).epsilon(1e-14));
    CHECK(std::abs(approx - exact) <= 0.2 * exact);
  }
  SUBCASE("one processor pays at least the sequential factorization") {
    for (double n : {1.0, 10.0, 289.0, 4225.0, 1e6}) {
      CHECK(parallel_time(n, 1, {1, 0, 0}) >= sequential_time(n) - 2 * n);
    }
  }
  SUBCASE("invalid parameters") {
    CHECK_THROWS_AS(parallel_time(100, 2, {0, 0, 0}), InputError);
    CHECK_THROWS_AS(parallel_time(100, 2, {1, -1, 0}), InputError);
    CHECK_THROWS_AS(sequential_time(0), InputError);
    CHECK_THROWS_AS(subdomain_size(100, 0), InputError);
  }
}

TEST_CASE("K from a report") {
  IterationReport r;
  for (int k = 1; k <= 50; ++k) {
    r.iterations.push_back({k, 0.0, 0.0, k < 37 ? 1e-3 : 1e-16});
  }
  CHECK(measure_K(r, 2e-15) == 37);
  CHECK_FALSE(measure_K(r, 1e-20).has_value());
  r.iterations[3].rms_error.reset();
  CHECK_THROWS_AS(measure_K(r, 2e-15), InputError);
}

TEST_CASE("K of a grid run") {
  GridSpec spec;
  spec.side = 17;
  spec.strips = 4;
  const auto s = split(grid_system(spec), grid_partition(spec).scheme);
  const auto z = match_impedances(s, MatchPolicy::kMean);
  const Eigen::VectorXd x = direct_solve(s.original);
  RunConfig cfg;
  cfg.max_iter = 5000;
  const int k = measure_K(s, z, x, 1e-12, cfg);
  CHECK(k > 1);
  CHECK(k < 5000);
  cfg.max_iter = 3;
  CHECK_THROWS_AS(measure_K(s, z, x, 1e-12, cfg), NumericalError);
}

TEST_CASE("bench CSV") {
  const auto dir = std::filesystem::temp_directory_path() / "vtm_perf_csv";
  std::filesystem::create_directories(dir);
  std::vector<BenchRow> rows{{289, 2, 1e-12, 118, 1.5, 2.5, 3.5}, {289, 4, 1e-12, {}, 0, 0, 0}};
  write_bench_csv(rows, dir / "bench.csv", {"note"});
  std::ifstream in(dir / "bench.csv");
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0].rfind("# ", 0) == 0);
  CHECK(lines[1] == "n,p,epsilon,K,T_p_pred,T_s_pred,speedup_pred");
  CHECK(lines[2] == "289,2,9.9999999999999998e-13,118,1.5,2.5,3.5");
  CHECK(lines[3] == "289,4,9.9999999999999998e-13,,,,");
  CHECK(lines[4] == "# note");

  write_bench_csv({}, dir / "empty.csv");
  std::ifstream e(dir / "empty.csv");
  lines.clear();
  for (std::string l; std::getline(e, l);) lines.push_back(l);
  CHECK(lines.size() == 2);
}
