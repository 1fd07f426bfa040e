#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vtm/runtime/runtime.hpp"

namespace vtm {

/// Cost parameters of the parallel time model: K iterations, per-message
/// latency alpha and per-value transfer cost beta, in units of one
/// floating-point operation.
struct CostModel {
  double K = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

/// Vertices per subdomain including its share of twin ports,
/// n/p + 2 sqrt(n/p).
double subdomain_size(double n, double p);

/// b^1.5 + K (2 b + alpha + beta sqrt(b)) with b = subdomain_size(n, p).
/// Requires K >= 1 and alpha, beta >= 0.
double parallel_time(double n, double p, const CostModel& c);
/// n^1.5 + 2 n.
double sequential_time(double n);
double speedup(double n, double p, const CostModel& c);
/// Large-n form p^1.5 / (1 + 2 K sqrt(p/n) + K beta p/n).
double speedup_asymptotic(double n, double p, const CostModel& c);

/// First iteration whose recorded RMS error is <= epsilon; empty when none
/// is. Throws InputError when the report carries no RMS errors.
std::optional<int> measure_K(const IterationReport& report, double epsilon);

/// Iterations until the run's RMS error against `oracle` is <= epsilon.
/// Throws NumericalError when the run does not reach it within cfg.max_iter.
int measure_K(const SplitSystem& s, const ImpedanceAssignment& z,
              const Eigen::VectorXd& oracle, double epsilon, RunConfig cfg = {});

struct BenchRow {
  int n = 0;
  int p = 0;
  double epsilon = 0.0;
  std::optional<int> K;  // empty when the cell failed
  double parallel_pred = 0.0;
  double sequential_pred = 0.0;
  double speedup_pred = 0.0;
};

/// n,p,epsilon,K,T_p_pred,T_s_pred,speedup_pred after a timestamp comment;
/// failed cells leave K and the predictions empty. Footnotes follow as
/// comment lines.
void write_bench_csv(const std::vector<BenchRow>& rows,
                     const std::filesystem::path& path,
                     const std::vector<std::string>& footnotes = {});

}  // namespace vtm
