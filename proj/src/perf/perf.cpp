#include "vtm/perf/perf.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <string>

#include "vtm/core/errors.hpp"
#include "vtm/core/text_io.hpp"

namespace vtm {
namespace {

void check_sizes(double n, double p) {
  if (!(n >= 1.0) || !(p >= 1.0)) throw InputError("n and p must be at least 1");
}

}  // namespace

double subdomain_size(double n, double p) {
  check_sizes(n, p);
  return n / p + 2.0 * std::sqrt(n / p);
}

double parallel_time(double n, double p, const CostModel& c) {
  if (!(c.K >= 1.0)) throw InputError("K must be at least 1");
  if (!(c.alpha >= 0.0) || !(c.beta >= 0.0)) throw InputError("alpha and beta must be non-negative");
  const double b = subdomain_size(n, p);
  return std::pow(b, 1.5) + c.K * (2.0 * b + c.alpha + c.beta * std::sqrt(b));
}

double sequential_time(double n) {
  check_sizes(n, 1.0);
  return std::pow(n, 1.5) + 2.0 * n;
}

double speedup(double n, double p, const CostModel& c) {
  return sequential_time(n) / parallel_time(n, p, c);
}

double speedup_asymptotic(double n, double p, const CostModel& c) {
  check_sizes(n, p);
  return std::pow(p, 1.5) / (1.0 + 2.0 * c.K * std::sqrt(p / n) + c.K * c.beta * p / n);
}

std::optional<int> measure_K(const IterationReport& report, double epsilon) {
  for (const auto& r : report.iterations) {
    if (!r.rms_error) throw InputError("report has no RMS errors (run without an oracle)");
    if (*r.rms_error <= epsilon) return r.k;
  }
  return std::nullopt;
}

int measure_K(const SplitSystem& s, const ImpedanceAssignment& z,
              const Eigen::VectorXd& oracle, double epsilon, RunConfig cfg) {
  cfg.metric = TerminationMetric::kRmsError;
  cfg.epsilon = epsilon;
  cfg.oracle = oracle;
  const auto report = run_vtm(s, z, cfg);
  const auto k = measure_K(report, epsilon);
  if (!k) {
    throw NumericalError("RMS error did not reach " + format_double(epsilon) + " within " +
                         std::to_string(cfg.max_iter) + " iterations");
  }
  return *k;
}

void write_bench_csv(const std::vector<BenchRow>& rows, const std::filesystem::path& path,
                     const std::vector<std::string>& footnotes) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  out << "# vtm bench " << stamp << '\n';
  out << "n,p,epsilon,K,T_p_pred,T_s_pred,speedup_pred\n";
  for (const auto& r : rows) {
    out << r.n << ',' << r.p << ',' << format_double(r.epsilon) << ',';
    if (r.K) {
      out << *r.K << ',' << format_double(r.parallel_pred) << ','
          << format_double(r.sequential_pred) << ',' << format_double(r.speedup_pred) << '\n';
    } else {
      out << ",,,\n";
    }
  }
  for (const auto& note : footnotes) out << "# " << note << '\n';
}

}  // namespace vtm
