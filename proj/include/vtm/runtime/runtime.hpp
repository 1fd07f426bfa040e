#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vtm/local/local.hpp"
#include "vtm/partition/split.hpp"

namespace vtm {

/// Values one terminal sends to its twin after an iteration.
struct PortValue {
  int sender_terminal = 0;
  int receiver_terminal = 0;
  double u = 0.0;
  double omega = 0.0;
};

/// Everything a worker sends to one neighbor after iteration `iteration`.
struct BoundaryMessage {
  int iteration = 0;
  SubdomainId sender = 0;
  SubdomainId receiver = 0;
  std::vector<PortValue> values;
};

/// Worker state after `iteration` completed local solves.
struct WorkerState {
  SubdomainId id = 0;
  int iteration = 0;
  Eigen::VectorXd x;      // local potentials
  Eigen::VectorXd u;      // per terminal
  Eigen::VectorXd omega;  // per terminal
};

enum class TerminationMetric {
  kBoundaryChange,  // max_boundary_delta < epsilon
  kRmsError,        // RMS error against the oracle <= epsilon
};

std::string_view to_string(TerminationMetric m);
TerminationMetric parse_termination_metric(std::string_view text);

struct RunConfig {
  double epsilon = 1e-12;
  int max_iter = 1000;
  TerminationMetric metric = TerminationMetric::kBoundaryChange;
  int threads = 1;  // 1: single thread
  bool log_messages = false;
  std::optional<Eigen::VectorXd> oracle;
  // Initial terminal values per subdomain; empty means all zero.
  std::vector<Eigen::VectorXd> initial_u;
  std::vector<Eigen::VectorXd> initial_omega;
};

struct IterationRecord {
  int k = 0;
  // max over terminals of (|du| + |domega|) / (1 + |u|)
  double max_boundary_delta = 0.0;
  double residual_inf = 0.0;  // ||A x_k - b||_inf of the merged solution
  std::optional<double> rms_error;
};

struct MessageLogEntry {
  int k = 0;
  SubdomainId src = 0;
  SubdomainId dst = 0;
  int port = 0;  // sender terminal
  double u = 0.0;
  double omega = 0.0;
};

struct IterationReport {
  std::vector<IterationRecord> iterations;
  int iterations_run = 0;
  bool converged = false;
  Eigen::VectorXd solution;
  std::vector<Eigen::VectorXd> local_solutions;
  double merge_disagreement = 0.0;
  double max_potential_gap = 0.0;  // max over lines |u_a - u_b|
  double max_current_sum = 0.0;    // max over lines |omega_a + omega_b|
  std::vector<MessageLogEntry> messages;
};

/// Subdomain workers with their factored local systems. Each worker owns its
/// state; the only data crossing workers are BoundaryMessage values.
class Engine {
 public:
  /// Factors every local system once (precondition per subdomain).
  Engine(const SplitSystem& s, const ImpedanceAssignment& z);

  int num_workers() const { return static_cast<int>(locals_.size()); }
  const FactoredLocal& local(SubdomainId j) const { return locals_.at(static_cast<std::size_t>(j)); }

  std::vector<WorkerState> initial_states(const RunConfig& cfg) const;

  /// Messages a worker sends to its neighbors, one per neighbor, ordered by
  /// receiver id.
  std::vector<BoundaryMessage> outgoing(const WorkerState& state) const;

  /// Next iteration of one worker from the messages addressed to it. Throws
  /// ProtocolError when a message is stale, misaddressed, or a terminal has
  /// no incoming value.
  WorkerState advance(const WorkerState& state,
                      std::span<const BoundaryMessage> inbox) const;

  /// Routes outgoing messages into per-receiver inboxes.
  std::vector<std::vector<BoundaryMessage>> route(
      const std::vector<WorkerState>& states) const;

  /// One bulk-synchronous round. `order` permutes the sequence in which
  /// workers are advanced; results do not depend on it.
  std::vector<WorkerState> step(const std::vector<WorkerState>& states,
                                std::span<const SubdomainId> order = {}) const;

 private:
  const SplitSystem* split_;
  std::vector<FactoredLocal> locals_;
};

double max_boundary_delta(const std::vector<WorkerState>& previous,
                          const std::vector<WorkerState>& current);

/// Runs the iteration to termination. Single and multi-threaded runs are
/// bit-identical.
IterationReport run_vtm(const SplitSystem& s, const ImpedanceAssignment& z,
                        const RunConfig& cfg);

/// Trace CSV: a timestamp comment line, then iter,max_boundary_delta,
/// residual_inf,rms_error.
void write_trace(const IterationReport& report, const std::filesystem::path& path);
/// Message log CSV: k,src,dst,port,u,omega.
void write_message_log(const IterationReport& report, const std::filesystem::path& path);

}  // namespace vtm
