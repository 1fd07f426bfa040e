#include "vtm/runtime/runtime.hpp"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "vtm/core/errors.hpp"
#include "vtm/core/text_io.hpp"

namespace vtm {
namespace {

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string_view to_string(TerminationMetric m) {
  return m == TerminationMetric::kRmsError ? "rms_error" : "boundary_change";
}

TerminationMetric parse_termination_metric(std::string_view text) {
  if (text == "boundary_change") return TerminationMetric::kBoundaryChange;
  if (text == "rms_error") return TerminationMetric::kRmsError;
  throw InputError("unknown termination metric '" + std::string(text) +
                   "' (boundary_change or rms_error)");
}

Engine::Engine(const SplitSystem& s, const ImpedanceAssignment& z) : split_(&s) {
  locals_.reserve(s.subdomains.size());
  for (const auto& sub : s.subdomains) {
    locals_.push_back(precondition(assemble(sub), local_impedance(s, sub.id, z)));
  }
}

std::vector<WorkerState> Engine::initial_states(const RunConfig& cfg) const {
  const std::size_t n = locals_.size();
  if ((!cfg.initial_u.empty() && cfg.initial_u.size() != n) ||
      (!cfg.initial_omega.empty() && cfg.initial_omega.size() != n)) {
    throw InputError("initial boundary values need one vector per subdomain");
  }
  std::vector<WorkerState> states(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& sys = locals_[j].system();
    auto& st = states[j];
    st.id = static_cast<SubdomainId>(j);
    st.iteration = 0;
    st.x = Eigen::VectorXd::Zero(sys.dim());
    st.u = cfg.initial_u.empty() ? Eigen::VectorXd::Zero(sys.num_terminals()) : cfg.initial_u[j];
    st.omega = cfg.initial_omega.empty() ? Eigen::VectorXd::Zero(sys.num_terminals())
                                         : cfg.initial_omega[j];
    if (st.u.size() != sys.num_terminals() || st.omega.size() != sys.num_terminals()) {
      throw InputError("initial boundary values for subdomain " + std::to_string(j) +
                       " have the wrong length");
    }
  }
  return states;
}

std::vector<BoundaryMessage> Engine::outgoing(const WorkerState& state) const {
  const auto& sub = split_->subdomains.at(static_cast<std::size_t>(state.id));
  std::map<SubdomainId, BoundaryMessage> by_receiver;
  for (int t = 0; t < sub.num_terminals(); ++t) {
    const auto& term = sub.terminals[static_cast<std::size_t>(t)];
    auto& msg = by_receiver[term.twin.subdomain];
    msg.iteration = state.iteration;
    msg.sender = state.id;
    msg.receiver = term.twin.subdomain;
    msg.values.push_back({t, term.twin.terminal, state.u(t), state.omega(t)});
  }
  std::vector<BoundaryMessage> out;
  for (auto& [_, msg] : by_receiver) out.push_back(std::move(msg));
  return out;
}

WorkerState Engine::advance(const WorkerState& state,
                            std::span<const BoundaryMessage> inbox) const {
  const auto& sub = split_->subdomains.at(static_cast<std::size_t>(state.id));
  const int m = sub.num_terminals();
  Incoming in{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  std::vector<char> filled(static_cast<std::size_t>(m), 0);
  for (const auto& msg : inbox) {
    if (msg.receiver != state.id) {
      throw ProtocolError("worker " + std::to_string(state.id) +
                          " received a message addressed to " + std::to_string(msg.receiver));
    }
    if (msg.iteration != state.iteration) {
      throw ProtocolError("worker " + std::to_string(state.id) + " at iteration " +
                          std::to_string(state.iteration) + " received a message from iteration " +
                          std::to_string(msg.iteration));
    }
    for (const auto& v : msg.values) {
      if (v.receiver_terminal < 0 || v.receiver_terminal >= m) {
        throw ProtocolError("message names unknown terminal " + std::to_string(v.receiver_terminal));
      }
      const auto& term = sub.terminals[static_cast<std::size_t>(v.receiver_terminal)];
      if (term.twin.subdomain != msg.sender || term.twin.terminal != v.sender_terminal) {
        throw ProtocolError("worker " + std::to_string(state.id) +
                            " received a value from a terminal that is not the twin");
      }
      if (filled[static_cast<std::size_t>(v.receiver_terminal)]++) {
        throw ProtocolError("duplicate value for terminal " + std::to_string(v.receiver_terminal));
      }
      in.u(v.receiver_terminal) = v.u;
      in.omega(v.receiver_terminal) = v.omega;
    }
  }
  for (int t = 0; t < m; ++t) {
    if (!filled[static_cast<std::size_t>(t)]) {
      throw ProtocolError("worker " + std::to_string(state.id) + " is missing the message for terminal " +
                          std::to_string(t) + " from subdomain " +
                          std::to_string(sub.terminals[static_cast<std::size_t>(t)].twin.subdomain));
    }
  }
  auto update = local_iterate(locals_[static_cast<std::size_t>(state.id)], in);
  return {state.id, state.iteration + 1, std::move(update.x), std::move(update.u),
          std::move(update.omega)};
}

std::vector<std::vector<BoundaryMessage>> Engine::route(
    const std::vector<WorkerState>& states) const {
  std::vector<std::vector<BoundaryMessage>> inboxes(locals_.size());
  for (const auto& st : states) {
    for (auto& msg : outgoing(st)) {
      inboxes.at(static_cast<std::size_t>(msg.receiver)).push_back(std::move(msg));
    }
  }
  return inboxes;
}

std::vector<WorkerState> Engine::step(const std::vector<WorkerState>& states,
                                      std::span<const SubdomainId> order) const {
  if (states.size() != locals_.size()) throw InputError("step needs one state per worker");
  std::vector<SubdomainId> sequence(order.begin(), order.end());
  if (sequence.empty()) {
    sequence.resize(states.size());
    std::iota(sequence.begin(), sequence.end(), 0);
  }
  const auto inboxes = route(states);
  std::vector<WorkerState> next(states.size());
  for (SubdomainId j : sequence) {
    next.at(static_cast<std::size_t>(j)) =
        advance(states[static_cast<std::size_t>(j)], inboxes[static_cast<std::size_t>(j)]);
  }
  return next;
}

double max_boundary_delta(const std::vector<WorkerState>& previous,
                          const std::vector<WorkerState>& current) {
  double worst = 0.0;
  for (std::size_t j = 0; j < current.size(); ++j) {
    const auto& a = previous[j];
    const auto& b = current[j];
    for (Eigen::Index t = 0; t < b.u.size(); ++t) {
      const double d = (std::abs(b.u(t) - a.u(t)) + std::abs(b.omega(t) - a.omega(t))) /
                       (1.0 + std::abs(b.u(t)));
      worst = std::max(worst, d);
    }
  }
  return worst;
}

IterationReport run_vtm(const SplitSystem& s, const ImpedanceAssignment& z,
                        const RunConfig& cfg) {
  if (!(cfg.epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (cfg.max_iter < 1) throw InputError("max_iter must be at least 1");
  if (cfg.threads < 1) throw InputError("threads must be at least 1");
  if (cfg.metric == TerminationMetric::kRmsError && !cfg.oracle) {
    throw InputError("rms_error termination needs an oracle solution");
  }
  if (cfg.oracle && cfg.oracle->size() != s.num_vertices()) {
    throw InputError("oracle length does not match the system");
  }

  const Engine engine(s, z);
  const SparseMatrix a = s.original.matrix();
  const Eigen::VectorXd b = s.original.rhs_vector();
  const int workers = engine.num_workers();

  IterationReport report;
  std::vector<WorkerState> states = engine.initial_states(cfg);
  std::vector<WorkerState> next(states.size());
  std::vector<std::vector<BoundaryMessage>> inboxes;
  bool done = false;

  auto deliver = [&] {
    inboxes = engine.route(states);
    if (!cfg.log_messages) return;
    for (SubdomainId j = 0; j < workers; ++j) {
      for (const auto& msg : engine.outgoing(states[static_cast<std::size_t>(j)])) {
        for (const auto& v : msg.values) {
          report.messages.push_back({msg.iteration, msg.sender, msg.receiver,
                                     v.sender_terminal, v.u, v.omega});
        }
      }
    }
  };

  // Runs after every worker finished iteration k; decides termination.
  auto finish_round = [&] {
    IterationRecord rec;
    rec.k = next.front().iteration;
    rec.max_boundary_delta = max_boundary_delta(states, next);
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(next.size());
    for (const auto& st : next) xs.push_back(st.x);
    auto merged = merge(s, xs);
    rec.residual_inf = (a * merged.x - b).cwiseAbs().maxCoeff();
    if (cfg.oracle) {
      rec.rms_error = std::sqrt((merged.x - *cfg.oracle).squaredNorm() /
                                static_cast<double>(merged.x.size()));
    }
    states.swap(next);
    report.iterations.push_back(rec);
    report.solution = std::move(merged.x);
    report.merge_disagreement = merged.max_disagreement;
    report.local_solutions = std::move(xs);

    const bool met = cfg.metric == TerminationMetric::kRmsError
                         ? *rec.rms_error <= cfg.epsilon
                         : rec.max_boundary_delta < cfg.epsilon;
    report.converged = met;
    done = met || rec.k >= cfg.max_iter;
    if (!done) deliver();
  };

  deliver();
  if (cfg.threads == 1 || workers == 1) {
    while (!done) {
      for (SubdomainId j = 0; j < workers; ++j) {
        next[static_cast<std::size_t>(j)] = engine.advance(states[static_cast<std::size_t>(j)],
                                                           inboxes[static_cast<std::size_t>(j)]);
      }
      finish_round();
    }
  } else {
    const int threads = std::min(cfg.threads, workers);
    std::exception_ptr error;
    std::mutex error_mutex;
    auto on_round = [&]() noexcept {
      if (error) {
        done = true;
        return;
      }
      try {
        finish_round();
      } catch (...) {
        error = std::current_exception();
        done = true;
      }
    };
    std::barrier sync(threads, on_round);
    auto work = [&](int t) {
      while (!done) {
        for (int j = t; j < workers; j += threads) {
          try {
            next[static_cast<std::size_t>(j)] = engine.advance(
                states[static_cast<std::size_t>(j)], inboxes[static_cast<std::size_t>(j)]);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
        sync.arrive_and_wait();
      }
    };
    {
      std::vector<std::jthread> pool;
      for (int t = 1; t < threads; ++t) pool.emplace_back(work, t);
      work(0);
    }
    if (error) std::rethrow_exception(error);
  }

  report.iterations_run = static_cast<int>(report.iterations.size());
  for (const auto& line : s.lines) {
    const auto& sa = states[static_cast<std::size_t>(line.a.subdomain)];
    const auto& sb = states[static_cast<std::size_t>(line.b.subdomain)];
    report.max_potential_gap = std::max(
        report.max_potential_gap, std::abs(sa.u(line.a.terminal) - sb.u(line.b.terminal)));
    report.max_current_sum = std::max(
        report.max_current_sum, std::abs(sa.omega(line.a.terminal) + sb.omega(line.b.terminal)));
  }
  return report;
}

void write_trace(const IterationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# vtm trace " << timestamp() << '\n';
  out << "iter,max_boundary_delta,residual_inf,rms_error\n";
  for (const auto& r : report.iterations) {
    out << r.k << ',' << format_double(r.max_boundary_delta) << ','
        << format_double(r.residual_inf) << ','
        << (r.rms_error ? format_double(*r.rms_error) : std::string()) << '\n';
  }
}

void write_message_log(const IterationReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "# vtm messages " << timestamp() << '\n';
  out << "k,src,dst,port,u,omega\n";
  for (const auto& m : report.messages) {
    out << m.k << ',' << m.src << ',' << m.dst << ',' << m.port << ','
        << format_double(m.u) << ',' << format_double(m.omega) << '\n';
  }
}

}  // namespace vtm
