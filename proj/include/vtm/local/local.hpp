#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "vtm/core/linalg.hpp"
#include "vtm/core/system.hpp"
#include "vtm/partition/split.hpp"

namespace vtm {

/// Local subgraph system with ports first:
///
///     [C E] [u]   [f]
///     [F D] [y] = [g]
///
/// plus the terminal-to-port incidence of its transmission lines.
struct LocalSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  int num_ports = 0;
  std::vector<int> terminal_ports;  // terminal -> local port index

  int dim() const { return static_cast<int>(rhs.size()); }
  int num_inner() const { return dim() - num_ports; }
  int num_terminals() const { return static_cast<int>(terminal_ports.size()); }

  Eigen::MatrixXd C() const;
  Eigen::MatrixXd E() const;
  Eigen::MatrixXd F() const;
  Eigen::MatrixXd D() const;
  Eigen::VectorXd f() const;
  Eigen::VectorXd g() const;
  /// Port x terminal incidence B (identity for twin splits).
  Eigen::MatrixXd incidence() const;
};

LocalSystem assemble(const Subdomain& sub);

/// Characteristic impedance matrix of a subdomain, one row per terminal:
/// positive diagonal, or a full SPD coupling.
class ImpedanceMatrix {
 public:
  enum class Kind { kDiagonal, kCoupled };

  ImpedanceMatrix() = default;
  /// Throws InputError unless every value is finite and positive.
  static ImpedanceMatrix diagonal(Eigen::VectorXd z);
  /// Throws InputError unless z is symmetric positive definite.
  static ImpedanceMatrix coupled(Eigen::MatrixXd z);

  Kind kind() const { return kind_; }
  int size() const { return static_cast<int>(dense_.rows()); }
  const Eigen::MatrixXd& dense() const { return dense_; }
  Eigen::MatrixXd inverse() const;
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;          // Z v
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& v) const;  // Z^{-1} v

 private:
  Kind kind_ = Kind::kDiagonal;
  Eigen::MatrixXd dense_;
  Eigen::VectorXd diag_;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> llt_;
};

/// Impedances for a whole split system: one value per transmission line,
/// optionally overridden by a coupled matrix for individual subdomains.
struct ImpedanceAssignment {
  std::vector<double> line;
  std::map<SubdomainId, Eigen::MatrixXd> coupled;
};

ImpedanceMatrix local_impedance(const SplitSystem& s, SubdomainId j,
                                const ImpedanceAssignment& z);

/// Local system with the line termination folded into the matrix,
/// M = A + B Z^{-1} B^T, factored once and reused for every iteration.
class FactoredLocal {
 public:
  /// Throws NumericalError when M is not SPD.
  FactoredLocal(LocalSystem system, ImpedanceMatrix z);

  const LocalSystem& system() const { return *system_; }
  const ImpedanceMatrix& impedance() const { return z_; }
  const SparseMatrix& terminated_matrix() const { return terminated_; }
  const SpdFactorization& factor() const { return factor_; }

 private:
  std::shared_ptr<const LocalSystem> system_;
  ImpedanceMatrix z_;
  SparseMatrix terminated_;
  SpdFactorization factor_;
};

FactoredLocal precondition(const LocalSystem& system, const ImpedanceMatrix& z);

/// Number of precondition() calls (and FactoredLocal constructions) made by
/// this process.
std::uint64_t precondition_count();

/// Values arriving over the lines: the twin terminal's potential and inflow
/// current from the previous iteration, one entry per local terminal.
struct Incoming {
  Eigen::VectorXd u;
  Eigen::VectorXd omega;
};

struct LocalUpdate {
  Eigen::VectorXd x;      // all local potentials, ports first
  Eigen::VectorXd u;      // potential at each terminal
  Eigen::VectorXd omega;  // inflow current through each terminal
};

/// One local solve: u + Z omega = u_twin - Z omega_twin on every terminal,
/// together with the subgraph equations.
LocalUpdate local_iterate(const FactoredLocal& local, const Incoming& incoming);

/// Driving-point resistance seen at a port with the lines disconnected.
/// Throws NumericalError when the subgraph matrix is singular.
double input_impedance(const LocalSystem& system, int port);
Eigen::VectorXd input_impedances(const LocalSystem& system);

enum class MatchPolicy { kSideA, kSideB, kMean };

std::string_view to_string(MatchPolicy p);
MatchPolicy parse_match_policy(std::string_view text);

/// Line impedances equal to the input impedances of the subgraphs they join
/// (endpoint a, endpoint b, or their mean).
ImpedanceAssignment match_impedances(const SplitSystem& s, MatchPolicy policy);

/// Every line set to the same value.
ImpedanceAssignment uniform_impedances(const SplitSystem& s, double z);

void save_impedances(const ImpedanceAssignment& z, const std::filesystem::path& path);
ImpedanceAssignment load_impedances(const std::filesystem::path& path);

}  // namespace vtm
