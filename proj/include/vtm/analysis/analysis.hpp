#pragma once

#include <vector>

#include <Eigen/Dense>

#include "vtm/core/system.hpp"
#include "vtm/core/text_io.hpp"
#include "vtm/local/local.hpp"
#include "vtm/partition/split.hpp"
#include "vtm/runtime/runtime.hpp"

namespace vtm {

/// Solution of an SPD system by Cholesky. Throws NumericalError when the
/// matrix is not SPD or the residual check fails.
Eigen::VectorXd direct_solve(const SparseSymmetricSystem& sys);

/// The split system reordered around the transmission lines: senior
/// terminals (endpoint a of every line), junior terminals (endpoint b), then
/// all inner vertices, each group ascending.
///
///     A_bar = [ C_bar  E_bar ]    S = C_bar - E_bar D^{-1} E_bar^T
///             [ E_bar^T  D   ]    beta = f_bar - E_bar D^{-1} g
///
/// M holds the line impedances in the same terminal order and J exchanges
/// each senior terminal with its junior twin.
struct GlobalOperator {
  int lines = 0;
  SparseMatrix reordered;          // A_bar from the subdomain blocks
  SparseMatrix reordered_direct;   // A_bar from the original system and scheme
  SparseMatrix block_diagonal;     // blockdiag of the local matrices
  std::vector<int> permutation;    // block-diagonal row -> A_bar row
  Eigen::VectorXd rhs;             // (f_bar; g)
  Eigen::MatrixXd S;
  Eigen::VectorXd beta;
  Eigen::MatrixXd M;
  Eigen::MatrixXd J;
  std::vector<TerminalRef> terminals;  // A_bar terminal row -> terminal
};

/// Requires every terminal to carry a single line (twin splits). Throws
/// InputError for four-way splits and NumericalError when the inner block
/// is not SPD.
GlobalOperator build_global_operator(const SplitSystem& s, const ImpedanceAssignment& z);

/// P = (I + M S)^{-1} J (I - M S).
Eigen::MatrixXd iteration_matrix(const GlobalOperator& op);
/// gamma = (I + M S)^{-1} (J M + M) beta.
Eigen::VectorXd iteration_offset(const GlobalOperator& op);

/// Largest eigenvalue modulus; falls back to ||P^(2^s)||^(1/2^s) when the
/// eigenvalue solver does not converge.
double spectral_radius(const Eigen::MatrixXd& p);
double spectral_radius_power_norm(const Eigen::MatrixXd& p, double tol = 1e-8);

struct Certification {
  double rho = 0.0;
  bool certified = false;        // rho < 1 - 1e-10 and the checks below hold
  double reordering_residual = 0.0;   // A_bar from the two routes, relative
  bool schur_spd = false;
  double min_scaled_schur_eigenvalue = 0.0;  // of sqrt(M) S sqrt(M)
  double exchange_symmetry_residual = 0.0;   // |sqrt(M)^-1 J sqrt(M) - J|
  double exchange_involution_residual = 0.0; // |J J - I|
  double exchange_commutation_residual = 0.0;// |J M - M J|
};

inline constexpr double kCertificationMargin = 1e-10;

Certification certify_convergence(const GlobalOperator& op);

struct FixedPointCheck {
  bool solvable = false;
  double max_potential_gap = 0.0;  // |U_se - U_ju|
  double max_current_sum = 0.0;    // |Omega_se + Omega_ju|
  double max_oracle_error = 0.0;   // terminal potentials vs the direct solution
  bool passed = false;             // all three within 1e-9
};

/// Solves (I - P) U = gamma and checks the fixed point against the oracle.
FixedPointCheck fixed_point_check(const GlobalOperator& op, const SplitSystem& s,
                                  const Eigen::VectorXd& oracle);

/// Geometric-mean decay of max_boundary_delta over the iterations where it
/// lies between 1e-4 of its peak and 1e-11.
double empirical_contraction_rate(const IterationReport& report);

KeyValueDocument to_document(const Certification& c);

}  // namespace vtm
