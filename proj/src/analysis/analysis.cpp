#include "vtm/analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "vtm/core/errors.hpp"
#include "vtm/core/linalg.hpp"

namespace vtm {
namespace {

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double max_abs(const SparseMatrix& m) {
  double worst = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

SparseMatrix from_triplets(int n, const std::vector<Eigen::Triplet<double>>& t) {
  SparseMatrix m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

Eigen::VectorXd direct_solve(const SparseSymmetricSystem& sys) {
  const SparseMatrix a = sys.matrix();
  const Eigen::VectorXd b = sys.rhs_vector();
  SpdFactorization factor(a);
  Eigen::VectorXd x = factor.solve(b);
  const double residual = (a * x - b).cwiseAbs().maxCoeff();
  const double scale = max_abs(a) * x.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
  if (!x.allFinite() || residual > 1e-8 * std::max(scale, 1e-300)) {
    throw NumericalError("direct solve residual " + std::to_string(residual) +
                         " too large for the system scale");
  }
  return x;
}

GlobalOperator build_global_operator(const SplitSystem& s, const ImpedanceAssignment& z) {
  const int m = static_cast<int>(s.lines.size());
  const int n = s.num_vertices();
  for (const auto& sub : s.subdomains) {
    if (sub.num_terminals() != sub.num_ports) {
      throw InputError("global operator needs one line per port (twin splits only)");
    }
  }

  GlobalOperator op;
  op.lines = m;
  op.terminals.resize(static_cast<std::size_t>(2 * m));
  std::map<std::pair<SubdomainId, int>, int> terminal_row;  // (subdomain, port)
  std::vector<int> line_of(static_cast<std::size_t>(n), -1);
  for (const auto& line : s.lines) {
    const auto port_of = [&](const TerminalRef& r) {
      return s.subdomains[static_cast<std::size_t>(r.subdomain)]
          .terminals[static_cast<std::size_t>(r.terminal)].port;
    };
    terminal_row[{line.a.subdomain, port_of(line.a)}] = line.id;
    terminal_row[{line.b.subdomain, port_of(line.b)}] = m + line.id;
    op.terminals[static_cast<std::size_t>(line.id)] = line.a;
    op.terminals[static_cast<std::size_t>(m + line.id)] = line.b;
    line_of[static_cast<std::size_t>(line.parent)] = line.id;
  }
  std::vector<int> inner_row(static_cast<std::size_t>(n), -1);
  int rows = 2 * m;
  for (VertexId v = 0; v < n; ++v) {
    if (s.scheme.owner[static_cast<std::size_t>(v)] != kBoundary) {
      inner_row[static_cast<std::size_t>(v)] = rows++;
    }
  }
  const int inner = rows - 2 * m;

  // Route one: block diagonal of the local matrices, then permuted.
  std::vector<Eigen::Triplet<double>> blocks;
  Eigen::VectorXd block_rhs(rows);
  int offset = 0;
  for (const auto& sub : s.subdomains) {
    for (int l = 0; l < sub.dim(); ++l) {
      const int row = l < sub.num_ports
                          ? terminal_row.at({sub.id, l})
                          : inner_row[static_cast<std::size_t>(sub.parents[static_cast<std::size_t>(l)])];
      op.permutation.push_back(row);
      block_rhs(offset + l) = sub.system.rhs()[static_cast<std::size_t>(l)];
    }
    for (const auto& e : sub.system.entries()) {
      blocks.emplace_back(offset + e.row, offset + e.col, e.value);
      if (e.row != e.col) blocks.emplace_back(offset + e.col, offset + e.row, e.value);
    }
    offset += sub.dim();
  }
  if (offset != rows) throw InputError("split system does not match its line structure");
  op.block_diagonal = from_triplets(rows, blocks);
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm(rows);
  for (int i = 0; i < rows; ++i) perm.indices()(i) = op.permutation[static_cast<std::size_t>(i)];
  op.reordered = op.block_diagonal.twistedBy(perm);
  op.rhs = perm * block_rhs;

  // Route two: straight from the original system and the scheme's shares.
  std::vector<Eigen::Triplet<double>> direct;
  auto child_row = [&](VertexId v, SubdomainId side) {
    const auto* split = s.scheme.find_boundary(v);
    const int line = line_of[static_cast<std::size_t>(v)];
    const auto& link = split->links.front();
    return split->sides[static_cast<std::size_t>(link.first)] == side ? line : m + line;
  };
  auto put = [&](int r, int c, double value) {
    direct.emplace_back(r, c, value);
    if (r != c) direct.emplace_back(c, r, value);
  };
  for (const auto& e : s.original.entries()) {
    const VertexId i = e.row, j = e.col;
    const SubdomainId oi = s.scheme.owner[static_cast<std::size_t>(i)];
    const SubdomainId oj = s.scheme.owner[static_cast<std::size_t>(j)];
    if (i == j) {
      if (oi != kBoundary) {
        put(inner_row[static_cast<std::size_t>(i)], inner_row[static_cast<std::size_t>(i)], e.value);
      } else {
        const auto* split = s.scheme.find_boundary(i);
        for (int c = 0; c < split->children(); ++c) {
          const int r = child_row(i, split->sides[static_cast<std::size_t>(c)]);
          put(r, r, split->weights[static_cast<std::size_t>(c)]);
        }
      }
    } else if (oi != kBoundary && oj != kBoundary) {
      put(inner_row[static_cast<std::size_t>(i)], inner_row[static_cast<std::size_t>(j)], e.value);
    } else if (oi == kBoundary && oj == kBoundary) {
      const auto* es = s.scheme.find_edge(i, j);
      for (std::size_t k = 0; k < es->sides.size(); ++k) {
        put(child_row(i, es->sides[k]), child_row(j, es->sides[k]), es->weights[k]);
      }
    } else {
      const VertexId v = oi == kBoundary ? i : j;
      const VertexId u = oi == kBoundary ? j : i;
      put(child_row(v, s.scheme.owner[static_cast<std::size_t>(u)]),
          inner_row[static_cast<std::size_t>(u)], e.value);
    }
  }
  op.reordered_direct = from_triplets(rows, direct);

  const Eigen::MatrixXd c_bar = Eigen::MatrixXd(op.reordered).topLeftCorner(2 * m, 2 * m);
  const Eigen::VectorXd f_bar = op.rhs.head(2 * m);
  if (inner == 0) {
    op.S = c_bar;
    op.beta = f_bar;
  } else {
    const SparseMatrix e_bar = op.reordered.block(0, 2 * m, 2 * m, inner);
    const SparseMatrix d = op.reordered.block(2 * m, 2 * m, inner, inner);
    SpdFactorization factor;
    try {
      factor = SpdFactorization(d);
    } catch (const NumericalError& err) {
      throw NumericalError(std::string("inner block is singular: ") + err.what());
    }
    const Eigen::MatrixXd x = factor.solve(Eigen::MatrixXd(SparseMatrix(e_bar.transpose())));
    op.S = c_bar - e_bar * x;
    op.S = 0.5 * (op.S + op.S.transpose()).eval();
    op.beta = f_bar - e_bar * factor.solve(Eigen::VectorXd(op.rhs.tail(inner)));
  }

  op.M = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (const auto& sub : s.subdomains) {
    const Eigen::MatrixXd zj = local_impedance(s, sub.id, z).dense();
    for (int t1 = 0; t1 < sub.num_terminals(); ++t1) {
      for (int t2 = 0; t2 < sub.num_terminals(); ++t2) {
        op.M(terminal_row.at({sub.id, sub.terminals[static_cast<std::size_t>(t1)].port}),
             terminal_row.at({sub.id, sub.terminals[static_cast<std::size_t>(t2)].port})) = zj(t1, t2);
      }
    }
  }
  op.J = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (int l = 0; l < m; ++l) {
    op.J(l, m + l) = 1.0;
    op.J(m + l, l) = 1.0;
  }
  return op;
}

Eigen::MatrixXd iteration_matrix(const GlobalOperator& op) {
  const auto size = op.S.rows();
  const Eigen::MatrixXd ms = op.M * op.S;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(size, size);
  return (id + ms).partialPivLu().solve(op.J * (id - ms));
}

Eigen::VectorXd iteration_offset(const GlobalOperator& op) {
  const auto size = op.S.rows();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(size, size);
  return (id + op.M * op.S).partialPivLu().solve((op.J * op.M + op.M) * op.beta);
}

double spectral_radius(const Eigen::MatrixXd& p) {
  if (p.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(p, false);
  if (es.info() != Eigen::Success) return spectral_radius_power_norm(p);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius_power_norm(const Eigen::MatrixXd& p, double tol) {
  if (p.size() == 0) return 0.0;
  double norm = p.norm();
  if (norm == 0.0) return 0.0;
  Eigen::MatrixXd q = p / norm;
  double log_norm = std::log(norm);  // log ||P^(2^s)||
  double previous = std::exp(log_norm);
  for (int s = 1; s <= 60; ++s) {
    q = (q * q).eval();
    const double qn = q.norm();
    if (qn == 0.0) return 0.0;
    q /= qn;
    log_norm = 2.0 * log_norm + std::log(qn);
    const double estimate = std::exp(log_norm / std::ldexp(1.0, s));
    if (std::abs(estimate - previous) <= tol * std::max(estimate, 1e-300)) return estimate;
    previous = estimate;
  }
  return previous;
}

Certification certify_convergence(const GlobalOperator& op) {
  Certification c;
  const auto size = op.S.rows();
  c.rho = spectral_radius(iteration_matrix(op));

  const double scale = std::max(1.0, max_abs(op.reordered));
  c.reordering_residual = max_abs(SparseMatrix(op.reordered - op.reordered_direct)) / scale;

  c.schur_spd = size == 0 || classify(op.S) == Definiteness::kPositiveDefinite;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> msqrt(op.M);
  const Eigen::MatrixXd root = msqrt.operatorSqrt();
  const Eigen::MatrixXd inv_root = msqrt.operatorInverseSqrt();
  if (size > 0) {
    const Eigen::MatrixXd t = root * op.S * root;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (t + t.transpose()),
                                                       Eigen::EigenvaluesOnly);
    c.min_scaled_schur_eigenvalue = eig.eigenvalues().minCoeff();
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(size, size);
  c.exchange_symmetry_residual = max_abs(Eigen::MatrixXd(inv_root * op.J * root - op.J));
  c.exchange_involution_residual = max_abs(Eigen::MatrixXd(op.J * op.J - id));
  c.exchange_commutation_residual =
      max_abs(Eigen::MatrixXd(op.J * op.M - op.M * op.J)) / std::max(1.0, max_abs(op.M));
  c.certified = c.rho < 1.0 - kCertificationMargin && c.exchange_commutation_residual <= 1e-12 &&
                c.exchange_involution_residual <= 1e-12 && c.reordering_residual <= 1e-12;
  return c;
}

FixedPointCheck fixed_point_check(const GlobalOperator& op, const SplitSystem& s,
                                  const Eigen::VectorXd& oracle) {
  FixedPointCheck out;
  const int m = op.lines;
  const auto size = op.S.rows();
  if (oracle.size() != s.num_vertices()) throw InputError("oracle length does not match the system");
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(size, size) - iteration_matrix(op);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  out.solvable = lu.rank() == size;
  if (!out.solvable) return out;
  const Eigen::VectorXd u = lu.solve(iteration_offset(op));
  const Eigen::VectorXd omega = op.S * u - op.beta;
  for (int l = 0; l < m; ++l) {
    const double x = oracle(s.lines[static_cast<std::size_t>(l)].parent);
    out.max_potential_gap = std::max(out.max_potential_gap, std::abs(u(l) - u(m + l)));
    out.max_current_sum = std::max(out.max_current_sum, std::abs(omega(l) + omega(m + l)));
    out.max_oracle_error =
        std::max({out.max_oracle_error, std::abs(u(l) - x), std::abs(u(m + l) - x)});
  }
  out.passed = out.max_potential_gap <= 1e-9 && out.max_current_sum <= 1e-9 &&
               out.max_oracle_error <= 1e-9;
  return out;
}

double empirical_contraction_rate(const IterationReport& report) {
  const auto& it = report.iterations;
  if (it.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  std::size_t peak = 0;
  for (std::size_t k = 1; k < it.size(); ++k) {
    if (it[k].max_boundary_delta > it[peak].max_boundary_delta) peak = k;
  }
  const double top = it[peak].max_boundary_delta;
  std::size_t first = peak;
  while (first + 1 < it.size() && it[first].max_boundary_delta > 1e-4 * top) ++first;
  std::size_t last = first;
  while (last + 1 < it.size() && it[last + 1].max_boundary_delta >= 1e-11) ++last;
  if (last < first + 3) {
    first = peak;
    last = it.size() - 1;
    while (last > first && it[last].max_boundary_delta < 1e-13) --last;
  }
  if (last <= first || it[first].max_boundary_delta <= 0.0) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::pow(it[last].max_boundary_delta / it[first].max_boundary_delta,
                  1.0 / static_cast<double>(last - first));
}

KeyValueDocument to_document(const Certification& c) {
  KeyValueDocument doc;
  auto& s = doc.add_section("certificate");
  s.entries.emplace_back("spectral_radius", format_double(c.rho));
  s.entries.emplace_back("certified", c.certified ? "true" : "false");
  s.entries.emplace_back("margin", format_double(kCertificationMargin));
  s.entries.emplace_back("reordering_residual", format_double(c.reordering_residual));
  s.entries.emplace_back("schur_spd", c.schur_spd ? "true" : "false");
  s.entries.emplace_back("min_scaled_schur_eigenvalue", format_double(c.min_scaled_schur_eigenvalue));
  s.entries.emplace_back("exchange_symmetry_residual", format_double(c.exchange_symmetry_residual));
  s.entries.emplace_back("exchange_involution_residual", format_double(c.exchange_involution_residual));
  s.entries.emplace_back("exchange_commutation_residual", format_double(c.exchange_commutation_residual));
  return doc;
}

}  // namespace vtm
