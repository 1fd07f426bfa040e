#include "vtm/local/local.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "vtm/core/errors.hpp"
#include "vtm/core/text_io.hpp"

namespace vtm {
namespace {

std::atomic<std::uint64_t> g_preconditions{0};

}  // namespace

Eigen::MatrixXd LocalSystem::C() const {
  return Eigen::MatrixXd(matrix).topLeftCorner(num_ports, num_ports);
}
Eigen::MatrixXd LocalSystem::E() const {
  return Eigen::MatrixXd(matrix).topRightCorner(num_ports, num_inner());
}
Eigen::MatrixXd LocalSystem::F() const {
  return Eigen::MatrixXd(matrix).bottomLeftCorner(num_inner(), num_ports);
}
Eigen::MatrixXd LocalSystem::D() const {
  return Eigen::MatrixXd(matrix).bottomRightCorner(num_inner(), num_inner());
}
Eigen::VectorXd LocalSystem::f() const { return rhs.head(num_ports); }
Eigen::VectorXd LocalSystem::g() const { return rhs.tail(num_inner()); }

Eigen::MatrixXd LocalSystem::incidence() const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(num_ports, num_terminals());
  for (int t = 0; t < num_terminals(); ++t) b(terminal_ports[static_cast<std::size_t>(t)], t) = 1.0;
  return b;
}

LocalSystem assemble(const Subdomain& sub) {
  LocalSystem out;
  out.matrix = sub.system.matrix();
  out.rhs = sub.system.rhs_vector();
  out.num_ports = sub.num_ports;
  for (const auto& t : sub.terminals) out.terminal_ports.push_back(t.port);
  return out;
}

ImpedanceMatrix ImpedanceMatrix::diagonal(Eigen::VectorXd z) {
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z(i)) || !(z(i) > 0.0)) {
      throw InputError("impedance " + std::to_string(i) + " must be positive, got " +
                       format_double(z(i)));
    }
  }
  ImpedanceMatrix m;
  m.kind_ = Kind::kDiagonal;
  m.dense_ = z.asDiagonal();
  m.diag_ = std::move(z);
  return m;
}

ImpedanceMatrix ImpedanceMatrix::coupled(Eigen::MatrixXd z) {
  if (z.rows() != z.cols()) throw InputError("impedance matrix must be square");
  if (!z.allFinite()) throw InputError("impedance matrix has non-finite entries");
  if ((z - z.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, z.cwiseAbs().maxCoeff())) {
    throw InputError("impedance matrix must be symmetric");
  }
  if (z.rows() > 0 && classify(z) != Definiteness::kPositiveDefinite) {
    throw InputError("impedance matrix must be positive definite");
  }
  ImpedanceMatrix m;
  m.kind_ = Kind::kCoupled;
  m.diag_ = z.diagonal();
  m.llt_ = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(z);
  m.dense_ = std::move(z);
  return m;
}

Eigen::MatrixXd ImpedanceMatrix::inverse() const {
  if (kind_ == Kind::kDiagonal) {
    return Eigen::MatrixXd(diag_.cwiseInverse().asDiagonal());
  }
  return llt_->solve(Eigen::MatrixXd::Identity(size(), size()));
}

Eigen::VectorXd ImpedanceMatrix::apply(const Eigen::VectorXd& v) const {
  if (kind_ == Kind::kDiagonal) return diag_.cwiseProduct(v);
  return dense_ * v;
}

Eigen::VectorXd ImpedanceMatrix::apply_inverse(const Eigen::VectorXd& v) const {
  if (kind_ == Kind::kDiagonal) return v.cwiseQuotient(diag_);
  return llt_->solve(v);
}

ImpedanceMatrix local_impedance(const SplitSystem& s, SubdomainId j,
                                const ImpedanceAssignment& z) {
  if (j < 0 || j >= static_cast<SubdomainId>(s.subdomains.size())) {
    throw InputError("no subdomain " + std::to_string(j));
  }
  const auto& sub = s.subdomains[static_cast<std::size_t>(j)];
  if (auto it = z.coupled.find(j); it != z.coupled.end()) {
    if (it->second.rows() != sub.num_terminals()) {
      throw InputError("coupled impedance for subdomain " + std::to_string(j) +
                       " must be " + std::to_string(sub.num_terminals()) + " square");
    }
    return ImpedanceMatrix::coupled(it->second);
  }
  if (z.line.size() != s.lines.size()) {
    throw InputError("impedance list has " + std::to_string(z.line.size()) +
                     " values for " + std::to_string(s.lines.size()) + " lines");
  }
  Eigen::VectorXd d(sub.num_terminals());
  for (int t = 0; t < sub.num_terminals(); ++t) {
    d(t) = z.line[static_cast<std::size_t>(sub.terminals[static_cast<std::size_t>(t)].line)];
  }
  return ImpedanceMatrix::diagonal(std::move(d));
}

FactoredLocal::FactoredLocal(LocalSystem system, ImpedanceMatrix z)
    : system_(std::make_shared<const LocalSystem>(std::move(system))), z_(std::move(z)) {
  ++g_preconditions;
  const auto& sys = *system_;
  if (z_.size() != sys.num_terminals()) {
    throw InputError("impedance matrix size does not match terminal count");
  }
  const Eigen::MatrixXd zinv = z_.inverse();
  std::vector<Eigen::Triplet<double>> triplets;
  for (int s = 0; s < sys.num_terminals(); ++s) {
    for (int t = 0; t < sys.num_terminals(); ++t) {
      if (zinv(s, t) != 0.0) {
        triplets.emplace_back(sys.terminal_ports[static_cast<std::size_t>(s)],
                              sys.terminal_ports[static_cast<std::size_t>(t)], zinv(s, t));
      }
    }
  }
  SparseMatrix termination(sys.dim(), sys.dim());
  termination.setFromTriplets(triplets.begin(), triplets.end());
  terminated_ = sys.matrix + termination;
  factor_ = SpdFactorization(terminated_);
}

FactoredLocal precondition(const LocalSystem& system, const ImpedanceMatrix& z) {
  return FactoredLocal(system, z);
}

std::uint64_t precondition_count() { return g_preconditions.load(); }

LocalUpdate local_iterate(const FactoredLocal& local, const Incoming& incoming) {
  const auto& sys = local.system();
  const int m = sys.num_terminals();
  if (incoming.u.size() != m || incoming.omega.size() != m) {
    throw InputError("incoming boundary values must have one entry per terminal");
  }
  const auto& z = local.impedance();
  const Eigen::VectorXd reflected = incoming.u - z.apply(incoming.omega);
  const Eigen::VectorXd drive = z.apply_inverse(reflected);

  Eigen::VectorXd rhs = sys.rhs;
  for (int t = 0; t < m; ++t) rhs(sys.terminal_ports[static_cast<std::size_t>(t)]) += drive(t);

  LocalUpdate out;
  out.x = local.factor().solve(rhs);
  out.u.resize(m);
  for (int t = 0; t < m; ++t) out.u(t) = out.x(sys.terminal_ports[static_cast<std::size_t>(t)]);
  out.omega = z.apply_inverse(reflected - out.u);
  return out;
}

double input_impedance(const LocalSystem& system, int port) {
  if (port < 0 || port >= system.num_ports) {
    throw InputError("no port " + std::to_string(port));
  }
  return input_impedances(system)(port);
}

Eigen::VectorXd input_impedances(const LocalSystem& system) {
  SpdFactorization factor;
  try {
    factor = SpdFactorization(system.matrix);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("input impedance undefined, subgraph matrix is singular: ") +
                         e.what());
  }
  Eigen::VectorXd r(system.num_ports);
  for (int p = 0; p < system.num_ports; ++p) {
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(system.dim());
    unit(p) = 1.0;
    r(p) = factor.solve(unit)(p);
  }
  return r;
}

std::string_view to_string(MatchPolicy p) {
  switch (p) {
    case MatchPolicy::kSideA:
      return "side_a";
    case MatchPolicy::kSideB:
      return "side_b";
    case MatchPolicy::kMean:
      return "mean";
  }
  return "mean";
}

MatchPolicy parse_match_policy(std::string_view text) {
  if (text == "side_a") return MatchPolicy::kSideA;
  if (text == "side_b") return MatchPolicy::kSideB;
  if (text == "mean") return MatchPolicy::kMean;
  throw InputError("unknown match policy '" + std::string(text) +
                   "' (side_a, side_b or mean)");
}

ImpedanceAssignment match_impedances(const SplitSystem& s, MatchPolicy policy) {
  std::vector<Eigen::VectorXd> r;
  for (const auto& sub : s.subdomains) r.push_back(input_impedances(assemble(sub)));
  auto at = [&](const TerminalRef& ref) {
    const auto& sub = s.subdomains[static_cast<std::size_t>(ref.subdomain)];
    return r[static_cast<std::size_t>(ref.subdomain)](
        sub.terminals[static_cast<std::size_t>(ref.terminal)].port);
  };
  ImpedanceAssignment z;
  for (const auto& line : s.lines) {
    const double ra = at(line.a), rb = at(line.b);
    switch (policy) {
      case MatchPolicy::kSideA:
        z.line.push_back(ra);
        break;
      case MatchPolicy::kSideB:
        z.line.push_back(rb);
        break;
      case MatchPolicy::kMean:
        z.line.push_back(0.5 * (ra + rb));
        break;
    }
  }
  return z;
}

ImpedanceAssignment uniform_impedances(const SplitSystem& s, double z) {
  if (!std::isfinite(z) || !(z > 0.0)) throw InputError("impedance must be positive");
  return {std::vector<double>(s.lines.size(), z), {}};
}

void save_impedances(const ImpedanceAssignment& z, const std::filesystem::path& path) {
  KeyValueDocument doc;
  auto& head = doc.add_section("impedance");
  head.entries.emplace_back("lines", std::to_string(z.line.size()));
  for (std::size_t i = 0; i < z.line.size(); ++i) {
    head.entries.emplace_back(std::to_string(i), format_double(z.line[i]));
  }
  for (const auto& [j, m] : z.coupled) {
    auto& s = doc.add_section("coupled " + std::to_string(j));
    s.entries.emplace_back("size", std::to_string(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      std::string row;
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) row += ' ';
        row += format_double(m(r, c));
      }
      s.entries.emplace_back("row" + std::to_string(r), row);
    }
  }
  doc.save(path);
}

ImpedanceAssignment load_impedances(const std::filesystem::path& path) {
  const auto doc = KeyValueDocument::load(path);
  ImpedanceAssignment z;
  const auto& head = doc.at("impedance");
  const long long count = parse_int(head.at("lines"));
  if (count < 0) throw InputError("negative line count in " + path.string());
  for (long long i = 0; i < count; ++i) {
    z.line.push_back(parse_double(head.at(std::to_string(i))));
  }
  for (const auto& section : doc.sections()) {
    auto words = split_whitespace(section.name);
    if (words.size() != 2 || words[0] != "coupled") continue;
    const auto j = static_cast<SubdomainId>(parse_int(words[1]));
    const auto size = static_cast<Eigen::Index>(parse_int(section.at("size")));
    Eigen::MatrixXd m(size, size);
    for (Eigen::Index r = 0; r < size; ++r) {
      auto fields = split_whitespace(section.at("row" + std::to_string(r)));
      if (static_cast<Eigen::Index>(fields.size()) != size) {
        throw InputError("coupled impedance row has wrong length");
      }
      for (Eigen::Index c = 0; c < size; ++c) m(r, c) = parse_double(fields[static_cast<std::size_t>(c)]);
    }
    z.coupled[j] = std::move(m);
  }
  return z;
}

}  // namespace vtm
