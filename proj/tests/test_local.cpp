#include <doctest.h>

#include <filesystem>

#include "support/oracles.hpp"
#include "support/random_cases.hpp"
#include "vtm/analysis/analysis.hpp"
#include "vtm/core/errors.hpp"
#include "vtm/local/local.hpp"
#include "vtm/testbench/testbench.hpp"

using namespace vtm;

namespace {

SplitSystem example_split() { return split(example_system(), example_scheme()); }

LocalSystem scalar_port(double a) {
  LocalSystem l;
  l.matrix = SparseMatrix(1, 1);
  l.matrix.insert(0, 0) = a;
  l.rhs = Eigen::VectorXd::Zero(1);
  l.num_ports = 1;
  l.terminal_ports = {0};
  return l;
}

Eigen::Matrix2d m2(double a, double b, double c, double d) {
  Eigen::Matrix2d m;
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("local blocks of the example subdomains") {
  const auto s = example_split();
  const auto l1 = assemble(s.subdomains[0]);
  CHECK(l1.C() == Eigen::MatrixXd(m2(4.8, -0.9, -0.9, 3.5)));
  CHECK(l1.D() == Eigen::MatrixXd(m2(6, -1, -1, 7)));
  CHECK(l1.E() == Eigen::MatrixXd(m2(-2, 0, 0, -1)));
  CHECK(l1.F() == Eigen::MatrixXd(m2(-2, 0, 0, -1)));
  CHECK(l1.f() == Eigen::VectorXd(Eigen::Vector2d(1.6, 1.8)));
  CHECK(l1.g() == Eigen::VectorXd(Eigen::Vector2d(1, 2)));
  CHECK(l1.incidence() == Eigen::MatrixXd::Identity(2, 2));

  const auto l2 = assemble(s.subdomains[1]);
  CHECK(l2.C() == Eigen::MatrixXd(m2(3.2, -1.1, -1.1, 5.5)));
  CHECK(l2.D() == Eigen::MatrixXd(m2(10, -5, -5, 11)));
  CHECK(l2.E() == Eigen::MatrixXd(m2(-1, 0, 0, -3)));
  CHECK(l2.f() == Eigen::VectorXd(Eigen::Vector2d(1.4, 2.2)));
  CHECK(l2.g() == Eigen::VectorXd(Eigen::Vector2d(5, 6)));

  SUBCASE("subdomain without ports") {
    const auto g = example_system();
    PartitionScheme scheme;
    scheme.num_subdomains = 1;
    scheme.owner.assign(6, 0);
    const auto l = assemble(split(g, scheme).subdomains[0]);
    CHECK(l.C().size() == 0);
    CHECK(l.D() == graph_to_system(g).dense());
  }
}

TEST_CASE("preconditioning adds the inverse impedances") {
  const auto s = example_split();
  const auto z = example_impedances();
  const auto f1 = precondition(assemble(s.subdomains[0]), local_impedance(s, 0, z));
  const auto f2 = precondition(assemble(s.subdomains[1]), local_impedance(s, 1, z));
  const Eigen::MatrixXd t1(f1.terminated_matrix());
  const Eigen::MatrixXd t2(f2.terminated_matrix());
  CHECK(t1(0, 0) == 5.8);
  CHECK(t1(1, 1) == 5.5);
  CHECK(t2(0, 0) == 4.2);
  CHECK(t2(1, 1) == 7.5);
  // Off-port entries untouched.
  const Eigen::MatrixXd a1 = s.subdomains[0].system.dense();
  CHECK((t1 - a1).bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t1(0, 1) == a1(0, 1));

  SUBCASE("unit impedance makes a semidefinite subgraph definite") {
    LocalSystem l;
    Eigen::MatrixXd a(2, 2);
    a << 1, -1, -1, 1;
    l.matrix = a.sparseView();
    l.rhs = Eigen::VectorXd::Zero(2);
    l.num_ports = 1;
    l.terminal_ports = {0};
    CHECK(classify(a) == Definiteness::kPositiveSemidefinite);
    const auto f = precondition(l, ImpedanceMatrix::diagonal(Eigen::VectorXd::Ones(1)));
    Eigen::MatrixXd expected = a;
    expected(0, 0) += 1.0;
    CHECK(Eigen::MatrixXd(f.terminated_matrix()) == expected);
  }
  SUBCASE("count increments per call") {
    const auto before = precondition_count();
    precondition(assemble(s.subdomains[0]), local_impedance(s, 0, z));
    CHECK(precondition_count() == before + 1);
  }
}

TEST_CASE("impedance matrices") {
  CHECK_THROWS_AS(ImpedanceMatrix::diagonal(Eigen::Vector2d(1.0, -0.5)), InputError);
  CHECK_THROWS_AS(ImpedanceMatrix::diagonal(Eigen::Vector2d(1.0, 0.0)), InputError);
  CHECK_THROWS_AS(ImpedanceMatrix::coupled(Eigen::MatrixXd(m2(1, 2, 2, 1))), InputError);
  CHECK_THROWS_AS(ImpedanceMatrix::coupled(Eigen::MatrixXd(m2(1, 0.5, 0.4, 1))), InputError);

  const Eigen::MatrixXd zc = m2(2, 0.5, 0.5, 1);
  const auto z = ImpedanceMatrix::coupled(zc);
  const Eigen::VectorXd v = Eigen::Vector2d(0.3, -1.2);
  CHECK((z.apply(v) - zc * v).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((z.apply_inverse(v) - zc.inverse() * v).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((z.inverse() - zc.inverse()).cwiseAbs().maxCoeff() < 1e-14);

  const auto s = example_split();
  ImpedanceAssignment a = example_impedances();
  a.coupled[1] = zc;
  CHECK(local_impedance(s, 1, a).kind() == ImpedanceMatrix::Kind::kCoupled);
  CHECK(local_impedance(s, 0, a).kind() == ImpedanceMatrix::Kind::kDiagonal);
  a.coupled[1] = Eigen::MatrixXd::Identity(3, 3);
  CHECK_THROWS_AS(local_impedance(s, 1, a), InputError);
  CHECK_THROWS_AS(local_impedance(s, 0, ImpedanceAssignment{{1.0}, {}}), InputError);
}

TEST_CASE("local iteration") {
  const auto s = example_split();
  const auto z = example_impedances();

  SUBCASE("first iteration from zero boundary values") {
    const auto f1 = precondition(assemble(s.subdomains[0]), local_impedance(s, 0, z));
    const auto out = local_iterate(f1, {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)});
    Eigen::Matrix4d a;  // order x1, x2, x3a, x4a
    a << 6, -1, -2, 0,  //
        -1, 7, 0, -1,   //
        -2, 0, 5.8, -0.9,  //
        0, -1, -0.9, 5.5;
    const Eigen::Vector4d x = a.lu().solve(Eigen::Vector4d(1, 2, 1.6, 1.8));
    CHECK(std::abs(out.x(0) - x(2)) < 1e-14);
    CHECK(std::abs(out.x(1) - x(3)) < 1e-14);
    CHECK(std::abs(out.x(2) - x(0)) < 1e-14);
    CHECK(std::abs(out.x(3) - x(1)) < 1e-14);
    CHECK(std::abs(out.omega(0) + x(2) / 1.0) < 1e-14);
    CHECK(std::abs(out.omega(1) + x(3) / 0.5) < 1e-14);
  }
  SUBCASE("exact solution is a fixed point") {
    const auto aug = testing::solve_augmented(s);
    // Currents in boundary order: 3a, 3b, 4a, 4b.
    const Eigen::VectorXd w = aug.current;
    const Eigen::VectorXd x = aug.parent;
    const Eigen::Vector2d u(x(2), x(3));
    const Eigen::Vector2d own[2] = {{w(0), w(2)}, {w(1), w(3)}};
    for (int j = 0; j < 2; ++j) {
      const auto f = precondition(assemble(s.subdomains[static_cast<std::size_t>(j)]),
                                  local_impedance(s, j, z));
      const auto out = local_iterate(f, {u, -own[j]});
      CHECK((out.u - u).cwiseAbs().maxCoeff() < 1e-13);
      CHECK((out.omega - own[j]).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
  SUBCASE("single port scalar case") {
    const auto f = precondition(scalar_port(2.0), ImpedanceMatrix::diagonal(Eigen::VectorXd::Ones(1)));
    const auto out = local_iterate(f, {Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1)});
    CHECK(out.u(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(out.omega(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("subgraph equations hold after every update") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto c = testing::random_case(seed);
      const auto rs = split(c.graph, c.scheme);
      const auto zs = testing::perturbed_impedances(match_impedances(rs, MatchPolicy::kMean), seed);
      testing::CaseRng rng(seed + 100);
      for (SubdomainId j = 0; j < static_cast<SubdomainId>(rs.subdomains.size()); ++j) {
        const auto l = assemble(rs.subdomains[static_cast<std::size_t>(j)]);
        const auto f = precondition(l, local_impedance(rs, j, zs));
        Incoming in{Eigen::VectorXd(l.num_terminals()), Eigen::VectorXd(l.num_terminals())};
        for (int t = 0; t < l.num_terminals(); ++t) {
          in.u(t) = rng.uniform(-1, 1);
          in.omega(t) = rng.uniform(-1, 1);
        }
        const auto out = local_iterate(f, in);
        const Eigen::VectorXd lhs = Eigen::MatrixXd(l.matrix) * out.x;
        const Eigen::VectorXd rhs = l.rhs + l.incidence() * out.omega;
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff()));
        // Line relation u + Z w = u_twin - Z w_twin.
        const Eigen::VectorXd zl = f.impedance().dense().diagonal();
        const Eigen::VectorXd line = out.u + zl.cwiseProduct(out.omega) - in.u + zl.cwiseProduct(in.omega);
        CHECK(line.cwiseAbs().maxCoeff() < 1e-10);
      }
    }
  }
  SUBCASE("wrong incoming size") {
    const auto f1 = precondition(assemble(s.subdomains[0]), local_impedance(s, 0, z));
    CHECK_THROWS_AS(local_iterate(f1, {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)}),
                    InputError);
  }
}

TEST_CASE("input impedances of the example ports") {
  const auto s = example_split();
  const auto r1 = input_impedances(assemble(s.subdomains[0]));
  const auto r2 = input_impedances(assemble(s.subdomains[1]));
  CHECK(std::abs(r1(0) - 0.2598) <= 5e-4);
  CHECK(std::abs(r1(1) - 0.3190) <= 5e-4);
  CHECK(std::abs(r2(0) - 0.3699) <= 5e-4);
  CHECK(std::abs(r2(1) - 0.2557) <= 5e-4);
  CHECK(input_impedance(assemble(s.subdomains[0]), 1) == r1(1));

  // Dense oracle: diagonal of the inverse.
  const Eigen::MatrixXd inv = s.subdomains[0].system.dense().inverse();
  CHECK(std::abs(r1(0) - inv(0, 0)) < 1e-14);

  CHECK(input_impedance(scalar_port(4.0), 0) == 0.25);
  CHECK_THROWS_AS(input_impedance(scalar_port(4.0), 1), InputError);

  LocalSystem singular;
  Eigen::MatrixXd a(2, 2);
  a << 1, -1, -1, 1;
  singular.matrix = a.sparseView();
  singular.rhs = Eigen::VectorXd::Zero(2);
  singular.num_ports = 1;
  singular.terminal_ports = {0};
  CHECK_THROWS_AS(input_impedances(singular), NumericalError);
}

TEST_CASE("impedance matching policies") {
  const auto s = example_split();
  const auto r1 = input_impedances(assemble(s.subdomains[0]));
  const auto r2 = input_impedances(assemble(s.subdomains[1]));

  const auto a = match_impedances(s, MatchPolicy::kSideA);
  CHECK(a.line == std::vector<double>{r1(0), r1(1)});
  CHECK(std::abs(a.line[0] - 0.2598) <= 5e-4);
  CHECK(std::abs(a.line[1] - 0.3190) <= 5e-4);
  CHECK(match_impedances(s, MatchPolicy::kSideB).line == std::vector<double>{r2(0), r2(1)});
  const auto mean = match_impedances(s, MatchPolicy::kMean);
  CHECK(std::abs(mean.line[0] - (0.2598 + 0.3699) / 2) <= 5e-4);
  CHECK(std::abs(mean.line[1] - (0.3190 + 0.2557) / 2) <= 5e-4);

  SUBCASE("mirror-symmetric split") {
    ElectricGraph g;
    g.vertices = {{0, 3, 1}, {1, 4, 2}, {2, 3, 1}};
    g.edges = {{0, 1, -1}, {1, 2, -1}};
    PartitionScheme scheme;
    scheme.num_subdomains = 2;
    scheme.owner = {0, kBoundary, 1};
    scheme.boundary = {{1, {0, 1}, {2, 2}, {1, 1}, {{0, 1}}}};
    const auto ss = split(g, scheme);
    CHECK(match_impedances(ss, MatchPolicy::kSideA).line ==
          match_impedances(ss, MatchPolicy::kSideB).line);
  }

  CHECK(parse_match_policy("side_b") == MatchPolicy::kSideB);
  CHECK(to_string(MatchPolicy::kMean) == "mean");
  CHECK_THROWS_AS(parse_match_policy("median"), InputError);
  CHECK(uniform_impedances(s, 2.5).line == std::vector<double>{2.5, 2.5});
  CHECK_THROWS_AS(uniform_impedances(s, 0.0), InputError);
}

TEST_CASE("impedance files round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "vtm_local_io";
  std::filesystem::create_directories(dir);
  ImpedanceAssignment z = match_impedances(example_split(), MatchPolicy::kMean);
  z.coupled[1] = m2(0.4, 0.1, 0.1, 0.3);
  save_impedances(z, dir / "z.txt");
  const auto back = load_impedances(dir / "z.txt");
  CHECK(back.line == z.line);
  REQUIRE(back.coupled.count(1) == 1);
  CHECK(back.coupled.at(1) == z.coupled.at(1));
}
