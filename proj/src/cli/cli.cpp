#include "vtm/cli/cli.hpp"

#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "vtm/analysis/analysis.hpp"
#include "vtm/core/errors.hpp"
#include "vtm/core/text_io.hpp"
#include "vtm/perf/perf.hpp"
#include "vtm/testbench/testbench.hpp"

namespace vtm::cli {
namespace {

constexpr int kCertifyLimit = 2000;  // largest 2m certified densely

std::pair<int, int> parse_blocks(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw InputError("--blocks expects RxC, got '" + text + "'");
  const auto r = parse_int(std::string_view(text).substr(0, x));
  const auto c = parse_int(std::string_view(text).substr(x + 1));
  if (r < 1 || c < 1) throw InputError("--blocks needs positive counts");
  return {static_cast<int>(r), static_cast<int>(c)};
}

GridSpec grid_spec(const RunManifest& m) {
  GridSpec spec;
  spec.side = m.grid;
  spec.shift = m.sigma;
  spec.rhs_seed = m.rhs_seed;
  if (!m.blocks.empty()) {
    auto [r, c] = parse_blocks(m.blocks);
    spec.layout = GridSpec::Layout::kBlocks;
    spec.block_rows = r;
    spec.block_cols = c;
  } else {
    spec.strips = m.strips;
  }
  return spec;
}

Assignment contiguous_assignment(int n, int parts) {
  if (parts < 1 || parts > n) throw InputError("--parts must be between 1 and the system size");
  Assignment a;
  a.num_subdomains = parts;
  for (int v = 0; v < n; ++v) {
    a.owner.push_back(static_cast<SubdomainId>(static_cast<long long>(v) * parts / n));
  }
  return a;
}

std::string yes_no(bool b) { return b ? "yes" : "no"; }

void write_certificate(const Problem& p, const std::filesystem::path& path,
                       std::optional<Certification>* result = nullptr) {
  KeyValueDocument doc;
  const int lines = static_cast<int>(p.split.lines.size());
  if (p.split.scheme.split_level() > 1) {
    doc.set("certificate", "skipped", "four-way splits are not covered by the analysis");
  } else if (2 * lines > kCertifyLimit) {
    doc.set("certificate", "skipped",
            "boundary too large for dense analysis (2m = " + std::to_string(2 * lines) + ")");
  } else {
    const auto op = build_global_operator(p.split, p.impedance);
    const auto c = certify_convergence(op);
    doc = to_document(c);
    if (result) *result = c;
  }
  doc.save(path);
}

int failure(std::ostream& err, const std::exception& e) {
  err << "error: " << e.what() << '\n';
  return kInputError;
}

}  // namespace

Problem load_problem(const RunManifest& m) {
  const int sources = !m.demo.empty() + (!m.matrix.empty() || !m.rhs.empty()) + (m.grid != 0);
  if (sources != 1) {
    throw InputError("give exactly one input: --demo, --matrix with --rhs, or --grid");
  }
  const int partitions =
      !m.scheme.empty() + (m.strips != 0) + !m.blocks.empty() + (m.parts != 0);
  if (partitions > 1) {
    throw InputError("give at most one partition: --scheme, --strips, --blocks or --parts");
  }
  const int impedances = !m.impedance.empty() + !m.match.empty() + m.z_const.has_value();
  if (impedances > 1) {
    throw InputError("give at most one impedance source: --impedance, --match or --z-const");
  }

  Problem p;
  ElectricGraph g;
  std::optional<PartitionScheme> scheme;
  if (!m.scheme.empty()) scheme = load_scheme(m.scheme);

  if (!m.demo.empty()) {
    if (m.demo != "example51") throw InputError("unknown demo '" + m.demo + "' (example51)");
    if (m.strips || !m.blocks.empty() || m.parts) {
      throw InputError("the demo has a fixed partition; only --scheme may replace it");
    }
    g = example_system();
    if (!scheme) scheme = example_scheme();
    p.description = "example51";
  } else if (m.grid != 0) {
    if (m.parts) throw InputError("--parts applies to matrix input; use --strips or --blocks");
    const auto spec = grid_spec(m);
    g = grid_system(spec);
    if (!scheme) {
      if (m.strips == 0 && m.blocks.empty()) {
        throw InputError("grid input needs --strips, --blocks or --scheme");
      }
      scheme = grid_partition(spec).scheme;
    }
    p.description = "grid " + std::to_string(m.grid) + "x" + std::to_string(m.grid);
  } else {
    if (m.matrix.empty() || m.rhs.empty()) throw InputError("--matrix and --rhs go together");
    if (m.strips || !m.blocks.empty()) {
      throw InputError("--strips and --blocks apply to grid input; use --parts or --scheme");
    }
    g = system_to_graph(load_system(m.matrix, m.rhs));
    if (!scheme) {
      if (m.parts == 0) throw InputError("matrix input needs --parts or --scheme");
      scheme = default_conformal_scheme(g, contiguous_assignment(g.size(), m.parts));
    }
    p.description = m.matrix.string();
  }
  p.split = split(g, *scheme);

  if (!m.impedance.empty()) {
    p.impedance = load_impedances(m.impedance);
  } else if (m.z_const) {
    p.impedance = uniform_impedances(p.split, *m.z_const);
  } else if (!m.demo.empty() && m.match.empty()) {
    p.impedance = example_impedances();
  } else {
    p.impedance = match_impedances(p.split, parse_match_policy(m.match.empty() ? "mean" : m.match));
  }
  return p;
}

int cmd_solve(const RunManifest& m, std::ostream& out, std::ostream& err) {
  try {
    const auto p = load_problem(m);
    std::filesystem::create_directories(m.out);
    save_impedances(p.impedance, m.out / "impedance.txt");

    RunConfig cfg;
    cfg.epsilon = m.eps;
    cfg.max_iter = m.max_iter;
    cfg.threads = m.threads;
    cfg.metric = parse_termination_metric(m.metric);
    cfg.log_messages = m.message_log;
    cfg.oracle = direct_solve(p.split.original);
    const auto report = run_vtm(p.split, p.impedance, cfg);

    save_vector(std::span<const double>(report.solution.data(),
                                        static_cast<std::size_t>(report.solution.size())),
                m.out / "solution.vec");
    write_trace(report, m.out / "trace.csv");
    if (m.message_log) write_message_log(report, m.out / "messages.csv");
    write_certificate(p, m.out / "certificate.txt");

    if (m.trace) {
      for (const auto& r : report.iterations) {
        out << "iter " << r.k << " delta " << format_double(r.max_boundary_delta)
            << " residual " << format_double(r.residual_inf) << '\n';
      }
    }
    const auto& last = report.iterations.back();
    out << "problem: " << p.description << '\n'
        << "subdomains: " << p.split.subdomains.size() << '\n'
        << "lines: " << p.split.lines.size() << '\n'
        << "iterations: " << report.iterations_run << '\n'
        << "converged: " << yes_no(report.converged) << '\n'
        << "residual_inf: " << format_double(last.residual_inf) << '\n'
        << "rms_error: " << format_double(last.rms_error.value_or(NAN)) << '\n'
        << "potential_gap: " << format_double(report.max_potential_gap) << '\n'
        << "current_sum: " << format_double(report.max_current_sum) << '\n'
        << "output: " << m.out.string() << '\n';
    return report.converged ? kOk : kNotConverged;
  } catch (const std::exception& e) {
    return failure(err, e);
  }
}

int cmd_certify(const RunManifest& m, std::ostream& out, std::ostream& err) {
  try {
    const auto p = load_problem(m);
    std::filesystem::create_directories(m.out);
    std::optional<Certification> c;
    write_certificate(p, m.out / "certificate.txt", &c);
    if (!c) {
      out << "certification skipped: see " << (m.out / "certificate.txt").string() << '\n';
      return kNotConverged;
    }
    to_document(*c).write(out);
    return c->certified ? kOk : kNotConverged;
  } catch (const std::exception& e) {
    return failure(err, e);
  }
}

int cmd_partition(const RunManifest& m, std::ostream& out, std::ostream& err) {
  try {
    const auto p = load_problem(m);
    std::filesystem::create_directories(m.out);
    save_scheme(p.split.scheme, m.out / "scheme.txt");
    export_split(p.split, m.out);
    const auto report = verify_conformal(p.split);
    out << "subdomains: " << p.split.subdomains.size() << '\n'
        << "boundary vertices: " << p.split.scheme.boundary.size() << '\n'
        << "split level: " << p.split.scheme.split_level() << '\n'
        << "lines: " << p.split.lines.size() << '\n';
    for (std::size_t j = 0; j < report.subdomains.size(); ++j) {
      out << "subdomain " << j << ": " << p.split.subdomains[j].dim() << " vertices, "
          << to_string(report.subdomains[j]) << '\n';
    }
    out << "conformal: " << yes_no(report.conformal()) << '\n';
    return report.conformal() ? kOk : kNotConverged;
  } catch (const std::exception& e) {
    return failure(err, e);
  }
}

int cmd_match(const RunManifest& m, std::ostream& out, std::ostream& err) {
  try {
    const auto p = load_problem(m);
    std::filesystem::create_directories(m.out);
    save_impedances(p.impedance, m.out / "impedance.txt");
    for (std::size_t l = 0; l < p.impedance.line.size(); ++l) {
      out << "line " << l << " vertex " << p.split.lines[l].parent << ": "
          << format_double(p.impedance.line[l]) << '\n';
    }
    return kOk;
  } catch (const std::exception& e) {
    return failure(err, e);
  }
}

int cmd_gen_grid(const RunManifest& m, std::ostream& out, std::ostream& err) {
  try {
    if (m.grid == 0) throw InputError("gen-grid needs --grid M");
    const auto sys = graph_to_system(grid_system(grid_spec(m)));
    std::filesystem::create_directories(m.out);
    save_system(sys, m.out / "grid.mtx", m.out / "grid.rhs");
    out << "wrote " << (m.out / "grid.mtx").string() << " and "
        << (m.out / "grid.rhs").string() << " (n = " << sys.dim() << ")\n";
    return kOk;
  } catch (const std::exception& e) {
    return failure(err, e);
  }
}

int cmd_bench(const BenchManifest& m, std::ostream& out, std::ostream& err) {
  try {
    if (m.layout != "strips" && m.layout != "blocks") {
      throw InputError("--layout must be strips or blocks");
    }
    const auto policy = parse_match_policy(m.match);
    std::vector<BenchRow> rows;
    std::vector<std::string> notes;
    for (int n : m.n) {
      const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
      if (side * side != n) throw InputError("bench size " + std::to_string(n) + " is not a square");
      std::vector<int> ks;
      for (int p : m.p) {
        BenchRow row{n, p, m.eps, std::nullopt, 0.0, 0.0, 0.0};
        try {
          GridSpec spec;
          spec.side = side;
          spec.shift = m.sigma;
          if (m.layout == "strips") {
            spec.strips = p;
          } else {
            int r = static_cast<int>(std::sqrt(static_cast<double>(p)));
            while (p % r) --r;
            spec.layout = GridSpec::Layout::kBlocks;
            spec.block_rows = r;
            spec.block_cols = p / r;
          }
          const auto s = split(grid_system(spec), grid_partition(spec).scheme);
          const auto z = match_impedances(s, policy);
          RunConfig cfg;
          cfg.max_iter = m.max_iter;
          const int k = measure_K(s, z, direct_solve(s.original), m.eps, cfg);
          const CostModel cost{static_cast<double>(k), m.alpha, m.beta};
          row.K = k;
          row.parallel_pred = parallel_time(n, p, cost);
          row.sequential_pred = sequential_time(n);
          row.speedup_pred = speedup(n, p, cost);
          ks.push_back(k);
        } catch (const std::exception& e) {
          notes.push_back("cell n=" + std::to_string(n) + " p=" + std::to_string(p) +
                          " failed: " + e.what());
        }
        out << "n=" << n << " p=" << p << " K="
            << (row.K ? std::to_string(*row.K) : std::string("failed")) << '\n';
        rows.push_back(row);
      }
      if (ks.size() >= 2) {
        const bool rising = std::is_sorted(ks.begin(), ks.end());
        notes.push_back("K trend over p for n=" + std::to_string(n) + ": " +
                        (rising ? "non-decreasing" : "not monotone"));
      }
    }
    if (m.out.has_parent_path()) std::filesystem::create_directories(m.out.parent_path());
    write_bench_csv(rows, m.out, notes);
    return kOk;
  } catch (const std::exception& e) {
    return failure(err, e);
  }
}

namespace {

void add_problem_options(CLI::App* app, RunManifest& m, std::string& seed,
                         std::string& z_const) {
  app->add_option("--demo", m.demo, "Built-in problem (example51)");
  app->add_option("--matrix", m.matrix, "Matrix Market file");
  app->add_option("--rhs", m.rhs, "Right-hand side vector file");
  app->add_option("--grid", m.grid, "Generate an M x M grid system");
  app->add_option("--sigma", m.sigma, "Grid diagonal shift");
  app->add_option("--rhs-seed", seed, "Random grid sources from this seed");
  app->add_option("--scheme", m.scheme, "Partition scheme file");
  app->add_option("--strips", m.strips, "Grid strips");
  app->add_option("--blocks", m.blocks, "Grid blocks RxC");
  app->add_option("--parts", m.parts, "Contiguous index ranges for matrix input");
  app->add_option("--impedance", m.impedance, "Impedance file");
  app->add_option("--match", m.match, "Match policy: side_a, side_b or mean");
  app->add_option("--z-const", z_const, "Constant line impedance");
  app->add_option("--eps", m.eps, "Termination threshold");
  app->add_option("--max-iter", m.max_iter, "Iteration limit");
  app->add_option("--threads", m.threads, "Worker threads");
  app->add_option("--metric", m.metric, "boundary_change or rms_error");
  app->add_option("--out", m.out, "Output directory");
  app->add_flag("--trace", m.trace, "Print every iteration");
  app->add_flag("--message-log", m.message_log, "Write messages.csv");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Virtual transmission method solver"};
  app.set_config("--config", "", "Key-value configuration file; flags win");
  app.require_subcommand(1);

  RunManifest run_manifest;
  BenchManifest bench_manifest;
  std::string seed, z_const;
  struct Command {
    std::string name;
    std::string help;
    int (*fn)(const RunManifest&, std::ostream&, std::ostream&);
    CLI::App* app;
  };
  std::vector<Command> commands = {
      {"solve", "Split, iterate and write the solution", cmd_solve, nullptr},
      {"certify", "Spectral radius of the global iteration matrix", cmd_certify, nullptr},
      {"partition", "Split a system and write the scheme and subdomains", cmd_partition, nullptr},
      {"match", "Matched line impedances", cmd_match, nullptr},
      {"gen-grid", "Write a grid system as Matrix Market plus RHS", cmd_gen_grid, nullptr}};
  for (auto& c : commands) {
    c.app = app.add_subcommand(c.name, c.help);
    add_problem_options(c.app, run_manifest, seed, z_const);
  }
  auto* bench = app.add_subcommand("bench", "Iteration counts and model predictions over grids");
  bench->add_option("--n", bench_manifest.n, "Grid sizes (perfect squares)")->delimiter(',');
  bench->add_option("--p", bench_manifest.p, "Part counts")->delimiter(',');
  bench->add_option("--eps", bench_manifest.eps, "RMS error threshold");
  bench->add_option("--layout", bench_manifest.layout, "strips or blocks");
  bench->add_option("--match", bench_manifest.match, "Match policy");
  bench->add_option("--max-iter", bench_manifest.max_iter, "Iteration limit per cell");
  bench->add_option("--sigma", bench_manifest.sigma, "Grid diagonal shift");
  bench->add_option("--alpha", bench_manifest.alpha, "Message latency");
  bench->add_option("--beta", bench_manifest.beta, "Per-value transfer cost");
  bench->add_option("--out", bench_manifest.out, "CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, r;
    const int code = app.exit(e, o, r);
    out << o.str();
    err << r.str();
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (!seed.empty()) {
      const auto v = parse_int(seed);
      if (v < 0) throw InputError("--rhs-seed must be non-negative");
      run_manifest.rhs_seed = static_cast<std::uint64_t>(v);
    }
    if (!z_const.empty()) run_manifest.z_const = parse_double(z_const);
  } catch (const std::exception& e) {
    return failure(err, e);
  }
  if (bench->parsed()) return cmd_bench(bench_manifest, out, err);
  for (const auto& c : commands) {
    if (c.app->parsed()) return c.fn(run_manifest, out, err);
  }
  return kInputError;
}

}  // namespace vtm::cli
