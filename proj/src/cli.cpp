#include "bta/cli.hpp"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "bta/baselines.hpp"
#include "bta/bench.hpp"
#include "bta/bta_io.hpp"
#include "bta/compare.hpp"
#include "bta/dist.hpp"
#include "bta/errors.hpp"
#include "bta/rgf.hpp"

namespace bta {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenerateArgs {
  std::optional<std::size_t> n, b;
  std::size_t a = 0;
  std::uint64_t seed = 0;
  double dominance = kDefaultDominance;
  bool hermitian_b = false;
  std::string preset;
  std::string out_a, out_b;
};

struct SolveArgs {
  std::string algo;
  std::string mode = "si";
  std::optional<std::size_t> parts;
  std::string a_file, b_file, out, out_b;
  std::string transport = "inproc";
  bool counts = false;
  bool recursive = false;
};

struct VerifyArgs {
  std::string candidate, candidate_b;
  std::string reference;
  std::string reference_b;
  std::string a_file, b_file;
  double tol = 1e-10;
};

struct BenchArgs {
  std::string algo = "rgf";
  std::string mode = "si";
  std::size_t parts = 1;
  std::size_t repeat = 10;
  std::string preset;
  std::optional<std::size_t> n, b;
  std::size_t a = 0;
  std::uint64_t seed = 0;
  bool residual = false;
  std::string report;
  std::vector<std::size_t> weak;
  std::size_t blocks_per_rank = 4;
};

BtaShape resolve_shape(const std::string& preset, std::optional<std::size_t> n,
                       std::optional<std::size_t> b, std::size_t a) {
  if (!preset.empty()) {
    if (n || b) throw UsageError("--preset cannot be combined with --n or --b");
    const auto s = expand_preset(preset);
    if (!s) throw UsageError("unknown preset '" + preset + "'");
    return *s;
  }
  if (!n || !b) throw UsageError("give either --preset or both --n and --b");
  return BtaShape{*n, *b, a};
}

fs::path derived_b_path(const std::string& out) {
  fs::path p(out);
  const fs::path ext = p.extension();
  p.replace_extension();
  p += "_xb";
  p += ext.empty() ? fs::path(".bta") : ext;
  return p;
}

fs::path point_report_path(const std::string& base, std::size_t parts) {
  fs::path p(base);
  const fs::path ext = p.extension();
  p.replace_extension();
  p += "_p" + std::to_string(parts);
  p += ext;
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw FormatError(FormatError::Kind::io, "cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw FormatError(FormatError::Kind::io, "write to " + path.string() + " failed");
}

void print_counts(std::ostream& out, std::string_view phase, const OpCounter& c) {
  for (std::size_t k = 0; k < kShapeClassCount; ++k) {
    const auto cls = static_cast<ShapeClass>(k);
    out << "counts." << phase << '.' << shape_class_name(cls) << '=' << c.gemm(cls) << '\n';
  }
  out << "counts." << phase << ".lu=" << c.lu_count() << '\n';
  out << "counts." << phase << ".trsm=" << c.trsm_count() << '\n';
  out << "counts." << phase << ".inv=" << c.inv_count() << '\n';
}

// --- generate -----------------------------------------------------------------

int cmd_generate(const GenerateArgs& g, std::ostream& out) {
  const BtaShape s = resolve_shape(g.preset, g.n, g.b, g.a);
  const BtaMatrix a = generate_dd_bta(s.n, s.b, s.a, g.seed, g.dominance);
  write_bta(a, fs::path(g.out_a));
  out << "n=" << s.n << "\nb=" << s.b << "\na=" << s.a << "\nseed=" << g.seed << '\n';
  out << "written.a=" << g.out_a << '\n';
  if (!g.out_b.empty()) {
    write_bta(generate_rhs(s.n, s.b, s.a, g.seed, g.hermitian_b), fs::path(g.out_b));
    out << "written.b=" << g.out_b << '\n';
  }
  return kExitOk;
}

// --- solve ----------------------------------------------------------------------

void write_solution(const SelectedSolution& x, const SolveArgs& s, std::ostream& out) {
  write_bta(x.x_a, fs::path(s.out));
  out << "written.x_a=" << s.out << '\n';
  if (x.x_b) {
    const fs::path pb = s.out_b.empty() ? derived_b_path(s.out) : fs::path(s.out_b);
    write_bta(*x.x_b, pb);
    out << "written.x_b=" << pb.string() << '\n';
  }
}

int solve_over_sockets(const SolveArgs& s, const BtaMatrix& a, const BtaMatrix* b,
                       SolveMode mode, std::ostream& out) {
  auto comm = SocketCollectives::from_environment();
  const std::size_t parts = comm->size();
  if (s.parts && *s.parts != parts) {
    throw UsageError("--parts " + std::to_string(*s.parts) + " disagrees with BTA_WORLD_SIZE " +
                     std::to_string(parts));
  }
  const PartitionPlan plan = plan_partitions(a.n(), parts, mode);
  const auto t0 = std::chrono::steady_clock::now();
  RankOutcome res = dist_rank_solve(*comm, scatter_partition(a, b, plan, comm->rank()), mode,
                                    DistOptions{s.recursive});
  const std::vector<std::string> all =
      comm->gather_to_root(encode_partition_solution(res.solution, a.shape()));
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  out << "rank=" << comm->rank() << "\nparts=" << parts << '\n';
  out << "local_steps=" << res.local_steps << "\npayload_bytes=" << res.payload_bytes << '\n';
  if (comm->rank() != 0) return kExitOk;

  std::vector<PartitionSolution> sols;
  for (const std::string& bytes : all) sols.push_back(decode_partition_solution(bytes, a.shape()));
  const SelectedSolution x = merge_partitions(a.shape(), mode, sols);
  out << "time_s=" << wall << '\n';
  if (s.counts) {
    print_counts(out, "forward", res.forward_counts);
    print_counts(out, "backward", res.backward_counts);
  }
  write_solution(x, s, out);
  return kExitOk;
}

int cmd_solve(const SolveArgs& s, std::ostream& out) {
  const Algo algo = parse_algo(s.algo);
  const SolveMode mode = parse_mode(s.mode);
  if (mode == SolveMode::si_sq && s.b_file.empty()) {
    throw UsageError("mode siq needs --b-file");
  }
  const bool sockets = s.transport == "socket";
  if (!sockets && s.transport != "inproc") {
    throw UsageError("unknown transport '" + s.transport + "' (expected inproc or socket)");
  }
  if (algo == Algo::dist && !s.parts && !sockets) throw UsageError("algo dist needs --parts");
  if (sockets && algo != Algo::dist) throw UsageError("the socket transport needs --algo dist");

  const BtaMatrix a = read_bta(fs::path(s.a_file));
  std::optional<BtaMatrix> b;
  if (mode == SolveMode::si_sq) b = read_bta(fs::path(s.b_file));
  const BtaMatrix* rhs = b ? &*b : nullptr;

  out << "solver=" << algo_name(algo) << "\nmode=" << mode_name(mode) << '\n';
  out << "n=" << a.n() << "\nb=" << a.b() << "\na=" << a.a() << '\n';
  if (sockets) return solve_over_sockets(s, a, rhs, mode, out);

  BenchConfig cfg;
  cfg.algo = algo;
  cfg.mode = mode;
  cfg.parts = s.parts.value_or(1);
  cfg.dist.recursive_reduced = s.recursive;
  SelectedSolution x;
  const RunSample run = run_once(a, rhs, cfg, &x);
  out << "parts=" << cfg.parts << "\ntime_s=" << run.times.total << '\n';
  if (s.counts) {
    print_counts(out, "forward", run.forward_counts);
    print_counts(out, "backward", run.backward_counts);
  }
  write_solution(x, s, out);
  return kExitOk;
}

// --- verify ---------------------------------------------------------------------

int cmd_verify(const VerifyArgs& v, std::ostream& out) {
  SelectedSolution cand;
  cand.x_a = read_bta(fs::path(v.candidate));
  if (!v.candidate_b.empty()) {
    cand.x_b = read_bta(fs::path(v.candidate_b));
    cand.mode = SolveMode::si_sq;
  }

  SelectedSolution ref;
  if (v.reference == "dense" || v.reference == "rgf") {
    if (v.a_file.empty()) throw UsageError("--reference " + v.reference + " needs --a-file");
    if (cand.x_b && v.b_file.empty()) {
      throw UsageError("a quadratic candidate needs --b-file for the reference solve");
    }
    const BtaMatrix a = read_bta(fs::path(v.a_file));
    std::optional<BtaMatrix> b;
    if (cand.x_b) b = read_bta(fs::path(v.b_file));
    const SolveMode mode = cand.mode;
    ref = v.reference == "dense" ? dense_solve(a, b ? &*b : nullptr, mode)
                                 : solve_selected(a, b ? &*b : nullptr, mode);
  } else {
    ref.x_a = read_bta(fs::path(v.reference));
    if (cand.x_b) {
      if (v.reference_b.empty()) throw UsageError("a quadratic candidate needs --reference-b");
      ref.x_b = read_bta(fs::path(v.reference_b));
    }
  }
  if (cand.x_a.shape() != ref.x_a.shape()) throw UsageError("candidate and reference shapes differ");

  const CompareReport rep = compare_solutions(cand, ref);
  out.precision(6);
  for (const ClassError& c : rep.classes) {
    out << "class=" << c.name << " blocks=" << c.blocks << " max_error=" << std::scientific
        << c.max_error << std::defaultfloat << " worst_index=" << c.worst_index << '\n';
  }
  out << "worst_error=" << std::scientific << rep.worst << std::defaultfloat << '\n';
  out << "worst_block=" << (rep.worst_block.empty() ? "none" : rep.worst_block) << '\n';
  out << "tol=" << v.tol << '\n';
  const bool ok = rep.passed(v.tol);
  out << "result=" << (ok ? "pass" : "fail") << '\n';
  return ok ? kExitOk : kExitVerifyFailed;
}

// --- bench ----------------------------------------------------------------------

int cmd_bench(const BenchArgs& bargs, std::ostream& out) {
  BenchConfig cfg;
  cfg.algo = parse_algo(bargs.algo);
  cfg.mode = parse_mode(bargs.mode);
  cfg.parts = bargs.parts;
  cfg.repeat = bargs.repeat;
  cfg.residual = bargs.residual;

  if (!bargs.weak.empty()) {
    WeakScalingSpec spec;
    spec.blocks_per_rank = bargs.blocks_per_rank;
    spec.parts = bargs.weak;
    spec.seed = bargs.seed;
    if (!bargs.preset.empty()) {
      const BtaShape s = resolve_shape(bargs.preset, bargs.n, bargs.b, bargs.a);
      spec.b = s.b;
      spec.a = s.a;
    } else {
      if (!bargs.b) throw UsageError("weak scaling needs --b or --preset");
      spec.b = *bargs.b;
      spec.a = bargs.a;
    }
    const std::vector<BenchResult> points = weak_scaling(spec, cfg);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const std::string text = format_report(points[k]);
      if (k > 0) out << "---\n";
      out << text;
      if (!bargs.report.empty()) {
        write_text(point_report_path(bargs.report, points[k].config.parts), text);
      }
    }
    return kExitOk;
  }

  const BtaShape s = resolve_shape(bargs.preset, bargs.n, bargs.b, bargs.a);
  const BtaMatrix a = generate_dd_bta(s.n, s.b, s.a, bargs.seed);
  std::optional<BtaMatrix> b;
  if (cfg.mode == SolveMode::si_sq) b = generate_rhs(s.n, s.b, s.a, bargs.seed, true);
  const std::string text = format_report(run_bench(a, b ? &*b : nullptr, cfg));
  out << text;
  if (!bargs.report.empty()) write_text(fs::path(bargs.report), text);
  return kExitOk;
}

}  // namespace

std::optional<BtaShape> expand_preset(std::string_view name) {
  constexpr std::string_view prefix = "sd-";
  if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
  const std::string_view digits = name.substr(prefix.size());
  std::size_t n = 0;
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || end != digits.data() + digits.size() || n == 0) return std::nullopt;
  return BtaShape{n, 1024, 0};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Selected inversion and selected quadratic solves for block-tridiagonal "
               "arrowhead matrices",
               "btasolve"};
  app.require_subcommand(1);

  GenerateArgs g;
  auto* gen = app.add_subcommand("generate", "Write a random diagonally dominant matrix");
  gen->add_option("--n", g.n, "Number of diagonal blocks");
  gen->add_option("--b", g.b, "Diagonal block size");
  gen->add_option("--a", g.a, "Arrow tip size")->capture_default_str();
  gen->add_option("--seed", g.seed)->capture_default_str();
  gen->add_option("--dominance", g.dominance, "Diagonal shift factor (>= 1)")
      ->capture_default_str();
  gen->add_flag("--hermitian-b", g.hermitian_b, "Make B pattern-Hermitian");
  gen->add_option("--preset", g.preset, "Dataset preset, e.g. sd-32");
  gen->add_option("--out-a", g.out_a, "Output file for A")->required();
  gen->add_option("--out-b", g.out_b, "Output file for B");

  SolveArgs s;
  auto* sol = app.add_subcommand("solve", "Compute selected entries of the inverse");
  sol->add_option("--algo", s.algo, "rgf, dist, dense or batched")->required();
  sol->add_option("--mode", s.mode, "si or siq")->capture_default_str();
  sol->add_option("--parts", s.parts, "Number of partitions for dist");
  sol->add_option("--a-file", s.a_file)->required();
  sol->add_option("--b-file", s.b_file);
  sol->add_option("--out", s.out, "Output file for X_A")->required();
  sol->add_option("--out-b", s.out_b, "Output file for X_B (default: <out>_xb)");
  sol->add_option("--transport", s.transport, "inproc or socket")->capture_default_str();
  sol->add_flag("--counts", s.counts, "Print block operation counts");
  sol->add_flag("--recursive-reduced", s.recursive, "Solve the reduced system distributed");

  VerifyArgs v;
  auto* ver = app.add_subcommand("verify", "Compare a solution with a reference");
  ver->add_option("--candidate", v.candidate, "X_A file to check")->required();
  ver->add_option("--candidate-b", v.candidate_b, "X_B file to check");
  ver->add_option("--reference", v.reference, "dense, rgf, or a reference X_A file")->required();
  ver->add_option("--reference-b", v.reference_b, "Reference X_B file");
  ver->add_option("--a-file", v.a_file);
  ver->add_option("--b-file", v.b_file);
  ver->add_option("--tol", v.tol)->capture_default_str();

  BenchArgs bargs;
  auto* ben = app.add_subcommand("bench", "Time a solver on a generated problem");
  ben->add_option("--algo", bargs.algo)->capture_default_str();
  ben->add_option("--mode", bargs.mode)->capture_default_str();
  ben->add_option("--parts", bargs.parts)->capture_default_str();
  ben->add_option("--repeat", bargs.repeat)->capture_default_str();
  ben->add_option("--preset", bargs.preset);
  ben->add_option("--n", bargs.n);
  ben->add_option("--b", bargs.b);
  ben->add_option("--a", bargs.a)->capture_default_str();
  ben->add_option("--seed", bargs.seed)->capture_default_str();
  ben->add_flag("--residual", bargs.residual, "Check the last run against the dense oracle");
  ben->add_option("--report", bargs.report, "Also write the report to this file");
  ben->add_option("--weak-scaling", bargs.weak, "Partition counts of a weak-scaling sweep")
      ->delimiter(',');
  ben->add_option("--blocks-per-rank", bargs.blocks_per_rank)->capture_default_str();

  std::vector<std::string> argv_store{"btasolve"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_generate(g, out);
    if (sol->parsed()) return cmd_solve(s, out);
    if (ver->parsed()) return cmd_verify(v, out);
    return cmd_bench(bargs, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const GuardError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SingularError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DistributedError& e) {
    err << "error: " << e.what() << '\n';
    return e.numerical() ? kExitNumerical : kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ProtocolError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace bta
