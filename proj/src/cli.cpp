#include "syncot/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "syncot/config.hpp"
#include "syncot/error.hpp"
#include "syncot/field_io.hpp"

namespace syncot {

namespace fs = std::filesystem;

namespace {

constexpr const char* kFooter =
    "Exit codes: 0 converged or success, 1 error, 2 max_iters reached without\n"
    "convergence (artifacts are still written), 64 usage error.\n"
    "Precedence: command-line flags > config file > preset defaults.";

// Flag values that fail to parse are usage errors, not run errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t parse_size(std::string_view s, const std::string& flag) {
  std::size_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw UsageError(flag + ": '" + std::string(s) + "' is not a count");
  }
  return v;
}

double parse_real(std::string_view s, const std::string& flag) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw UsageError(flag + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto p = s.find(sep);
    out.push_back(s.substr(0, p));
    if (p == std::string_view::npos) break;
    s = s.substr(p + 1);
  }
  return out;
}

struct SolveArgs {
  std::string config, preset, out, alg, grid, alpha;
  int max_iters = 0;
  double tol = 0.0;
  long long seed = -1;
  int threads = 0;
};

void apply_overrides(RunConfig& cfg, const SolveArgs& a) {
  if (!a.alg.empty()) {
    try {
      cfg.solver.algorithm = algorithm_from_string(a.alg);
    } catch (const ConfigError& e) {
      throw UsageError(std::string("--alg: ") + e.what());
    }
  }
  if (!a.grid.empty()) {
    const auto parts = split(a.grid, 'x');
    if (parts.size() != 3) throw UsageError("--grid expects MxNxQ");
    cfg.problem.M = parse_size(parts[0], "--grid");
    cfg.problem.N = parse_size(parts[1], "--grid");
    cfg.problem.Q = parse_size(parts[2], "--grid");
  }
  if (!a.alpha.empty()) {
    const auto parts = split(a.alpha, ',');
    if (parts.size() != 2) throw UsageError("--alpha expects A1,A2");
    cfg.problem.alpha = {parse_real(parts[0], "--alpha"), parse_real(parts[1], "--alpha")};
  }
  if (a.max_iters > 0) cfg.solver.max_iters = a.max_iters;
  if (a.tol > 0.0) cfg.solver.stop_tol = a.tol;
  if (a.seed >= 0) cfg.solver.seed = static_cast<std::uint64_t>(a.seed);
  if (!a.out.empty()) cfg.output.dir = a.out;
}

std::string snapshot_name(int iter) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rho_iter%06d.sot1", iter);
  return buf;
}

int cmd_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  if (a.config.empty() == a.preset.empty()) {
    err << "solve: exactly one of --config or --preset is required\n";
    return kExitUsage;
  }
  RunConfig cfg = a.config.empty() ? load_preset(a.preset) : parse_config(read_text(a.config));
  apply_overrides(cfg, a);
  validate(cfg);
  if (a.threads > 0) omp_set_num_threads(a.threads);

  const Problem problem = build_problem(cfg);
  const fs::path dir(cfg.output.dir);
  fs::create_directories(dir);
  {
    std::ofstream os(dir / "config.txt");
    os << dump_config(cfg);
  }

  SolverConfig sc = cfg.solver;
  if (cfg.output.snapshot_stride > 0) {
    fs::create_directories(dir / "snapshots");
    const int stride = cfg.output.snapshot_stride;
    sc.on_iterate = [dir, stride](int iter, const StaggeredField& u) {
      if (iter % stride == 0) {
        write_field((dir / "snapshots" / snapshot_name(iter)).string(), FieldArray::from(u.rho));
      }
    };
  }

  const SolveResult r = solve(problem, sc);
  write_convergence_log((dir / "convergence.csv").string(), r.report);
  write_field((dir / "rho.sot1").string(), FieldArray::from(r.u.rho));
  write_field((dir / "m.sot1").string(), FieldArray::from(r.u.m));
  write_field((dir / "n.sot1").string(), FieldArray::from(r.u.n));

  out << "status " << to_string(r.report.status) << " after " << r.report.iterations
      << " iterations\n";
  if (!r.report.rows.empty()) {
    const ReportRow& last = r.report.rows.back();
    out << "cost_total " << format_double(last.cost_total) << " cost_primary "
        << format_double(last.cost_primary) << " cost_secondary "
        << format_double(last.cost_secondary) << '\n';
  }
  out << "artifacts in " << dir.string() << '\n';
  return r.report.status == RunStatus::converged ? kExitOk : kExitMaxIters;
}

int cmd_presets_list(std::ostream& out) {
  for (const auto& id : preset_ids()) out << id << '\n';
  return kExitOk;
}

int cmd_presets_show(const std::string& id, std::ostream& out) {
  out << dump_config(load_preset(id));
  return kExitOk;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const RunConfig cfg = parse_config(read_text(path));
  out << "ok: " << (cfg.preset.empty() ? std::string("custom") : cfg.preset) << ", "
      << to_string(cfg.problem.form) << ", " << to_string(cfg.solver.algorithm) << '\n';
  return kExitOk;
}

std::string slice_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "rho_t%03zu.csv", k);
  return buf;
}

int cmd_export(const std::string& run, const std::string& what, const std::string& format,
               const std::string& out_dir, std::ostream& out) {
  const fs::path src(run);
  const fs::path dst = out_dir.empty() ? src / "export" : fs::path(out_dir);
  fs::create_directories(dst);
  if (what == "density") {
    const FieldArray f = read_field((src / "rho.sot1").string());
    if (f.dims.size() != 3) throw FormatError("rho.sot1 must be rank 3");
    if (format == "sot1") {
      write_field((dst / "rho.sot1").string(), f);
      out << "wrote " << (dst / "rho.sot1").string() << '\n';
      return kExitOk;
    }
    // One (M x N) file per time slice; rho is stored with t fastest.
    const std::size_t M = f.dims[0], N = f.dims[1], T = f.dims[2];
    std::vector<double> slice(M * N);
    for (std::size_t k = 0; k < T; ++k) {
      for (std::size_t c = 0; c < M * N; ++c) slice[c] = f.data[c * T + k];
      write_slice_csv((dst / slice_name(k)).string(), slice.data(), M, N);
    }
    out << "wrote " << T << " slices to " << dst.string() << '\n';
    return kExitOk;
  }
  const auto rows = read_convergence_log((src / "convergence.csv").string());
  if (format == "csv") {
    ConvergenceReport rep;
    rep.rows = rows;
    write_convergence_log((dst / "convergence.csv").string(), rep);
    out << "wrote " << (dst / "convergence.csv").string() << '\n';
    return kExitOk;
  }
  // The h_value column is only present when every row carries it.
  const bool with_h = !rows.empty() && std::all_of(rows.begin(), rows.end(),
                                                   [](const ReportRow& r) { return r.h_value.has_value(); });
  const std::uint32_t cols = with_h ? 7 : 6;
  FieldArray f;
  f.dims = {static_cast<std::uint32_t>(rows.size()), cols};
  for (const ReportRow& r : rows) {
    f.data.insert(f.data.end(), {static_cast<double>(r.iter), r.cost_total, r.cost_primary,
                                 r.cost_secondary});
    if (with_h) f.data.push_back(*r.h_value);
    f.data.insert(f.data.end(), {r.div_residual_max, r.rel_change});
  }
  write_field((dst / "convergence.sot1").string(), f);
  out << "wrote " << (dst / "convergence.sot1").string() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synchronized optimal transport solver"};
  app.footer(kFooter);
  app.require_subcommand(1, 1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Run the solver and write artifacts");
  auto* cfg_opt = solve->add_option("--config", sa.config, "Config file");
  auto* preset_opt = solve->add_option("--preset", sa.preset, "Preset id");
  cfg_opt->excludes(preset_opt);
  solve->add_option("--out", sa.out, "Output directory");
  solve->add_option("--alg", sa.alg, "chambolle_pock | condat_vu | pdfp | yan");
  solve->add_option("--grid", sa.grid, "Grid size MxNxQ");
  solve->add_option("--alpha", sa.alpha, "Weights A1,A2 on the simplex");
  solve->add_option("--max-iters", sa.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  solve->add_option("--tol", sa.tol, "Stopping tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--seed", sa.seed, "Seed for norm estimation")->check(CLI::NonNegativeNumber);
  solve->add_option("--threads", sa.threads, "OpenMP threads (default: all cores)")
      ->check(CLI::PositiveNumber);

  auto* presets = app.add_subcommand("presets", "List or expand presets");
  presets->require_subcommand(1, 1);
  presets->add_subcommand("list", "Print the preset ids");
  std::string show_id;
  auto* show = presets->add_subcommand("show", "Print the expanded config of a preset");
  show->add_option("id", show_id, "Preset id")->required();

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "Parse and check a config file");
  validate_cmd->add_option("--config", validate_path, "Config file")->required();

  std::string run_dir, what = "density", format = "csv", export_out;
  auto* exp = app.add_subcommand("export", "Convert stored run fields for plotting");
  exp->add_option("--run", run_dir, "Run directory")->required();
  exp->add_option("--what", what, "density | log")->check(CLI::IsMember({"density", "log"}));
  exp->add_option("--format", format, "csv | sot1")->check(CLI::IsMember({"csv", "sot1"}));
  exp->add_option("--out", export_out, "Destination directory (default RUN/export)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (solve->parsed()) return cmd_solve(sa, out, err);
    if (presets->parsed()) {
      return show->parsed() ? cmd_presets_show(show_id, out) : cmd_presets_list(out);
    }
    if (validate_cmd->parsed()) return cmd_validate(validate_path, out);
    return cmd_export(run_dir, what, format, export_out, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace syncot
