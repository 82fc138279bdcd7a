#include "patchy/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "patchy/decomposition.hpp"
#include "patchy/error.hpp"
#include "patchy/io.hpp"
#include "patchy/problem.hpp"
#include "patchy/runner.hpp"
#include "patchy/scheme.hpp"

namespace patchy {

namespace {

struct ProblemOpts {
  std::string problem = "eikonal";
  std::string diffusion = "iso";
  double eps = 0.0;
  bool eps_upper = false;
  std::string cost = "l1";
  std::size_t grid = 101;
  std::size_t coarse = 50;
  double theta = std::numbers::pi / 4.0;
  std::size_t controls = 16;
};

struct RunOpts {
  std::string method = "pdd";
  std::size_t patches = 4;
  std::size_t workers = 1;
  double tol = kDefaultTol;
  double tau_p = 0.5;
  bool deterministic = false;
  bool overlap = false;
  std::string init = "default";
  std::size_t max_rounds = 0;
};

void add_problem_options(CLI::App& app, ProblemOpts& o) {
  app.add_option("--problem", o.problem, "advection | eikonal | eikonal-split | eikonal-ramp | zermelo")
      ->check(CLI::IsMember({"advection", "eikonal", "eikonal-split", "eikonal-ramp", "zermelo"}))
      ->capture_default_str();
  app.add_option("--diffusion", o.diffusion, "none | iso | control (ignored when eps = 0)")
      ->check(CLI::IsMember({"none", "iso", "control"}))
      ->capture_default_str();
  app.add_option("--eps", o.eps, "diffusion coefficient")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_flag("--eps-upper", o.eps_upper, "apply eps only where x2 >= 0");
  app.add_option("--cost", o.cost, "running cost l1 | l2 | l3")
      ->check(CLI::IsMember({"l1", "l2", "l3"}))
      ->capture_default_str();
  app.add_option("--grid", o.grid, "fine grid nodes per axis")->check(CLI::Range(3, 100000))->capture_default_str();
  app.add_option("--coarse", o.coarse, "coarse grid nodes per axis")
      ->check(CLI::Range(3, 100000))
      ->capture_default_str();
  app.add_option("--theta", o.theta, "zermelo drift rotation in [0, pi/2)")->capture_default_str();
  app.add_option("--controls", o.controls, "number of control directions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

void add_run_options(CLI::App& app, RunOpts& o, bool with_method) {
  if (with_method) {
    app.add_option("--method", o.method, "dd | pdd | single")
        ->check(CLI::IsMember({"dd", "pdd", "single"}))
        ->capture_default_str();
    app.add_option("--workers", o.workers, "threads for concurrent rounds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--deterministic", o.deterministic, "sweep patches sequentially in index order");
  }
  app.add_option("--patches", o.patches, "number of patches")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--tol", o.tol, "convergence tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--tau-p", o.tau_p, "patch threshold in (0, 1)")->capture_default_str();
  app.add_flag("--overlap", o.overlap, "keep every patch above the threshold (min-merge on shared nodes)");
  app.add_option("--init", o.init, "default (pdd: uhat, dd: BIG) | big")
      ->check(CLI::IsMember({"default", "big"}))
      ->capture_default_str();
  app.add_option("--max-rounds", o.max_rounds, "round cap, 0 for 10 * grid")->capture_default_str();
}

Problem build_problem(const ProblemOpts& o) {
  const ControlSet controls = discretize_controls(o.controls);
  Problem p = [&] {
    if (o.problem == "advection") return make_advection(Vec2{1.0, 0.0}, controls);
    if (o.problem == "eikonal") return make_eikonal_unit(controls);
    if (o.problem == "eikonal-split") return make_eikonal_split(controls);
    if (o.problem == "eikonal-ramp") return make_eikonal_ramp(controls);
    return make_zermelo(o.theta, 1, controls);
  }();
  if (o.eps > 0.0 && o.diffusion != "none") {
    const ScalarFn eps = o.eps_upper ? upper_half_eps(o.eps) : constant_eps(o.eps);
    p = with_diffusion(std::move(p),
                       make_diffusion(o.diffusion == "iso" ? DiffusionKind::Isotropic : DiffusionKind::Control, eps));
  }
  const CostKind cost = o.cost == "l1" ? CostKind::L1 : o.cost == "l2" ? CostKind::L2 : CostKind::L3;
  return with_running_cost(std::move(p), make_running_cost(cost));
}

Grid unit_grid(std::size_t n) { return build_grid({-1.0, -1.0}, {1.0, 1.0}, n); }

RunConfig make_config(const RunOpts& o) {
  RunConfig c;
  c.workers = o.workers;
  c.tol = o.tol;
  c.deterministic = o.deterministic;
  c.max_rounds = o.max_rounds;
  c.init = o.init == "big" ? Init::Big : Init::Default;
  return c;
}

PatchyOptions make_patchy(const RunOpts& o) {
  PatchyOptions p;
  p.patches = o.patches;
  p.tau = o.tau_p;
  p.overlap = o.overlap;
  return p;
}

RunResult run_method(Method m, const Problem& problem, const ProblemOpts& po, const RunOpts& ro) {
  const Grid fine = unit_grid(po.grid);
  const RunConfig cfg = make_config(ro);
  switch (m) {
    case Method::Single:
      return run_single(problem, fine, cfg);
    case Method::DD:
      return run_dd(problem, fine, ro.patches, cfg);
    case Method::PDD:
      return run_pdd(problem, unit_grid(po.coarse), fine, make_patchy(ro), cfg);
  }
  throw UsageError("unknown method");
}

Method parse_method(const std::string& s) {
  if (s == "single") return Method::Single;
  if (s == "dd") return Method::DD;
  if (s == "pdd") return Method::PDD;
  throw UsageError("unknown method '" + s + "'");
}

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

int cmd_solve(const ProblemOpts& po, const RunOpts& ro, const std::string& out_path, const std::string& patch_path,
              const std::string& metrics_path, const std::string& ppm, std::ostream& out) {
  const Problem problem = build_problem(po);
  RunResult r = run_method(parse_method(ro.method), problem, po, ro);
  r.metrics.eps = po.eps;

  out << "method " << method_name(r.metrics.method) << "  grid " << r.metrics.grid_n << "  dx " << fmt(r.metrics.dx)
      << "  iterations " << r.metrics.iterations << "  residual " << fmt(r.metrics.final_residual, "%.3e")
      << "  seconds " << fmt(r.metrics.total_seconds, "%.3f") << '\n';

  if (!out_path.empty()) write_field_csv(out_path, r.field);
  if (!metrics_path.empty()) write_metrics_json(metrics_path, r.metrics);
  if (r.decomposition && !patch_path.empty()) write_patch_csv(patch_path, r.field.grid(), r.decomposition->owner);
  if (!ppm.empty()) {
    write_field_ppm(ppm + "_field.ppm", r.field, kBig);
    if (r.decomposition) write_patch_ppm(ppm + "_patches.ppm", r.field.grid(), r.decomposition->owner);
  }
  return kExitOk;
}

int cmd_regime(const ProblemOpts& po, std::ostream& out) {
  const Problem problem = build_problem(po);
  const Grid grid = unit_grid(po.grid);
  const ProblemBounds b = estimate_bounds(problem, grid);
  const RegimeReport r = alpha_bounds(b, grid.dx());
  const double h = r.alpha * grid.dx() / b.f_min;

  auto row = [&](const char* key, const std::string& value) {
    out << std::left << std::setw(16) << key << value << '\n';
  };
  row("problem", problem.name);
  row("grid", std::to_string(grid.n()));
  row("dx", fmt(grid.dx(), "%.10g"));
  row("f_min", fmt(b.f_min, "%.10g"));
  row("f_max", fmt(b.f_max, "%.10g"));
  row("sigma_inf", fmt(b.sigma_inf, "%.10g"));
  row("upsilon", fmt(b.upsilon, "%.10g"));
  row("omega", std::isinf(b.omega) ? "inf" : fmt(b.omega, "%.10g"));
  row("1/omega", fmt(r.inverse_omega, "%.10g"));
  row("alpha_lower", fmt(r.alpha_lower, "%.10g"));
  row("alpha_upper", fmt(r.alpha_upper, "%.10g"));
  row("tau_dx", fmt(r.tau_dx, "%.10g"));
  row("eps_threshold", fmt(r.eps_threshold, "%.10g"));
  row("condition", r.holds ? "holds" : "fails");
  row("alpha", fmt(r.alpha, "%.10g"));
  row("h", fmt(h, "%.10g"));
  row("upper_bound", satisfies_upper_bound(b, grid.dx(), h) ? "ok" : "violated");
  return kExitOk;
}

int cmd_decompose(const ProblemOpts& po, const RunOpts& ro, const std::string& out_path, const std::string& ppm,
                  std::ostream& out) {
  const Problem problem = build_problem(po);
  const Grid fine = unit_grid(po.grid);
  const PatchyResult pr = build_decomposition(problem, unit_grid(po.coarse), fine, make_patchy(ro));
  const Decomposition& d = pr.decomposition;
  out << "patches " << d.patch_count << "  interior " << fine.interior_count() << "  unreached " << pr.unreached
      << '\n';
  for (std::size_t p = 0; p < d.patch_count; ++p) out << "  patch " << p << ": " << d.lists[p].size() << " nodes\n";
  if (!out_path.empty()) write_patch_csv(out_path, fine, d.owner);
  if (!ppm.empty()) write_patch_ppm(ppm + "_patches.ppm", fine, d.owner);
  return kExitOk;
}

struct Cell {
  std::string status = "ok";
  std::size_t iterations = 0;
  double seconds = 0.0;
};

int cmd_bench(ProblemOpts po, const RunOpts& ro, const std::vector<std::size_t>& grids,
              const std::vector<double>& eps_list, const std::vector<std::string>& methods,
              const std::string& table_path, const std::string& csv_path, std::ostream& out) {
  if (grids.empty()) throw UsageError("bench needs at least one grid size");
  if (eps_list.empty()) throw UsageError("bench needs at least one diffusion coefficient (--eps-list)");
  if (methods.empty()) throw UsageError("bench needs at least one method");
  for (double e : eps_list)
    if (!(e >= 0.0)) throw UsageError("diffusion coefficients must be non-negative");
  std::vector<Method> ms;
  for (const auto& m : methods) ms.push_back(parse_method(m));

  RunOpts det = ro;
  det.deterministic = true;

  std::ostringstream table;
  std::ostringstream csv;
  csv << "problem,grid,dx,eps,regime,method,iterations,precompute_seconds,total_seconds,status\n";
  table << "problem " << po.problem << ", patches " << ro.patches << ", tol " << fmt(ro.tol)
        << "   (* = upwind diffusion ball condition holds)\n";
  table << "  " << std::right << std::setw(6) << "grid" << std::setw(10) << "dx" << std::setw(12) << "eps";
  for (Method m : ms) {
    const std::string name = method_name(m);
    table << std::setw(10) << (name + " it") << std::setw(10) << (name + " s");
  }
  table << '\n';

  for (std::size_t n : grids) {
    po.grid = n;
    const Grid grid = unit_grid(n);
    for (double e : eps_list) {
      po.eps = e;
      const Problem problem = build_problem(po);
      bool holds = false;
      try {
        holds = alpha_bounds(estimate_bounds(problem, grid), grid.dx()).holds;
      } catch (const std::exception&) {
      }
      table << (holds ? "* " : "  ") << std::setw(6) << n << std::setw(10) << fmt(grid.dx(), "%.4g") << std::setw(12)
            << fmt(e, "%.4g");
      for (Method m : ms) {
        Cell c;
        double pre = 0.0;
        try {
          const RunResult r = run_method(m, problem, po, det);
          c.iterations = r.metrics.iterations;
          c.seconds = r.metrics.total_seconds;
          pre = r.metrics.precompute_seconds;
        } catch (const NonConvergenceError&) {
          c.status = "nonconv";
        } catch (const std::exception&) {
          c.status = "error";
        }
        if (c.status == "ok") {
          table << std::setw(10) << c.iterations << std::setw(10) << fmt(c.seconds, "%.3f");
        } else {
          table << std::setw(10) << c.status << std::setw(10) << "-";
        }
        csv << po.problem << ',' << n << ',' << fmt(grid.dx(), "%.17g") << ',' << fmt(e, "%.17g") << ','
            << (holds ? 1 : 0) << ',' << method_name(m) << ',' << c.iterations << ',' << fmt(pre, "%.6f") << ','
            << fmt(c.seconds, "%.6f") << ',' << c.status << '\n';
      }
      table << '\n';
    }
  }

  out << table.str();
  if (!table_path.empty()) {
    std::ofstream f(table_path);
    if (!(f << table.str())) throw IoError("cannot write " + table_path);
  }
  if (!csv_path.empty()) {
    std::ofstream f(csv_path);
    if (!(f << csv.str())) throw IoError("cannot write " + csv_path);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patchy domain decomposition for semi-Lagrangian HJB solvers"};
  app.name("patchy");
  app.require_subcommand(1);

  ProblemOpts po;
  RunOpts ro;
  std::string out_path, patch_path, metrics_path, ppm, table_path, csv_path;
  std::vector<std::size_t> grids{101};
  std::vector<double> eps_list;
  std::vector<std::string> methods{"pdd", "dd"};

  auto* solve = app.add_subcommand("solve", "solve on the fine grid and write the field");
  add_problem_options(*solve, po);
  add_run_options(*solve, ro, true);
  solve->add_option("--out", out_path, "solution CSV (x,y,u)");
  solve->add_option("--patch-map", patch_path, "patch map CSV (x,y,patch); dd and pdd only");
  solve->add_option("--metrics", metrics_path, "metrics JSON");
  solve->add_option("--ppm", ppm, "prefix for PPM heatmaps");

  auto* regime = app.add_subcommand("regime", "report the time step and the upwind diffusion ball condition");
  add_problem_options(*regime, po);

  auto* decompose = app.add_subcommand("decompose", "build the patchy decomposition and write the patch map");
  add_problem_options(*decompose, po);
  add_run_options(*decompose, ro, false);
  decompose->add_option("--out", out_path, "patch map CSV (x,y,patch)");
  decompose->add_option("--ppm", ppm, "prefix for the PPM patch map");

  auto* bench = app.add_subcommand("bench", "iteration counts over grids x eps x methods, deterministic");
  add_problem_options(*bench, po);
  add_run_options(*bench, ro, false);
  bench->add_option("--grids", grids, "fine grid sizes")->delimiter(',')->capture_default_str();
  bench->add_option("--eps-list", eps_list, "diffusion coefficients")->delimiter(',');
  bench->add_option("--methods", methods, "methods to compare")->delimiter(',')->capture_default_str();
  bench->add_option("--table", table_path, "write the text table here too");
  bench->add_option("--csv", csv_path, "machine-readable rows");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) return cmd_solve(po, ro, out_path, patch_path, metrics_path, ppm, out);
    if (*regime) return cmd_regime(po, out);
    if (*decompose) return cmd_decompose(po, ro, out_path, ppm, out);
    if (*bench) return cmd_bench(po, ro, grids, eps_list, methods, table_path, csv_path, out);
  } catch (const NonConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace patchy
