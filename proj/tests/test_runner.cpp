#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "patchy/error.hpp"
#include "patchy/runner.hpp"

using namespace patchy;

namespace {

Grid unit(std::size_t n) { return Grid({-1.0, -1.0}, {1.0, 1.0}, n); }

double max_diff(const ScalarField& a, const ScalarField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Problem eikonal_diffusion(double eps) {
  return with_diffusion(make_eikonal_unit(discretize_controls(16)),
                        make_diffusion(DiffusionKind::Isotropic, constant_eps(eps)));
}

}  // namespace

TEST_CASE("static decomposition blocks") {
  const Grid g = unit(101);
  const Decomposition d = make_static_decomposition(g, 4);
  REQUIRE(d.lists.size() == 4);
  CHECK(d.lists[0].size() == 50 * 50);
  CHECK(d.lists[1].size() == 50 * 49);
  CHECK(d.lists[2].size() == 49 * 50);
  CHECK(d.lists[3].size() == 49 * 49);
  CHECK(d.owner[g.index(1, 1)] == 0);
  CHECK(d.owner[g.index(1, 99)] == 1);
  CHECK(d.owner[g.index(99, 1)] == 2);
  CHECK(d.owner[g.index(50, 50)] == 0);
  CHECK(d.owner[g.index(51, 51)] == 3);
  // Boundary nodes follow their nearest interior node.
  CHECK(d.owner[g.index(0, 0)] == 0);
  CHECK(d.owner[g.index(100, 100)] == 3);
  CHECK(d.owner[g.index(0, 70)] == 1);

  std::size_t boundary = 0;
  for (const auto& b : d.boundary) boundary += b.size();
  CHECK(boundary == g.boundary_nodes().size());

  const Decomposition one = make_static_decomposition(g, 1);
  CHECK(one.lists[0] == default_order(g).nodes);

  const Decomposition nine = make_static_decomposition(unit(11), 9);
  std::size_t total = 0;
  for (const auto& l : nine.lists) {
    CHECK(l.size() >= 4);
    total += l.size();
  }
  CHECK(total == 81);

  CHECK_THROWS_AS(make_static_decomposition(g, 2), UsageError);
  CHECK_THROWS_AS(make_static_decomposition(g, 0), UsageError);
  CHECK_THROWS_AS(make_static_decomposition(unit(4), 9), UsageError);
}

TEST_CASE("transmission keeps the smaller value") {
  std::vector<double> v{3.0, 5.0};
  CHECK(transmission_merge(v, 0, 2.0) == 2.0);
  CHECK(v[0] == 2.0);
  CHECK(transmission_merge(v, 1, 7.0) == 5.0);
  CHECK(v[1] == 5.0);
  CHECK(transmission_merge(v, 1, 5.0) == 5.0);
}

TEST_CASE("one static patch reproduces the single-domain solve") {
  const Grid g = unit(41);
  const Problem p = eikonal_diffusion(1e-3);
  const RunResult dd = run_dd(p, g, 1, {});
  const SolveResult direct = solve_fixed_point(p, g, default_order(g));
  CHECK(dd.metrics.iterations == direct.stats.iterations);
  CHECK(max_diff(dd.field, direct.field) == 0.0);

  const RunResult single = run_single(p, g, {});
  CHECK(single.metrics.iterations == direct.stats.iterations);
  CHECK(max_diff(single.field, direct.field) == 0.0);
  CHECK_FALSE(single.decomposition.has_value());
}

TEST_CASE("deterministic runs are reproducible") {
  const Grid g = unit(41);
  const auto z = make_zermelo(std::numbers::pi / 4, 1, discretize_controls(16));
  const RunResult a = run_pdd(z, unit(21), g, {}, {});
  const RunResult b = run_pdd(z, unit(21), g, {}, {});
  CHECK(a.metrics.iterations == b.metrics.iterations);
  CHECK(max_diff(a.field, b.field) == 0.0);
  CHECK(a.decomposition->owner == b.decomposition->owner);
}

TEST_CASE("boundary values are never written") {
  const Grid g = unit(31);
  const Problem p = eikonal_diffusion(1e-2);
  for (const RunResult& r : {run_dd(p, g, 4, {}), run_pdd(p, unit(16), g, {}, {})}) {
    for (std::size_t node : g.boundary_nodes()) CHECK(r.field[node] == 0.0);
    for (std::size_t node : g.interior_nodes()) {
      CHECK(r.field[node] > 0.0);
      CHECK(r.field[node] < kBig);
    }
  }
}

TEST_CASE("dd, pdd and single agree") {
  const Grid g = unit(51);
  const auto controls = discretize_controls(16);
  const std::vector<Problem> problems{
      make_advection(Vec2{1.0, 0.0}, controls),
      eikonal_diffusion(1e-2),
      with_diffusion(make_zermelo(std::numbers::pi / 4, 1, controls),
                     make_diffusion(DiffusionKind::Isotropic, constant_eps(1e-3))),
  };
  for (const Problem& p : problems) {
    const RunResult single = run_single(p, g, {});
    const RunResult dd = run_dd(p, g, 4, {});
    const RunResult pdd = run_pdd(p, unit(26), g, {}, {});
    CHECK(max_diff(single.field, dd.field) <= 20 * kDefaultTol);
    CHECK(max_diff(single.field, pdd.field) <= 20 * kDefaultTol);
  }
}

TEST_CASE("concurrent rounds reach the deterministic solution") {
  const Grid g = unit(51);
  const Problem p = eikonal_diffusion(1e-3);
  RunConfig det;
  RunConfig conc;
  conc.deterministic = false;
  conc.workers = 4;
  const RunResult a = run_pdd(p, unit(26), g, {}, det);
  const RunResult b = run_pdd(p, unit(26), g, {}, conc);
  CHECK(b.metrics.converged);
  CHECK(b.metrics.workers == 4);
  CHECK(max_diff(a.field, b.field) <= 20 * kDefaultTol);

  const RunResult c = run_dd(p, g, 4, conc);
  CHECK(max_diff(a.field, c.field) <= 20 * kDefaultTol);
}

TEST_CASE("overlapping patches converge to the same solution") {
  const Grid g = unit(41);
  const auto z = make_zermelo(std::numbers::pi / 4, 1, discretize_controls(16));
  PatchyOptions o;
  o.overlap = true;
  o.tau = 0.3;
  const RunResult plain = run_pdd(z, unit(21), g, {}, {});
  const RunResult shared = run_pdd(z, unit(21), g, o, {});
  CHECK(max_diff(plain.field, shared.field) <= 20 * kDefaultTol);

  RunConfig conc;
  conc.deterministic = false;
  conc.workers = 4;
  const RunResult shared_conc = run_pdd(z, unit(21), g, o, conc);
  CHECK(max_diff(plain.field, shared_conc.field) <= 20 * kDefaultTol);
}

TEST_CASE("round cap and bad configurations") {
  const Grid g = unit(31);
  const Problem p = eikonal_diffusion(1e-2);
  RunConfig capped;
  capped.max_rounds = 2;
  CHECK_THROWS_AS(run_dd(p, g, 4, capped), NonConvergenceError);
  CHECK_THROWS_AS(run_pdd(p, unit(16), g, {}, capped), NonConvergenceError);
  CHECK_THROWS_AS(run_single(p, g, capped), NonConvergenceError);

  // run_rounds itself only reports.
  const Decomposition d = make_static_decomposition(g, 4);
  const LocalOperator op(p, g, choose_time_step(estimate_bounds(p, g), g.dx()).h);
  ScalarField f = initial_field(p, g);
  const RunMetrics m = run_rounds(f, op, d, capped);
  CHECK_FALSE(m.converged);
  CHECK(m.iterations == 2);
  CHECK(m.residual_history.size() == 4);
  CHECK(m.residual_history[0].size() == 2);

  RunConfig zero_tol;
  zero_tol.tol = 0.0;
  CHECK_THROWS_AS(run_dd(p, g, 4, zero_tol), UsageError);
  RunConfig no_workers;
  no_workers.workers = 0;
  CHECK_THROWS_AS(run_dd(p, g, 4, no_workers), UsageError);

  Decomposition holey = d;
  holey.lists[0].pop_back();
  ScalarField f2 = initial_field(p, g);
  CHECK_THROWS_AS(run_rounds(f2, op, holey, {}), UsageError);
}

TEST_CASE("metrics json") {
  const Problem adv = make_advection(Vec2{1.0, 0.0}, discretize_controls(16));
  // One static block: one propagating sweep plus the check.
  CHECK(run_dd(adv, unit(21), 1, {}).metrics.iterations == 2);
  // Four blocks: the left blocks read the right ones before those are swept,
  // so a second round is needed before the check.
  const RunResult r = run_dd(adv, unit(21), 4, {});
  CHECK(r.metrics.iterations == 3);
  std::stringstream ss;
  write_metrics_json(ss, r.metrics);
  const auto j = nlohmann::json::parse(ss.str());
  for (const char* key : {"method", "grid_n", "dx", "eps", "patches", "workers", "iterations", "precompute_seconds",
                          "total_seconds", "converged"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["method"] == "dd");
  CHECK(j["iterations"] == 3);
  CHECK(j["grid_n"] == 21);
  CHECK(j["converged"] == true);
  CHECK_THROWS_AS(write_metrics_json("/nonexistent/dir/m.json", r.metrics), IoError);
}
