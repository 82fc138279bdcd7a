#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "patchy/error.hpp"
#include "patchy/problem.hpp"
#include "patchy/scheme.hpp"

using namespace patchy;

namespace {

Grid unit(std::size_t n) { return Grid({-1.0, -1.0}, {1.0, 1.0}, n); }

Problem iso(Problem p, double eps) {
  if (eps == 0.0) return p;
  return with_diffusion(std::move(p), make_diffusion(DiffusionKind::Isotropic, constant_eps(eps)));
}

std::vector<Problem> family(double eps) {
  const auto c = discretize_controls(16);
  return {iso(make_advection(Vec2{1.0, 0.0}, c), eps), iso(make_eikonal_unit(c), eps),
          iso(make_zermelo(std::numbers::pi / 4, 1, c), eps)};
}

// Two controls on a single interior node whose compiled forms are
// (self 0.5, rest 1) and (self 0.25, rest 2) with g = 0 and h = 0.5.
Problem two_control_toy() {
  Problem p = make_advection(Vec2{1.0, 0.0}, ControlSet({{1.0, 0.0}, {0.0, 1.0}}));
  p.dynamics = [](Vec2, Vec2 a) { return a.x == 1.0 ? Vec2{1.0, 0.0} : Vec2{1.5, 0.0}; };
  p.running_cost = [](Vec2, Vec2 a) { return a.x == 1.0 ? 2.0 : 4.0; };
  p.analytic.reset();
  return p;
}

}  // namespace

TEST_CASE("successor points") {
  const Grid g = unit(11);  // dx = 0.2, wide enough for the diffusion offsets
  const std::size_t centre = g.index(5, 5);
  const auto controls = discretize_controls(4);

  const Problem a = iso(make_advection(Vec2{1.0, 0.0}, controls), 0.01);
  const auto pts = successor_points(a, g, 0.1, centre, 0);
  REQUIRE(pts.size() == 4);
  const double s = std::sqrt(0.002);
  CHECK(pts[0].point.x == doctest::Approx(0.1 + s));
  CHECK(pts[1].point.x == doctest::Approx(0.1 - s));
  CHECK(pts[2].point.y == doctest::Approx(s));
  CHECK(pts[3].point.y == doctest::Approx(-s));
  CHECK(pts[2].point.x == doctest::Approx(0.1));

  const Problem plain = make_advection(Vec2{1.0, 0.0}, controls);
  const auto one = successor_points(plain, g, 0.05, centre, 0);
  REQUIRE(one.size() == 1);
  CHECK(one[0].point.x == doctest::Approx(0.05));
  CHECK(one[0].point.y == doctest::Approx(0.0));

  const Problem ctl = with_diffusion(make_eikonal_unit(controls),
                                     make_diffusion(DiffusionKind::Control, constant_eps(0.02)));
  const auto two = successor_points(ctl, g, 0.1, centre, 1);  // a = (0, 1)
  REQUIRE(two.size() == 2);
  CHECK(two[0].point.x == doctest::Approx(0.0));
  CHECK(two[0].point.y == doctest::Approx(0.1 + std::sqrt(0.1) * 0.2));
  CHECK(two[1].point.y == doctest::Approx(0.1 - std::sqrt(0.1) * 0.2));

  CHECK_THROWS_AS(successor_points(plain, g, 0.5, centre, 0), StencilError);
}

TEST_CASE("original update examples") {
  const Grid g = unit(21);
  const Problem a = make_advection(Vec2{1.0, 0.0}, discretize_controls(16));
  const ScalarField zero(g, 0.0);
  for (const Problem& p : family(0.01)) {
    CHECK(node_value_original(zero, p, 0.05, g.index(7, 12)) == doctest::Approx(0.05));
  }

  // Self-dependency: with lambda0 = 0.5 the update still carries BIG.
  ScalarField f(g, kBig);
  const std::size_t node = g.index(10, 19);
  f[node + 1] = 0.0;
  CHECK(node_value_original(f, a, 0.05, node) == doctest::Approx(0.5 * kBig + 0.05));
  CHECK_THROWS_AS(node_value_original(f, a, 0.05, g.index(0, 3)), UsageError);
}

TEST_CASE("modified update removes the self-dependency") {
  const Grid g = unit(21);
  const Problem a = make_advection(Vec2{1.0, 0.0}, discretize_controls(16));
  ScalarField f(g, kBig);
  const std::size_t node = g.index(10, 19);
  f[node + 1] = 0.0;
  const NodeUpdate u = node_value_modified(f, a, 0.05, node);
  CHECK(u.value == doctest::Approx(0.1));  // exact travel time over dx at unit speed
  CHECK(u.control == 0);
  CHECK_THROWS_AS(node_value_modified(f, a, 0.05, g.index(20, 3)), UsageError);
}

TEST_CASE("two-control toy picks the smaller explicit value") {
  const Grid g = unit(3);
  const Problem p = two_control_toy();
  ScalarField f(g, 0.0);
  const std::size_t centre = g.index(1, 1);
  f[centre] = kBig;
  const NodeUpdate u = node_value_modified(f, p, 0.5, centre);
  CHECK(u.value == doctest::Approx(2.0));
  CHECK(u.control == 0);
  // The implicit fixed point u = min(0.5u + 1, 0.25u + 2) is met at u = 2.
  f[centre] = 2.0;
  CHECK(node_value_original(f, p, 0.5, centre) == doctest::Approx(2.0));
  f[centre] = 8.0 / 3.0;
  CHECK(node_value_original(f, p, 0.5, centre) < 8.0 / 3.0);
}

TEST_CASE("explicitation: the modified value solves the implicit equation") {
  const Grid g = unit(20);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> d(0.0, 3.0);
  for (double eps : {0.0, 1e-2}) {
    for (const Problem& p : family(eps)) {
      const double h = choose_time_step(estimate_bounds(p, g), g.dx()).h;
      ScalarField f(g);
      for (auto& v : f.values()) v = d(rng);
      for (std::size_t node : g.interior_nodes()) {
        const double v = node_value_modified(f, p, h, node).value;
        ScalarField probe = f;
        probe[node] = v;
        CHECK(std::abs(node_value_original(probe, p, h, node) - v) < 1e-10);
      }
    }
  }
}

TEST_CASE("regime analysis") {
  const auto controls = discretize_controls(16);
  const Grid g = unit(101);  // dx = 0.02
  auto eik = [&](double eps) { return estimate_bounds(iso(make_eikonal_unit(controls), eps), g); };

  CHECK(alpha_bounds(eik(4e-3), g.dx()).holds);
  CHECK_FALSE(alpha_bounds(eik(6e-3), g.dx()).holds);
  CHECK(alpha_bounds(eik(4e-3), g.dx()).eps_threshold == doctest::Approx(5e-3));

  const RegimeReport none = alpha_bounds(eik(0.0), g.dx());
  CHECK(none.alpha_lower == 0.0);
  CHECK(none.holds);
  CHECK(none.alpha == doctest::Approx(0.5));

  // Under the condition the chosen alpha sits strictly inside (lower, upper).
  for (double eps : {1e-9, 1e-5, 1e-3, 4.9e-3}) {
    const RegimeReport r = alpha_bounds(eik(eps), g.dx());
    REQUIRE(r.holds);
    CHECK(r.alpha_lower < r.alpha);
    CHECK(r.alpha < r.alpha_upper);
  }

  // alpha_upper matches the closed form and is the root of the upper bound.
  for (double eps : {1e-4, 5e-3, 1e-2, 0.1}) {
    const ProblemBounds b = eik(eps);
    const RegimeReport r = alpha_bounds(b, g.dx());
    const double w = b.omega, dx = g.dx(), ups = b.upsilon;
    const double closed = 1.0 / ups - (std::sqrt(1.0 + 4.0 * w * dx * ups) - 1.0) / (2.0 * w * dx * ups * ups);
    CHECK(r.alpha_upper == doctest::Approx(closed).epsilon(1e-9));
    const double h = r.alpha_upper * dx / b.f_min;
    CHECK(h * b.f_max + std::sqrt(h) * b.sigma_inf == doctest::Approx(dx).epsilon(1e-9));
  }

  const Grid z = unit(801);  // dx = 0.0025
  const ProblemBounds zb = estimate_bounds(make_zermelo(std::numbers::pi / 4, 1, controls), z);
  CHECK(alpha_bounds(zb, z.dx()).eps_threshold == doctest::Approx(0.0025 / 120.0));
}

TEST_CASE("time step choice") {
  const auto controls = discretize_controls(16);
  const Grid g = unit(101);
  const TimeStep under = choose_time_step(estimate_bounds(iso(make_eikonal_unit(controls), 1e-3), g), g.dx());
  CHECK(under.alpha == doctest::Approx(0.5));
  CHECK(under.h == doctest::Approx(0.01));
  CHECK(under.policy == TimeStep::Policy::Regime);

  const ProblemBounds over_b = estimate_bounds(iso(make_eikonal_unit(controls), 1e-2), g);
  const TimeStep over = choose_time_step(over_b, g.dx());
  CHECK(over.policy == TimeStep::Policy::SafeUpperBound);
  CHECK(over.alpha == doctest::Approx(0.9 * alpha_bounds(over_b, g.dx()).alpha_upper));
  CHECK(over.h + std::sqrt(2e-2 * over.h) < 0.02);
  CHECK(satisfies_upper_bound(over_b, g.dx(), over.h));

  const TimeStep adv = choose_time_step(estimate_bounds(make_advection(Vec2{1.0, 0.0}, controls), g), g.dx());
  CHECK(adv.alpha == doctest::Approx(0.5));
  CHECK(adv.h == doctest::Approx(0.5 * g.dx()));
}

TEST_CASE("degenerate self weight is rejected by the modified kernel") {
  const Grid g = unit(5);
  const Problem p = make_eikonal_unit(discretize_controls(4));
  const LocalOperator op(p, g, 1e-15);
  CHECK(op.max_self_weight() > 1.0 - 1e-12);
  CHECK_THROWS_AS(op.require_explicit(), StencilError);
  ScalarField f = initial_field(p, g);
  CHECK_THROWS_AS(sweep(f, op, default_order(g), Kernel::Modified), StencilError);
}

TEST_CASE("orders") {
  const Grid g = unit(5);
  const NodeOrder d = default_order(g);
  REQUIRE(d.nodes.size() == 9);
  CHECK(d.nodes[0] == g.index(1, 3));
  CHECK(d.nodes[2] == g.index(1, 1));
  CHECK(d.nodes[3] == g.index(2, 3));
  CHECK(is_interior_permutation(g, d));

  std::vector<double> v(g.size(), 0.0);
  v[g.index(1, 1)] = 2.0;
  v[g.index(1, 2)] = 1.0;
  v[g.index(1, 3)] = 1.0;
  const NodeOrder a = ascending_order(v, {g.index(1, 1), g.index(1, 3), g.index(1, 2)});
  CHECK(a.nodes == std::vector<std::size_t>{g.index(1, 2), g.index(1, 3), g.index(1, 1)});

  NodeOrder dup = d;
  dup.nodes[1] = dup.nodes[0];
  CHECK_FALSE(is_interior_permutation(g, dup));
  NodeOrder with_boundary = d;
  with_boundary.nodes[0] = 0;
  CHECK_FALSE(is_interior_permutation(g, with_boundary));
  CHECK_THROWS_AS(solve_fixed_point(make_eikonal_unit(discretize_controls(4)), g, dup), UsageError);
}

TEST_CASE("advection converges in one sweep plus the check") {
  const Grid g = unit(50);
  const Problem a = make_advection(Vec2{1.0, 0.0}, discretize_controls(16));
  const double h = choose_time_step(estimate_bounds(a, g), g.dx()).h;
  const LocalOperator op(a, g, h);
  ScalarField f = initial_field(a, g);
  CHECK(sweep(f, op, default_order(g), Kernel::Modified) > 0.0);
  CHECK(sweep(f, op, default_order(g), Kernel::Modified) == 0.0);

  const SolveResult r = solve_fixed_point(a, g, default_order(g));
  CHECK(r.stats.converged);
  CHECK(r.stats.iterations == 2);
  // Travel time to the right edge.
  for (std::size_t node : g.interior_nodes()) {
    CHECK(r.field[node] == doctest::Approx(1.0 - g.position(node).x).epsilon(1e-9));
  }
}

TEST_CASE("fixed point is a fixed point of one more sweep") {
  const Grid g = unit(21);
  const Problem p = iso(make_eikonal_unit(discretize_controls(16)), 1e-3);
  SolveOptions o;
  o.tol = 1e-13;
  o.max_iterations = 2000;
  SolveResult r = solve_fixed_point(p, g, default_order(g), o);
  REQUIRE(r.stats.converged);
  const LocalOperator op(p, g, r.step.h);
  CHECK(sweep(r.field, op, default_order(g), Kernel::Modified) < 1e-12);
}

TEST_CASE("monotone decrease from BIG, both kernels") {
  const Grid g = unit(21);
  for (Kernel k : {Kernel::Modified, Kernel::Original}) {
    for (const Problem& p : family(1e-2)) {
      const double h = choose_time_step(estimate_bounds(p, g), g.dx()).h;
      const LocalOperator op(p, g, h);
      ScalarField f = initial_field(p, g);
      for (int s = 0; s < 15; ++s) {
        const ScalarField before = f;
        sweep(f, op, default_order(g), k);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(f[i] <= before[i]);
      }
    }
  }
}

TEST_CASE("positivity and boundary values") {
  const Grid g = unit(21);
  SolveOptions o;
  o.max_iterations = 5000;
  for (const Problem& p : family(1e-2)) {
    const SolveResult r = solve_fixed_point(p, g, default_order(g), o);
    REQUIRE(r.stats.converged);
    for (std::size_t node : g.interior_nodes()) CHECK(r.field[node] > 0.0);
    for (std::size_t node : g.boundary_nodes()) CHECK(r.field[node] == 0.0);
  }
}

TEST_CASE("eikonal solution has the square's symmetries") {
  const Grid g = unit(21);
  const Problem p = make_eikonal_unit(discretize_controls(16));
  const SolveResult r = solve_fixed_point(p, g, default_order(g));
  REQUIRE(r.stats.converged);
  const std::size_t n = g.n() - 1;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t row = g.row(i), col = g.col(i);
    const std::size_t images[] = {g.index(row, n - col),     g.index(n - row, col),     g.index(n - row, n - col),
                                  g.index(col, row),         g.index(n - col, row),     g.index(col, n - row),
                                  g.index(n - col, n - row)};
    for (std::size_t j : images) worst = std::max(worst, std::abs(r.field[i] - r.field[j]));
  }
  CHECK(worst <= 10 * kDefaultTol);
}

TEST_CASE("solve reports non-convergence at the cap") {
  const Grid g = unit(21);
  SolveOptions o;
  o.max_iterations = 3;
  const SolveResult r = solve_fixed_point(make_eikonal_unit(discretize_controls(16)), g, default_order(g), o);
  CHECK_FALSE(r.stats.converged);
  CHECK(r.stats.iterations == 3);
  o.tol = 0.0;
  CHECK_THROWS_AS(solve_fixed_point(make_eikonal_unit(discretize_controls(16)), g, default_order(g), o), UsageError);
}
