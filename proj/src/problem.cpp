#include "patchy/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "patchy/error.hpp"

namespace patchy {

ControlSet::ControlSet(std::vector<Vec2> controls) : controls_(std::move(controls)) {
  if (controls_.empty()) throw UsageError("control set must not be empty");
  for (std::size_t i = 0; i < controls_.size(); ++i)
    for (std::size_t j = i + 1; j < controls_.size(); ++j)
      if (controls_[i] == controls_[j]) throw UsageError("control set contains duplicate vectors");
}

ControlSet discretize_controls(std::size_t n) {
  if (n == 0) throw UsageError("control set needs at least one direction");
  std::vector<Vec2> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    out.push_back({std::cos(angle), std::sin(angle)});
  }
  // Cardinal directions come out of cos/sin with ~1e-16 residue; snap them.
  for (auto& a : out) {
    if (std::abs(a.x) < 1e-15) a.x = 0.0;
    if (std::abs(a.y) < 1e-15) a.y = 0.0;
  }
  return ControlSet(std::move(out));
}

namespace {

double checked_eps(const ScalarFn& eps_fn, Vec2 x) {
  const double e = eps_fn(x);
  if (!(e >= 0.0)) throw UsageError("diffusion coefficient must be non-negative");
  return e;
}

}  // namespace

Diffusion make_diffusion(DiffusionKind kind, ScalarFn eps_fn) {
  switch (kind) {
    case DiffusionKind::None:
      return {kind, 0, [](Vec2, Vec2) { return DiffusionRows{}; }};
    case DiffusionKind::Isotropic:
      return {kind, 2, [eps_fn](Vec2 x, Vec2) {
                const double s = std::sqrt(2.0 * checked_eps(eps_fn, x));
                return DiffusionRows{{Vec2{s, 0.0}, Vec2{0.0, s}}, 2};
              }};
    case DiffusionKind::Control:
      return {kind, 1, [eps_fn](Vec2 x, Vec2 a) {
                const double s = std::sqrt(2.0 * checked_eps(eps_fn, x));
                return DiffusionRows{{s * a, Vec2{}}, 1};
              }};
  }
  throw UsageError("unknown diffusion kind");
}

ScalarFn constant_eps(double eps) {
  if (!(eps >= 0.0)) throw UsageError("diffusion coefficient must be non-negative");
  return [eps](Vec2) { return eps; };
}

ScalarFn upper_half_eps(double eps) {
  if (!(eps >= 0.0)) throw UsageError("diffusion coefficient must be non-negative");
  return [eps](Vec2 x) { return x.y >= 0.0 ? eps : 0.0; };
}

RunningCostFn make_running_cost(CostKind kind) {
  switch (kind) {
    case CostKind::L1:
      return [](Vec2, Vec2) { return 1.0; };
    case CostKind::L2:
      return [](Vec2 x, Vec2) { return 1.0 + std::abs(x.x * x.y); };
    case CostKind::L3:
      return [](Vec2 x, Vec2 a) { return 1.0 + std::abs(x.x * x.y) + std::abs(a.x / (2.0 + a.y)); };
  }
  throw UsageError("unknown running cost kind");
}

Problem without_diffusion(const Problem& p) {
  Problem q = p;
  q.diffusion = make_diffusion(DiffusionKind::None, constant_eps(0.0));
  return q;
}

Problem with_diffusion(Problem p, Diffusion d) {
  p.diffusion = std::move(d);
  return p;
}

Problem with_running_cost(Problem p, RunningCostFn l) {
  p.running_cost = std::move(l);
  return p;
}

namespace {

Problem base_problem(std::string name, DynamicsFn f, ControlSet controls, std::optional<AnalyticBounds> bounds) {
  return Problem{std::move(name),
                 std::move(f),
                 make_diffusion(DiffusionKind::None, constant_eps(0.0)),
                 make_running_cost(CostKind::L1),
                 [](Vec2) { return 0.0; },
                 std::move(controls),
                 bounds};
}

}  // namespace

Problem make_advection(std::function<Vec2(Vec2)> b, ControlSet controls) {
  return base_problem("advection", [b = std::move(b)](Vec2 x, Vec2) { return b(x); }, std::move(controls),
                      std::nullopt);
}

Problem make_advection(Vec2 b, ControlSet controls) {
  const double m = norm(b);
  return base_problem("advection", [b](Vec2, Vec2) { return b; }, std::move(controls), AnalyticBounds{m, m});
}

Problem make_eikonal(ScalarFn c, ControlSet controls, std::optional<AnalyticBounds> bounds) {
  return base_problem("eikonal", [c = std::move(c)](Vec2 x, Vec2 a) { return c(x) * a; }, std::move(controls),
                      bounds);
}

Problem make_eikonal_unit(ControlSet controls) {
  return make_eikonal([](Vec2) { return 1.0; }, std::move(controls), AnalyticBounds{1.0, 1.0});
}

Problem make_eikonal_split(ControlSet controls) {
  auto p = make_eikonal([](Vec2 x) { return x.x >= 0.0 ? 2.0 : 1.0; }, std::move(controls),
                        AnalyticBounds{1.0, 2.0});
  p.name = "eikonal-split";
  return p;
}

Problem make_eikonal_ramp(ControlSet controls) {
  auto p = make_eikonal([](Vec2 x) { return 1.0 + std::max(x.y, std::max(x.x, 0.0)); }, std::move(controls),
                        AnalyticBounds{1.0, 2.0});
  p.name = "eikonal-ramp";
  return p;
}

Problem make_zermelo(double theta, int eta, ControlSet controls) {
  if (!(theta >= 0.0 && theta < std::numbers::pi / 2.0)) throw UsageError("zermelo: theta must lie in [0, pi/2)");
  if (eta != 0 && eta != 1) throw UsageError("zermelo: eta must be 0 or 1");
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const double half_eta = 0.5 * eta;
  auto f = [ct, st, half_eta](Vec2 x, Vec2 a) {
    const double r2 = x.x * x.x + x.y * x.y;
    Vec2 dir{1.0, 0.0};
    if (r2 > 0.0) {
      const double r = std::sqrt(r2);
      dir = {x.x / r, x.y / r};
    }
    const Vec2 drift{ct * dir.x - st * dir.y, st * dir.x + ct * dir.y};
    return (1.0 / (1.0 + r2)) * (drift + half_eta * a);
  };
  // On [-1,1]^2: 1/(1+|x|^2) ranges over [1/3, 1]; |drift + a/2| over
  // [1/2, 3/2] when the control is active.
  const AnalyticBounds bounds = eta == 1 ? AnalyticBounds{1.0 / 6.0, 1.5} : AnalyticBounds{1.0 / 3.0, 1.0};
  return base_problem("zermelo", std::move(f), std::move(controls), bounds);
}

ProblemBounds estimate_bounds(const Problem& problem, const Grid& grid, bool use_analytic) {
  const Grid unit_box({-1.0, -1.0}, {1.0, 1.0}, 3);
  const bool analytic = use_analytic && problem.analytic && grid.same_box(unit_box);

  ProblemBounds b;
  b.f_min = std::numeric_limits<double>::infinity();
  b.f_max = 0.0;
  if (analytic) {
    b.f_min = problem.analytic->f_min;
    b.f_max = problem.analytic->f_max;
  }
  if (!analytic || problem.diffusion.rows > 0) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Vec2 x = grid.position(i);
      for (const Vec2& a : problem.controls) {
        if (!analytic) {
          const double speed = norm(problem.dynamics(x, a));
          b.f_min = std::min(b.f_min, speed);
          b.f_max = std::max(b.f_max, speed);
        }
        if (problem.diffusion.rows == 0) continue;
        const DiffusionRows rows = problem.diffusion.eval(x, a);
        for (std::size_t k = 0; k < rows.count; ++k) b.sigma_inf = std::max(b.sigma_inf, norm(rows.rows[k]));
      }
    }
  }

  if (!(b.f_min > 0.0)) {
    b.degenerate = true;
    return b;
  }
  b.upsilon = b.f_max / b.f_min;
  b.omega = b.sigma_inf > 0.0 ? b.f_min / (b.sigma_inf * b.sigma_inf) : std::numeric_limits<double>::infinity();
  return b;
}

}  // namespace patchy
