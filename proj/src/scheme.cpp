#include "patchy/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "patchy/error.hpp"

namespace patchy {

namespace {

constexpr double kExplicitMargin = 1e-12;

// Neighbour slot of `nb` within the 3x3 block around `node`, centre skipped.
std::size_t slot_of(const Grid& grid, std::size_t node, std::size_t nb) {
  const auto dr = static_cast<long>(grid.row(nb)) - static_cast<long>(grid.row(node));
  const auto dc = static_cast<long>(grid.col(nb)) - static_cast<long>(grid.col(node));
  const auto k = static_cast<std::size_t>((dr + 1) * 3 + (dc + 1));
  return k < 4 ? k : k - 1;
}

struct Foot {
  Vec2 offset;
  double weight;
};

// Displacements h f +- sqrt(h) sigma_k with their Markov-chain weights 1/(2d).
std::vector<Foot> foot_offsets(const Problem& problem, Vec2 x, Vec2 a, double h) {
  const Vec2 drift = h * problem.dynamics(x, a);
  if (problem.diffusion.rows == 0) return {{drift, 1.0}};
  const DiffusionRows rows = problem.diffusion.eval(x, a);
  if (rows.count == 0) return {{drift, 1.0}};
  const double w = 1.0 / (2.0 * static_cast<double>(rows.count));
  const double sh = std::sqrt(h);
  std::vector<Foot> out;
  out.reserve(2 * rows.count);
  for (std::size_t k = 0; k < rows.count; ++k) {
    out.push_back({drift + sh * rows.rows[k], w});
    out.push_back({drift - sh * rows.rows[k], w});
  }
  return out;
}

void require_interior(const Grid& grid, std::size_t node) {
  if (node >= grid.size() || grid.on_boundary(node)) {
    throw UsageError("node " + std::to_string(node) + " is not an interior node");
  }
}

}  // namespace

RegimeReport alpha_bounds(const ProblemBounds& bounds, double dx) {
  if (bounds.degenerate || !(bounds.f_min > 0.0)) {
    throw DegenerateProblemError("f_min = 0: the dynamics vanish somewhere, no admissible time step");
  }
  if (!(dx > 0.0)) throw UsageError("grid spacing must be positive");

  RegimeReport r;
  r.bounds = bounds;
  r.dx = dx;
  const double ups = bounds.upsilon;
  r.inverse_omega = bounds.sigma_inf * bounds.sigma_inf / bounds.f_min;
  r.alpha_lower = r.inverse_omega / dx;
  if (r.inverse_omega == 0.0) {
    r.alpha_upper = 1.0 / ups;
  } else {
    // 1/U - (sqrt(1+z) - 1) / (2 w dx U^2) with z = 4 w dx U, rewritten to
    // avoid cancellation for large w dx.
    const double z = 4.0 * dx * ups / r.inverse_omega;
    const double s = std::sqrt(1.0 + z);
    r.alpha_upper = (1.0 / ups) * (s - 1.0) / (s + 1.0);
  }
  r.tau_dx = dx / (1.0 + ups);
  r.eps_threshold = 0.5 * r.tau_dx * bounds.f_min;
  r.holds = r.inverse_omega < r.tau_dx;
  r.alpha = r.holds ? 1.0 / (1.0 + ups) : 0.9 * r.alpha_upper;
  return r;
}

bool satisfies_upper_bound(const ProblemBounds& bounds, double dx, double h) {
  return h * bounds.f_max + std::sqrt(h) * bounds.sigma_inf < dx;
}

TimeStep choose_time_step(const ProblemBounds& bounds, double dx) {
  const RegimeReport r = alpha_bounds(bounds, dx);
  TimeStep step;
  step.alpha = r.alpha;
  step.h = r.alpha * dx / bounds.f_min;
  step.policy = r.holds ? TimeStep::Policy::Regime : TimeStep::Policy::SafeUpperBound;
  if (!(step.alpha > 0.0) || !satisfies_upper_bound(bounds, dx, step.h)) {
    throw StencilError("no alpha > 0 keeps the scheme inside first-neighbour cells");
  }
  return step;
}

double hyperbolic_time_step(const Problem& problem, const Grid& grid) {
  const ProblemBounds b = estimate_bounds(without_diffusion(problem), grid);
  if (b.degenerate) throw DegenerateProblemError("f_min = 0: the dynamics vanish somewhere");
  return grid.dx() / ((1.0 + b.upsilon) * b.f_min);
}

std::vector<SuccessorPoint> successor_points(const Problem& problem, const Grid& grid, double h,
                                             std::size_t node, std::size_t control) {
  if (control >= problem.controls.size()) throw UsageError("control index out of range");
  const Vec2 x = grid.position(node);
  std::vector<SuccessorPoint> out;
  for (const Foot& foot : foot_offsets(problem, x, problem.controls[control], h)) {
    out.push_back({x + foot.offset, stencil_from_offset(grid, node, foot.offset)});
  }
  return out;
}

ControlCoefficients compile_control(const Problem& problem, const Grid& grid, double h, std::size_t node,
                                    std::size_t control) {
  const Vec2 x = grid.position(node);
  const Vec2 a = problem.controls[control];
  ControlCoefficients c;
  for (const Foot& foot : foot_offsets(problem, x, a, h)) {
    const InterpStencil s = stencil_from_offset(grid, node, foot.offset);
    c.self += foot.weight * s.self_weight;
    for (const auto& nb : s.neighbors) c.weights[slot_of(grid, node, nb.node)] += foot.weight * nb.weight;
  }
  c.cost = h * problem.running_cost(x, a);
  return c;
}

std::array<std::ptrdiff_t, 8> neighbor_offsets(std::size_t n) {
  const auto s = static_cast<std::ptrdiff_t>(n);
  return {-s - 1, -s, -s + 1, -1, 1, s - 1, s, s + 1};
}

LocalOperator::LocalOperator(const Problem& problem, const Grid& grid, double h)
    : grid_(grid), h_(h), controls_(problem.controls.size()), offsets_(neighbor_offsets(grid.n())) {
  if (!(h > 0.0)) throw UsageError("time step must be positive");
  coeffs_.resize(grid.interior_count() * controls_);
  for (std::size_t node : grid.interior_nodes()) {
    auto* dst = coeffs_.data() + slot(node) * controls_;
    for (std::size_t k = 0; k < controls_; ++k) {
      dst[k] = compile_control(problem, grid, h, node, k);
      max_self_ = std::max(max_self_, dst[k].self);
    }
  }
}

void LocalOperator::require_explicit() const {
  if (max_self_ >= 1.0 - kExplicitMargin) {
    throw StencilError("self weight reached 1: the modified update is undefined (zero drift or h = 0)");
  }
}

double node_value_original(const ScalarField& field, const Problem& problem, double h, std::size_t node) {
  const Grid& grid = field.grid();
  require_interior(grid, node);
  const auto offsets = neighbor_offsets(grid.n());
  const auto u = field.values();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < problem.controls.size(); ++k) {
    const ControlCoefficients c = compile_control(problem, grid, h, node, k);
    best = std::min(best, c.self * u[node] + neighbor_sum(c, offsets, node, u));
  }
  return best;
}

NodeUpdate node_value_modified(const ScalarField& field, const Problem& problem, double h, std::size_t node) {
  const Grid& grid = field.grid();
  require_interior(grid, node);
  const auto offsets = neighbor_offsets(grid.n());
  const auto u = field.values();
  NodeUpdate best{std::numeric_limits<double>::infinity(), problem.controls.size()};
  for (std::size_t k = 0; k < problem.controls.size(); ++k) {
    const ControlCoefficients c = compile_control(problem, grid, h, node, k);
    if (c.self >= 1.0 - kExplicitMargin) {
      throw StencilError("self weight reached 1 at node " + std::to_string(node));
    }
    const double v = neighbor_sum(c, offsets, node, u) / (1.0 - c.self);
    if (best.control == problem.controls.size() || v < best.value) best = {v, k};
  }
  return best;
}

NodeOrder default_order(const Grid& grid) {
  NodeOrder order;
  order.nodes.reserve(grid.interior_count());
  for (std::size_t r = 1; r + 1 < grid.n(); ++r)
    for (std::size_t c = grid.n() - 2; c >= 1; --c) order.nodes.push_back(grid.index(r, c));
  return order;
}

NodeOrder ascending_order(std::span<const double> values, std::vector<std::size_t> nodes) {
  std::sort(nodes.begin(), nodes.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  return {std::move(nodes)};
}

bool is_interior_permutation(const Grid& grid, const NodeOrder& order) {
  if (order.nodes.size() != grid.interior_count()) return false;
  std::vector<bool> seen(grid.size(), false);
  for (std::size_t node : order.nodes) {
    if (node >= grid.size() || grid.on_boundary(node) || seen[node]) return false;
    seen[node] = true;
  }
  return true;
}

double sweep(ScalarField& field, const LocalOperator& op, const NodeOrder& order, Kernel kernel, double cap) {
  if (kernel == Kernel::Modified) op.require_explicit();
  auto u = field.values();
  double change = 0.0;
  for (std::size_t node : order.nodes) {
    const double v = std::min(op.evaluate(kernel, node, u).value, cap);
    change = std::max(change, std::abs(v - u[node]));
    u[node] = v;
  }
  return change;
}

ScalarField initial_field(const Problem& problem, const Grid& grid, double big) {
  ScalarField f(grid, big);
  for (std::size_t node : grid.boundary_nodes()) f[node] = problem.exit_cost(grid.position(node));
  return f;
}

SolveStats iterate(ScalarField& field, const LocalOperator& op, const NodeOrder& order, const SolveOptions& options) {
  if (!(options.tol > 0.0)) throw UsageError("tolerance must be positive");
  const std::size_t cap = options.max_iterations ? options.max_iterations : 10 * field.grid().n();
  SolveStats stats;
  for (std::size_t it = 1; it <= cap; ++it) {
    stats.residual = sweep(field, op, order, options.kernel, options.big);
    stats.iterations = it;
    if (stats.residual < options.tol) {
      stats.converged = true;
      break;
    }
  }
  return stats;
}

SolveResult solve_fixed_point(const Problem& problem, const Grid& grid, const NodeOrder& order,
                              const SolveOptions& options, const ScalarField* init) {
  if (!is_interior_permutation(grid, order)) throw UsageError("node order must visit every interior node once");
  const ProblemBounds bounds = estimate_bounds(problem, grid);
  const TimeStep step = choose_time_step(bounds, grid.dx());
  const LocalOperator op(problem, grid, step.h);

  ScalarField field = initial_field(problem, grid, options.big);
  if (init) {
    if (init->grid().n() != grid.n() || !init->grid().same_box(grid)) {
      throw UsageError("initial field lives on a different grid");
    }
    for (std::size_t node : grid.interior_nodes()) field[node] = (*init)[node];
  }
  SolveStats stats = iterate(field, op, order, options);
  return {std::move(field), stats, step};
}

}  // namespace patchy
