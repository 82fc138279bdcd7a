#include "patchy/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "patchy/error.hpp"

namespace patchy {

ScalarField coarse_solve(const Problem& problem, const Grid& coarse_grid, double tol_c, std::size_t max_iterations) {
  SolveOptions opts;
  opts.kernel = Kernel::Modified;
  opts.tol = tol_c;
  opts.max_iterations = max_iterations;
  SolveResult r = solve_fixed_point(without_diffusion(problem), coarse_grid, default_order(coarse_grid), opts);
  if (!r.stats.converged) {
    throw NonConvergenceError("coarse solve did not reach tolerance within " + std::to_string(r.stats.iterations) +
                              " sweeps");
  }
  return std::move(r.field);
}

FeedbackControl synthesize_feedback(const ScalarField& uhat, const Problem& problem, double h) {
  const Grid& grid = uhat.grid();
  FeedbackControl fb{std::vector<int>(grid.size(), -1)};
  for (std::size_t node : grid.interior_nodes()) {
    const Vec2 x = grid.position(node);
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (std::size_t k = 0; k < problem.controls.size(); ++k) {
      const Vec2 a = problem.controls[k];
      const InterpStencil s = stencil_from_offset(grid, node, h * problem.dynamics(x, a));
      const double v = interp_value(uhat, s) + h * problem.running_cost(x, a);
      if (arg < 0 || v < best) {
        best = v;
        arg = static_cast<int>(k);
      }
    }
    fb.control[node] = arg;
  }
  return fb;
}

std::vector<std::size_t> boundary_walk(const Grid& grid) {
  const std::size_t n = grid.n();
  std::vector<std::size_t> walk;
  walk.reserve(4 * (n - 1));
  for (std::size_t c = 1; c < n; ++c) walk.push_back(grid.index(n - 1, c));  // bottom, left to right
  for (std::size_t r = n - 1; r-- > 0;) walk.push_back(grid.index(r, n - 1));  // right, upwards
  for (std::size_t c = n - 1; c-- > 0;) walk.push_back(grid.index(0, c));      // top, right to left
  for (std::size_t r = 1; r < n; ++r) walk.push_back(grid.index(r, 0));       // left, downwards
  return walk;
}

BoundarySplit split_boundary(const Grid& grid, std::size_t n_p) {
  const auto walk = boundary_walk(grid);
  if (n_p == 0 || n_p > walk.size()) {
    throw UsageError("number of boundary subsets must lie in [1, " + std::to_string(walk.size()) + "]");
  }
  BoundarySplit split;
  split.subsets.resize(n_p);
  for (std::size_t p = 0; p < n_p; ++p) {
    const std::size_t begin = p * walk.size() / n_p;
    const std::size_t end = (p + 1) * walk.size() / n_p;
    split.subsets[p].assign(walk.begin() + static_cast<std::ptrdiff_t>(begin),
                            walk.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return split;
}

ScalarField grow_patch(const FeedbackControl& feedback, std::span<const std::size_t> gamma, const Problem& problem,
                       const Grid& grid, double h, double tol_p, std::size_t max_iterations) {
  if (!(tol_p > 0.0)) throw UsageError("patch tolerance must be positive");
  if (feedback.control.size() != grid.size()) throw UsageError("feedback control does not match grid");

  const Problem hyperbolic = without_diffusion(problem);
  const auto interior = grid.interior_nodes();
  std::vector<ControlCoefficients> coeffs(grid.size());
  for (std::size_t node : interior) {
    auto c = compile_control(hyperbolic, grid, h, node, static_cast<std::size_t>(feedback.control[node]));
    if (c.self >= 1.0 - 1e-12) throw StencilError("zero drift under the feedback control at node " + std::to_string(node));
    c.cost = 0.0;
    coeffs[node] = c;
  }

  ScalarField phi(grid, 0.0);
  for (std::size_t node : gamma) phi[node] = 1.0;

  // The self weight is eliminated as in the modified kernel; the fixed point
  // is the same and convergence is much faster.
  const auto offsets = neighbor_offsets(grid.n());
  const auto order = default_order(grid);
  const std::size_t cap = max_iterations ? max_iterations : 10 * grid.n();
  auto u = phi.values();
  for (std::size_t it = 0; it < cap; ++it) {
    double change = 0.0;
    for (std::size_t node : order.nodes) {
      const auto& c = coeffs[node];
      const double v = std::clamp(neighbor_sum(c, offsets, node, u) / (1.0 - c.self), 0.0, 1.0);
      change = std::max(change, std::abs(v - u[node]));
      u[node] = v;
    }
    if (change < tol_p) return phi;
  }
  throw NonConvergenceError("patch growth did not reach tolerance within " + std::to_string(cap) + " sweeps");
}

namespace {

// Boundary node straight across the nearest side from an interior node.
std::size_t nearest_boundary_node(const Grid& grid, std::size_t node) {
  const std::size_t n = grid.n();
  const std::size_t r = grid.row(node);
  const std::size_t c = grid.col(node);
  const std::array<std::size_t, 4> dist{n - 1 - r, n - 1 - c, r, c};  // bottom, right, top, left
  const auto side = static_cast<std::size_t>(std::min_element(dist.begin(), dist.end()) - dist.begin());
  switch (side) {
    case 0:
      return grid.index(n - 1, c);
    case 1:
      return grid.index(r, n - 1);
    case 2:
      return grid.index(0, c);
    default:
      return grid.index(r, 0);
  }
}

std::vector<int> boundary_labels(const Grid& grid, const BoundarySplit& split) {
  std::vector<int> label(grid.size(), -1);
  for (std::size_t p = 0; p < split.subsets.size(); ++p)
    for (std::size_t node : split.subsets[p]) label[node] = static_cast<int>(p);
  return label;
}

}  // namespace

Ownership assign_patches(std::span<const ScalarField> phis, double tau, bool overlap, const BoundarySplit& split) {
  if (phis.empty()) throw UsageError("assign_patches needs at least one patch field");
  if (!(tau > 0.0 && tau < 1.0)) throw UsageError("threshold tau must lie in (0, 1)");
  const Grid& grid = phis.front().grid();
  const auto labels = boundary_labels(grid, split);

  Ownership out;
  out.owner.assign(grid.size(), -1);
  if (overlap) out.members.resize(grid.size());
  for (std::size_t node : grid.interior_nodes()) {
    int best = 0;
    for (std::size_t p = 1; p < phis.size(); ++p)
      if (phis[p][node] > phis[static_cast<std::size_t>(best)][node]) best = static_cast<int>(p);
    if (!(phis[static_cast<std::size_t>(best)][node] > 0.0)) {
      best = labels[nearest_boundary_node(grid, node)];
      ++out.unreached;
    }
    out.owner[node] = best;
    if (!overlap) continue;
    auto& m = out.members[node];
    for (std::size_t p = 0; p < phis.size(); ++p)
      if (phis[p][node] >= tau) m.push_back(static_cast<int>(p));
    if (std::find(m.begin(), m.end(), best) == m.end()) {
      m.push_back(best);
      std::sort(m.begin(), m.end());
    }
  }
  return out;
}

PatchyResult build_decomposition(const Problem& problem, const Grid& coarse_grid, const Grid& fine_grid,
                                 const PatchyOptions& options) {
  if (options.patches == 0) throw UsageError("need at least one patch");
  if (!coarse_grid.same_box(fine_grid)) throw UsageError("coarse and fine grids cover different boxes");

  const ScalarField coarse = coarse_solve(problem, coarse_grid, options.tol_coarse, options.max_iterations);
  ScalarField uhat = prolong(coarse, fine_grid);
  const double h = hyperbolic_time_step(problem, fine_grid);
  FeedbackControl feedback = synthesize_feedback(uhat, problem, h);
  const BoundarySplit split = split_boundary(fine_grid, options.patches);

  std::vector<ScalarField> phis;
  phis.reserve(options.patches);
  for (const auto& gamma : split.subsets) {
    phis.push_back(grow_patch(feedback, gamma, problem, fine_grid, h, options.tol_patch, options.max_iterations));
  }
  Ownership own = assign_patches(phis, options.tau, options.overlap, split);

  Decomposition d;
  d.patch_count = options.patches;
  d.owner = boundary_labels(fine_grid, split);
  d.lists.resize(options.patches);
  d.boundary = split.subsets;
  d.shared.assign(fine_grid.size(), 0);
  for (std::size_t node : fine_grid.interior_nodes()) {
    d.owner[node] = own.owner[node];
    if (options.overlap) {
      for (int p : own.members[node]) d.lists[static_cast<std::size_t>(p)].push_back(node);
      d.shared[node] = own.members[node].size() > 1 ? 1 : 0;
    } else {
      d.lists[static_cast<std::size_t>(own.owner[node])].push_back(node);
    }
  }
  for (auto& list : d.lists) list = ascending_order(uhat.values(), std::move(list)).nodes;

  return {std::move(d), std::move(uhat), std::move(feedback), std::move(phis), own.unreached};
}

}  // namespace patchy
