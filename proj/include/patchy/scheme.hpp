#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "patchy/grid.hpp"
#include "patchy/problem.hpp"

namespace patchy {

/// Stand-in for +infinity at interior nodes before the first update.
inline constexpr double kBig = 1e6;
inline constexpr double kDefaultTol = 1e-6;

enum class Kernel {
  Original,  // u_i = min_a { L0(a) u_i + L1(a) }, self-dependent
  Modified,  // u_i = min_a { L1(a) / (1 - L0(a)) }, self weight eliminated
};

struct TimeStep {
  enum class Policy { Regime, SafeUpperBound };

  double h = 0.0;
  double alpha = 0.0;  // h = alpha * dx / f_min
  Policy policy = Policy::Regime;
};

/// Where a problem/grid pair sits with respect to the upwind diffusion ball
/// condition 1/omega < dx / (1 + upsilon).
struct RegimeReport {
  ProblemBounds bounds;
  double dx = 0.0;
  double alpha_lower = 0.0;  // 1 / (omega dx)
  double alpha_upper = 0.0;  // largest alpha keeping the stencil in first-neighbour cells
  double tau_dx = 0.0;       // dx / (1 + upsilon)
  double inverse_omega = 0.0;
  /// Isotropic coefficient eps at which the verdict flips, for diffusion of
  /// the form sqrt(2 eps) I (so 1/omega = 2 eps / f_min): tau_dx * f_min / 2.
  double eps_threshold = 0.0;
  bool holds = false;
  double alpha = 0.0;  // 1/(1+upsilon) under the regime, else 0.9 * alpha_upper
};

/// Throws DegenerateProblemError when f_min = 0.
RegimeReport alpha_bounds(const ProblemBounds& bounds, double dx);

/// h = alpha dx / f_min with alpha from alpha_bounds. The global upper bound
/// h f_max + sqrt(h) sigma_inf < dx is verified before returning.
TimeStep choose_time_step(const ProblemBounds& bounds, double dx);

bool satisfies_upper_bound(const ProblemBounds& bounds, double dx, double h);

/// Time step of the sigma = 0 problem, dx / ((1 + upsilon) f_min).
double hyperbolic_time_step(const Problem& problem, const Grid& grid);

struct SuccessorPoint {
  Vec2 point;
  InterpStencil stencil;
};

/// Foot points x_i + h f(x_i,a) + s sqrt(h) sigma_k(x_i,a), s = +-1, each with
/// its bilinear stencil based at x_i. A single point x_i + h f when the
/// problem has no diffusion rows.
std::vector<SuccessorPoint> successor_points(const Problem& problem, const Grid& grid, double h,
                                             std::size_t node, std::size_t control);

/// Per-node, per-control affine form of the scheme: the interpolated average
/// over all foot points equals self * u_i + sum_k weights[k] * u_{nb(k)}, and
/// cost = h * l(x_i, a). Neighbour slots run over the 3x3 block around x_i
/// (centre excluded) in row-major order from the top-left.
struct ControlCoefficients {
  double self = 0.0;
  double cost = 0.0;
  std::array<double, 8> weights{};
};

ControlCoefficients compile_control(const Problem& problem, const Grid& grid, double h, std::size_t node,
                                    std::size_t control);

std::array<std::ptrdiff_t, 8> neighbor_offsets(std::size_t n);

template <class Values>
double neighbor_sum(const ControlCoefficients& c, const std::array<std::ptrdiff_t, 8>& offsets, std::size_t node,
                    const Values& u) {
  double s = c.cost;
  for (std::size_t k = 0; k < 8; ++k) {
    s += c.weights[k] * u[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(node) + offsets[k])];
  }
  return s;
}

struct NodeUpdate {
  double value = 0.0;
  std::size_t control = 0;
};

/// The scheme compiled for every interior node and control of a problem at a
/// fixed time step. Immutable once built, so any number of threads may read.
class LocalOperator {
 public:
  /// Throws StencilError if any foot point leaves its first-neighbour cells.
  LocalOperator(const Problem& problem, const Grid& grid, double h);

  const Grid& grid() const { return grid_; }
  double h() const { return h_; }
  std::size_t control_count() const { return controls_; }
  /// Largest self weight over all nodes and controls; must stay below 1 for
  /// the modified kernel.
  double max_self_weight() const { return max_self_; }

  std::span<const ControlCoefficients> coefficients(std::size_t node) const {
    return {coeffs_.data() + slot(node) * controls_, controls_};
  }

  template <class Values>
  NodeUpdate modified(std::size_t node, const Values& u) const {
    NodeUpdate best{0.0, controls_};
    for (std::size_t k = 0; const auto& c : coefficients(node)) {
      const double v = neighbor_sum(c, offsets_, node, u) / (1.0 - c.self);
      if (best.control == controls_ || v < best.value) best = {v, k};
      ++k;
    }
    return best;
  }

  template <class Values>
  NodeUpdate original(std::size_t node, const Values& u) const {
    NodeUpdate best{0.0, controls_};
    const double self_value = u[node];
    for (std::size_t k = 0; const auto& c : coefficients(node)) {
      const double v = c.self * self_value + neighbor_sum(c, offsets_, node, u);
      if (best.control == controls_ || v < best.value) best = {v, k};
      ++k;
    }
    return best;
  }

  template <class Values>
  NodeUpdate evaluate(Kernel kernel, std::size_t node, const Values& u) const {
    return kernel == Kernel::Modified ? modified(node, u) : original(node, u);
  }

  /// Throws StencilError when the modified kernel is not well defined.
  void require_explicit() const;

 private:
  std::size_t slot(std::size_t node) const {
    return (grid_.row(node) - 1) * (grid_.n() - 2) + (grid_.col(node) - 1);
  }

  Grid grid_;
  double h_;
  std::size_t controls_;
  double max_self_ = 0.0;
  std::array<std::ptrdiff_t, 8> offsets_{};
  std::vector<ControlCoefficients> coeffs_;
};

/// Original (self-dependent) update of one interior node.
double node_value_original(const ScalarField& field, const Problem& problem, double h, std::size_t node);

/// Self-dependency-free update of one interior node and its argmin control.
/// Throws StencilError when some control has self weight >= 1 - 1e-12.
NodeUpdate node_value_modified(const ScalarField& field, const Problem& problem, double h, std::size_t node);

/// A processing order over the interior nodes.
struct NodeOrder {
  std::vector<std::size_t> nodes;
};

/// Rows from top to bottom, each row from right to left.
NodeOrder default_order(const Grid& grid);

/// `nodes` sorted by ascending `values`, ties by node index.
NodeOrder ascending_order(std::span<const double> values, std::vector<std::size_t> nodes);

/// True when the order visits every interior node exactly once.
bool is_interior_permutation(const Grid& grid, const NodeOrder& order);

/// One Gauss-Seidel pass in `order`. Each new value is capped at `cap` and
/// visible to later nodes immediately. Returns the sup-norm change.
double sweep(ScalarField& field, const LocalOperator& op, const NodeOrder& order, Kernel kernel, double cap = kBig);

struct SolveStats {
  std::size_t iterations = 0;  // full sweeps, the final check sweep included
  double residual = 0.0;       // sup-norm change of the last sweep
  bool converged = false;
};

struct SolveOptions {
  Kernel kernel = Kernel::Modified;
  double tol = kDefaultTol;
  std::size_t max_iterations = 0;  // 0: 10 * nodes per axis
  double big = kBig;
};

struct SolveResult {
  ScalarField field;
  SolveStats stats;
  TimeStep step;
};

/// BIG at interior nodes, g on the boundary.
ScalarField initial_field(const Problem& problem, const Grid& grid, double big = kBig);

/// Sweeps an already-initialised field until the change drops below tol or
/// the cap is reached.
SolveStats iterate(ScalarField& field, const LocalOperator& op, const NodeOrder& order, const SolveOptions& options);

/// Full solve: bounds, time step, operator, then iterate from `init` (or from
/// initial_field when absent). Boundary values of `init` are reset to g.
SolveResult solve_fixed_point(const Problem& problem, const Grid& grid, const NodeOrder& order,
                              const SolveOptions& options = {}, const ScalarField* init = nullptr);

}  // namespace patchy
