#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "patchy/grid.hpp"

namespace patchy {

/// Discretized control set. Iteration order is fixed and defines argmin
/// tie-breaking (lowest index wins).
class ControlSet {
 public:
  /// Throws UsageError on an empty list or duplicate vectors.
  explicit ControlSet(std::vector<Vec2> controls);

  std::size_t size() const { return controls_.size(); }
  const Vec2& operator[](std::size_t k) const { return controls_[k]; }
  auto begin() const { return controls_.begin(); }
  auto end() const { return controls_.end(); }

 private:
  std::vector<Vec2> controls_;
};

/// n equispaced unit vectors at angles 2*pi*k/n, starting at (1,0).
ControlSet discretize_controls(std::size_t n);

/// Rows sigma_k(x, a) of the diffusion matrix; only the first `count` are set.
struct DiffusionRows {
  std::array<Vec2, 2> rows{};
  std::size_t count = 0;
};

using DynamicsFn = std::function<Vec2(Vec2 x, Vec2 a)>;
using DiffusionFn = std::function<DiffusionRows(Vec2 x, Vec2 a)>;
using RunningCostFn = std::function<double(Vec2 x, Vec2 a)>;
using ExitCostFn = std::function<double(Vec2 x)>;
using ScalarFn = std::function<double(Vec2 x)>;

enum class DiffusionKind {
  None,       // sigma1 = 0, no rows
  Isotropic,  // sigma2 = sqrt(2 eps(x)) I
  Control,    // sigma3 = sqrt(2 eps(x)) a, one row
};

enum class CostKind { L1, L2, L3 };

struct Diffusion {
  DiffusionKind kind = DiffusionKind::None;
  std::size_t rows = 0;  // d
  DiffusionFn eval;
};

/// Diffusion component. eps_fn must be non-negative; a negative value raises
/// UsageError when the component is evaluated.
Diffusion make_diffusion(DiffusionKind kind, ScalarFn eps_fn);

ScalarFn constant_eps(double eps);
/// eps * indicator{x2 >= 0}: diffusion only in the upper half of the box.
ScalarFn upper_half_eps(double eps);

RunningCostFn make_running_cost(CostKind kind);

/// Bounds of |f| over the box [-1,1]^2 and the control set, known in closed
/// form for the built-in problems.
struct AnalyticBounds {
  double f_min = 0.0;
  double f_max = 0.0;
};

struct Problem {
  std::string name;
  DynamicsFn dynamics;
  Diffusion diffusion;
  RunningCostFn running_cost;
  ExitCostFn exit_cost;
  ControlSet controls;
  std::optional<AnalyticBounds> analytic;
};

/// The same problem with sigma = 0.
Problem without_diffusion(const Problem& p);
Problem with_diffusion(Problem p, Diffusion d);
Problem with_running_cost(Problem p, RunningCostFn l);

/// f(x, a) = b(x), l = 1, g = 0, no diffusion.
Problem make_advection(std::function<Vec2(Vec2)> b, ControlSet controls);
/// Constant drift; records |b| as analytic bound.
Problem make_advection(Vec2 b, ControlSet controls);

/// f(x, a) = c(x) a, l = 1, g = 0, no diffusion.
Problem make_eikonal(ScalarFn c, ControlSet controls, std::optional<AnalyticBounds> bounds = std::nullopt);

// Built-in speed profiles with known bounds on [-1,1]^2.
Problem make_eikonal_unit(ControlSet controls);   // c = 1
Problem make_eikonal_split(ControlSet controls);  // c = 1 + chi{x1 >= 0}
Problem make_eikonal_ramp(ControlSet controls);   // c = 1 + max(x2, max(x1, 0))

/// Zermelo navigation: f(x, a) = (R_theta x/|x| + (eta/2) a) / (1 + |x|^2).
/// At the origin x/|x| is taken as (1,0). Throws UsageError unless
/// 0 <= theta < pi/2 and eta is 0 or 1.
Problem make_zermelo(double theta, int eta, ControlSet controls);

/// Bounds of the dynamics and diffusion over a grid, plus the derived
/// anisotropy upsilon = f_max/f_min and advection/diffusion ratio
/// omega = f_min / sigma_inf^2.
struct ProblemBounds {
  double f_min = 0.0;
  double f_max = 0.0;
  double sigma_inf = 0.0;
  double upsilon = std::numeric_limits<double>::quiet_NaN();
  double omega = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;  // f_min == 0: upsilon and omega undefined
};

/// Samples |f| and the diffusion row norms over all grid nodes and controls.
/// When `use_analytic` is set and the problem carries closed-form bounds for
/// the grid's box ([-1,1]^2), those replace the sampled f_min/f_max.
ProblemBounds estimate_bounds(const Problem& problem, const Grid& grid, bool use_analytic = true);

}  // namespace patchy
