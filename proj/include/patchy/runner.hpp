#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "patchy/decomposition.hpp"
#include "patchy/grid.hpp"
#include "patchy/problem.hpp"
#include "patchy/scheme.hpp"

namespace patchy {

enum class Method { Single, DD, PDD };

const char* method_name(Method m);

enum class Init {
  Default,  // PDD from uhat, DD from BIG
  Big,      // BIG for both methods
};

struct RunConfig {
  std::size_t workers = 1;
  double tol = kDefaultTol;
  // Sequential round-robin over patches in index order. When false, patches
  // are swept by `workers` threads at once and may read each other's
  // half-finished rounds.
  bool deterministic = true;
  Kernel kernel = Kernel::Modified;
  std::size_t max_rounds = 0;  // 0: 10 * nodes per axis
  double big = kBig;
  Init init = Init::Default;
};

struct RunMetrics {
  Method method = Method::DD;
  std::size_t grid_n = 0;
  double dx = 0.0;
  double eps = 0.0;  // diffusion coefficient, recorded for the caller
  std::size_t patches = 0;
  std::size_t workers = 0;
  std::size_t iterations = 0;  // rounds, final check included
  bool converged = false;
  double final_residual = 0.0;
  std::vector<std::vector<double>> residual_history;  // per patch, per round
  double precompute_seconds = 0.0;
  double solve_seconds = 0.0;
  double total_seconds = 0.0;
};

struct RunResult {
  ScalarField field;
  RunMetrics metrics;
  std::optional<Decomposition> decomposition;
};

/// k x k axis-aligned blocks of the interior for n_p = k^2, ids row-major from
/// the top-left block. Block b along an axis covers interior indices
/// [ceil(b m / k), ceil((b+1) m / k)), so the lower blocks take the extra row.
/// Each list is in default order; each boundary node goes to the block of its
/// nearest interior node.
Decomposition make_static_decomposition(const Grid& grid, std::size_t n_p);

/// Transmission at a node shared by several patches: keep the smaller value.
inline double transmission_merge(std::span<double> values, std::size_t node, double candidate) {
  if (candidate < values[node]) values[node] = candidate;
  return values[node];
}

/// Rounds of per-patch sweeps over `field` (boundary already set) until the
/// largest per-patch change of a round falls below config.tol. Does not throw
/// on the round cap; metrics.converged reports it.
RunMetrics run_rounds(ScalarField& field, const LocalOperator& op, const Decomposition& d, const RunConfig& config);

/// Static decomposition, BIG start. Throws NonConvergenceError at the round cap.
RunResult run_dd(const Problem& problem, const Grid& fine_grid, std::size_t n_p, const RunConfig& config);

/// Patchy decomposition, start from the prolonged coarse solution. Metrics
/// include the pre-computation in the total time. Throws NonConvergenceError
/// at the round cap.
RunResult run_pdd(const Problem& problem, const Grid& coarse_grid, const Grid& fine_grid,
                  const PatchyOptions& patchy, const RunConfig& config);

/// solve_fixed_point with default order, wrapped in the same metrics.
RunResult run_single(const Problem& problem, const Grid& grid, const RunConfig& config);

void write_metrics_json(std::ostream& out, const RunMetrics& m);
void write_metrics_json(const std::string& path, const RunMetrics& m);

}  // namespace patchy
