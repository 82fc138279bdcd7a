#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "patchy/grid.hpp"
#include "patchy/problem.hpp"
#include "patchy/scheme.hpp"

namespace patchy {

/// Per-node argmin control index; -1 on boundary nodes.
struct FeedbackControl {
  std::vector<int> control;
};

/// Disjoint boundary subsets Gamma_1..Gamma_NP covering every boundary node.
struct BoundarySplit {
  std::vector<std::vector<std::size_t>> subsets;
};

/// A partition (or cover, with overlap) of the interior into patches.
struct Decomposition {
  std::size_t patch_count = 0;
  /// Owner patch per node. Interior nodes: the patch that writes them.
  /// Boundary nodes: the id of the boundary subset they belong to.
  std::vector<int> owner;
  /// Per patch, the interior nodes it sweeps, in processing order.
  std::vector<std::vector<std::size_t>> lists;
  /// Per patch, its boundary subset.
  std::vector<std::vector<std::size_t>> boundary;
  /// Per node, 1 when more than one patch lists it (overlap mode only).
  std::vector<unsigned char> shared;
};

struct PatchyOptions {
  std::size_t patches = 4;
  double tau = 0.5;          // threshold on phi_p
  double tol_coarse = 1e-6;  // coarse solve
  double tol_patch = 1e-2;   // patch growth; deliberately loose
  bool overlap = false;
  std::size_t max_iterations = 0;  // 0: 10 * nodes per axis
};

/// Modified-kernel fixed point of the sigma = 0 problem on the coarse grid,
/// default order, BIG start. Throws NonConvergenceError at the cap.
ScalarField coarse_solve(const Problem& problem, const Grid& coarse_grid, double tol_c,
                         std::size_t max_iterations = 0);

/// Discrete synthesis a*(x_i) = argmin_a { uhat(x_i + h f(x_i,a)) + h l(x_i,a) }
/// with sigma = 0 foot points; ties resolve to the lowest control index.
FeedbackControl synthesize_feedback(const ScalarField& uhat, const Problem& problem, double h);

/// Boundary nodes walked counter-clockwise starting just after the
/// bottom-left corner: bottom side, right side, top side, left side, each
/// including the corner that ends it. The bottom-left corner comes last.
std::vector<std::size_t> boundary_walk(const Grid& grid);

/// Contiguous arcs of the boundary walk with lengths differing by at most one.
/// For four patches on a square these are the four sides, each owning the
/// corner at which its arc ends. Throws UsageError for n_p = 0 or n_p above
/// the boundary node count.
BoundarySplit split_boundary(const Grid& grid, std::size_t n_p);

/// Patch indicator phi_p: fixed point of phi(x_i) = phi(x_i + h f(x_i, a*(x_i)))
/// with phi = chi{Gamma_p} on the boundary, iterated from 0 until the sweep
/// change is below tol_p. Values stay in [0, 1].
ScalarField grow_patch(const FeedbackControl& feedback, std::span<const std::size_t> gamma, const Problem& problem,
                       const Grid& grid, double h, double tol_p, std::size_t max_iterations = 0);

struct Ownership {
  std::vector<int> owner;                 // per node, -1 on the boundary
  std::vector<std::vector<int>> members;  // per node, overlap mode only
  std::size_t unreached = 0;              // nodes where every phi_p was 0
};

/// Thresholding: patch p is a candidate at a node when phi_p >= tau. The
/// owner is the largest phi_p (ties to the lowest p), which also covers nodes
/// without candidates. Nodes where every phi_p is 0 go to the patch of the
/// nearest boundary node and are counted in `unreached`.
Ownership assign_patches(std::span<const ScalarField> phis, double tau, bool overlap, const BoundarySplit& split);

struct PatchyResult {
  Decomposition decomposition;
  ScalarField uhat;
  FeedbackControl feedback;
  std::vector<ScalarField> phis;
  std::size_t unreached = 0;
};

/// Full pre-computation: coarse solve, prolongation, feedback synthesis,
/// boundary split, patch growth, thresholding, then each patch list sorted by
/// ascending uhat.
PatchyResult build_decomposition(const Problem& problem, const Grid& coarse_grid, const Grid& fine_grid,
                                 const PatchyOptions& options);

}  // namespace patchy
