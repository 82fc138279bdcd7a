#include "patchy/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "patchy/error.hpp"

namespace patchy {

namespace {

constexpr double kBoxSlack = 1e-12;

bool nearly_equal(double a, double b, double scale) {
  return std::abs(a - b) <= kBoxSlack * std::max(1.0, scale);
}

// Splits a fractional lattice coordinate into a cell index in [0, n-2] and a
// local coordinate in [0, 1]. Coordinates within 1e-9 of a lattice line snap
// onto it so coinciding nodes reproduce values exactly.
std::pair<std::size_t, double> locate(double coord, std::size_t n) {
  const double nearest = std::round(coord);
  if (std::abs(coord - nearest) < 1e-9) coord = nearest;
  const double max_cell = static_cast<double>(n - 2);
  double cell = std::clamp(std::floor(coord), 0.0, max_cell);
  double t = std::clamp(coord - cell, 0.0, 1.0);
  return {static_cast<std::size_t>(cell), t};
}

}  // namespace

Grid::Grid(Vec2 lower, Vec2 upper, std::size_t n) : lower_(lower), upper_(upper), n_(n) {
  if (n < 3) throw UsageError("grid needs at least 3 nodes per axis, got " + std::to_string(n));
  if (!(upper.x > lower.x && upper.y > lower.y)) {
    throw UsageError("grid upper corner must exceed lower corner componentwise");
  }
  const double wx = upper.x - lower.x;
  const double wy = upper.y - lower.y;
  if (!nearly_equal(wx, wy, std::max(wx, wy))) throw UsageError("grid domain must be square");
  dx_ = wx / static_cast<double>(n - 1);
}

std::vector<std::size_t> Grid::interior_nodes() const {
  std::vector<std::size_t> out;
  out.reserve(interior_count());
  for (std::size_t r = 1; r + 1 < n_; ++r)
    for (std::size_t c = 1; c + 1 < n_; ++c) out.push_back(index(r, c));
  return out;
}

std::vector<std::size_t> Grid::boundary_nodes() const {
  std::vector<std::size_t> out;
  out.reserve(4 * (n_ - 1));
  for (std::size_t i = 0; i < size(); ++i)
    if (on_boundary(i)) out.push_back(i);
  return out;
}

bool Grid::same_box(const Grid& other) const {
  const double scale = std::max(upper_.x - lower_.x, other.upper_.x - other.lower_.x);
  return nearly_equal(lower_.x, other.lower_.x, scale) && nearly_equal(lower_.y, other.lower_.y, scale) &&
         nearly_equal(upper_.x, other.upper_.x, scale) && nearly_equal(upper_.y, other.upper_.y, scale);
}

Grid build_grid(Vec2 lower, Vec2 upper, std::size_t n) { return Grid(lower, upper, n); }

ScalarField::ScalarField(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw UsageError("field length does not match grid node count");
}

InterpStencil stencil_from_offset(const Grid& grid, std::size_t base, Vec2 offset) {
  const double dx = grid.dx();
  double p = std::abs(offset.x) / dx;
  double q = std::abs(offset.y) / dx;
  if (!(p <= 1.0 + kBoxSlack && q <= 1.0 + kBoxSlack)) {
    throw StencilError("foot point leaves the first-neighbour cells of node " + std::to_string(base) +
                       " (time step violates the upper bound)");
  }
  p = std::min(p, 1.0);
  q = std::min(q, 1.0);

  const auto n = static_cast<long>(grid.n());
  const auto r = static_cast<long>(grid.row(base));
  const auto c = static_cast<long>(grid.col(base));
  long dc = offset.x >= 0.0 ? 1 : -1;
  long dr = offset.y >= 0.0 ? -1 : 1;  // +y is towards row 0
  if (c + dc < 0 || c + dc >= n) {
    if (p > kBoxSlack) throw StencilError("foot point leaves the domain box");
    p = 0.0;
    dc = -dc;
  }
  if (r + dr < 0 || r + dr >= n) {
    if (q > kBoxSlack) throw StencilError("foot point leaves the domain box");
    q = 0.0;
    dr = -dr;
  }

  InterpStencil s;
  s.base = base;
  s.self_weight = (1.0 - p) * (1.0 - q);
  s.neighbors[0] = {grid.index(r, c + dc), p * (1.0 - q)};
  s.neighbors[1] = {grid.index(r + dr, c), (1.0 - p) * q};
  s.neighbors[2] = {grid.index(r + dr, c + dc), p * q};
  return s;
}

InterpStencil interp_stencil(const Grid& grid, std::size_t base, Vec2 point) {
  const Vec2 lo = grid.lower();
  const Vec2 hi = grid.upper();
  const double slack = kBoxSlack * grid.dx();
  if (point.x < lo.x - slack || point.x > hi.x + slack || point.y < lo.y - slack || point.y > hi.y + slack) {
    throw StencilError("interpolation point lies outside the domain box");
  }
  point.x = std::clamp(point.x, lo.x, hi.x);
  point.y = std::clamp(point.y, lo.y, hi.y);
  return stencil_from_offset(grid, base, point - grid.position(base));
}

ScalarField prolong(const ScalarField& coarse, const Grid& fine_grid) {
  const Grid& cg = coarse.grid();
  if (!cg.same_box(fine_grid)) throw UsageError("prolong: coarse and fine grids cover different boxes");

  ScalarField fine(fine_grid);
  const auto cv = coarse.values();
  const double dxc = cg.dx();
  for (std::size_t i = 0; i < fine_grid.size(); ++i) {
    const Vec2 x = fine_grid.position(i);
    const auto [c0, tx] = locate((x.x - cg.lower().x) / dxc, cg.n());
    const auto [r0, ty] = locate((cg.upper().y - x.y) / dxc, cg.n());
    const double v00 = cv[cg.index(r0, c0)];
    const double v01 = cv[cg.index(r0, c0 + 1)];
    const double v10 = cv[cg.index(r0 + 1, c0)];
    const double v11 = cv[cg.index(r0 + 1, c0 + 1)];
    double v = (1.0 - tx) * (1.0 - ty) * v00;
    if (tx > 0.0) v += tx * (1.0 - ty) * v01;
    if (ty > 0.0) v += (1.0 - tx) * ty * v10;
    if (tx > 0.0 && ty > 0.0) v += tx * ty * v11;
    fine[i] = v;
  }
  return fine;
}

}  // namespace patchy
