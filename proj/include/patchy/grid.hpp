#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace patchy {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }

/// Uniform square lattice of n x n nodes.
///
/// Node index = row * n + col. Row 0 is the top edge (largest y), col 0 the
/// left edge (smallest x). Spacing is dx = (upper - lower) / (n - 1) on both
/// axes. Immutable after construction.
class Grid {
 public:
  /// Throws UsageError for n < 3, an inverted box or a non-square box.
  Grid(Vec2 lower, Vec2 upper, std::size_t n);

  std::size_t n() const { return n_; }
  std::size_t size() const { return n_ * n_; }
  double dx() const { return dx_; }
  Vec2 lower() const { return lower_; }
  Vec2 upper() const { return upper_; }

  std::size_t index(std::size_t row, std::size_t col) const { return row * n_ + col; }
  std::size_t row(std::size_t node) const { return node / n_; }
  std::size_t col(std::size_t node) const { return node % n_; }

  Vec2 position(std::size_t node) const {
    return {lower_.x + static_cast<double>(col(node)) * dx_,
            upper_.y - static_cast<double>(row(node)) * dx_};
  }

  bool on_boundary(std::size_t node) const {
    const auto r = row(node);
    const auto c = col(node);
    return r == 0 || c == 0 || r == n_ - 1 || c == n_ - 1;
  }

  std::size_t interior_count() const { return (n_ - 2) * (n_ - 2); }

  /// Interior nodes in ascending index order.
  std::vector<std::size_t> interior_nodes() const;
  /// Boundary nodes in ascending index order.
  std::vector<std::size_t> boundary_nodes() const;

  /// True when both grids cover the same box (up to 1e-12 relative slack).
  bool same_box(const Grid& other) const;

 private:
  Vec2 lower_;
  Vec2 upper_;
  std::size_t n_;
  double dx_;
};

Grid build_grid(Vec2 lower, Vec2 upper, std::size_t n);

/// Per-node real values on a grid.
class ScalarField {
 public:
  ScalarField(Grid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
  ScalarField(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t node) { return values_[node]; }
  double operator[](std::size_t node) const { return values_[node]; }
  std::size_t size() const { return values_.size(); }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Bilinear reconstruction at a point inside one of the four cells touching a
/// base node. The base node always contributes through self_weight; the other
/// three corners of the containing cell are listed as neighbors in the order
/// (horizontal, vertical, diagonal).
struct InterpStencil {
  struct Neighbor {
    std::size_t node = 0;
    double weight = 0.0;
  };

  std::size_t base = 0;
  double self_weight = 1.0;
  std::array<Neighbor, 3> neighbors{};
};

/// Stencil for base + offset. Offsets up to dx * (1 + 1e-12) per axis are
/// accepted and clamped; anything further throws StencilError, as does a
/// point that leaves the domain box.
InterpStencil stencil_from_offset(const Grid& grid, std::size_t base, Vec2 offset);

/// Stencil for an absolute point; see stencil_from_offset.
InterpStencil interp_stencil(const Grid& grid, std::size_t base, Vec2 point);

inline double interp_value(std::span<const double> values, const InterpStencil& s) {
  double v = s.self_weight * values[s.base];
  for (const auto& nb : s.neighbors) v += nb.weight * values[nb.node];
  return v;
}

inline double interp_value(const ScalarField& field, const InterpStencil& s) {
  return interp_value(field.values(), s);
}

/// Bilinear interpolation of a coarse field onto every node of fine_grid.
/// Fine nodes that coincide with coarse nodes copy the coarse value exactly.
ScalarField prolong(const ScalarField& coarse, const Grid& fine_grid);

}  // namespace patchy
