// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef NLDIR_GEOMETRY_HPP
#define NLDIR_GEOMETRY_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace nldir {

/// Position in R^1 or R^2; 1D domains use only x[0] and keep x[1] = 0.
using Point = std::array<double, 2>;

double distance(const Point& a, const Point& b);

struct Interval {
  double a;
  double b;
};

struct Rect {
  Point lo;
  Point hi;
};

/// Simple polygon given by its vertices in either orientation.
struct Polygon {
  std::vector<Point> vertices;
};

using Shape = std::variant<Interval, Rect, Polygon>;

int shape_dim(const Shape& shape);
/// Lebesgue measure |Omega| and boundary measure |dOmega| (the counting
/// measure of the two endpoints in 1D).
double shape_measure(const Shape& shape);
double shape_boundary_measure(const Shape& shape);
bool shape_contains(const Shape& shape, const Point& x, double tol = 0.0);

struct InteriorNode {
  Point x;
  double weight;  // cell measure
  std::array<std::int64_t, 2> cell;  // grid cell index
};

struct BoundaryNode {
  Point x;
  double weight;  // surface measure of the segment (1 per endpoint in 1D)
  Point normal;   // outward unit normal
};

/// Cell-centred quadrature for Omega plus midpoint quadrature for dOmega.
class DomainMesh {
 public:
  DomainMesh(Shape shape, int dim, double h, std::array<double, 2> spacing, Point origin,
             std::array<std::int64_t, 2> cells, std::vector<InteriorNode> interior,
             std::vector<BoundaryNode> boundary);

  const Shape& shape() const noexcept { return shape_; }
  int dim() const noexcept { return dim_; }
  /// Largest grid spacing.
  double h() const noexcept { return h_; }
  const std::array<double, 2>& spacing() const noexcept { return spacing_; }

  std::span<const InteriorNode> interior() const noexcept { return interior_; }
  std::span<const BoundaryNode> boundary() const noexcept { return boundary_; }
  std::size_t interior_count() const noexcept { return interior_.size(); }
  std::size_t boundary_count() const noexcept { return boundary_.size(); }

  double interior_weight_sum() const;
  double boundary_weight_sum() const;

  /// Index of the interior node in grid cell (i, j), or -1 when that cell's
  /// centre lies outside Omega.
  std::int64_t node_at(std::int64_t i, std::int64_t j = 0) const;

 private:
  Shape shape_;
  int dim_;
  double h_;
  std::array<double, 2> spacing_;
  Point origin_;
  std::array<std::int64_t, 2> cells_;
  std::vector<InteriorNode> interior_;
  std::vector<BoundaryNode> boundary_;
  std::vector<std::int64_t> cell_to_node_;
};

/// Throws Error("mesh") for degenerate shapes or h outside (0, size).
DomainMesh build_mesh(const Shape& shape, double h);

/// Compressed rows of node indices.
struct Adjacency {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> indices;

  std::size_t rows() const noexcept { return offsets.size() - 1; }
  std::span<const std::size_t> row(std::size_t i) const {
    return {indices.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
};

struct NeighborTable {
  double radius = 0.0;
  Adjacency interior;  // interior node -> other interior nodes within radius
  Adjacency boundary;  // boundary node -> interior nodes within radius
};

/// Bucket-grid search. A pair is included iff |x_i - x_j| <= radius (self
/// excluded); rows are sorted by index.
NeighborTable neighbor_pairs(const DomainMesh& mesh, double radius);

/// Same predicate over an arbitrary point cloud (used for the random-cloud
/// checks and by the mesh overload).
Adjacency neighbor_pairs(std::span<const Point> points, double radius);
Adjacency neighbor_pairs(std::span<const Point> queries, std::span<const Point> points, double radius);

/// min over dOmega of |x - y|. Points on the boundary give 0. Throws when x is
/// outside Omega.
double distance_to_boundary(const DomainMesh& mesh, const Point& x);
double distance_to_boundary(const Shape& shape, const Point& x);

}  // namespace nldir

#endif  // NLDIR_GEOMETRY_HPP
