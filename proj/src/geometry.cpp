// Copyright 2026 The nldir Authors
// SPDX-License-Identifier: Apache-2.0

#include "nldir/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

#include "nldir/error.hpp"

namespace nldir {

double distance(const Point& a, const Point& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double squared_distance(const Point& a, const Point& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

double signed_area(const std::vector<Point>& v) {
  double twice = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Point& p = v[i];
    const Point& q = v[(i + 1) % v.size()];
    twice += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * twice;
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
  return std::min(a[0], b[0]) <= p[0] && p[0] <= std::max(a[0], b[0]) && std::min(a[1], b[1]) <= p[1] &&
         p[1] <= std::max(a[1], b[1]);
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const double d1 = cross(q1, q2, p1);
  const double d2 = cross(q1, q2, p2);
  const double d3 = cross(p1, p2, q1);
  const double d4 = cross(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  return (d1 == 0 && on_segment(p1, q1, q2)) || (d2 == 0 && on_segment(p2, q1, q2)) ||
         (d3 == 0 && on_segment(q1, p1, p2)) || (d4 == 0 && on_segment(q2, p1, p2));
}

double point_segment_distance(const Point& x, const Point& a, const Point& b) {
  const double ex = b[0] - a[0];
  const double ey = b[1] - a[1];
  const double len2 = ex * ex + ey * ey;
  double t = len2 > 0.0 ? ((x[0] - a[0]) * ex + (x[1] - a[1]) * ey) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(x[0] - (a[0] + t * ex), x[1] - (a[1] + t * ey));
}

void validate_polygon(const Polygon& poly) {
  const auto& v = poly.vertices;
  if (v.size() < 3) throw Error("mesh", "polygon needs at least 3 vertices", "shape");
  if (std::abs(signed_area(v)) <= 0.0) throw Error("mesh", "polygon has zero area", "shape");
  const std::size_t n = v.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (squared_distance(v[i], v[(i + 1) % n]) == 0.0) throw Error("mesh", "polygon has a zero-length edge", "shape");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n])) {
        throw Error("mesh", "polygon is self-intersecting (edges " + std::to_string(i) + " and " +
                                std::to_string(j) + ")", "shape");
      }
    }
  }
}

std::vector<Point> counter_clockwise(const Polygon& poly) {
  std::vector<Point> v = poly.vertices;
  if (signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
  return v;
}

std::vector<Point> rect_vertices(const Rect& r) {
  return {r.lo, {r.hi[0], r.lo[1]}, r.hi, {r.lo[0], r.hi[1]}};
}

bool polygon_contains(const std::vector<Point>& v, const Point& x) {
  bool inside = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    const bool crosses = (v[i][1] > x[1]) != (v[j][1] > x[1]);
    if (crosses && x[0] < (v[j][0] - v[i][0]) * (x[1] - v[i][1]) / (v[j][1] - v[i][1]) + v[i][0]) inside = !inside;
  }
  return inside;
}

std::int64_t cells_for(double length, double h) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(length / h - 1e-9)));
}

// Midpoint quadrature on the edges of a counter-clockwise polygon.
std::vector<BoundaryNode> edge_nodes(const std::vector<Point>& v, double h) {
  std::vector<BoundaryNode> nodes;
  for (std::size_t e = 0; e < v.size(); ++e) {
    const Point& a = v[e];
    const Point& b = v[(e + 1) % v.size()];
    const double len = distance(a, b);
    const std::int64_t m = cells_for(len, h);
    const Point normal{(b[1] - a[1]) / len, -(b[0] - a[0]) / len};
    for (std::int64_t k = 0; k < m; ++k) {
      const double t = (static_cast<double>(k) + 0.5) / static_cast<double>(m);
      nodes.push_back({{a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])}, len / static_cast<double>(m), normal});
    }
  }
  return nodes;
}

}  // namespace

int shape_dim(const Shape& shape) { return std::holds_alternative<Interval>(shape) ? 1 : 2; }

double shape_measure(const Shape& shape) {
  return std::visit(Overloaded{[](const Interval& s) { return s.b - s.a; },
                               [](const Rect& r) { return (r.hi[0] - r.lo[0]) * (r.hi[1] - r.lo[1]); },
                               [](const Polygon& p) { return std::abs(signed_area(p.vertices)); }},
                    shape);
}

double shape_boundary_measure(const Shape& shape) {
  return std::visit(Overloaded{[](const Interval&) { return 2.0; },
                               [](const Rect& r) { return 2.0 * ((r.hi[0] - r.lo[0]) + (r.hi[1] - r.lo[1])); },
                               [](const Polygon& p) {
                                 double total = 0.0;
                                 const auto& v = p.vertices;
                                 for (std::size_t i = 0; i < v.size(); ++i) total += distance(v[i], v[(i + 1) % v.size()]);
                                 return total;
                               }},
                    shape);
}

bool shape_contains(const Shape& shape, const Point& x, double tol) {
  return std::visit(Overloaded{[&](const Interval& s) { return x[0] >= s.a - tol && x[0] <= s.b + tol; },
                               [&](const Rect& r) {
                                 return x[0] >= r.lo[0] - tol && x[0] <= r.hi[0] + tol && x[1] >= r.lo[1] - tol &&
                                        x[1] <= r.hi[1] + tol;
                               },
                               [&](const Polygon& p) {
                                 if (polygon_contains(p.vertices, x)) return true;
                                 if (tol <= 0.0) return false;
                                 const auto& v = p.vertices;
                                 for (std::size_t i = 0; i < v.size(); ++i) {
                                   if (point_segment_distance(x, v[i], v[(i + 1) % v.size()]) <= tol) return true;
                                 }
                                 return false;
                               }},
                    shape);
}

DomainMesh::DomainMesh(Shape shape, int dim, double h, std::array<double, 2> spacing, Point origin,
                       std::array<std::int64_t, 2> cells, std::vector<InteriorNode> interior,
                       std::vector<BoundaryNode> boundary)
    : shape_(std::move(shape)),
      dim_(dim),
      h_(h),
      spacing_(spacing),
      origin_(origin),
      cells_(cells),
      interior_(std::move(interior)),
      boundary_(std::move(boundary)),
      cell_to_node_(static_cast<std::size_t>(cells[0] * cells[1]), -1) {
  for (std::size_t n = 0; n < interior_.size(); ++n) {
    const auto& c = interior_[n].cell;
    if (c[0] < 0 || c[1] < 0 || c[0] >= cells_[0] || c[1] >= cells_[1]) {
      throw Error("mesh", "interior node " + std::to_string(n) + " has a cell index outside the grid");
    }
    cell_to_node_[static_cast<std::size_t>(c[0] * cells_[1] + c[1])] = static_cast<std::int64_t>(n);
  }
}

double DomainMesh::interior_weight_sum() const {
  double total = 0.0;
  for (const auto& n : interior_) total += n.weight;
  return total;
}

double DomainMesh::boundary_weight_sum() const {
  double total = 0.0;
  for (const auto& n : boundary_) total += n.weight;
  return total;
}

std::int64_t DomainMesh::node_at(std::int64_t i, std::int64_t j) const {
  if (i < 0 || j < 0 || i >= cells_[0] || j >= cells_[1]) return -1;
  return cell_to_node_[static_cast<std::size_t>(i * cells_[1] + j)];
}

DomainMesh build_mesh(const Shape& shape, double h) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error("mesh", "mesh size h must be positive", "h");

  if (const auto* s = std::get_if<Interval>(&shape)) {
    const double len = s->b - s->a;
    if (!(len > 0.0)) throw Error("mesh", "interval has zero or negative length", "shape");
    if (!(h < len)) throw Error("mesh", "h must be smaller than the interval length", "h");
    const std::int64_t n = cells_for(len, h);
    const double dx = len / static_cast<double>(n);
    std::vector<InteriorNode> interior;
    interior.reserve(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      interior.push_back({{s->a + (static_cast<double>(i) + 0.5) * dx, 0.0}, dx, {i, 0}});
    }
    std::vector<BoundaryNode> boundary{{{s->a, 0.0}, 1.0, {-1.0, 0.0}}, {{s->b, 0.0}, 1.0, {1.0, 0.0}}};
    return DomainMesh(shape, 1, dx, {dx, 1.0}, {s->a, 0.0}, {n, 1}, std::move(interior), std::move(boundary));
  }

  std::vector<Point> vertices;
  Point lo{}, hi{};
  if (const auto* r = std::get_if<Rect>(&shape)) {
    if (!(r->hi[0] > r->lo[0]) || !(r->hi[1] > r->lo[1])) throw Error("mesh", "rectangle has zero area", "shape");
    vertices = rect_vertices(*r);
    lo = r->lo;
    hi = r->hi;
  } else {
    const auto& poly = std::get<Polygon>(shape);
    validate_polygon(poly);
    vertices = counter_clockwise(poly);
    lo = hi = vertices.front();
    for (const auto& v : vertices) {
      lo = {std::min(lo[0], v[0]), std::min(lo[1], v[1])};
      hi = {std::max(hi[0], v[0]), std::max(hi[1], v[1])};
    }
  }
  const double width = hi[0] - lo[0];
  const double height = hi[1] - lo[1];
  if (!(h < std::min(width, height))) throw Error("mesh", "h must be smaller than the domain size", "h");

  const std::int64_t nx = cells_for(width, h);
  const std::int64_t ny = cells_for(height, h);
  const double dx = width / static_cast<double>(nx);
  const double dy = height / static_cast<double>(ny);
  const bool is_rect = std::holds_alternative<Rect>(shape);
  std::vector<InteriorNode> interior;
  for (std::int64_t i = 0; i < nx; ++i) {
    for (std::int64_t j = 0; j < ny; ++j) {
      const Point c{lo[0] + (static_cast<double>(i) + 0.5) * dx, lo[1] + (static_cast<double>(j) + 0.5) * dy};
      if (is_rect || polygon_contains(vertices, c)) interior.push_back({c, dx * dy, {i, j}});
    }
  }
  if (interior.empty()) throw Error("mesh", "no cell centre falls inside the domain; reduce h", "h");
  return DomainMesh(shape, 2, std::max(dx, dy), {dx, dy}, lo, {nx, ny}, std::move(interior),
                    edge_nodes(vertices, h));
}

namespace {

struct BucketGrid {
  double size;
  Point origin;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;

  std::array<std::int64_t, 2> key_of(const Point& x) const {
    return {static_cast<std::int64_t>(std::floor((x[0] - origin[0]) / size)),
            static_cast<std::int64_t>(std::floor((x[1] - origin[1]) / size))};
  }
  static std::int64_t pack(std::int64_t i, std::int64_t j) { return (i << 32) ^ (j & 0xffffffff); }
};

BucketGrid make_grid(std::span<const Point> points, double radius) {
  // Slightly wider than the radius so floor() rounding never puts a pair at
  // distance <= radius two buckets apart.
  BucketGrid grid{radius * (1.0 + 1e-9), {0.0, 0.0}, {}};
  if (!points.empty()) {
    grid.origin = points.front();
    for (const auto& p : points) grid.origin = {std::min(grid.origin[0], p[0]), std::min(grid.origin[1], p[1])};
  }
  for (std::size_t n = 0; n < points.size(); ++n) {
    const auto k = grid.key_of(points[n]);
    grid.buckets[BucketGrid::pack(k[0], k[1])].push_back(n);
  }
  return grid;
}

Adjacency search(std::span<const Point> queries, std::span<const Point> points, double radius, bool skip_self) {
  Adjacency adj;
  adj.offsets.reserve(queries.size() + 1);
  if (!(radius > 0.0)) {
    adj.offsets.assign(queries.size() + 1, 0);
    return adj;
  }
  const BucketGrid grid = make_grid(points, radius);
  const double r2 = radius * radius;
  std::vector<std::size_t> row;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    row.clear();
    const auto k = grid.key_of(queries[q]);
    for (std::int64_t di = -1; di <= 1; ++di) {
      for (std::int64_t dj = -1; dj <= 1; ++dj) {
        const auto it = grid.buckets.find(BucketGrid::pack(k[0] + di, k[1] + dj));
        if (it == grid.buckets.end()) continue;
        for (std::size_t n : it->second) {
          if (skip_self && n == q) continue;
          if (squared_distance(queries[q], points[n]) <= r2) row.push_back(n);
        }
      }
    }
    std::sort(row.begin(), row.end());
    adj.indices.insert(adj.indices.end(), row.begin(), row.end());
    adj.offsets.push_back(adj.indices.size());
  }
  return adj;
}

}  // namespace

Adjacency neighbor_pairs(std::span<const Point> points, double radius) {
  return search(points, points, radius, true);
}

Adjacency neighbor_pairs(std::span<const Point> queries, std::span<const Point> points, double radius) {
  return search(queries, points, radius, false);
}

NeighborTable neighbor_pairs(const DomainMesh& mesh, double radius) {
  std::vector<Point> inner, outer;
  inner.reserve(mesh.interior_count());
  outer.reserve(mesh.boundary_count());
  for (const auto& n : mesh.interior()) inner.push_back(n.x);
  for (const auto& n : mesh.boundary()) outer.push_back(n.x);
  NeighborTable table;
  table.radius = radius;
  table.interior = search(inner, inner, radius, true);
  table.boundary = search(outer, inner, radius, false);
  return table;
}

double distance_to_boundary(const Shape& shape, const Point& x) {
  const double scale = std::max(1.0, std::sqrt(shape_measure(shape)));
  if (!shape_contains(shape, x, 1e-12 * scale)) {
    throw Error("mesh", "point (" + std::to_string(x[0]) + ", " + std::to_string(x[1]) + ") lies outside the domain");
  }
  return std::visit(Overloaded{[&](const Interval& s) { return std::max(0.0, std::min(x[0] - s.a, s.b - x[0])); },
                               [&](const Rect& r) {
                                 return std::max(0.0, std::min({x[0] - r.lo[0], r.hi[0] - x[0], x[1] - r.lo[1],
                                                                r.hi[1] - x[1]}));
                               },
                               [&](const Polygon& p) {
                                 double best = std::numeric_limits<double>::infinity();
                                 const auto& v = p.vertices;
                                 for (std::size_t i = 0; i < v.size(); ++i) {
                                   best = std::min(best, point_segment_distance(x, v[i], v[(i + 1) % v.size()]));
                                 }
                                 return best;
                               }},
                    shape);
}

double distance_to_boundary(const DomainMesh& mesh, const Point& x) { return distance_to_boundary(mesh.shape(), x); }

}  // namespace nldir
