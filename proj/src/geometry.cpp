#include "replan/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "replan/error.hpp"

namespace replan {

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(const Point& o, const Point& a, const Point& b) {
  const double c = cross(o, a, b);
  if (c > 0.0) return 1;
  if (c < 0.0) return -1;
  return 0;
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
  const int d1 = orientation(q1, q2, p1);
  const int d2 = orientation(q1, q2, p2);
  const int d3 = orientation(p1, p2, q1);
  const int d4 = orientation(p1, p2, q2);
  if (d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return true;
  if (d1 == 0 && on_segment(p1, q1, q2)) return true;
  if (d2 == 0 && on_segment(p2, q1, q2)) return true;
  if (d3 == 0 && on_segment(q1, p1, p2)) return true;
  if (d4 == 0 && on_segment(q2, p1, p2)) return true;
  return false;
}

}  // namespace

Polygon::Polygon(std::vector<Point> ring) : ring_(std::move(ring)) {
  if (ring_.size() >= 2 && ring_.front() == ring_.back()) ring_.pop_back();
  if (ring_.size() < 3) {
    throw ValidationError("polygon needs at least 3 distinct vertices, got " +
                          std::to_string(ring_.size()));
  }
  for (const auto& p : ring_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ValidationError("polygon has a non-finite coordinate");
    }
  }
  if (signed_area(ring_) == 0.0) throw ValidationError("polygon is degenerate (zero area)");
  if (!is_simple(ring_)) throw ValidationError("polygon ring self-intersects");
}

double signed_area(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = ring[i];
    const Point& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

bool is_simple(std::span<const Point> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  // O(n^2) is fine: plots have tens of vertices, not thousands.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (ring[i] == ring[j]) return false;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a1 = ring[i];
    const Point& a2 = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const Point& b1 = ring[j];
      const Point& b2 = ring[(j + 1) % n];
      if (adjacent) {
        // Neighbouring edges share one vertex; they may only overlap there.
        const Point& shared = (j == i + 1) ? a2 : a1;
        const Point& other_a = (j == i + 1) ? a1 : a2;
        const Point& other_b = (j == i + 1) ? b2 : b1;
        if (orientation(shared, other_a, other_b) == 0) {
          // Collinear neighbours fold back onto each other unless they point away.
          const double dot = (other_a.x - shared.x) * (other_b.x - shared.x) +
                             (other_a.y - shared.y) * (other_b.y - shared.y);
          if (dot > 0.0) return false;
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) return false;
    }
  }
  return true;
}

PlotAttributes plot_attributes(const Polygon& poly) {
  const auto& ring = poly.ring();
  const std::size_t n = ring.size();
  if (n < 3) throw ValidationError("plot_attributes on an empty polygon");

  // Shift to the first vertex to limit cancellation on projected coordinates.
  const Point origin = ring.front();
  double twice_area = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double perimeter = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a{ring[i].x - origin.x, ring[i].y - origin.y};
    const Point b{ring[(i + 1) % n].x - origin.x, ring[(i + 1) % n].y - origin.y};
    const double w = a.x * b.y - b.x * a.y;
    twice_area += w;
    cx += (a.x + b.x) * w;
    cy += (a.y + b.y) * w;
    perimeter += std::hypot(b.x - a.x, b.y - a.y);
  }
  if (twice_area == 0.0) throw ValidationError("polygon is degenerate (zero area)");

  PlotAttributes out;
  out.area = std::abs(0.5 * twice_area);
  out.perimeter = perimeter;
  out.centroid = {origin.x + cx / (3.0 * twice_area), origin.y + cy / (3.0 * twice_area)};
  out.compactness = 4.0 * std::numbers::pi * out.area / (perimeter * perimeter);
  return out;
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool in_disk_union(const Point& p, std::span<const Point> centers, double radius) {
  if (!(radius > 0.0)) throw ValidationError("in_disk_union: radius must be positive");
  for (const auto& c : centers) {
    if (distance(p, c) <= radius) return true;
  }
  return false;
}

}  // namespace replan
