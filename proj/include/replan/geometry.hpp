#pragma once

#include <span>
#include <vector>

namespace replan {

// Planar coordinates in meters. Geographic inputs must be projected beforehand.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// A simple polygon. The ring is implicitly closed: the first vertex is not repeated.
class Polygon {
 public:
  Polygon() = default;

  // Throws ValidationError unless the ring has >= 3 vertices, finite coordinates,
  // nonzero area and no self-intersections.
  explicit Polygon(std::vector<Point> ring);

  const std::vector<Point>& ring() const { return ring_; }
  std::size_t size() const { return ring_.size(); }

  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  std::vector<Point> ring_;
};

struct PlotAttributes {
  double area = 0.0;       // m^2
  double perimeter = 0.0;  // m
  Point centroid;
  double compactness = 0.0;  // Polsby-Popper 4*pi*A/P^2, in (0, 1]
};

// Positive for counter-clockwise rings.
double signed_area(std::span<const Point> ring);

bool is_simple(std::span<const Point> ring);

PlotAttributes plot_attributes(const Polygon& poly);

double distance(const Point& a, const Point& b);

// Inclusive membership: a point exactly on a circle boundary is inside.
bool in_disk_union(const Point& p, std::span<const Point> centers, double radius);

}  // namespace replan
