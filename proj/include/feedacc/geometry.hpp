#pragma once

#include <algorithm>
#include <cmath>

namespace feedacc {

/// Planar position in meters (easting, northing).
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double squared_distance(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct BBox {
  Point min;
  Point max;

  bool contains(const Point& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y;
  }

  BBox expanded(double margin) const {
    return {{min.x - margin, min.y - margin}, {max.x + margin, max.y + margin}};
  }

  Point center() const { return {(min.x + max.x) / 2, (min.y + max.y) / 2}; }

  void extend(const Point& p) {
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
  }

  static BBox around(const Point& p) { return {p, p}; }
};

/// Local equirectangular projection about (lon0, lat0). When `metric` is set
/// coordinates are already planar meters and pass through unchanged.
class Projection {
 public:
  Projection() = default;  // metric pass-through
  Projection(double lon0, double lat0);

  static Projection metric_identity() { return {}; }
  static Projection centered_on(const BBox& lonlat_box);

  bool is_metric() const { return metric_; }
  double lon0() const { return lon0_; }
  double lat0() const { return lat0_; }

  /// (lon, lat) or (x, y) -> planar meters.
  Point forward(double a, double b) const;
  /// planar meters -> (lon, lat) or (x, y).
  Point inverse(const Point& p) const;

 private:
  bool metric_ = true;
  double lon0_ = 0.0;
  double lat0_ = 0.0;
  double cos_lat0_ = 1.0;
};

}  // namespace feedacc
