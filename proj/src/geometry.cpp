#include "feedacc/geometry.hpp"

#include <numbers>

namespace feedacc {
namespace {

constexpr double kEarthRadius = 6371008.8;  // mean radius, meters
constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

Projection::Projection(double lon0, double lat0)
    : metric_(false), lon0_(lon0), lat0_(lat0), cos_lat0_(std::cos(lat0 * kDeg)) {}

Projection Projection::centered_on(const BBox& lonlat_box) {
  const Point c = lonlat_box.center();
  return Projection(c.x, c.y);
}

Point Projection::forward(double a, double b) const {
  if (metric_) return {a, b};
  return {kEarthRadius * (a - lon0_) * kDeg * cos_lat0_,
          kEarthRadius * (b - lat0_) * kDeg};
}

Point Projection::inverse(const Point& p) const {
  if (metric_) return p;
  return {lon0_ + p.x / (kEarthRadius * kDeg * cos_lat0_),
          lat0_ + p.y / (kEarthRadius * kDeg)};
}

}  // namespace feedacc
