#pragma once

#include <Eigen/Core>

namespace cdrgeo {

struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;
};

/// Spherical Lambert azimuthal equal-area projection on the authalic sphere.
/// Planar coordinates are meters; areas are preserved exactly on the sphere.
class LambertAzimuthalEqualArea {
 public:
  static constexpr double kAuthalicRadius = 6371007.181;

  LambertAzimuthalEqualArea() = default;
  explicit LambertAzimuthalEqualArea(GeoPoint origin);

  Eigen::Vector2d forward(GeoPoint p) const;
  GeoPoint inverse(const Eigen::Vector2d& xy) const;

  GeoPoint origin() const { return origin_; }

 private:
  GeoPoint origin_{};
  double sin_lat0_ = 0.0;
  double cos_lat0_ = 1.0;
};

/// Great-circle distance in meters on the same sphere (haversine).
double haversine_m(GeoPoint a, GeoPoint b);

}  // namespace cdrgeo
