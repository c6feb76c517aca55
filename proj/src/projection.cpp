#include "cdrgeo/projection.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cdrgeo {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

LambertAzimuthalEqualArea::LambertAzimuthalEqualArea(GeoPoint origin)
    : origin_(origin),
      sin_lat0_(std::sin(origin.lat * kDeg)),
      cos_lat0_(std::cos(origin.lat * kDeg)) {}

Eigen::Vector2d LambertAzimuthalEqualArea::forward(GeoPoint p) const {
  const double lat = p.lat * kDeg;
  const double dlon = (p.lon - origin_.lon) * kDeg;
  const double sin_lat = std::sin(lat);
  const double cos_lat = std::cos(lat);
  const double cos_dlon = std::cos(dlon);
  const double denom = 1.0 + sin_lat0_ * sin_lat + cos_lat0_ * cos_lat * cos_dlon;
  // denom == 0 only at the antipode of the origin
  const double k = std::sqrt(2.0 / std::max(denom, 1e-300));
  return {kAuthalicRadius * k * cos_lat * std::sin(dlon),
          kAuthalicRadius * k * (cos_lat0_ * sin_lat - sin_lat0_ * cos_lat * cos_dlon)};
}

GeoPoint LambertAzimuthalEqualArea::inverse(const Eigen::Vector2d& xy) const {
  const double rho = xy.norm();
  if (rho == 0.0) return origin_;
  const double c = 2.0 * std::asin(std::min(1.0, rho / (2.0 * kAuthalicRadius)));
  const double sin_c = std::sin(c);
  const double cos_c = std::cos(c);
  const double lat =
      std::asin(std::clamp(cos_c * sin_lat0_ + xy.y() * sin_c * cos_lat0_ / rho, -1.0, 1.0));
  const double lon = origin_.lon * kDeg +
                     std::atan2(xy.x() * sin_c,
                                rho * cos_lat0_ * cos_c - xy.y() * sin_lat0_ * sin_c);
  return {lon / kDeg, lat / kDeg};
}

double haversine_m(GeoPoint a, GeoPoint b) {
  const double dlat = (b.lat - a.lat) * kDeg;
  const double dlon = (b.lon - a.lon) * kDeg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kDeg) * std::cos(b.lat * kDeg) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * LambertAzimuthalEqualArea::kAuthalicRadius *
         std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace cdrgeo
