#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cdrgeo/ingest.hpp"

namespace cdrgeo::testing {

/// Registry whose towers sit at the given planar positions (meters) around a
/// fixed origin.
inline TowerRegistry planar_registry(const std::vector<std::pair<std::string, Eigen::Vector2d>>& sites,
                                     GeoPoint origin = {2.0, 46.0}) {
  const LambertAzimuthalEqualArea proj(origin);
  std::vector<Tower> towers;
  for (const auto& [id, xy] : sites) towers.push_back({id, proj.inverse(xy), Eigen::Vector2d::Zero()});
  return TowerRegistry(std::move(towers), proj);
}

inline StudyConfig june_2007() {
  StudyConfig c;
  c.window_start = *parse_iso8601_utc("2007-06-01T00:00:00Z");
  c.window_end = *parse_iso8601_utc("2007-07-01T00:00:00Z");
  return c;
}

}  // namespace cdrgeo::testing
