#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cdrgeo/ingest.hpp"
#include "cdrgeo/polygon.hpp"

namespace cdrgeo::synth {

struct WorldConfig {
  std::uint64_t seed = 42;
  GeoPoint origin{2.35, 46.5};
  double extent_km = 40.0;  // square region side; admin grids cover it
  double dense_radius_km = 6.0;
  /// Expected tower counts in the urban disk and in the rural remainder.
  double towers_dense = 240.0;
  double towers_sparse = 160.0;
  std::size_t users = 10000;
  std::size_t days = 30;
  Timestamp start = 1180656000;  // 2007-06-01T00:00:00Z
  int utc_offset_seconds = 2 * 3600;
  double events_per_day = 6.0;  // Poisson mean
  double p_home_night = 0.95;
  double p_home_day = 0.3;
  double p_work_day = 0.5;       // day events not at home: work vs transit
  double work_distance_km = 5.0;  // exponential mean
  double urban_home_fraction = 0.6;
  std::size_t nearby_towers = 6;  // candidates for off-home night events
  std::size_t iris_grid = 8;      // iris units per side
  std::size_t commune_grid = 4;   // communes per side; divides iris_grid

  void validate() const;  // throws InputError
};

struct GroundTruth {
  std::vector<std::string> user_ids;  // "u000001"... in index order
  std::vector<CellIndex> home_cell;
  std::vector<Point> home_point;  // projected meters
  std::vector<CellIndex> work_cell;
};

struct World {
  WorldConfig config;
  TowerRegistry registry;
  std::vector<AdminUnit> admin;  // iris and commune grids
  CensusTable census_cell;
  CensusTable census_iris;
  CensusTable census_commune;
  GroundTruth truth;
  StudyConfig study;
  Box region;  // projected meters
};

/// Towers from a two-regime process (urban disk / rural remainder), regular
/// nested admin grids, homes, and census counts of true homes per unit.
/// Throws InputError when a regime would hold no towers.
World generate_world(const WorldConfig& config);

/// Emits the synthetic CDR stream in (time, user, cell) order, one day at a
/// time. User indices are ground-truth indices.
void generate_cdr(const World& world, const std::function<void(const CdrRecord&)>& sink);
std::vector<CdrRecord> generate_cdr(const World& world);

// ---------------------------------------------------------------------------
// Delineation experiment: one continuous path observed through tower grids of
// different density.

/// Points of a fixed daily path, in km: dwell at home, dwell at work, and an
/// evenly sampled commute in between.
std::vector<Point> reference_path(std::size_t n_points = 200);

/// Nearest tower on a square lattice of spacing `spacing_km` anchored at
/// `offset`; returns packed lattice keys.
std::vector<std::int64_t> snap_to_lattice(const std::vector<Point>& points,
                                          double spacing_km, const Point& offset);

/// Entropy (bits) of the lattice-snapped visit distribution.
double lattice_entropy(const std::vector<Point>& points, double spacing_km,
                       const Point& offset);

struct DelineationUser {
  double entropy = 0.0;
  double density = 0.0;  // towers per km²
};

struct DelineationConfig {
  std::uint64_t seed = 7;
  std::size_t users = 10000;
  double base_spacing_km = 1.0;
  /// Density multipliers; spacing = base / sqrt(multiplier).
  std::vector<double> density_multipliers{1.0, 4.0, 16.0};
  std::size_t path_points = 200;
};

/// Users that all follow the reference path under a random rotation and
/// lattice offset, each living in one of the density regimes.
std::vector<DelineationUser> generate_delineation_users(const DelineationConfig& config);

}  // namespace cdrgeo::synth
