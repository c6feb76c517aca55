#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "cdrgeo/polygon.hpp"
#include "cdrgeo/projection.hpp"
#include "cdrgeo/time.hpp"

namespace cdrgeo {

/// Index into a TowerRegistry. Registries are sorted by cell_id, so index
/// order is lexicographic cell_id order.
using CellIndex = std::uint32_t;
/// Index into a UserTable.
using UserIndex = std::uint32_t;

/// Local-time hour interval [start, end); wraps past midnight when end < start.
struct HourWindow {
  int start_hour = 0;
  int end_hour = 24;

  bool contains(int hour) const {
    return start_hour < end_hour ? hour >= start_hour && hour < end_hour
                                 : hour >= start_hour || hour < end_hour;
  }
};

struct StudyConfig {
  Timestamp window_start = 0;
  Timestamp window_end = 0;  // exclusive
  /// Optional time slice, intersected with the study window.
  std::optional<std::pair<Timestamp, Timestamp>> period;
  int utc_offset_seconds = 2 * 3600;
  HourWindow night_broad{19, 9};
  HourWindow night_strict{22, 6};
  int min_events = 10;
  int min_active_days = 5;
  /// Projection centre; the tower centroid when unset.
  std::optional<GeoPoint> projection_origin;

  Timestamp effective_start() const;
  Timestamp effective_end() const;
  bool in_window(Timestamp t) const {
    return t >= effective_start() && t < effective_end();
  }

  /// Throws InputError on ill-ordered windows or thresholds < 1.
  void validate() const;
};

enum class RejectReason {
  malformed,
  bad_timestamp,
  unknown_cell,
  out_of_window,
  out_of_range,
  negative_population,
  duplicate_unit,
  unclosed_ring,
  invalid_polygon,
};

std::string_view to_string(RejectReason reason);

struct Reject {
  std::size_t line_number = 0;
  RejectReason reason = RejectReason::malformed;
  std::string payload;
};

using RejectLog = std::vector<Reject>;

// ---------------------------------------------------------------------------
// Towers

struct Tower {
  std::string cell_id;
  GeoPoint geo;
  Eigen::Vector2d xy;  // projected meters
};

class TowerRegistry {
 public:
  TowerRegistry() = default;
  /// Sorts by cell_id and projects every tower. Throws InputError naming the
  /// first duplicated cell_id.
  TowerRegistry(std::vector<Tower> towers, LambertAzimuthalEqualArea projection);

  std::size_t size() const { return towers_.size(); }
  bool empty() const { return towers_.empty(); }
  const Tower& operator[](CellIndex i) const { return towers_[i]; }
  std::span<const Tower> towers() const { return towers_; }
  std::optional<CellIndex> find(std::string_view cell_id) const;
  const std::string& id(CellIndex i) const { return towers_[i].cell_id; }
  std::vector<std::string> ids() const;

  /// 2 x n matrix of projected positions in index order.
  Eigen::Matrix2Xd positions() const;

  const LambertAzimuthalEqualArea& projection() const { return projection_; }

 private:
  std::vector<Tower> towers_;
  std::unordered_map<std::string, CellIndex> index_;
  LambertAzimuthalEqualArea projection_;
};

struct TowerParse {
  TowerRegistry registry;
  RejectLog rejects;
  std::size_t lines = 0;
};

/// Tower CSV `cell_id,lon,lat`. Out-of-range coordinates are rejected;
/// duplicate ids are fatal.
TowerParse parse_towers(std::istream& in, const StudyConfig& config);

/// Centroid of (lon, lat) as a plain coordinate mean.
GeoPoint geo_centroid(std::span<const Tower> towers);

// ---------------------------------------------------------------------------
// CDR events

struct CdrRecord {
  UserIndex user = 0;
  Timestamp time = 0;
  CellIndex cell = 0;

  friend bool operator==(const CdrRecord&, const CdrRecord&) = default;
};

/// Interns opaque user tokens to dense indices in first-seen order.
class UserTable {
 public:
  UserIndex intern(std::string_view user_id);
  std::optional<UserIndex> find(std::string_view user_id) const;
  const std::string& name(UserIndex i) const { return names_[i]; }
  std::size_t size() const { return names_.size(); }

  /// User indices ordered by name.
  std::vector<UserIndex> sorted_by_name() const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, UserIndex> index_;
};

/// Pull-based streaming reader for the CDR CSV. Memory use is independent of
/// the stream length apart from the user table and the reject log.
class CdrReader {
 public:
  /// Reads and checks the header; throws InputError if it is missing.
  CdrReader(std::istream& in, const TowerRegistry& registry,
            const StudyConfig& config, UserTable& users, RejectLog& rejects);

  /// Next valid record; invalid lines are logged and skipped.
  bool next(CdrRecord& out);

  std::size_t lines_read() const { return lines_; }
  std::size_t records_read() const { return records_; }

 private:
  std::istream& in_;
  const TowerRegistry& registry_;
  const StudyConfig& config_;
  UserTable& users_;
  RejectLog& rejects_;
  std::string line_;
  std::size_t lines_ = 0;
  std::size_t records_ = 0;
};

struct CdrParse {
  UserTable users;
  std::vector<CdrRecord> records;
  RejectLog rejects;
  std::size_t lines = 0;
};

CdrParse parse_cdr(std::istream& in, const TowerRegistry& registry,
                   const StudyConfig& config);

// ---------------------------------------------------------------------------
// Census

struct CensusRow {
  std::string unit_id;
  double population = 0.0;
  std::vector<double> attributes;  // NaN marks a missing value
};

class CensusTable {
 public:
  CensusTable() = default;
  CensusTable(std::vector<std::string> attribute_names, std::vector<CensusRow> rows);

  const std::vector<std::string>& attribute_names() const { return attribute_names_; }
  std::span<const CensusRow> rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  const CensusRow& operator[](std::size_t i) const { return rows_[i]; }

  const CensusRow* find(std::string_view unit_id) const;
  std::optional<std::size_t> attribute_index(std::string_view name) const;

 private:
  std::vector<std::string> attribute_names_;
  std::vector<CensusRow> rows_;  // sorted by unit_id
};

struct CensusParse {
  CensusTable table;
  RejectLog rejects;
  std::size_t lines = 0;
};

/// Census CSV `unit_id,population[,attr...]`.
CensusParse parse_census(std::istream& in);

// ---------------------------------------------------------------------------
// Administrative geometry

struct AdminUnit {
  std::string unit_id;
  std::string level;  // cell, iris, commune or a custom name
  Polygon polygon;    // projected meters
};

struct AdminParse {
  std::vector<AdminUnit> units;  // sorted by (level, unit_id)
  RejectLog rejects;             // line_number = 1-based feature index
  std::size_t features = 0;
};

/// GeoJSON FeatureCollection of Polygon / MultiPolygon features in WGS84,
/// each with string properties `unit_id` and `level`.
AdminParse parse_admin(std::istream& in, const LambertAzimuthalEqualArea& projection);

/// Units of one level, in unit_id order.
std::vector<AdminUnit> units_at_level(std::span<const AdminUnit> units,
                                      std::string_view level);

}  // namespace cdrgeo
