#include "cdrgeo/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include <json.hpp>

#include "cdrgeo/error.hpp"
#include "cdrgeo/text.hpp"

namespace cdrgeo {
namespace {

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void check_stream(const std::istream& in, const char* what) {
  if (in.bad()) throw InputError(std::string("unreadable ") + what + " stream");
}

}  // namespace

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::malformed: return "malformed";
    case RejectReason::bad_timestamp: return "bad_timestamp";
    case RejectReason::unknown_cell: return "unknown_cell";
    case RejectReason::out_of_window: return "out_of_window";
    case RejectReason::out_of_range: return "out_of_range";
    case RejectReason::negative_population: return "negative_population";
    case RejectReason::duplicate_unit: return "duplicate_unit";
    case RejectReason::unclosed_ring: return "unclosed_ring";
    case RejectReason::invalid_polygon: return "invalid_polygon";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// StudyConfig

Timestamp StudyConfig::effective_start() const {
  return period ? std::max(window_start, period->first) : window_start;
}

Timestamp StudyConfig::effective_end() const {
  return period ? std::min(window_end, period->second) : window_end;
}

void StudyConfig::validate() const {
  if (window_end <= window_start) throw InputError("study window end must follow its start");
  if (period && period->second <= period->first)
    throw InputError("period end must follow its start");
  if (period && effective_end() <= effective_start())
    throw InputError("period does not overlap the study window");
  for (const HourWindow* w : {&night_broad, &night_strict}) {
    if (w->start_hour < 0 || w->start_hour > 23 || w->end_hour < 0 || w->end_hour > 24 ||
        w->start_hour == w->end_hour)
      throw InputError("night window hours must be distinct and within 0..24");
  }
  if (min_events < 1 || min_active_days < 1)
    throw InputError("user thresholds must be at least 1");
}

// ---------------------------------------------------------------------------
// Towers

TowerRegistry::TowerRegistry(std::vector<Tower> towers, LambertAzimuthalEqualArea projection)
    : towers_(std::move(towers)), projection_(projection) {
  std::sort(towers_.begin(), towers_.end(),
            [](const Tower& a, const Tower& b) { return a.cell_id < b.cell_id; });
  for (std::size_t i = 0; i + 1 < towers_.size(); ++i)
    if (towers_[i].cell_id == towers_[i + 1].cell_id)
      throw InputError("duplicate cell_id: " + towers_[i].cell_id);
  index_.reserve(towers_.size());
  for (std::size_t i = 0; i < towers_.size(); ++i) {
    Tower& t = towers_[i];
    t.xy = projection_.forward(t.geo);
    if (!t.xy.allFinite()) throw InvariantError("non-finite projection for " + t.cell_id);
    index_.emplace(t.cell_id, static_cast<CellIndex>(i));
  }
}

std::optional<CellIndex> TowerRegistry::find(std::string_view cell_id) const {
  const auto it = index_.find(std::string(cell_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> TowerRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(towers_.size());
  for (const Tower& t : towers_) out.push_back(t.cell_id);
  return out;
}

Eigen::Matrix2Xd TowerRegistry::positions() const {
  Eigen::Matrix2Xd out(2, static_cast<Eigen::Index>(towers_.size()));
  for (std::size_t i = 0; i < towers_.size(); ++i)
    out.col(static_cast<Eigen::Index>(i)) = towers_[i].xy;
  return out;
}

GeoPoint geo_centroid(std::span<const Tower> towers) {
  if (towers.empty()) return {};
  double lon = 0.0, lat = 0.0;
  for (const Tower& t : towers) {
    lon += t.geo.lon;
    lat += t.geo.lat;
  }
  const double n = static_cast<double>(towers.size());
  return {lon / n, lat / n};
}

TowerParse parse_towers(std::istream& in, const StudyConfig& config) {
  std::string line;
  if (!read_line(in, line)) {
    check_stream(in, "tower");
    throw InputError("tower file is empty (header `cell_id,lon,lat` required)");
  }
  std::vector<std::string_view> f;
  split_fields(line, f);
  if (f.size() != 3 || trim(f[0]) != "cell_id" || trim(f[1]) != "lon" || trim(f[2]) != "lat")
    throw InputError("tower file header must be `cell_id,lon,lat`");

  TowerParse out;
  std::vector<Tower> towers;
  while (read_line(in, line)) {
    ++out.lines;
    split_fields(line, f);
    if (f.size() != 3 || trim(f[0]).empty()) {
      out.rejects.push_back({out.lines, RejectReason::malformed, line});
      continue;
    }
    const auto lon = parse_double(f[1]);
    const auto lat = parse_double(f[2]);
    if (!lon || !lat) {
      out.rejects.push_back({out.lines, RejectReason::malformed, line});
      continue;
    }
    if (!std::isfinite(*lon) || !std::isfinite(*lat) || *lon < -180.0 || *lon > 180.0 ||
        *lat < -90.0 || *lat > 90.0) {
      out.rejects.push_back({out.lines, RejectReason::out_of_range, line});
      continue;
    }
    towers.push_back({std::string(trim(f[0])), {*lon, *lat}, Eigen::Vector2d::Zero()});
  }
  check_stream(in, "tower");
  const GeoPoint origin = config.projection_origin.value_or(geo_centroid(towers));
  out.registry = TowerRegistry(std::move(towers), LambertAzimuthalEqualArea(origin));
  return out;
}

// ---------------------------------------------------------------------------
// CDR

UserIndex UserTable::intern(std::string_view user_id) {
  std::string key(user_id);
  const auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const auto idx = static_cast<UserIndex>(names_.size());
  names_.push_back(key);
  index_.emplace(std::move(key), idx);
  return idx;
}

std::optional<UserIndex> UserTable::find(std::string_view user_id) const {
  const auto it = index_.find(std::string(user_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<UserIndex> UserTable::sorted_by_name() const {
  std::vector<UserIndex> order(names_.size());
  std::iota(order.begin(), order.end(), UserIndex{0});
  std::sort(order.begin(), order.end(),
            [this](UserIndex a, UserIndex b) { return names_[a] < names_[b]; });
  return order;
}

CdrReader::CdrReader(std::istream& in, const TowerRegistry& registry,
                     const StudyConfig& config, UserTable& users, RejectLog& rejects)
    : in_(in), registry_(registry), config_(config), users_(users), rejects_(rejects) {
  if (!read_line(in_, line_)) {
    check_stream(in_, "CDR");
    throw InputError("CDR file is empty (header `user_id,timestamp,cell_id` required)");
  }
  if (line_ != "user_id,timestamp,cell_id")
    throw InputError("CDR file header must be `user_id,timestamp,cell_id`");
}

bool CdrReader::next(CdrRecord& out) {
  while (read_line(in_, line_)) {
    ++lines_;
    const std::string_view s = line_;
    const std::size_t c1 = s.find(',');
    const std::size_t c2 = c1 == std::string_view::npos ? c1 : s.find(',', c1 + 1);
    if (c2 == std::string_view::npos || s.find(',', c2 + 1) != std::string_view::npos ||
        c1 == 0 || c2 + 1 == s.size()) {
      rejects_.push_back({lines_, RejectReason::malformed, line_});
      continue;
    }
    const auto t = parse_iso8601_utc(s.substr(c1 + 1, c2 - c1 - 1));
    if (!t) {
      rejects_.push_back({lines_, RejectReason::bad_timestamp, line_});
      continue;
    }
    const auto cell = registry_.find(s.substr(c2 + 1));
    if (!cell) {
      rejects_.push_back({lines_, RejectReason::unknown_cell, line_});
      continue;
    }
    if (!config_.in_window(*t)) {
      rejects_.push_back({lines_, RejectReason::out_of_window, line_});
      continue;
    }
    out.user = users_.intern(s.substr(0, c1));
    out.time = *t;
    out.cell = *cell;
    ++records_;
    return true;
  }
  check_stream(in_, "CDR");
  return false;
}

CdrParse parse_cdr(std::istream& in, const TowerRegistry& registry, const StudyConfig& config) {
  CdrParse out;
  CdrReader reader(in, registry, config, out.users, out.rejects);
  CdrRecord r;
  while (reader.next(r)) out.records.push_back(r);
  out.lines = reader.lines_read();
  return out;
}

// ---------------------------------------------------------------------------
// Census

CensusTable::CensusTable(std::vector<std::string> attribute_names, std::vector<CensusRow> rows)
    : attribute_names_(std::move(attribute_names)), rows_(std::move(rows)) {
  std::sort(rows_.begin(), rows_.end(),
            [](const CensusRow& a, const CensusRow& b) { return a.unit_id < b.unit_id; });
  for (std::size_t i = 0; i + 1 < rows_.size(); ++i)
    if (rows_[i].unit_id == rows_[i + 1].unit_id)
      throw InputError("duplicate census unit_id: " + rows_[i].unit_id);
  for (const CensusRow& r : rows_) {
    if (r.attributes.size() != attribute_names_.size())
      throw InputError("census row " + r.unit_id + " has the wrong attribute count");
    if (!(r.population >= 0.0)) throw InputError("negative population for " + r.unit_id);
  }
}

const CensusRow* CensusTable::find(std::string_view unit_id) const {
  const auto it = std::lower_bound(
      rows_.begin(), rows_.end(), unit_id,
      [](const CensusRow& r, std::string_view id) { return r.unit_id < id; });
  return it != rows_.end() && it->unit_id == unit_id ? &*it : nullptr;
}

std::optional<std::size_t> CensusTable::attribute_index(std::string_view name) const {
  const auto it = std::find(attribute_names_.begin(), attribute_names_.end(), name);
  if (it == attribute_names_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - attribute_names_.begin());
}

CensusParse parse_census(std::istream& in) {
  std::string line;
  if (!read_line(in, line)) {
    check_stream(in, "census");
    throw InputError("census file is empty (header `unit_id,population[,...]` required)");
  }
  std::vector<std::string_view> f;
  split_fields(line, f);
  if (f.size() < 2 || trim(f[0]) != "unit_id" || trim(f[1]) != "population")
    throw InputError("census header must start with `unit_id,population`");
  std::vector<std::string> attrs;
  for (std::size_t i = 2; i < f.size(); ++i) {
    const auto name = trim(f[i]);
    if (name.empty()) throw InputError("census header has an empty attribute name");
    if (std::find(attrs.begin(), attrs.end(), name) != attrs.end())
      throw InputError("census header repeats attribute " + std::string(name));
    attrs.emplace_back(name);
  }

  CensusParse out;
  std::vector<CensusRow> rows;
  std::unordered_set<std::string> seen;
  while (read_line(in, line)) {
    ++out.lines;
    split_fields(line, f);
    if (f.size() != attrs.size() + 2 || trim(f[0]).empty()) {
      out.rejects.push_back({out.lines, RejectReason::malformed, line});
      continue;
    }
    const auto pop = parse_double(f[1]);
    if (!pop || !std::isfinite(*pop)) {
      out.rejects.push_back({out.lines, RejectReason::malformed, line});
      continue;
    }
    if (*pop < 0.0) {
      out.rejects.push_back({out.lines, RejectReason::negative_population, line});
      continue;
    }
    CensusRow row{std::string(trim(f[0])), *pop, {}};
    bool ok = true;
    for (std::size_t i = 2; i < f.size(); ++i) {
      if (trim(f[i]).empty()) {
        row.attributes.push_back(std::nan(""));
        continue;
      }
      const auto v = parse_double(f[i]);
      if (!v) {
        ok = false;
        break;
      }
      row.attributes.push_back(*v);
    }
    if (!ok) {
      out.rejects.push_back({out.lines, RejectReason::malformed, line});
      continue;
    }
    if (!seen.insert(row.unit_id).second) {
      out.rejects.push_back({out.lines, RejectReason::duplicate_unit, line});
      continue;
    }
    rows.push_back(std::move(row));
  }
  check_stream(in, "census");

  out.table = CensusTable(std::move(attrs), std::move(rows));
  return out;
}

// ---------------------------------------------------------------------------
// Admin geometry

namespace {

using nlohmann::json;

enum class RingStatus { ok, unclosed, invalid };

RingStatus read_ring(const json& coords, const LambertAzimuthalEqualArea& proj, Ring& out) {
  if (!coords.is_array() || coords.size() < 4) return RingStatus::invalid;
  std::vector<GeoPoint> pts;
  for (const json& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
      return RingStatus::invalid;
    const GeoPoint g{c[0].get<double>(), c[1].get<double>()};
    if (!std::isfinite(g.lon) || !std::isfinite(g.lat) || std::abs(g.lon) > 180.0 ||
        std::abs(g.lat) > 90.0)
      return RingStatus::invalid;
    pts.push_back(g);
  }
  if (pts.front().lon != pts.back().lon || pts.front().lat != pts.back().lat)
    return RingStatus::unclosed;
  pts.pop_back();
  out.clear();
  for (const GeoPoint& g : pts) out.push_back(proj.forward(g));
  return is_simple(out) ? RingStatus::ok : RingStatus::invalid;
}

}  // namespace

AdminParse parse_admin(std::istream& in, const LambertAzimuthalEqualArea& projection) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    check_stream(in, "admin");
    throw InputError(std::string("admin GeoJSON does not parse: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw InputError("admin GeoJSON must be a FeatureCollection");

  AdminParse out;
  std::vector<std::pair<std::size_t, AdminUnit>> units;
  for (const json& feature : doc["features"]) {
    const std::size_t idx = ++out.features;
    const std::string payload = feature.dump().substr(0, 200);
    auto reject = [&](RejectReason r) { out.rejects.push_back({idx, r, payload}); };

    if (!feature.is_object() || !feature.contains("properties") ||
        !feature["properties"].is_object() || !feature.contains("geometry") ||
        !feature["geometry"].is_object()) {
      reject(RejectReason::malformed);
      continue;
    }
    const json& props = feature["properties"];
    if (!props.contains("unit_id") || !props["unit_id"].is_string() ||
        !props.contains("level") || !props["level"].is_string() ||
        props["unit_id"].get<std::string>().empty() ||
        props["level"].get<std::string>().empty()) {
      reject(RejectReason::malformed);
      continue;
    }
    const json& geom = feature["geometry"];
    const std::string type = geom.value("type", "");
    if (!geom.contains("coordinates") || !geom["coordinates"].is_array() ||
        (type != "Polygon" && type != "MultiPolygon")) {
      reject(RejectReason::malformed);
      continue;
    }
    std::vector<const json*> polys;
    if (type == "Polygon") {
      polys.push_back(&geom["coordinates"]);
    } else {
      for (const json& p : geom["coordinates"]) polys.push_back(&p);
    }

    AdminUnit unit{props["unit_id"].get<std::string>(), props["level"].get<std::string>(), {}};
    RingStatus status = polys.empty() ? RingStatus::invalid : RingStatus::ok;
    for (const json* p : polys) {
      if (!p->is_array() || p->empty()) {
        status = RingStatus::invalid;
        break;
      }
      for (const json& rc : *p) {
        Ring ring;
        status = read_ring(rc, projection, ring);
        if (status != RingStatus::ok) break;
        unit.polygon.rings.push_back(std::move(ring));
      }
      if (status != RingStatus::ok) break;
    }
    if (status == RingStatus::unclosed) {
      reject(RejectReason::unclosed_ring);
      continue;
    }
    if (status == RingStatus::invalid) {
      reject(RejectReason::invalid_polygon);
      continue;
    }
    normalize_orientation(unit.polygon);
    if (!(area(unit.polygon) > 0.0)) {
      reject(RejectReason::invalid_polygon);
      continue;
    }
    units.emplace_back(idx, std::move(unit));
  }

  std::stable_sort(units.begin(), units.end(), [](const auto& a, const auto& b) {
    return std::tie(a.second.level, a.second.unit_id) < std::tie(b.second.level, b.second.unit_id);
  });
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (i > 0 && units[i].second.level == units[i - 1].second.level &&
        units[i].second.unit_id == units[i - 1].second.unit_id) {
      out.rejects.push_back({units[i].first, RejectReason::duplicate_unit, units[i].second.unit_id});
      continue;
    }
    out.units.push_back(std::move(units[i].second));
  }
  std::sort(out.rejects.begin(), out.rejects.end(),
            [](const Reject& a, const Reject& b) { return a.line_number < b.line_number; });
  return out;
}

std::vector<AdminUnit> units_at_level(std::span<const AdminUnit> units, std::string_view level) {
  std::vector<AdminUnit> out;
  for (const AdminUnit& u : units)
    if (u.level == level) out.push_back(u);
  return out;
}

}  // namespace cdrgeo
