#include "config.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "cdrgeo/error.hpp"
#include "cdrgeo/text.hpp"

namespace cdrgeo::cli {
namespace fs = std::filesystem;
namespace {

const std::array<RunConfig::Key, 44> kKeys{{
    {"towers", "", "tower CSV (cell_id,lon,lat)"},
    {"cdr", "", "CDR CSV (user_id,timestamp,cell_id)"},
    {"census_cell", "", "census CSV at cell level"},
    {"census_iris", "", "census CSV at iris level"},
    {"census_commune", "", "census CSV at commune level"},
    {"admin", "", "admin GeoJSON FeatureCollection"},
    {"window_start", "2007-06-01", "study window start (UTC date or timestamp)"},
    {"window_end", "2007-07-01", "study window end, exclusive"},
    {"period", "", "optional START..END slice of the window"},
    {"utc_offset", "+02:00", "fixed local-time offset"},
    {"night_broad", "19-09", "broad night window, local hours"},
    {"night_strict", "22-06", "strict night window, local hours"},
    {"min_events", "10", "events for a qualifying user"},
    {"min_active_days", "5", "distinct active days for a qualifying user"},
    {"projection_origin", "", "lon,lat of the projection centre (tower centroid when empty)"},
    {"bbox_padding", "0.1", "tessellation box padding, fraction of the extent per side"},
    {"z_crit", "1.645", "G_i* hot/cold threshold"},
    {"calibration_bins", "10", "quantile bins of log10 density"},
    {"calibration_min_users", "50", "minimum users per calibration bin"},
    {"delta_threshold", "0.2", "|delta r| flag threshold"},
    {"indicator_heuristic", "H2", "home heuristic anchoring indicators and aggregation"},
    {"hotspot_heuristic", "H1", "home heuristic for hotspot maps"},
    {"levels", "cell,iris,commune", "report levels, finest first"},
    {"custom_level", "", "admin level used by aggregate --level custom"},
    {"workers", "1", "worker threads for per-user stages"},
    {"seed", "42", "synthetic world seed"},
    {"synth_users", "10000", "synthetic users"},
    {"synth_days", "30", "synthetic days"},
    {"synth_start", "2007-06-01", "first synthetic day (UTC)"},
    {"synth_origin", "2.35,46.5", "lon,lat of the synthetic region centre"},
    {"synth_extent_km", "40", "synthetic region side"},
    {"synth_dense_radius_km", "6", "urban disk radius"},
    {"synth_towers_dense", "240", "expected urban towers"},
    {"synth_towers_sparse", "160", "expected rural towers"},
    {"synth_events_per_day", "6", "mean events per user and day"},
    {"synth_p_home_night", "0.95", "night events at home"},
    {"synth_p_home_day", "0.3", "day events at home"},
    {"synth_p_work_day", "0.5", "non-home day events at work"},
    {"synth_work_distance_km", "5", "mean home-work distance"},
    {"synth_urban_home_fraction", "0.6", "homes in the urban disk"},
    {"synth_nearby_towers", "6", "candidates for off-home night events"},
    {"synth_iris_grid", "8", "iris units per side"},
    {"synth_commune_grid", "4", "communes per side"},
    {"synth_utc_offset", "+02:00", "local-time offset of the synthetic stream"},
}};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view what) {
  throw InputError("config key " + std::string(key) + " = '" + std::string(value) + "': " + std::string(what));
}

Timestamp parse_instant(std::string_view key, std::string_view value) {
  const auto t = parse_date_or_timestamp(value);
  if (!t) bad_value(key, value, "expected YYYY-MM-DD or YYYY-MM-DDTHH:MM:SSZ");
  return *t;
}

HourWindow parse_hours(std::string_view key, std::string_view value) {
  const auto dash = value.find('-');
  if (dash == std::string_view::npos) bad_value(key, value, "expected HH-HH");
  int a = -1, b = -1;
  const auto s = trim(value.substr(0, dash)), e = trim(value.substr(dash + 1));
  if (std::from_chars(s.data(), s.data() + s.size(), a).ec != std::errc{} ||
      std::from_chars(e.data(), e.data() + e.size(), b).ec != std::errc{})
    bad_value(key, value, "expected HH-HH");
  return {a, b};
}

GeoPoint parse_lonlat(std::string_view key, std::string_view value) {
  const auto comma = value.find(',');
  const auto lon = comma == std::string_view::npos ? std::nullopt : parse_double(trim(value.substr(0, comma)));
  const auto lat = comma == std::string_view::npos ? std::nullopt : parse_double(trim(value.substr(comma + 1)));
  if (!lon || !lat) bad_value(key, value, "expected lon,lat");
  return {*lon, *lat};
}

}  // namespace

std::span<const RunConfig::Key> RunConfig::keys() { return kKeys; }

RunConfig::RunConfig() {
  for (const Key& k : kKeys) entries_.emplace(std::string(k.name), Entry{std::string(k.fallback), {}});
}

void RunConfig::load_file(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw InputError("cannot open config file: " + file.string());
  const fs::path base = fs::absolute(file).parent_path();
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos)
      throw InputError(file.string() + ":" + std::to_string(number) + ": expected key = value");
    set(trim(view.substr(0, eq)), std::string(trim(view.substr(eq + 1))), base);
  }
}

void RunConfig::set(std::string_view key, std::string value, fs::path base) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw InputError("unknown config key: " + std::string(key));
  it->second = Entry{std::move(value), std::move(base)};
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw InputError("--set expects key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), std::string(trim(assignment.substr(eq + 1))));
}

const std::string& RunConfig::get(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw InputError("unknown config key: " + std::string(key));
  return it->second.value;
}

double RunConfig::get_double(std::string_view key) const {
  const auto v = parse_double(get(key));
  if (!v) bad_value(key, get(key), "expected a number");
  return *v;
}

long RunConfig::get_int(std::string_view key) const {
  const std::string& s = get(key);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) bad_value(key, s, "expected an integer");
  return v;
}

std::vector<std::string> RunConfig::get_list(std::string_view key) const {
  std::vector<std::string> out;
  std::vector<std::string_view> fields;
  const std::string& s = get(key);
  if (s.empty()) return out;
  split_fields(s, fields);
  for (auto f : fields)
    if (!trim(f).empty()) out.emplace_back(trim(f));
  return out;
}

fs::path RunConfig::path(std::string_view key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end() || it->second.value.empty())
    throw InputError("config key " + std::string(key) + " must name a file");
  const fs::path p(it->second.value);
  return p.is_absolute() || it->second.base.empty() ? p : it->second.base / p;
}

StudyConfig RunConfig::study() const {
  StudyConfig c;
  c.window_start = parse_instant("window_start", get("window_start"));
  c.window_end = parse_instant("window_end", get("window_end"));
  if (has_value("period")) {
    const std::string& p = get("period");
    const auto dots = p.find("..");
    if (dots == std::string::npos) bad_value("period", p, "expected START..END");
    c.period = {{parse_instant("period", trim(std::string_view(p).substr(0, dots))),
                 parse_instant("period", trim(std::string_view(p).substr(dots + 2)))}};
  }
  const auto offset = parse_utc_offset(get("utc_offset"));
  if (!offset) bad_value("utc_offset", get("utc_offset"), "expected +HH:MM");
  c.utc_offset_seconds = *offset;
  c.night_broad = parse_hours("night_broad", get("night_broad"));
  c.night_strict = parse_hours("night_strict", get("night_strict"));
  c.min_events = static_cast<int>(get_int("min_events"));
  c.min_active_days = static_cast<int>(get_int("min_active_days"));
  if (has_value("projection_origin")) c.projection_origin = parse_lonlat("projection_origin", get("projection_origin"));
  c.validate();
  return c;
}

synth::WorldConfig RunConfig::world() const {
  synth::WorldConfig w;
  const long seed = get_int("seed");
  if (seed < 0) bad_value("seed", get("seed"), "must be non-negative");
  w.seed = static_cast<std::uint64_t>(seed);
  const long users = get_int("synth_users");
  const long days = get_int("synth_days");
  if (users < 0 || days < 0) throw InputError("synth_users and synth_days must be non-negative");
  w.users = static_cast<std::size_t>(users);
  w.days = static_cast<std::size_t>(days);
  w.start = parse_instant("synth_start", get("synth_start"));
  w.origin = parse_lonlat("synth_origin", get("synth_origin"));
  w.extent_km = get_double("synth_extent_km");
  w.dense_radius_km = get_double("synth_dense_radius_km");
  w.towers_dense = get_double("synth_towers_dense");
  w.towers_sparse = get_double("synth_towers_sparse");
  w.events_per_day = get_double("synth_events_per_day");
  w.p_home_night = get_double("synth_p_home_night");
  w.p_home_day = get_double("synth_p_home_day");
  w.p_work_day = get_double("synth_p_work_day");
  w.work_distance_km = get_double("synth_work_distance_km");
  w.urban_home_fraction = get_double("synth_urban_home_fraction");
  const long nearby = get_int("synth_nearby_towers");
  const long iris = get_int("synth_iris_grid");
  const long communes = get_int("synth_commune_grid");
  if (nearby < 1 || iris < 1 || communes < 1) throw InputError("synthetic grid sizes must be at least 1");
  w.nearby_towers = static_cast<std::size_t>(nearby);
  w.iris_grid = static_cast<std::size_t>(iris);
  w.commune_grid = static_cast<std::size_t>(communes);
  const auto offset = parse_utc_offset(get("synth_utc_offset"));
  if (!offset) bad_value("synth_utc_offset", get("synth_utc_offset"), "expected +HH:MM");
  w.utc_offset_seconds = *offset;
  w.validate();
  return w;
}

std::map<std::string, std::string> RunConfig::snapshot() const {
  std::map<std::string, std::string> out;
  for (const auto& [k, e] : entries_) out.emplace(k, e.value);
  return out;
}

}  // namespace cdrgeo::cli
