#include "pipeline.hpp"

#include <cmath>
#include <fstream>

#include "cdrgeo/error.hpp"
#include "cdrgeo/parallel.hpp"
#include "cdrgeo/text.hpp"

namespace cdrgeo::cli {
namespace fs = std::filesystem;
namespace {

constexpr std::size_t kRejectFlushLines = 1 << 14;

void append_rejects(std::ofstream& out, const RejectLog& rejects) {
  for (const Reject& r : rejects)
    out << r.line_number << ',' << to_string(r.reason) << ',' << csv_escape(r.payload) << '\n';
}

}  // namespace

Pipeline::Pipeline(const RunConfig& config, OutputDir& out, Timings& timings)
    : config_(config), out_(out), timings_(timings), study_(config.study()) {
  const long w = config.get_int("workers");
  if (w < 1) throw InputError("workers must be at least 1");
  workers_ = static_cast<unsigned>(w);
  heuristic_by_name(config.get("indicator_heuristic"));
  heuristic_by_name(config.get("hotspot_heuristic"));
}

std::ifstream Pipeline::open_input(std::string_view key, fs::path& path) {
  path = config_.path(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + std::string(key) + " file: " + path.string());
  return in;
}

void Pipeline::write_rejects(const std::string& source, const RejectLog& rejects) {
  std::ofstream out = out_.open("rejects_" + source + ".csv");
  out << "line_number,reason,payload\n";
  append_rejects(out, rejects);
}

const TowerRegistry& Pipeline::registry() {
  if (registry_) return *registry_;
  StageTimer t(timings_, "ingest_towers");
  fs::path path;
  std::ifstream in = open_input("towers", path);
  TowerParse parse = parse_towers(in, study_);
  if (parse.registry.empty()) throw InputError("no valid towers in " + path.string());
  write_rejects("towers", parse.rejects);
  sources_.push_back({"towers", path, parse.lines, parse.registry.size(), parse.rejects.size()});
  registry_ = std::move(parse.registry);
  return *registry_;
}

const Tessellation& Pipeline::tessellation() {
  if (tessellation_) return *tessellation_;
  const TowerRegistry& reg = registry();
  StageTimer t(timings_, "tessellation");
  tessellation_ = build_voronoi(reg, config_.get_double("bbox_padding"));
  return *tessellation_;
}

const DensityMap& Pipeline::density() {
  if (!density_) density_ = tower_density(tessellation());
  return *density_;
}

const AdjacencyWeights& Pipeline::adjacency() {
  if (!adjacency_) {
    const Tessellation& tess = tessellation();
    StageTimer t(timings_, "adjacency");
    adjacency_ = build_adjacency(tess, true);
  }
  return *adjacency_;
}

const Pipeline::Activity& Pipeline::activity() {
  if (activity_) return *activity_;
  const TowerRegistry& reg = registry();
  StageTimer t(timings_, "ingest_cdr");
  fs::path path;
  std::ifstream in = open_input("cdr", path);
  activity_ = std::make_unique<Activity>(Activity{UserTable{}, ActivityIndex(study_), {}});
  std::ofstream rejects_out = out_.open("rejects_cdr.csv");
  rejects_out << "line_number,reason,payload\n";

  RejectLog rejects;
  std::size_t rejected = 0;
  CdrReader reader(in, reg, study_, activity_->users, rejects);
  CdrRecord rec;
  std::size_t since_flush = 0;
  while (reader.next(rec)) {
    activity_->index.add(rec);
    if (++since_flush == kRejectFlushLines) {
      append_rejects(rejects_out, rejects);
      rejected += rejects.size();
      rejects.clear();
      since_flush = 0;
    }
  }
  append_rejects(rejects_out, rejects);
  rejected += rejects.size();
  if (in.bad()) throw InputError("read error in " + path.string());

  activity_->index.reserve_users(activity_->users.size());
  activity_->by_name = activity_->users.sorted_by_name();
  sources_.push_back({"cdr", path, reader.lines_read(), reader.records_read(), rejected});
  if (reader.lines_read() != reader.records_read() + rejected)
    throw InvariantError("cdr line count does not match records plus rejects");
  return *activity_;
}

const HeuristicSpec& Pipeline::indicator_heuristic() const {
  return heuristic_by_name(config_.get("indicator_heuristic"));
}

const HeuristicSpec& Pipeline::hotspot_heuristic() const {
  return heuristic_by_name(config_.get("hotspot_heuristic"));
}

const std::vector<HomeAssignment>& Pipeline::homes(const HeuristicSpec& spec) {
  if (const auto it = homes_.find(spec.name); it != homes_.end()) return it->second;
  const Activity& act = activity();
  StageTimer t(timings_, "homes_" + spec.name);
  auto result = detect_homes(act.index, spec, study_, workers_);
  for (const HomeAssignment& a : result)
    if (a.home && !(a.score > 0.0)) throw InvariantError("home assigned with a zero score");
  return homes_.emplace(spec.name, std::move(result)).first->second;
}

const PopulationVector& Pipeline::population(const HeuristicSpec& spec) {
  if (const auto it = population_.find(spec.name); it != population_.end()) return it->second;
  auto pv = population_vector(homes(spec), registry());
  if (std::abs(pv.counts.sum() - static_cast<double>(pv.total)) > 0.5)
    throw InvariantError("population vector total does not match its counts");
  return population_.emplace(spec.name, std::move(pv)).first->second;
}

const Pipeline::Indicators& Pipeline::indicators() {
  if (indicators_) return *indicators_;
  const Activity& act = activity();
  const auto& homes_ind = homes(indicator_heuristic());
  const DensityMap& dens = density();
  StageTimer t(timings_, "indicators");

  const std::size_t n = act.index.size();
  Indicators ind;
  ind.entropy.assign(n, std::nan(""));
  ind.cme.assign(n, std::nan(""));
  ind.density.assign(n, std::nan(""));
  ind.clamped.assign(n, false);
  parallel_for(n, workers_, [&](std::size_t u) {
    const UserActivity& ua = act.index[static_cast<UserIndex>(u)];
    if (ua.event_count() > 0)
      ind.entropy[u] = mobility_entropy(visit_distribution(ua, static_cast<UserIndex>(u)));
  });

  std::vector<double> h, d;
  std::vector<std::size_t> eligible;
  for (std::size_t u = 0; u < n; ++u) {
    const HomeAssignment& a = homes_ind[u];
    if (!a.qualifies || !a.home || std::isnan(ind.entropy[u])) continue;
    ind.density[u] = dens.density[*a.home];
    eligible.push_back(u);
    h.push_back(ind.entropy[u]);
    d.push_back(ind.density[u]);
  }
  try {
    ind.calibration = calibrate_baseline(h, d, static_cast<std::size_t>(config_.get_int("calibration_bins")),
                                         static_cast<std::size_t>(config_.get_int("calibration_min_users")));
  } catch (const std::invalid_argument& e) {
    ind.calibration_error = e.what();
  }
  if (ind.calibration) {
    for (std::size_t u : eligible) {
      const auto c = corrected_mobility_entropy(ind.entropy[u], ind.density[u], *ind.calibration);
      ind.cme[u] = c.value;
      ind.clamped[u] = c.clamped;
    }
  }

  // tower means over qualifying users with a home
  std::vector<HomeAssignment> qualifying = homes_ind;
  for (HomeAssignment& a : qualifying)
    if (!a.qualifies) a.home.reset();
  ind.tower_entropy = average_by_home(ind.entropy, qualifying);
  ind.tower_cme = average_by_home(ind.cme, qualifying);
  indicators_ = std::move(ind);
  return *indicators_;
}

const CensusTable* Pipeline::census(std::string_view level) {
  if (const auto it = census_.find(level); it != census_.end()) return it->second ? &*it->second : nullptr;
  const std::string key = "census_" + std::string(level);
  bool configured = false;
  for (const auto& k : RunConfig::keys()) configured |= k.name == key;
  auto& slot = census_[std::string(level)];
  if (!configured || !config_.has_value(key)) return nullptr;
  StageTimer t(timings_, "ingest_" + key);
  fs::path path;
  std::ifstream in = open_input(key, path);
  CensusParse parse = parse_census(in);
  write_rejects(key, parse.rejects);
  sources_.push_back({key, path, parse.lines, parse.table.size(), parse.rejects.size()});
  slot = std::move(parse.table);
  return &*slot;
}

const std::vector<AdminUnit>& Pipeline::admin() {
  if (admin_) return *admin_;
  const TowerRegistry& reg = registry();
  StageTimer t(timings_, "ingest_admin");
  fs::path path;
  std::ifstream in = open_input("admin", path);
  AdminParse parse = parse_admin(in, reg.projection());
  write_rejects("admin", parse.rejects);
  sources_.push_back({"admin", path, parse.features, parse.units.size(), parse.rejects.size()});
  admin_ = std::move(parse.units);
  return *admin_;
}

const Crosswalk& Pipeline::crosswalk_to(const std::string& level) {
  if (const auto it = crosswalks_.find(level); it != crosswalks_.end()) return it->second;
  const Tessellation& tess = tessellation();
  if (level == "cell") {
    Eigen::VectorXd area(static_cast<Eigen::Index>(tess.size()));
    for (std::size_t i = 0; i < tess.size(); ++i) area[static_cast<Eigen::Index>(i)] = tess.cell_area(i);
    return crosswalks_.emplace(level, identity_crosswalk(tess.ids(), "cell", area)).first->second;
  }
  const auto units = units_at_level(admin(), level);
  if (units.empty()) throw InputError("admin file has no units at level '" + level + "'");
  StageTimer t(timings_, "crosswalk_" + level);
  auto xw = build_crosswalk(named_polygons(tess), named_polygons(units), "cell", level);
  return crosswalks_.emplace(level, std::move(xw)).first->second;
}

nlohmann::ordered_json Pipeline::inputs_json() const {
  auto out = nlohmann::ordered_json::array();
  for (const Source& s : sources_)
    out.push_back({{"source", s.name}, {"path", s.path.string()}, {"bytes", fs::file_size(s.path)},
                   {"sha256", sha256_file(s.path)}});
  return out;
}

void Pipeline::write_ingest_summary() {
  CsvWriter csv(out_.open("ingest_summary.csv"), {"source", "lines", "accepted", "rejected"});
  for (const Source& s : sources_)
    csv.row(s.name, std::to_string(s.lines), std::to_string(s.accepted), std::to_string(s.rejected));
}

}  // namespace cdrgeo::cli
