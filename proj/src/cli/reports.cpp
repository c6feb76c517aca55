#include "reports.hpp"

#include <cmath>

#include "cdrgeo/error.hpp"
#include "cdrgeo/scales.hpp"
#include "cdrgeo/spatial_stats.hpp"
#include "cdrgeo/synth.hpp"
#include "cdrgeo/text.hpp"

namespace cdrgeo::cli {
namespace {

using json = nlohmann::ordered_json;

std::string num(double v) { return format_double(v); }
std::string count(std::size_t v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "true" : "false"; }

json ring_json(const Ring& ring, const LambertAzimuthalEqualArea& proj) {
  json coords = json::array();
  for (const Point& p : ring) {
    const GeoPoint g = proj.inverse(p);
    coords.push_back({g.lon, g.lat});
  }
  if (!ring.empty()) coords.push_back(coords.front());
  return coords;
}

json polygon_json(const Polygon& poly, const LambertAzimuthalEqualArea& proj) {
  json rings = json::array();
  for (const Ring& r : poly.rings) rings.push_back(ring_json(r, proj));
  return {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
}

void write_json(OutputDir& out, const std::string& name, const json& doc) {
  std::ofstream f = out.open(name);
  f << doc.dump() << '\n';
}

/// Census population of every tower in registry order; towers missing from
/// the table count as 0.
Eigen::VectorXd census_by_cell(const CensusTable& census, const TowerRegistry& reg) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(reg.size()));
  for (CellIndex c = 0; c < reg.size(); ++c)
    if (const CensusRow* row = census.find(reg.id(c))) v[c] = row->population;
  return v;
}

/// Tower means expanded to registry order (NaN where no user is homed).
Eigen::VectorXd expand(const TowerIndicator& t, std::size_t n) {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::nan(""));
  for (std::size_t k = 0; k < t.cells.size(); ++k) v[t.cells[k]] = t.mean[static_cast<Eigen::Index>(k)];
  return v;
}

LevelValues census_values(const CensusTable& census, std::optional<std::size_t> attribute) {
  LevelValues out;
  out.values.resize(static_cast<Eigen::Index>(census.size()));
  for (std::size_t i = 0; i < census.size(); ++i) {
    out.ids.push_back(census[i].unit_id);
    out.values[static_cast<Eigen::Index>(i)] = attribute ? census[i].attributes[*attribute] : census[i].population;
  }
  return out;
}

void write_tower_indicator(OutputDir& out, const std::string& name, const TowerIndicator& t,
                           const TowerRegistry& reg) {
  CsvWriter csv(out.open(name), {"cell_id", "mean", "count"});
  for (std::size_t k = 0; k < t.cells.size(); ++k)
    csv.row(reg.id(t.cells[k]), num(t.mean[static_cast<Eigen::Index>(k)]), count(t.count[k]));
}

void write_gistar(OutputDir& out, const std::string& name, const GiStarResult& g, const TowerRegistry& reg) {
  CsvWriter csv(out.open(name), {"unit_id", "z", "class"});
  for (CellIndex c = 0; c < reg.size(); ++c) csv.row(reg.id(c), num(g.z[c]), std::string(to_string(g.cls[c])));
}

}  // namespace

void write_ingest_check(Pipeline& p) {
  p.registry();
  const RunConfig& cfg = p.config();
  if (cfg.has_value("cdr")) p.activity();
  for (const char* level : {"cell", "iris", "commune"}) p.census(level);
  if (cfg.has_value("admin")) p.admin();
}

void write_homes(Pipeline& p, std::span<const HeuristicSpec> specs) {
  const auto& act = p.activity();
  const TowerRegistry& reg = p.registry();
  std::vector<const std::vector<HomeAssignment>*> sets;
  for (const HeuristicSpec& h : specs) sets.push_back(&p.homes(h));

  {
    StageTimer t(p.timings(), "write_assignments");
    CsvWriter csv(p.out().open("assignments.csv"),
                  {"user_id", "heuristic", "home_cell", "score", "tie_broken", "qualifies"});
    for (UserIndex u : act.by_name)
      for (std::size_t k = 0; k < specs.size(); ++k) {
        const HomeAssignment& a = (*sets[k])[u];
        csv.row(act.users.name(u), specs[k].name, a.home ? reg.id(*a.home) : std::string(), num(a.score),
                flag(a.tie_broken), flag(a.qualifies));
      }
  }
  for (const HeuristicSpec& h : specs) {
    const PopulationVector& pv = p.population(h);
    CsvWriter csv(p.out().open("population_" + h.name + ".csv"), {"cell_id", "count"});
    for (CellIndex c = 0; c < reg.size(); ++c) csv.row(reg.id(c), num(pv.counts[c]));
  }
  if (specs.size() > 1) {
    std::vector<std::vector<HomeAssignment>> all;
    for (const auto* s : sets) all.push_back(*s);
    const Eigen::MatrixXd m = agreement_matrix(all);
    std::ofstream f = p.out().open("agreement.csv");
    f << "heuristic";
    for (const HeuristicSpec& h : specs) f << ',' << h.name;
    f << '\n';
    for (std::size_t a = 0; a < specs.size(); ++a) {
      f << specs[a].name;
      for (std::size_t b = 0; b < specs.size(); ++b)
        f << ',' << num(m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      f << '\n';
    }
  }
}

void write_indicators(Pipeline& p, bool cme) {
  const auto& ind = p.indicators();
  if (cme && !ind.calibration)
    throw InputError("cannot calibrate corrected entropy: " + ind.calibration_error);
  const auto& act = p.activity();
  const TowerRegistry& reg = p.registry();
  const auto& homes = p.homes(p.indicator_heuristic());
  {
    CsvWriter csv(p.out().open("user_indicators.csv"), {"user_id", "H", "CME", "home_cell", "density"});
    for (UserIndex u : act.by_name) {
      const HomeAssignment& a = homes[u];
      const bool homed = a.qualifies && a.home;
      csv.row(act.users.name(u), num(ind.entropy[u]), cme ? num(ind.cme[u]) : std::string(),
              homed ? reg.id(*a.home) : std::string(), num(ind.density[u]));
    }
  }
  write_tower_indicator(p.out(), "tower_H.csv", ind.tower_entropy, reg);
  if (!cme) return;
  write_tower_indicator(p.out(), "tower_CME.csv", ind.tower_cme, reg);
  CsvWriter csv(p.out().open("calibration.csv"), {"bin_lo", "bin_hi", "H_mean", "count"});
  const CalibrationTable& t = *ind.calibration;
  for (std::size_t b = 0; b < t.bins(); ++b)
    csv.row(num(t.edges[b]), num(t.edges[b + 1]), num(t.mean[static_cast<Eigen::Index>(b)]), count(t.count[b]));
}

void write_cosine(Pipeline& p) {
  const CensusTable* census = p.census("cell");
  if (!census) throw InputError("validate cosine needs a census_cell file");
  const TowerRegistry& reg = p.registry();
  // compare over the towers the census covers
  std::vector<CellIndex> covered;
  for (CellIndex c = 0; c < reg.size(); ++c)
    if (census->find(reg.id(c))) covered.push_back(c);
  Eigen::VectorXd truth(static_cast<Eigen::Index>(covered.size()));
  for (std::size_t k = 0; k < covered.size(); ++k) truth[static_cast<Eigen::Index>(k)] = census->find(reg.id(covered[k]))->population;

  CsvWriter csv(p.out().open("cosine.csv"), {"heuristic", "angle_deg", "cells", "detected_total", "census_total"});
  for (const HeuristicSpec& h : standard_heuristics()) {
    const PopulationVector& pv = p.population(h);
    Eigen::VectorXd det(truth.size());
    for (std::size_t k = 0; k < covered.size(); ++k) det[static_cast<Eigen::Index>(k)] = pv.counts[covered[k]];
    std::string angle;
    if (det.norm() > 0.0 && truth.norm() > 0.0) angle = num(cosine_degrees(det, truth));
    csv.row(h.name, angle, count(covered.size()), num(det.sum()), num(truth.sum()));
  }
}

void write_hotspots(Pipeline& p) {
  const CensusTable* census = p.census("cell");
  if (!census) throw InputError("validate hotspots needs a census_cell file");
  const TowerRegistry& reg = p.registry();
  const double z_crit = p.config().get_double("z_crit");
  const AdjacencyWeights& w = p.adjacency();
  const PopulationVector& pv = p.population(p.hotspot_heuristic());
  StageTimer t(p.timings(), "hotspots");
  const GiStarResult detected = getis_ord_gi_star(pv.counts, w.w, z_crit);
  const GiStarResult truth = getis_ord_gi_star(census_by_cell(*census, reg), w.w, z_crit);
  write_gistar(p.out(), "gistar_detected.csv", detected, reg);
  write_gistar(p.out(), "gistar_census.csv", truth, reg);

  const HotspotAgreement agree = hotspot_agreement(detected, truth);
  {
    CsvWriter csv(p.out().open("hotspot_agreement.csv"), {"measure", "value"});
    csv.row("hot_jaccard", num(agree.hot_jaccard));
    csv.row("cold_jaccard", num(agree.cold_jaccard));
    const char* names[] = {"cold", "neutral", "hot"};
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        csv.row(std::string("detected_") + names[a] + "_census_" + names[b], count(std::size_t(agree.confusion(a, b))));
  }

  const Tessellation& tess = p.tessellation();
  json features = json::array();
  for (CellIndex c = 0; c < reg.size(); ++c)
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"cell_id", reg.id(c)},
                          {"detected_homes", pv.counts[c]},
                          {"z_detected", detected.z[c]},
                          {"class_detected", to_string(detected.cls[c])},
                          {"z_census", truth.z[c]},
                          {"class_census", to_string(truth.cls[c])}}},
                        {"geometry", polygon_json(tess.cell_polygon(c), reg.projection())}});
  write_json(p.out(), "hotspots.geojson",
             {{"type", "FeatureCollection"}, {"heuristic", p.hotspot_heuristic().name}, {"z_crit", z_crit},
              {"features", std::move(features)}});
}

void write_tessellation(Pipeline& p) {
  const Tessellation& tess = p.tessellation();
  const DensityMap& dens = p.density();
  const TowerRegistry& reg = p.registry();
  json features = json::array();
  for (std::size_t i = 0; i < tess.size(); ++i)
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"cell_id", tess.ids()[i]},
                          {"area_km2", tess.cell_area(i) / 1e6},
                          {"density", dens.density[static_cast<Eigen::Index>(i)]}}},
                        {"geometry", polygon_json(tess.cell_polygon(i), reg.projection())}});
  json perturbed = json::array();
  for (const auto& id : tess.perturbed()) perturbed.push_back(id);
  write_json(p.out(), "tessellation.geojson",
             {{"type", "FeatureCollection"}, {"bbox_padding", tess.padding()}, {"perturbed_sites", perturbed},
              {"features", std::move(features)}});
}

void write_aggregate(Pipeline& p, const std::string& level) {
  const Crosswalk& xw = p.crosswalk_to(level);
  const TowerRegistry& reg = p.registry();
  {
    CsvWriter csv(p.out().open("crosswalk_cell_" + level + ".csv"), {"source_id", "target_id", "weight"});
    for (Eigen::Index s = 0; s < xw.weights.outerSize(); ++s)
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(xw.weights, s); it; ++it)
        csv.row(xw.source_ids[std::size_t(s)], xw.target_ids[std::size_t(it.col())], num(it.value()));
  }
  {
    CsvWriter csv(p.out().open("crosswalk_cell_" + level + "_coverage.csv"), {"source_id", "coverage", "partial"});
    for (Eigen::Index s = 0; s < xw.coverage.size(); ++s)
      csv.row(xw.source_ids[std::size_t(s)], num(xw.coverage[s]), flag(xw.partial(s)));
  }

  const PopulationVector& pv = p.population(p.indicator_heuristic());
  const auto& ind = p.indicators();
  const auto detected = aggregate(pv.counts, xw, AggregationMethod::sum);
  const auto h = aggregate(expand(ind.tower_entropy, reg.size()), xw, AggregationMethod::population_weighted_mean,
                           &pv.counts);
  const auto cme = aggregate(expand(ind.tower_cme, reg.size()), xw, AggregationMethod::population_weighted_mean,
                             &pv.counts);
  std::optional<LevelValues> census;
  if (const CensusTable* table = p.census(level)) census = census_values(*table, std::nullopt);
  else if (const CensusTable* cells = p.census("cell"))
    census = aggregate(census_by_cell(*cells, reg), xw, AggregationMethod::sum);

  CsvWriter csv(p.out().open("aggregated_" + level + ".csv"),
                {"unit_id", "detected_homes", "census_population", "H_mean", "CME_mean"});
  for (const std::string& id : xw.target_ids)
    csv.row(id, num(detected.at(id)), census ? num(census->at(id)) : std::string(), num(h.at(id)), num(cme.at(id)));
}

MultiScaleReport write_correlate(Pipeline& p) {
  const TowerRegistry& reg = p.registry();
  const std::vector<std::string> level_names = p.config().get_list("levels");
  if (level_names.empty()) throw InputError("config key levels is empty");
  std::vector<ScaleLevel> levels;
  for (const std::string& name : level_names) levels.push_back({name, p.crosswalk_to(name)});

  const PopulationVector& pv = p.population(p.indicator_heuristic());
  const auto& ind = p.indicators();
  const double threshold = p.config().get_double("delta_threshold");
  StageTimer t(p.timings(), "correlate");

  ScaleVariable detected{"detected_homes", pv.counts, AggregationMethod::sum, {}};
  ScaleVariable census_pop{"census_population", std::nullopt, AggregationMethod::sum, {}};
  std::vector<std::string> attributes;
  std::map<std::string, ScaleVariable> attr_vars;
  for (const std::string& name : level_names) {
    const CensusTable* table = p.census(name);
    if (!table) continue;
    census_pop.native.emplace(name, census_values(*table, std::nullopt));
    for (std::size_t a = 0; a < table->attribute_names().size(); ++a) {
      const std::string& attr = table->attribute_names()[a];
      auto [it, fresh] = attr_vars.try_emplace(attr, ScaleVariable{attr, std::nullopt, AggregationMethod::mean, {}});
      if (fresh) attributes.push_back(attr);
      it->second.native.emplace(name, census_values(*table, a));
    }
  }
  std::vector<ScaleVariable> indicators{
      {"H", expand(ind.tower_entropy, reg.size()), AggregationMethod::population_weighted_mean, {}}};
  if (ind.calibration)
    indicators.push_back({"CME", expand(ind.tower_cme, reg.size()), AggregationMethod::population_weighted_mean, {}});

  std::vector<VariablePair> pairs{{detected, census_pop}};
  for (const ScaleVariable& v : indicators)
    for (const std::string& attr : attributes) pairs.push_back({v, attr_vars.at(attr)});

  const MultiScaleReport report = multi_scale_correlate(pairs, levels, &pv.counts, threshold);
  {
    CsvWriter csv(p.out().open("multiscale_r.csv"), {"pair", "level", "r", "n"});
    for (const MultiScaleRow& row : report.rows)
      for (std::size_t l = 0; l < report.levels.size(); ++l) {
        const auto& c = row.by_level[l];
        csv.row(row.pair, report.levels[l], c ? num(c->r) : std::string("undefined"), count(c ? c->n : 0));
      }
  }
  {
    CsvWriter csv(p.out().open("multiscale_delta.csv"), {"pair", "level_a", "level_b", "delta_r", "flag"});
    for (const ScaleDifference& d : report.differences) csv.row(d.pair, d.level_a, d.level_b, num(d.delta), flag(d.flag));
  }
  CsvWriter rows(p.out().open("sensitivity.csv"),
                 {"variable", "reference", "level", "mean", "variance", "support", "r", "n"});
  CsvWriter flags(p.out().open("sensitivity_flags.csv"), {"variable", "reference", "level_a", "level_b", "delta_r"});
  for (const VariablePair& pair : pairs) {
    const SensitivityReport s = sensitivity_report(pair.a, pair.b, levels, &pv.counts, threshold);
    for (const SensitivityRow& r : s.rows)
      rows.row(s.variable, s.reference, r.level, r.support ? num(r.mean) : std::string(),
               r.support ? num(r.variance) : std::string(), count(r.support),
               r.r ? num(r.r->r) : std::string("undefined"), count(r.r ? r.r->n : 0));
    for (const ScaleDifference& d : s.flags) flags.row(s.variable, s.reference, d.level_a, d.level_b, num(d.delta));
  }
  return report;
}

void write_synth(const RunConfig& config, OutputDir& out, Timings& timings) {
  const synth::WorldConfig wc = config.world();
  synth::World world;
  {
    StageTimer t(timings, "synth_world");
    world = synth::generate_world(wc);
  }
  const auto& reg = world.registry;
  {
    std::ofstream f = out.open("towers.csv");
    f << "cell_id,lon,lat\n";
    for (const Tower& t : reg.towers()) f << t.cell_id << ',' << num(t.geo.lon) << ',' << num(t.geo.lat) << '\n';
  }
  {
    json features = json::array();
    for (const AdminUnit& u : world.admin)
      features.push_back({{"type", "Feature"},
                          {"properties", {{"unit_id", u.unit_id}, {"level", u.level}}},
                          {"geometry", polygon_json(u.polygon, reg.projection())}});
    write_json(out, "admin.geojson", {{"type", "FeatureCollection"}, {"features", std::move(features)}});
  }
  for (const auto& [name, table] : {std::pair<std::string, const CensusTable*>{"census_cell.csv", &world.census_cell},
                                    {"census_iris.csv", &world.census_iris},
                                    {"census_commune.csv", &world.census_commune}}) {
    std::ofstream f = out.open(name);
    f << "unit_id,population";
    for (const auto& a : table->attribute_names()) f << ',' << a;
    f << '\n';
    for (const CensusRow& row : table->rows()) {
      f << row.unit_id << ',' << num(row.population);
      for (double a : row.attributes) f << ',' << num(a);
      f << '\n';
    }
  }
  {
    CsvWriter csv(out.open("ground_truth.csv"), {"user_id", "home_cell"});
    for (std::size_t u = 0; u < world.truth.user_ids.size(); ++u)
      csv.row(world.truth.user_ids[u], reg.id(world.truth.home_cell[u]));
  }
  {
    StageTimer t(timings, "synth_cdr");
    std::ofstream f = out.open("cdr.csv");
    f << "user_id,timestamp,cell_id\n";
    synth::generate_cdr(world, [&](const CdrRecord& r) {
      f << world.truth.user_ids[r.user] << ',' << format_iso8601_utc(r.time) << ',' << reg.id(r.cell) << '\n';
    });
  }
  std::ofstream f = out.open("study.conf");
  f << "# synthetic world, seed " << wc.seed << "\n"
    << "towers = towers.csv\n"
    << "cdr = cdr.csv\n"
    << "census_cell = census_cell.csv\n"
    << "census_iris = census_iris.csv\n"
    << "census_commune = census_commune.csv\n"
    << "admin = admin.geojson\n"
    << "window_start = " << format_iso8601_utc(world.study.window_start) << "\n"
    << "window_end = " << format_iso8601_utc(world.study.window_end) << "\n"
    << "utc_offset = " << format_utc_offset(world.study.utc_offset_seconds) << "\n"
    << "projection_origin = " << num(wc.origin.lon) << "," << num(wc.origin.lat) << "\n"
    << "seed = " << wc.seed << "\n";
}

}  // namespace cdrgeo::cli
