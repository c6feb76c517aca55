#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <charconv>
#include <map>
#include <regex>
#include <set>

#include <json.hpp>

#include "cli_support.hpp"

using namespace cdrgeo::testing;
using json = nlohmann::json;

namespace {

/// Small synthetic world written by the CLI itself.
std::string make_world(const TempDir& dir, int users = 300, int days = 14) {
  const auto world = dir / "world";
  const auto r = run({"synth", "--users", std::to_string(users), "--days", std::to_string(days), "--out-dir",
                      world.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return (world / "study.conf").string();
}

bool is_number(const std::string& s) {
  if (s.empty()) return false;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// column kinds: s = non-empty string, o = optional string, n = number,
// N = number or empty, u = number, empty or "undefined", b = true/false,
// c = hotspot class
struct Schema {
  std::vector<std::string> header;
  std::string kinds;
};

const std::vector<std::pair<std::regex, Schema>>& schemas() {
  static const std::vector<std::pair<std::regex, Schema>> table{
      {std::regex("assignments\\.csv"),
       {{"user_id", "heuristic", "home_cell", "score", "tie_broken", "qualifies"}, "ssonbb"}},
      {std::regex("population_H[1-5]\\.csv"), {{"cell_id", "count"}, "sn"}},
      {std::regex("agreement\\.csv"), {{"heuristic", "H1", "H2", "H3", "H4", "H5"}, "sNNNNN"}},
      {std::regex("user_indicators\\.csv"), {{"user_id", "H", "CME", "home_cell", "density"}, "sNNoN"}},
      {std::regex("calibration\\.csv"), {{"bin_lo", "bin_hi", "H_mean", "count"}, "nnnn"}},
      {std::regex("tower_(H|CME)\\.csv"), {{"cell_id", "mean", "count"}, "snn"}},
      {std::regex("cosine\\.csv"), {{"heuristic", "angle_deg", "cells", "detected_total", "census_total"}, "sNnnn"}},
      {std::regex("gistar_(detected|census)\\.csv"), {{"unit_id", "z", "class"}, "snc"}},
      {std::regex("hotspot_agreement\\.csv"), {{"measure", "value"}, "sn"}},
      {std::regex("crosswalk_cell_\\w+_coverage\\.csv"), {{"source_id", "coverage", "partial"}, "snb"}},
      {std::regex("crosswalk_cell_\\w+\\.csv"), {{"source_id", "target_id", "weight"}, "ssn"}},
      {std::regex("aggregated_\\w+\\.csv"),
       {{"unit_id", "detected_homes", "census_population", "H_mean", "CME_mean"}, "sNNNN"}},
      {std::regex("multiscale_r\\.csv"), {{"pair", "level", "r", "n"}, "ssun"}},
      {std::regex("multiscale_delta\\.csv"), {{"pair", "level_a", "level_b", "delta_r", "flag"}, "sssnb"}},
      {std::regex("sensitivity\\.csv"),
       {{"variable", "reference", "level", "mean", "variance", "support", "r", "n"}, "sssNNnun"}},
      {std::regex("sensitivity_flags\\.csv"), {{"variable", "reference", "level_a", "level_b", "delta_r"}, "ssssn"}},
      {std::regex("ingest_summary\\.csv"), {{"source", "lines", "accepted", "rejected"}, "snnn"}},
      {std::regex("rejects_\\w+\\.csv"), {{"line_number", "reason", "payload"}, "nso"}},
  };
  return table;
}

bool field_ok(char kind, const std::string& f) {
  switch (kind) {
    case 's': return !f.empty();
    case 'o': return true;
    case 'n': return is_number(f);
    case 'N': return f.empty() || is_number(f);
    case 'u': return f.empty() || f == "undefined" || is_number(f);
    case 'b': return f == "true" || f == "false";
    case 'c': return f == "hot" || f == "cold" || f == "neutral";
  }
  return false;
}

void check_csv(const fs::path& file) {
  const std::string name = file.filename().string();
  const Schema* schema = nullptr;
  for (const auto& [re, s] : schemas())
    if (std::regex_match(name, re)) {
      schema = &s;
      break;
    }
  REQUIRE_MESSAGE(schema, "no schema for " << name);
  const auto rows = read_csv(file);
  REQUIRE_MESSAGE(!rows.empty(), name);
  CHECK_MESSAGE(rows[0] == schema->header, name);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    REQUIRE_MESSAGE(rows[r].size() == schema->header.size(), name << " row " << r);
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      CHECK_MESSAGE(field_ok(schema->kinds[c], rows[r][c]),
                    name << " row " << r << " column " << schema->header[c] << " = '" << rows[r][c] << "'");
  }
}

void check_geojson(const fs::path& file) {
  const json doc = json::parse(slurp(file));
  REQUIRE(doc.at("type") == "FeatureCollection");
  REQUIRE(!doc.at("features").empty());
  for (const json& f : doc.at("features")) {
    REQUIRE(f.at("type") == "Feature");
    REQUIRE(f.at("geometry").at("type") == "Polygon");
    for (const json& ring : f.at("geometry").at("coordinates")) {
      REQUIRE(ring.size() >= 4);
      CHECK(ring.front() == ring.back());
      for (const json& p : ring) {
        CHECK(p.at(0).get<double>() >= -180.0);
        CHECK(p.at(0).get<double>() <= 180.0);
        CHECK(std::abs(p.at(1).get<double>()) <= 90.0);
      }
    }
  }
}

/// Every listed output exists with the recorded size and digest, nothing
/// unlisted is present, and each file matches its schema.
void validate_run(const fs::path& dir) {
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  for (const char* key : {"tool", "version", "command", "config", "inputs", "timings", "outputs"})
    REQUIRE_MESSAGE(manifest.contains(key), key);
  std::set<std::string> listed{"manifest.json"};
  for (const json& o : manifest.at("outputs")) {
    const std::string name = o.at("file");
    listed.insert(name);
    const fs::path file = dir / name;
    REQUIRE_MESSAGE(fs::exists(file), name);
    CHECK(o.at("bytes").get<std::uintmax_t>() == fs::file_size(file));
    CHECK(o.at("sha256").get<std::string>() == sha256sum(file));
    if (file.extension() == ".csv") check_csv(file);
    if (file.extension() == ".geojson") check_geojson(file);
  }
  for (const json& in : manifest.at("inputs")) {
    CHECK(in.at("bytes").get<std::uintmax_t>() == fs::file_size(in.at("path").get<std::string>()));
    CHECK(in.at("sha256").get<std::string>() == sha256sum(in.at("path").get<std::string>()));
  }
  for (const auto& entry : fs::directory_iterator(dir))
    CHECK_MESSAGE(listed.count(entry.path().filename().string()) == 1, "unlisted " << entry.path());
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().filename() != "manifest.json") out[entry.path().filename().string()] = slurp(entry.path());
  return out;
}

}  // namespace

TEST_CASE("synth then homes writes assignments") {
  TempDir tmp;
  const std::string conf = make_world(tmp);
  const auto out = tmp / "homes";
  const auto r = run({"--config", conf, "--out-dir", out.string(), "homes"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(out / "assignments.csv"));
  CHECK(fs::exists(out / "agreement.csv"));
  for (int h = 1; h <= 5; ++h) CHECK(fs::exists(out / ("population_H" + std::to_string(h) + ".csv")));
  validate_run(out);

  // one row per user and heuristic, sorted by user
  const auto rows = read_csv(out / "assignments.csv");
  CHECK(rows.size() == 1 + 300 * 5);
  for (std::size_t i = 6; i < rows.size(); ++i) CHECK(rows[i - 5][0] <= rows[i][0]);
}

TEST_CASE("single heuristic") {
  TempDir tmp;
  const std::string conf = make_world(tmp);
  const auto out = tmp / "h3";
  REQUIRE(run({"--config", conf, "--out-dir", out.string(), "homes", "--heuristic", "H3"}).code == 0);
  CHECK(fs::exists(out / "population_H3.csv"));
  CHECK_FALSE(fs::exists(out / "population_H1.csv"));
  CHECK_FALSE(fs::exists(out / "agreement.csv"));
  CHECK(run({"--config", conf, "--out-dir", out.string(), "homes", "--heuristic", "H7"}).code == 2);
}

TEST_CASE("missing CDR file exits 2 naming the path and leaves no files") {
  TempDir tmp;
  const std::string conf = make_world(tmp);
  const auto out = tmp / "fail";
  const std::string missing = (tmp / "no_such_cdr.csv").string();
  const auto r = run({"--config", conf, "--set", "cdr=" + missing, "--out-dir", out.string(), "homes"});
  CHECK(r.code == 2);
  CHECK(r.err.find(missing) != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  if (fs::exists(out)) CHECK(fs::is_empty(out));
}

TEST_CASE("invalid configuration exits 2") {
  TempDir tmp;
  const std::string conf = make_world(tmp);
  const auto out = (tmp / "bad").string();
  CHECK(run({"--config", conf, "--out-dir", out, "--set", "no_such_key=1", "homes"}).code == 2);
  CHECK(run({"--config", conf, "--out-dir", out, "--set", "min_events=ten", "homes"}).code == 2);
  CHECK(run({"--config", conf, "--out-dir", out, "--workers", "0", "homes"}).code == 2);
  CHECK(run({"--config", conf, "--out-dir", out, "--period", "2007-06-10", "homes"}).code == 2);
  CHECK(run({"--config", (tmp / "absent.conf").string(), "--out-dir", out, "homes"}).code == 2);
  CHECK(run({"--out-dir", out, "frobnicate"}).code == 2);
  CHECK(run({"--out-dir", out}).code == 2);
  if (fs::exists(out)) CHECK(fs::is_empty(out));
}

TEST_CASE("help and version exit 0") {
  const auto h = run({"--help"});
  CHECK(h.code == 0);
  CHECK(h.out.find("homes") != std::string::npos);
  CHECK(run({"--version"}).code == 0);
}

TEST_CASE("flags override the file, the file overrides defaults") {
  TempDir tmp;
  const std::string conf = make_world(tmp);
  {
    std::ofstream f(conf, std::ios::app);
    f << "min_events = 12\nworkers = 2\n";
  }
  const auto out = tmp / "prec";
  REQUIRE(run({"--config", conf, "--out-dir", out.string(), "--workers", "3", "--set", "z_crit=1.96", "homes",
               "--heuristic", "H1"})
              .code == 0);
  const json cfg = json::parse(slurp(out / "manifest.json")).at("config");
  CHECK(cfg.at("min_events") == "12");   // file
  CHECK(cfg.at("workers") == "3");       // flag over file
  CHECK(cfg.at("z_crit") == "1.96");     // --set over default
  CHECK(cfg.at("min_active_days") == "5");  // default
}

TEST_CASE("period restricts the events used") {
  TempDir tmp;
  const std::string conf = make_world(tmp, 200, 20);
  const auto all = tmp / "all";
  const auto part = tmp / "part";
  REQUIRE(run({"--config", conf, "--out-dir", all.string(), "ingest-check"}).code == 0);
  REQUIRE(run({"--config", conf, "--out-dir", part.string(), "--period", "2007-06-01..2007-06-08", "ingest-check"})
              .code == 0);
  auto accepted = [](const fs::path& dir) {
    for (const auto& row : read_csv(dir / "ingest_summary.csv"))
      if (row[0] == "cdr") return std::stol(row[2]);
    return -1L;
  };
  CHECK(accepted(part) > 0);
  CHECK(accepted(part) < accepted(all));
  // lines are conserved: out-of-period records are rejected, not dropped
  for (const auto& row : read_csv(part / "ingest_summary.csv"))
    if (row[0] != "source") CHECK(std::stol(row[1]) == std::stol(row[2]) + std::stol(row[3]));
}

TEST_CASE("corrupted lines go to the reject log") {
  TempDir tmp;
  const std::string conf = make_world(tmp, 100, 7);
  {
    std::ofstream f(fs::path(conf).parent_path() / "cdr.csv", std::ios::app);
    f << "u000001,not-a-time,c0001\nu000001,2007-06-02T10:00:00Z,c9999\nbroken\n";
  }
  const auto out = tmp / "rej";
  REQUIRE(run({"--config", conf, "--out-dir", out.string(), "ingest-check"}).code == 0);
  const auto rejects = read_csv(out / "rejects_cdr.csv");
  CHECK(rejects.size() == 4);
  validate_run(out);
}

TEST_CASE("each subcommand produces its files") {
  TempDir tmp;
  const std::string conf = make_world(tmp, 400, 14);
  auto go = [&](std::vector<std::string> args, const std::string& name) {
    const auto out = tmp / name;
    args.insert(args.begin(), {"--config", conf, "--out-dir", out.string()});
    const auto r = run(args);
    REQUIRE_MESSAGE(r.code == 0, r.err);
    validate_run(out);
    return out;
  };
  CHECK(fs::exists(go({"indicators", "entropy"}, "ent") / "tower_H.csv"));
  CHECK(fs::exists(go({"indicators", "cme"}, "cme") / "calibration.csv"));
  CHECK(fs::exists(go({"validate", "cosine"}, "cos") / "cosine.csv"));
  CHECK(fs::exists(go({"validate", "hotspots"}, "hot") / "hotspots.geojson"));
  CHECK(fs::exists(go({"aggregate", "--level", "iris"}, "agg") / "aggregated_iris.csv"));
  CHECK(fs::exists(go({"--set", "custom_level=commune", "aggregate", "--level", "custom"}, "cus") /
                   "aggregated_commune.csv"));
  CHECK(fs::exists(go({"correlate"}, "cor") / "multiscale_delta.csv"));

  const auto r = run({"--config", conf, "--out-dir", (tmp / "x").string(), "aggregate", "--level", "canton"});
  CHECK(r.code == 2);
  const auto c = run({"--config", conf, "--out-dir", (tmp / "y").string(), "--set", "calibration_min_users=100000",
                      "indicators", "cme"});
  CHECK(c.code == 2);
}

TEST_CASE("full pipeline on a 10^4-user world passes the manifest validator") {
  TempDir tmp;
  const std::string conf = make_world(tmp, 10000, 30);
  const auto out = tmp / "report";
  const auto r = run({"--config", conf, "--out-dir", out.string(), "report"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  validate_run(out);
  const json manifest = json::parse(slurp(out / "manifest.json"));
  std::set<std::string> names;
  for (const json& o : manifest.at("outputs")) names.insert(o.at("file"));
  for (const char* f : {"assignments.csv", "agreement.csv", "user_indicators.csv", "calibration.csv", "tower_H.csv",
                        "tower_CME.csv", "cosine.csv", "gistar_detected.csv", "gistar_census.csv",
                        "hotspot_agreement.csv", "hotspots.geojson", "tessellation.geojson", "aggregated_iris.csv",
                        "aggregated_commune.csv", "crosswalk_cell_iris.csv", "multiscale_r.csv",
                        "multiscale_delta.csv", "sensitivity.csv", "sensitivity_flags.csv", "ingest_summary.csv"})
    CHECK_MESSAGE(names.count(f) == 1, f);
}

TEST_CASE("repeated runs are byte-identical") {
  TempDir tmp;
  const std::string conf = make_world(tmp, 500, 14);
  const auto a = tmp / "a";
  const auto b = tmp / "b";
  REQUIRE(run({"--config", conf, "--out-dir", a.string(), "--workers", "1", "report"}).code == 0);
  REQUIRE(run({"--config", conf, "--out-dir", b.string(), "--workers", "4", "report"}).code == 0);
  CHECK(read_dir(a) == read_dir(b));

  // synth itself is seeded
  const auto w1 = tmp / "w1";
  const auto w2 = tmp / "w2";
  REQUIRE(run({"--seed", "7", "synth", "--users", "50", "--days", "3", "--out-dir", w1.string()}).code == 0);
  REQUIRE(run({"--seed", "7", "synth", "--users", "50", "--days", "3", "--out-dir", w2.string()}).code == 0);
  CHECK(read_dir(w1) == read_dir(w2));
}
