#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdrgeo/geometry.hpp"
#include "cdrgeo/home_detection.hpp"
#include "cdrgeo/indicators.hpp"
#include "cdrgeo/ingest.hpp"
#include "config.hpp"
#include "output.hpp"

namespace cdrgeo::cli {

/// Stages of one run, computed on first use and cached. Every input that is
/// read leaves a reject log and a summary row behind in the output directory.
class Pipeline {
 public:
  Pipeline(const RunConfig& config, OutputDir& out, Timings& timings);

  const RunConfig& config() const { return config_; }
  const StudyConfig& study() const { return study_; }
  unsigned workers() const { return workers_; }
  OutputDir& out() { return out_; }
  Timings& timings() { return timings_; }

  const TowerRegistry& registry();
  const Tessellation& tessellation();
  const DensityMap& density();
  const AdjacencyWeights& adjacency();

  struct Activity {
    UserTable users;
    ActivityIndex index;
    std::vector<UserIndex> by_name;  // output order
  };
  const Activity& activity();

  const std::vector<HomeAssignment>& homes(const HeuristicSpec& spec);
  const PopulationVector& population(const HeuristicSpec& spec);
  const HeuristicSpec& indicator_heuristic() const;
  const HeuristicSpec& hotspot_heuristic() const;

  struct Indicators {
    std::vector<double> entropy;  // per user index; NaN without events
    std::vector<double> cme;      // NaN unless calibrated and eligible
    std::vector<double> density;  // home tower density; NaN without a qualifying home
    std::vector<bool> clamped;
    std::optional<CalibrationTable> calibration;
    std::string calibration_error;
    TowerIndicator tower_entropy;
    TowerIndicator tower_cme;
  };
  const Indicators& indicators();

  /// Census at "cell", "iris", "commune" (or any level with a census_<level>
  /// key); nullptr when not configured.
  const CensusTable* census(std::string_view level);
  const std::vector<AdminUnit>& admin();
  /// Crosswalk from tower cells to `level`; identity for "cell".
  const Crosswalk& crosswalk_to(const std::string& level);

  /// Digest entries for every input file read so far.
  nlohmann::ordered_json inputs_json() const;
  void write_ingest_summary();

 private:
  struct Source {
    std::string name;
    std::filesystem::path path;
    std::size_t lines = 0, accepted = 0, rejected = 0;
  };
  std::ifstream open_input(std::string_view key, std::filesystem::path& path);
  void write_rejects(const std::string& source, const RejectLog& rejects);

  const RunConfig& config_;
  OutputDir& out_;
  Timings& timings_;
  StudyConfig study_;
  unsigned workers_ = 1;
  std::vector<Source> sources_;

  std::optional<TowerRegistry> registry_;
  std::optional<Tessellation> tessellation_;
  std::optional<DensityMap> density_;
  std::optional<AdjacencyWeights> adjacency_;
  std::unique_ptr<Activity> activity_;
  std::map<std::string, std::vector<HomeAssignment>> homes_;
  std::map<std::string, PopulationVector> population_;
  std::optional<Indicators> indicators_;
  std::map<std::string, std::optional<CensusTable>, std::less<>> census_;
  std::optional<std::vector<AdminUnit>> admin_;
  std::map<std::string, Crosswalk> crosswalks_;
};

}  // namespace cdrgeo::cli
