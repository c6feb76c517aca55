#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cdrgeo/ingest.hpp"

namespace cdrgeo {

enum class HomeMetric { activity_count, distinct_days };
enum class TimeWindow { all_hours, night_broad, night_strict };

inline constexpr std::size_t kTimeWindowCount = 3;

struct HeuristicSpec {
  std::string name;
  HomeMetric metric = HomeMetric::activity_count;
  TimeWindow window = TimeWindow::all_hours;
};

/// H1 (activity, all hours), H2 (distinct days, all hours), H3 (activity,
/// 19-09), H4 (distinct days, 19-09), H5 (activity, 22-06).
std::span<const HeuristicSpec> standard_heuristics();

/// Looks up H1..H5; throws InputError otherwise.
const HeuristicSpec& heuristic_by_name(std::string_view name);

struct HomeAssignment {
  UserIndex user = 0;
  std::optional<CellIndex> home;
  double score = 0.0;
  bool tie_broken = false;
  bool qualifies = false;
};

/// Sorted set of local day numbers. Events arrive mostly in time order, so
/// inserts are nearly always appends.
class DaySet {
 public:
  void insert(std::int32_t day);
  std::size_t size() const { return days_.size(); }

 private:
  std::vector<std::int32_t> days_;
};

/// Everything home detection and visit frequencies need about one user:
/// per-tower event counts and distinct local days for each time window.
class UserActivity {
 public:
  struct TowerTally {
    CellIndex cell = 0;
    std::array<std::uint32_t, kTimeWindowCount> events{};
    std::array<DaySet, kTimeWindowCount> days;
  };

  void add(Timestamp t, CellIndex cell, const StudyConfig& config);

  std::size_t event_count() const { return events_; }
  std::size_t active_days() const { return active_days_.size(); }
  std::span<const TowerTally> towers() const { return towers_; }

  bool qualifies(const StudyConfig& config) const;

  HomeAssignment detect(const HeuristicSpec& spec, const StudyConfig& config,
                        UserIndex user) const;

 private:
  std::vector<TowerTally> towers_;  // first-visit order
  DaySet active_days_;
  std::size_t events_ = 0;
};

/// Home of a single user from their events (any order; re-sorted internally).
HomeAssignment detect_home(std::span<const CdrRecord> events,
                           const HeuristicSpec& spec, const StudyConfig& config);

/// Per-user activity for every user in a table, fed one record at a time.
class ActivityIndex {
 public:
  explicit ActivityIndex(const StudyConfig& config) : config_(config) {}

  void add(const CdrRecord& record);
  /// Grows to at least `n` users (so users with no records still appear).
  void reserve_users(std::size_t n);

  std::size_t size() const { return users_.size(); }
  const UserActivity& operator[](UserIndex u) const { return users_[u]; }

 private:
  StudyConfig config_;
  std::vector<UserActivity> users_;
};

/// Home assignment for every user in the index, computed over `workers`
/// threads. Output is identical for any worker count.
std::vector<HomeAssignment> detect_homes(const ActivityIndex& index,
                                         const HeuristicSpec& spec,
                                         const StudyConfig& config,
                                         unsigned workers = 1);

/// Detected-home counts of qualifying users, aligned with registry order.
struct PopulationVector {
  Eigen::VectorXd counts;
  std::size_t total = 0;
};

PopulationVector population_vector(std::span<const HomeAssignment> assignments,
                                   const TowerRegistry& registry);

/// Fraction of qualifying users whose home is identical under heuristics a and
/// b. All sets must cover the same users in the same order. Off-diagonal
/// entries are NaN when no user qualifies.
Eigen::MatrixXd agreement_matrix(
    std::span<const std::vector<HomeAssignment>> per_heuristic);

}  // namespace cdrgeo
