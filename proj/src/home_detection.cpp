#include "cdrgeo/home_detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <thread>

#include "cdrgeo/error.hpp"
#include "cdrgeo/parallel.hpp"

namespace cdrgeo {
namespace {

const std::array<HeuristicSpec, 5> kStandard{{
    {"H1", HomeMetric::activity_count, TimeWindow::all_hours},
    {"H2", HomeMetric::distinct_days, TimeWindow::all_hours},
    {"H3", HomeMetric::activity_count, TimeWindow::night_broad},
    {"H4", HomeMetric::distinct_days, TimeWindow::night_broad},
    {"H5", HomeMetric::activity_count, TimeWindow::night_strict},
}};

std::size_t slot(TimeWindow w) { return static_cast<std::size_t>(w); }

}  // namespace

std::span<const HeuristicSpec> standard_heuristics() { return kStandard; }

const HeuristicSpec& heuristic_by_name(std::string_view name) {
  for (const HeuristicSpec& h : kStandard)
    if (h.name == name) return h;
  throw InputError("unknown heuristic: " + std::string(name) + " (expected H1..H5)");
}

void DaySet::insert(std::int32_t day) {
  if (days_.empty() || days_.back() < day) {
    days_.push_back(day);
    return;
  }
  const auto it = std::lower_bound(days_.begin(), days_.end(), day);
  if (it == days_.end() || *it != day) days_.insert(it, day);
}

void UserActivity::add(Timestamp t, CellIndex cell, const StudyConfig& config) {
  const int hour = local_hour(t, config.utc_offset_seconds);
  const auto day = static_cast<std::int32_t>(local_day(t, config.utc_offset_seconds));
  const std::array<bool, kTimeWindowCount> in{true, config.night_broad.contains(hour),
                                              config.night_strict.contains(hour)};

  auto it = std::find_if(towers_.begin(), towers_.end(),
                         [cell](const TowerTally& tt) { return tt.cell == cell; });
  if (it == towers_.end()) {
    towers_.push_back(TowerTally{cell, {}, {}});
    it = std::prev(towers_.end());
  }
  for (std::size_t w = 0; w < kTimeWindowCount; ++w) {
    if (!in[w]) continue;
    ++it->events[w];
    it->days[w].insert(day);
  }
  active_days_.insert(day);
  ++events_;
}

bool UserActivity::qualifies(const StudyConfig& config) const {
  return events_ >= static_cast<std::size_t>(config.min_events) &&
         active_days_.size() >= static_cast<std::size_t>(config.min_active_days);
}

HomeAssignment UserActivity::detect(const HeuristicSpec& spec, const StudyConfig& config,
                                    UserIndex user) const {
  HomeAssignment out;
  out.user = user;
  out.qualifies = qualifies(config);
  const std::size_t w = slot(spec.window);
  double best = 0.0;
  CellIndex best_cell = 0;
  std::size_t ties = 0;
  for (const TowerTally& tt : towers_) {
    const double score = spec.metric == HomeMetric::activity_count
                             ? static_cast<double>(tt.events[w])
                             : static_cast<double>(tt.days[w].size());
    if (score <= 0.0) continue;
    if (score > best) {
      best = score;
      best_cell = tt.cell;
      ties = 1;
    } else if (score == best) {
      ++ties;
      best_cell = std::min(best_cell, tt.cell);  // registry order is cell_id order
    }
  }
  if (ties > 0) {
    out.home = best_cell;
    out.score = best;
    out.tie_broken = ties > 1;
  }
  return out;
}

HomeAssignment detect_home(std::span<const CdrRecord> events, const HeuristicSpec& spec,
                           const StudyConfig& config) {
  std::vector<CdrRecord> sorted(events.begin(), events.end());
  std::sort(sorted.begin(), sorted.end(), [](const CdrRecord& a, const CdrRecord& b) {
    return std::tie(a.time, a.cell) < std::tie(b.time, b.cell);
  });
  UserActivity activity;
  for (const CdrRecord& r : sorted) activity.add(r.time, r.cell, config);
  return activity.detect(spec, config, sorted.empty() ? UserIndex{0} : sorted.front().user);
}

void ActivityIndex::add(const CdrRecord& record) {
  if (record.user >= users_.size()) users_.resize(static_cast<std::size_t>(record.user) + 1);
  users_[record.user].add(record.time, record.cell, config_);
}

void ActivityIndex::reserve_users(std::size_t n) {
  if (users_.size() < n) users_.resize(n);
}

std::vector<HomeAssignment> detect_homes(const ActivityIndex& index, const HeuristicSpec& spec,
                                         const StudyConfig& config, unsigned workers) {
  std::vector<HomeAssignment> out(index.size());
  parallel_for(index.size(), workers, [&](std::size_t u) {
    out[u] = index[static_cast<UserIndex>(u)].detect(spec, config, static_cast<UserIndex>(u));
  });
  return out;
}

PopulationVector population_vector(std::span<const HomeAssignment> assignments,
                                   const TowerRegistry& registry) {
  PopulationVector out;
  out.counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(registry.size()));
  for (const HomeAssignment& a : assignments) {
    if (!a.qualifies || !a.home) continue;
    if (*a.home >= registry.size()) throw InvariantError("home cell outside the registry");
    out.counts[*a.home] += 1.0;
    ++out.total;
  }
  return out;
}

Eigen::MatrixXd agreement_matrix(std::span<const std::vector<HomeAssignment>> per_heuristic) {
  const auto k = static_cast<Eigen::Index>(per_heuristic.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(k, k);
  if (k == 0) return m;
  const std::size_t n = per_heuristic.front().size();
  for (const auto& set : per_heuristic)
    if (set.size() != n) throw std::invalid_argument("agreement_matrix: user universes differ");

  for (Eigen::Index a = 0; a < k; ++a) {
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const auto& sa = per_heuristic[static_cast<std::size_t>(a)];
      const auto& sb = per_heuristic[static_cast<std::size_t>(b)];
      std::size_t qualifying = 0, same = 0;
      for (std::size_t u = 0; u < n; ++u) {
        if (sa[u].user != sb[u].user)
          throw std::invalid_argument("agreement_matrix: users out of order");
        if (!sa[u].qualifies) continue;
        ++qualifying;
        if (sa[u].home == sb[u].home) ++same;
      }
      const double f = qualifying == 0 ? std::nan("")
                                       : static_cast<double>(same) / static_cast<double>(qualifying);
      m(a, b) = m(b, a) = f;
    }
  }
  return m;
}

}  // namespace cdrgeo
