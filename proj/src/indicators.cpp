#include "cdrgeo/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace cdrgeo {

VisitDistribution visit_distribution(std::span<const CdrRecord> events) {
  if (events.empty()) throw std::invalid_argument("visit_distribution: no events");
  std::map<CellIndex, std::size_t> counts;
  for (const CdrRecord& r : events) ++counts[r.cell];
  VisitDistribution out;
  out.user = events.front().user;
  out.n_events = events.size();
  const double n = static_cast<double>(events.size());
  for (const auto& [cell, c] : counts) out.probs.emplace_back(cell, static_cast<double>(c) / n);
  return out;
}

VisitDistribution visit_distribution(const UserActivity& activity, UserIndex user) {
  if (activity.event_count() == 0) throw std::invalid_argument("visit_distribution: no events");
  VisitDistribution out;
  out.user = user;
  out.n_events = activity.event_count();
  const double n = static_cast<double>(activity.event_count());
  for (const auto& tt : activity.towers())
    out.probs.emplace_back(tt.cell, static_cast<double>(tt.events[0]) / n);
  std::sort(out.probs.begin(), out.probs.end());
  return out;
}

double mobility_entropy(const VisitDistribution& dist) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(dist.probs.size()));
  for (std::size_t i = 0; i < dist.probs.size(); ++i)
    p[static_cast<Eigen::Index>(i)] = dist.probs[i].second;
  return std::max(0.0, entropy_bits(p));
}

std::size_t CalibrationTable::bin_of(double x, bool* clamped) const {
  if (clamped) *clamped = x < edges.front() || x > edges.back();
  if (edges.size() <= 2) return 0;
  const auto first = edges.begin() + 1;
  const auto last = edges.end() - 1;
  return static_cast<std::size_t>(std::upper_bound(first, last, x) - first);
}

namespace {

void fill_bins(CalibrationTable& t, std::span<const double> h, const std::vector<double>& logd) {
  const std::size_t bins = t.edges.size() - 1;
  t.count.assign(bins, 0);
  t.mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bins));
  for (std::size_t i = 0; i < logd.size(); ++i) {
    const std::size_t b = t.bin_of(logd[i]);
    ++t.count[b];
    t.mean[static_cast<Eigen::Index>(b)] += h[i];
  }
  for (std::size_t b = 0; b < bins; ++b)
    if (t.count[b] > 0) t.mean[static_cast<Eigen::Index>(b)] /= static_cast<double>(t.count[b]);
}

}  // namespace

CalibrationTable calibrate_baseline(std::span<const double> entropy, std::span<const double> density,
                                    std::size_t bins, std::size_t min_users) {
  if (entropy.size() != density.size())
    throw std::invalid_argument("calibrate_baseline: entropy and density differ in length");
  if (bins == 0) throw std::invalid_argument("calibrate_baseline: need at least one bin");
  const std::size_t n = entropy.size();
  if (n == 0 || n < min_users)
    throw std::invalid_argument("calibrate_baseline: fewer users than the minimum bin size");

  std::vector<double> logd(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(density[i] > 0.0) || !std::isfinite(density[i]))
      throw std::invalid_argument("calibrate_baseline: density must be positive and finite");
    if (!std::isfinite(entropy[i]))
      throw std::invalid_argument("calibrate_baseline: entropy must be finite");
    logd[i] = std::log10(density[i]);
  }
  std::vector<double> sorted = logd;
  std::sort(sorted.begin(), sorted.end());

  // quantile edges; repeated edges would make empty bins
  std::vector<double> edges{sorted.front()};
  for (std::size_t k = 1; k < bins; ++k) {
    const double e = sorted[k * n / bins];
    if (e > edges.back()) edges.push_back(e);
  }
  // closing edge; may repeat the last quantile edge when the top values tie
  edges.push_back(sorted.back());

  CalibrationTable table;
  table.edges = edges;
  fill_bins(table, entropy, logd);

  // merge thin bins rightward; a thin tail merges leftward
  std::vector<double> merged{edges.front()};
  std::size_t acc = 0;
  for (std::size_t b = 0; b + 1 < table.count.size(); ++b) {
    acc += table.count[b];
    if (acc >= min_users) {
      merged.push_back(edges[b + 1]);
      acc = 0;
    }
  }
  acc += table.count.back();
  merged.push_back(edges.back());
  if (acc < min_users && merged.size() > 2) merged.erase(merged.end() - 2);

  table.edges = std::move(merged);
  fill_bins(table, entropy, logd);
  return table;
}

CorrectedEntropy corrected_mobility_entropy(double entropy, double density,
                                            const CalibrationTable& table) {
  if (table.bins() == 0) throw std::invalid_argument("corrected_mobility_entropy: empty table");
  if (!(density > 0.0)) throw std::invalid_argument("corrected_mobility_entropy: density must be positive");
  CorrectedEntropy out;
  const std::size_t b = table.bin_of(std::log10(density), &out.clamped);
  out.value = entropy - table.mean[static_cast<Eigen::Index>(b)];
  return out;
}

TowerIndicator average_by_home(std::span<const double> values, std::span<const HomeAssignment> homes) {
  if (values.size() != homes.size())
    throw std::invalid_argument("average_by_home: values and homes differ in length");
  std::map<CellIndex, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!homes[i].home || std::isnan(values[i])) continue;
    auto& [sum, count] = acc[*homes[i].home];
    sum += values[i];
    ++count;
  }
  TowerIndicator out;
  out.mean.resize(static_cast<Eigen::Index>(acc.size()));
  Eigen::Index k = 0;
  for (const auto& [cell, sc] : acc) {
    out.cells.push_back(cell);
    out.count.push_back(sc.second);
    out.mean[k++] = sc.first / static_cast<double>(sc.second);
  }
  return out;
}

}  // namespace cdrgeo
