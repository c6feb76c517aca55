#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "cdrgeo/home_detection.hpp"
#include "cdrgeo/ingest.hpp"

namespace cdrgeo {

/// Visit frequencies p_i over the towers a user was seen at.
struct VisitDistribution {
  UserIndex user = 0;
  std::vector<std::pair<CellIndex, double>> probs;  // sorted by cell
  std::size_t n_events = 0;
};

/// Throws std::invalid_argument on an empty sequence.
VisitDistribution visit_distribution(std::span<const CdrRecord> events);
VisitDistribution visit_distribution(const UserActivity& activity, UserIndex user);

/// Shannon entropy in bits of a probability vector; zero entries contribute 0.
template <typename Derived>
typename Derived::Scalar entropy_bits(const Eigen::MatrixBase<Derived>& p) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p(i);
    if (pi > Scalar(0)) h -= pi * std::log2(pi);
  }
  return h;
}

/// Temporally-uncorrelated mobility entropy H = -Σ p_i log2 p_i.
double mobility_entropy(const VisitDistribution& dist);

/// Density-conditional baseline Ĥ(d) over bins of log10(density).
struct CalibrationTable {
  std::vector<double> edges;  // log10 d, size = bins + 1, non-decreasing
  Eigen::VectorXd mean;       // Ĥ per bin
  std::vector<std::size_t> count;

  std::size_t bins() const { return count.size(); }
  /// Bin of a log10 density; values outside the range are clamped.
  std::size_t bin_of(double log10_density, bool* clamped = nullptr) const;
};

inline constexpr std::size_t kDefaultCalibrationBins = 10;
inline constexpr std::size_t kDefaultCalibrationMinUsers = 50;

/// Quantile bins of log10(density) (deciles by default); bins holding fewer
/// than `min_users` users are merged into their right neighbour, a thin last
/// bin into its left one. Throws std::invalid_argument when fewer than
/// `min_users` users are given.
CalibrationTable calibrate_baseline(std::span<const double> entropy,
                                    std::span<const double> density,
                                    std::size_t bins = kDefaultCalibrationBins,
                                    std::size_t min_users = kDefaultCalibrationMinUsers);

struct CorrectedEntropy {
  double value = 0.0;
  bool clamped = false;
};

/// CME = H - Ĥ(bin(d)).
CorrectedEntropy corrected_mobility_entropy(double entropy, double density,
                                            const CalibrationTable& table);

/// Per-tower mean of a per-user value over users whose home is that tower.
struct TowerIndicator {
  std::vector<CellIndex> cells;  // ascending; only towers with >= 1 user
  Eigen::VectorXd mean;
  std::vector<std::size_t> count;
};

/// `values[u]` belongs to `homes[u].user`; NaN values and users without a home
/// are skipped.
TowerIndicator average_by_home(std::span<const double> values,
                               std::span<const HomeAssignment> homes);

}  // namespace cdrgeo
