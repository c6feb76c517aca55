#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "cdrgeo/geometry.hpp"
#include "cdrgeo/spatial_stats.hpp"

namespace cdrgeo {

enum class AggregationMethod { sum, mean, population_weighted_mean, areal_weighted };

std::string_view to_string(AggregationMethod m);
/// Throws InputError on unknown names.
AggregationMethod aggregation_method_from_string(std::string_view name);

/// Values over the units of one level. NaN marks a missing value.
struct LevelValues {
  std::vector<std::string> ids;
  Eigen::VectorXd values;

  std::size_t size() const { return ids.size(); }
  /// Value by id; NaN when absent.
  double at(std::string_view id) const;
};

/// Moves `values` (indexed like xwalk.source_ids) to the target level.
///   sum:                      y_t = Σ_s w_st x_s
///   mean:                     y_t = Σ_s w_st x_s / Σ_s w_st
///   population_weighted_mean: y_t = Σ_s w_st p_s x_s / Σ_s w_st p_s
///   areal_weighted:           y_t = Σ_s w_st a_s x_s / Σ_s w_st a_s
/// Sources with missing values are skipped; targets receiving zero total
/// weight are left out. Throws std::invalid_argument when population
/// weighting is requested without populations.
LevelValues aggregate(const Eigen::VectorXd& values, const Crosswalk& xwalk,
                      AggregationMethod method,
                      const Eigen::VectorXd* population = nullptr);

/// Re-indexes level values onto `ids` (NaN where missing).
Eigen::VectorXd align(const LevelValues& values, std::span<const std::string> ids);

/// Pearson over the ids both level vectors share.
std::optional<Correlation> correlate_levels(const LevelValues& a, const LevelValues& b);

/// A level of the report and the crosswalk from the finest level to it.
struct ScaleLevel {
  std::string name;
  Crosswalk from_finest;
};

/// A variable defined at the finest level and/or natively at some levels.
/// Native values take precedence; otherwise the finest values are aggregated.
struct ScaleVariable {
  std::string name;
  std::optional<Eigen::VectorXd> finest;  // indexed like the finest source ids
  AggregationMethod method = AggregationMethod::mean;
  std::map<std::string, LevelValues, std::less<>> native;
};

/// Value of a variable at a level, or nullopt when it cannot be produced.
std::optional<LevelValues> values_at(const ScaleVariable& var, const ScaleLevel& level,
                                     const Eigen::VectorXd* population);

inline constexpr double kDefaultDeltaThreshold = 0.2;

struct ScaleDifference {
  std::string pair;
  std::string level_a;
  std::string level_b;
  double delta = 0.0;  // r_b - r_a
  bool flag = false;   // sign change or |delta| > threshold
};

struct MultiScaleRow {
  std::string pair;
  std::vector<std::optional<Correlation>> by_level;  // nullopt = undefined
};

struct MultiScaleReport {
  std::vector<std::string> levels;
  std::vector<MultiScaleRow> rows;
  std::vector<ScaleDifference> differences;
  double threshold = kDefaultDeltaThreshold;
};

/// Differences between consecutive defined levels of one row.
std::vector<ScaleDifference> scale_differences(const MultiScaleRow& row,
                                               std::span<const std::string> levels,
                                               double threshold = kDefaultDeltaThreshold);

/// Report from already computed correlations.
MultiScaleReport build_report(std::vector<std::string> levels,
                              std::vector<MultiScaleRow> rows,
                              double threshold = kDefaultDeltaThreshold);

struct VariablePair {
  ScaleVariable a;
  ScaleVariable b;
  std::string label() const { return a.name + " vs " + b.name; }
};

/// Aggregates each pair to every level and correlates it there. A level where
/// either side has fewer than 3 paired units is reported undefined.
MultiScaleReport multi_scale_correlate(std::span<const VariablePair> pairs,
                                       std::span<const ScaleLevel> levels,
                                       const Eigen::VectorXd* population,
                                       double threshold = kDefaultDeltaThreshold);

struct SensitivityRow {
  std::string level;
  double mean = 0.0;
  double variance = 0.0;
  std::size_t support = 0;
  std::optional<Correlation> r;  // against the reference variable
};

struct SensitivityReport {
  std::string variable;
  std::string reference;
  std::vector<SensitivityRow> rows;
  std::vector<ScaleDifference> flags;  // flagged differences only
};

SensitivityReport sensitivity_report(const ScaleVariable& variable,
                                     const ScaleVariable& reference,
                                     std::span<const ScaleLevel> levels,
                                     const Eigen::VectorXd* population,
                                     double threshold = kDefaultDeltaThreshold);

}  // namespace cdrgeo
