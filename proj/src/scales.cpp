#include "cdrgeo/scales.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "cdrgeo/error.hpp"

namespace cdrgeo {

std::string_view to_string(AggregationMethod m) {
  switch (m) {
    case AggregationMethod::sum: return "sum";
    case AggregationMethod::mean: return "mean";
    case AggregationMethod::population_weighted_mean: return "population_weighted_mean";
    case AggregationMethod::areal_weighted: return "areal_weighted";
  }
  return "mean";
}

AggregationMethod aggregation_method_from_string(std::string_view name) {
  for (auto m : {AggregationMethod::sum, AggregationMethod::mean,
                 AggregationMethod::population_weighted_mean, AggregationMethod::areal_weighted})
    if (to_string(m) == name) return m;
  throw InputError("unknown aggregation method: " + std::string(name));
}

double LevelValues::at(std::string_view id) const {
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == id) return values[static_cast<Eigen::Index>(i)];
  return std::nan("");
}

LevelValues aggregate(const Eigen::VectorXd& values, const Crosswalk& xwalk,
                      AggregationMethod method, const Eigen::VectorXd* population) {
  const auto ns = static_cast<Eigen::Index>(xwalk.source_ids.size());
  if (values.size() != ns) throw std::invalid_argument("aggregate: values do not match crosswalk sources");
  if (method == AggregationMethod::population_weighted_mean && (!population || population->size() != ns))
    throw std::invalid_argument("aggregate: population weights required for population_weighted_mean");

  const auto nt = static_cast<Eigen::Index>(xwalk.target_ids.size());
  Eigen::VectorXd num = Eigen::VectorXd::Zero(nt);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(nt);
  for (Eigen::Index s = 0; s < ns; ++s) {
    const double x = values[s];
    if (std::isnan(x)) continue;
    double mass = 1.0;
    if (method == AggregationMethod::population_weighted_mean) mass = (*population)[s];
    if (method == AggregationMethod::areal_weighted) mass = xwalk.source_area[s];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(xwalk.weights, s); it; ++it) {
      num[it.col()] += it.value() * mass * x;
      den[it.col()] += it.value() * mass;
    }
  }

  LevelValues out;
  std::vector<double> vals;
  for (Eigen::Index t = 0; t < nt; ++t) {
    if (!(den[t] > 0.0)) continue;
    out.ids.push_back(xwalk.target_ids[static_cast<std::size_t>(t)]);
    vals.push_back(method == AggregationMethod::sum ? num[t] : num[t] / den[t]);
  }
  out.values = Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  return out;
}

Eigen::VectorXd align(const LevelValues& values, std::span<const std::string> ids) {
  std::unordered_map<std::string_view, Eigen::Index> index;
  for (std::size_t i = 0; i < values.ids.size(); ++i) index.emplace(values.ids[i], static_cast<Eigen::Index>(i));
  Eigen::VectorXd out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto it = index.find(ids[i]);
    out[static_cast<Eigen::Index>(i)] = it == index.end() ? std::nan("") : values.values[it->second];
  }
  return out;
}

std::optional<Correlation> correlate_levels(const LevelValues& a, const LevelValues& b) {
  const Eigen::VectorXd bv = align(b, a.ids);
  try {
    return pearson(a.values, bv);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  } catch (const DegenerateField&) {
    return std::nullopt;
  }
}

std::optional<LevelValues> values_at(const ScaleVariable& var, const ScaleLevel& level,
                                     const Eigen::VectorXd* population) {
  if (const auto it = var.native.find(level.name); it != var.native.end()) return it->second;
  if (!var.finest) return std::nullopt;
  return aggregate(*var.finest, level.from_finest, var.method, population);
}

std::vector<ScaleDifference> scale_differences(const MultiScaleRow& row,
                                               std::span<const std::string> levels,
                                               double threshold) {
  std::vector<ScaleDifference> out;
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < row.by_level.size() && i < levels.size(); ++i) {
    if (!row.by_level[i]) continue;
    if (prev) {
      const double ra = row.by_level[*prev]->r;
      const double rb = row.by_level[i]->r;
      ScaleDifference d{row.pair, levels[*prev], levels[i], rb - ra, false};
      d.flag = ra * rb < 0.0 || std::abs(d.delta) > threshold;
      out.push_back(std::move(d));
    }
    prev = i;
  }
  return out;
}

MultiScaleReport build_report(std::vector<std::string> levels, std::vector<MultiScaleRow> rows,
                              double threshold) {
  MultiScaleReport report;
  report.threshold = threshold;
  report.levels = std::move(levels);
  for (MultiScaleRow& row : rows) {
    if (row.by_level.size() != report.levels.size())
      throw std::invalid_argument("build_report: row " + row.pair + " does not cover every level");
    auto diffs = scale_differences(row, report.levels, threshold);
    report.differences.insert(report.differences.end(), diffs.begin(), diffs.end());
  }
  report.rows = std::move(rows);
  return report;
}

MultiScaleReport multi_scale_correlate(std::span<const VariablePair> pairs,
                                       std::span<const ScaleLevel> levels,
                                       const Eigen::VectorXd* population, double threshold) {
  std::vector<std::string> names;
  for (const ScaleLevel& l : levels) names.push_back(l.name);
  std::vector<MultiScaleRow> rows;
  for (const VariablePair& p : pairs) {
    MultiScaleRow row{p.label(), {}};
    for (const ScaleLevel& level : levels) {
      const auto a = values_at(p.a, level, population);
      const auto b = values_at(p.b, level, population);
      row.by_level.push_back(a && b ? correlate_levels(*a, *b) : std::nullopt);
    }
    rows.push_back(std::move(row));
  }
  return build_report(std::move(names), std::move(rows), threshold);
}

SensitivityReport sensitivity_report(const ScaleVariable& variable, const ScaleVariable& reference,
                                     std::span<const ScaleLevel> levels,
                                     const Eigen::VectorXd* population, double threshold) {
  SensitivityReport out;
  out.variable = variable.name;
  out.reference = reference.name;
  MultiScaleRow row{variable.name + " vs " + reference.name, {}};
  std::vector<std::string> names;
  for (const ScaleLevel& level : levels) {
    names.push_back(level.name);
    SensitivityRow s;
    s.level = level.name;
    const auto v = values_at(variable, level, population);
    if (v) {
      double sum = 0.0;
      for (double x : v->values)
        if (!std::isnan(x)) {
          sum += x;
          ++s.support;
        }
      if (s.support > 0) {
        s.mean = sum / static_cast<double>(s.support);
        double ss = 0.0;
        for (double x : v->values)
          if (!std::isnan(x)) ss += (x - s.mean) * (x - s.mean);
        s.variance = ss / static_cast<double>(s.support);
      }
      if (const auto ref = values_at(reference, level, population)) s.r = correlate_levels(*v, *ref);
    }
    row.by_level.push_back(s.r);
    out.rows.push_back(std::move(s));
  }
  for (auto& d : scale_differences(row, names, threshold))
    if (d.flag) out.flags.push_back(std::move(d));
  return out;
}

}  // namespace cdrgeo
