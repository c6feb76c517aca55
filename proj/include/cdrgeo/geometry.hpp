#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cdrgeo/ingest.hpp"
#include "cdrgeo/polygon.hpp"

namespace cdrgeo {

inline constexpr double kDefaultBboxPadding = 0.1;

/// A Voronoi cell. `edge_neighbor[k]` labels the edge from ring[k] to
/// ring[k+1]: the index of the site whose bisector produced it, or -1 for the
/// bounding box.
struct VoronoiCell {
  Ring ring;
  std::vector<std::ptrdiff_t> edge_neighbor;
};

class Tessellation {
 public:
  Tessellation() = default;
  Tessellation(std::vector<std::string> ids, Eigen::Matrix2Xd sites,
               std::vector<VoronoiCell> cells, Box bbox, double padding,
               std::vector<std::string> perturbed);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::Matrix2Xd& sites() const { return sites_; }
  const VoronoiCell& cell(std::size_t i) const { return cells_[i]; }
  std::span<const VoronoiCell> cells() const { return cells_; }
  const Box& bbox() const { return bbox_; }
  double padding() const { return padding_; }
  /// Ids whose site was nudged off a coincident site.
  const std::vector<std::string>& perturbed() const { return perturbed_; }

  double cell_area(std::size_t i) const;  // m²
  Polygon cell_polygon(std::size_t i) const { return Polygon{{cells_[i].ring}}; }

  /// Index of the cell containing `p` (linear scan; for probes and tests).
  std::optional<std::size_t> locate(const Point& p) const;

 private:
  std::vector<std::string> ids_;
  Eigen::Matrix2Xd sites_;
  std::vector<VoronoiCell> cells_;
  Box bbox_;
  double padding_ = kDefaultBboxPadding;
  std::vector<std::string> perturbed_;
};

/// Voronoi diagram of `sites` clipped to their bounding box padded by
/// `padding` times its extent on every side. Coincident sites are separated
/// by a deterministic 1 cm offset seeded from the id.
Tessellation build_voronoi(std::vector<std::string> ids, Eigen::Matrix2Xd sites,
                           double padding = kDefaultBboxPadding);
Tessellation build_voronoi(const TowerRegistry& registry,
                           double padding = kDefaultBboxPadding);

/// Binary contiguity weights: w_ij = 1 iff cells i and j share a boundary of
/// positive length. Diagonal is 1 when `include_self`.
struct AdjacencyWeights {
  Eigen::SparseMatrix<double> w;
  bool include_self = true;

  Eigen::Index size() const { return w.rows(); }
};

AdjacencyWeights build_adjacency(const Tessellation& tess, bool include_self);

/// Towers per km², d = 1 / cell area in km², aligned with tess.ids().
struct DensityMap {
  std::vector<std::string> ids;
  Eigen::VectorXd density;
};

DensityMap tower_density(const Tessellation& tess);

// ---------------------------------------------------------------------------
// Crosswalks

struct NamedPolygon {
  std::string id;
  Polygon polygon;
};

std::vector<NamedPolygon> named_polygons(const Tessellation& tess);
std::vector<NamedPolygon> named_polygons(std::span<const AdminUnit> units);

/// Area-overlap weights, rows = source units, columns = target units:
/// weight(s, t) = area(s ∩ t) / area(s).
struct Crosswalk {
  std::string source_level;
  std::string target_level;
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  Eigen::SparseMatrix<double, Eigen::RowMajor> weights;
  Eigen::VectorXd source_area;  // m²
  /// Covered fraction of each source row before normalisation.
  Eigen::VectorXd coverage;

  static constexpr double kCoverageTolerance = 1e-9;

  bool partial(Eigen::Index row) const {
    return coverage[row] < 1.0 - kCoverageTolerance;
  }
  bool full_coverage() const;
  std::optional<Eigen::Index> source_index(std::string_view id) const;
  std::optional<Eigen::Index> target_index(std::string_view id) const;
};

/// Rows whose coverage is within kCoverageTolerance of 1 are rescaled to sum
/// to exactly 1; the others keep their raw weights and are reported partial.
Crosswalk build_crosswalk(std::span<const NamedPolygon> source,
                          std::span<const NamedPolygon> target,
                          std::string source_level, std::string target_level);

/// Identity crosswalk over the given ids.
Crosswalk identity_crosswalk(std::vector<std::string> ids, std::string level,
                             Eigen::VectorXd area = {});

/// a: X -> Y, b: Y -> Z gives X -> Z with weights a * b.
Crosswalk compose(const Crosswalk& a, const Crosswalk& b);

}  // namespace cdrgeo
