#include "cdrgeo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include "cdrgeo/error.hpp"

namespace cdrgeo {
namespace {

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr double kPerturbation = 0.01;  // meters

std::vector<std::string> separate_coincident(const std::vector<std::string>& ids,
                                             Eigen::Matrix2Xd& sites) {
  std::vector<std::string> moved;
  const auto n = sites.cols();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto by_position = [&](Eigen::Index a, Eigen::Index b) {
    return std::tie(sites(0, a), sites(1, a), ids[a]) < std::tie(sites(0, b), sites(1, b), ids[b]);
  };
  // Repeat until no two sites coincide; a nudge could land on a third site.
  for (int pass = 0; pass < 8; ++pass) {
    std::sort(order.begin(), order.end(), by_position);
    bool changed = false;
    for (std::size_t k = 1; k < order.size(); ++k) {
      const Eigen::Index prev = order[k - 1];
      const Eigen::Index cur = order[k];
      if (sites.col(prev) != sites.col(cur)) continue;
      const std::uint64_t h = stable_hash(ids[cur]) + static_cast<std::uint64_t>(pass);
      const double angle = static_cast<double>(h % 360000) / 360000.0 * 2.0 * std::numbers::pi;
      sites(0, cur) += kPerturbation * std::cos(angle);
      sites(1, cur) += kPerturbation * std::sin(angle);
      moved.push_back(ids[cur]);
      changed = true;
    }
    if (!changed) break;
  }
  std::sort(moved.begin(), moved.end());
  moved.erase(std::unique(moved.begin(), moved.end()), moved.end());
  return moved;
}

Box padded_bbox(const Eigen::Matrix2Xd& sites, double padding) {
  Box b{sites.rowwise().minCoeff(), sites.rowwise().maxCoeff()};
  double px = padding * b.width();
  double py = padding * b.height();
  // Degenerate extents (one tower, collinear towers) borrow the other axis,
  // or fall back to 1 km.
  const double fallback = std::max(px, py) > 0.0 ? std::max(px, py) : 1000.0;
  if (!(px > 0.0)) px = fallback;
  if (!(py > 0.0)) py = fallback;
  b.lo -= Point(px, py);
  b.hi += Point(px, py);
  return b;
}

/// Keeps the side of the bisector of (site, other) that holds `site`.
void clip_by_bisector(VoronoiCell& cell, const Point& site, const Point& other,
                      std::ptrdiff_t label, double eps) {
  const Point normal = other - site;
  const double offset = normal.dot(0.5 * (site + other));
  const std::size_t n = cell.ring.size();
  std::vector<double> s(n);
  bool any_out = false;
  for (std::size_t k = 0; k < n; ++k) {
    s[k] = normal.dot(cell.ring[k]) - offset;
    any_out = any_out || s[k] > 0.0;
  }
  if (!any_out) return;

  VoronoiCell out;
  out.ring.reserve(n + 1);
  out.edge_neighbor.reserve(n + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t q = (k + 1) % n;
    const Point& P = cell.ring[k];
    const Point& Q = cell.ring[q];
    const std::ptrdiff_t L = cell.edge_neighbor[k];
    const bool p_in = s[k] <= 0.0;
    const bool q_in = s[q] <= 0.0;
    if (p_in) {
      out.ring.push_back(P);
      out.edge_neighbor.push_back(L);
    }
    if (p_in != q_in) {
      const double t = s[k] / (s[k] - s[q]);
      out.ring.push_back(P + t * (Q - P));
      out.edge_neighbor.push_back(p_in ? label : L);
    }
  }

  // Drop vertices whose outgoing edge has (near) zero length.
  VoronoiCell clean;
  const std::size_t m = out.ring.size();
  for (std::size_t k = 0; k < m; ++k) {
    if ((out.ring[k] - out.ring[(k + 1) % m]).norm() <= eps && m > 1) continue;
    clean.ring.push_back(out.ring[k]);
    clean.edge_neighbor.push_back(out.edge_neighbor[k]);
  }
  cell = std::move(clean);
}

class SiteGrid {
 public:
  SiteGrid(const Eigen::Matrix2Xd& sites, const Box& box) : box_(box) {
    const double n = std::max<double>(1.0, static_cast<double>(sites.cols()));
    cell_ = std::sqrt(box.area() / n);
    nx_ = std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(std::ceil(box.width() / cell_)));
    ny_ = std::max<std::ptrdiff_t>(1, static_cast<std::ptrdiff_t>(std::ceil(box.height() / cell_)));
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (Eigen::Index i = 0; i < sites.cols(); ++i) {
      const auto [gx, gy] = coords(sites.col(i));
      buckets_[static_cast<std::size_t>(gy * nx_ + gx)].push_back(i);
    }
  }

  std::pair<std::ptrdiff_t, std::ptrdiff_t> coords(const Point& p) const {
    auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t hi) { return std::clamp<std::ptrdiff_t>(v, 0, hi - 1); };
    return {clampi(static_cast<std::ptrdiff_t>((p.x() - box_.lo.x()) / cell_), nx_),
            clampi(static_cast<std::ptrdiff_t>((p.y() - box_.lo.y()) / cell_), ny_)};
  }

  /// Visits the sites in grid cells at Chebyshev distance exactly `r`.
  template <typename F>
  bool ring(std::ptrdiff_t cx, std::ptrdiff_t cy, std::ptrdiff_t r, F&& f) const {
    bool any_cell = false;
    for (std::ptrdiff_t gy = cy - r; gy <= cy + r; ++gy) {
      if (gy < 0 || gy >= ny_) continue;
      const bool edge_row = gy == cy - r || gy == cy + r;
      for (std::ptrdiff_t gx = cx - r; gx <= cx + r; gx += (edge_row || r == 0) ? 1 : 2 * r) {
        if (gx < 0 || gx >= nx_) continue;
        any_cell = true;
        for (Eigen::Index j : buckets_[static_cast<std::size_t>(gy * nx_ + gx)]) f(j);
      }
    }
    return any_cell;
  }

  double cell_size() const { return cell_; }

 private:
  Box box_;
  double cell_ = 1.0;
  std::ptrdiff_t nx_ = 1, ny_ = 1;
  std::vector<std::vector<Eigen::Index>> buckets_;
};

}  // namespace

Tessellation::Tessellation(std::vector<std::string> ids, Eigen::Matrix2Xd sites,
                           std::vector<VoronoiCell> cells, Box bbox, double padding,
                           std::vector<std::string> perturbed)
    : ids_(std::move(ids)),
      sites_(std::move(sites)),
      cells_(std::move(cells)),
      bbox_(bbox),
      padding_(padding),
      perturbed_(std::move(perturbed)) {}

double Tessellation::cell_area(std::size_t i) const { return signed_area(cells_[i].ring); }

std::optional<std::size_t> Tessellation::locate(const Point& p) const {
  for (std::size_t i = 0; i < cells_.size(); ++i)
    if (contains(Polygon{{cells_[i].ring}}, p)) return i;
  return std::nullopt;
}

Tessellation build_voronoi(std::vector<std::string> ids, Eigen::Matrix2Xd sites, double padding) {
  if (sites.cols() == 0) throw InputError("cannot tessellate zero towers");
  if (static_cast<Eigen::Index>(ids.size()) != sites.cols())
    throw std::invalid_argument("build_voronoi: ids and sites differ in length");
  if (!sites.allFinite()) throw InputError("tower positions must be finite");

  auto perturbed = separate_coincident(ids, sites);
  const Box box = padded_bbox(sites, padding);
  const double eps = 1e-12 * (box.hi - box.lo).norm();
  const SiteGrid grid(sites, box);
  const Ring frame = box.ring();

  std::vector<VoronoiCell> cells(static_cast<std::size_t>(sites.cols()));
  for (Eigen::Index i = 0; i < sites.cols(); ++i) {
    const Point site = sites.col(i);
    VoronoiCell cell{frame, std::vector<std::ptrdiff_t>(frame.size(), -1)};
    const auto [cx, cy] = grid.coords(site);
    for (std::ptrdiff_t r = 0;; ++r) {
      const bool inside_grid = grid.ring(cx, cy, r, [&](Eigen::Index j) {
        if (j != i) clip_by_bisector(cell, site, sites.col(j), j, eps);
      });
      double reach = 0.0;
      for (const Point& v : cell.ring) reach = std::max(reach, (v - site).norm());
      // Every site not yet visited is at least r grid cells away.
      if (!inside_grid || static_cast<double>(r) * grid.cell_size() >= 2.0 * reach) break;
    }
    if (cell.ring.size() < 3) throw InvariantError("empty Voronoi cell for " + ids[i]);
    cells[static_cast<std::size_t>(i)] = std::move(cell);
  }
  return Tessellation(std::move(ids), std::move(sites), std::move(cells), box, padding,
                      std::move(perturbed));
}

Tessellation build_voronoi(const TowerRegistry& registry, double padding) {
  return build_voronoi(registry.ids(), registry.positions(), padding);
}

AdjacencyWeights build_adjacency(const Tessellation& tess, bool include_self) {
  const auto n = static_cast<Eigen::Index>(tess.size());
  // Shared boundaries shorter than this are point contacts.
  const double min_length = 1e-7 * (tess.bbox().hi - tess.bbox().lo).norm();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const VoronoiCell& c = tess.cell(i);
    const std::size_t m = c.ring.size();
    for (std::size_t k = 0; k < m; ++k) {
      const std::ptrdiff_t j = c.edge_neighbor[k];
      if (j < 0) continue;
      if ((c.ring[(k + 1) % m] - c.ring[k]).norm() <= min_length) continue;
      trip.emplace_back(static_cast<Eigen::Index>(i), j, 1.0);
      trip.emplace_back(j, static_cast<Eigen::Index>(i), 1.0);
    }
    if (include_self) trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), 1.0);
  }
  AdjacencyWeights out;
  out.include_self = include_self;
  out.w.resize(n, n);
  // duplicates collapse to 1 instead of summing
  out.w.setFromTriplets(trip.begin(), trip.end(), [](double, double) { return 1.0; });
  out.w.makeCompressed();
  return out;
}

DensityMap tower_density(const Tessellation& tess) {
  DensityMap out;
  out.ids = tess.ids();
  out.density.resize(static_cast<Eigen::Index>(tess.size()));
  for (std::size_t i = 0; i < tess.size(); ++i) {
    const double km2 = tess.cell_area(i) / 1e6;
    if (!(km2 > 0.0) || !std::isfinite(km2))
      throw InvariantError("non-positive cell area for " + tess.ids()[i]);
    out.density[static_cast<Eigen::Index>(i)] = 1.0 / km2;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<NamedPolygon> named_polygons(const Tessellation& tess) {
  std::vector<NamedPolygon> out;
  out.reserve(tess.size());
  for (std::size_t i = 0; i < tess.size(); ++i) out.push_back({tess.ids()[i], tess.cell_polygon(i)});
  return out;
}

std::vector<NamedPolygon> named_polygons(std::span<const AdminUnit> units) {
  std::vector<NamedPolygon> out;
  out.reserve(units.size());
  for (const AdminUnit& u : units) out.push_back({u.unit_id, u.polygon});
  return out;
}

bool Crosswalk::full_coverage() const {
  for (Eigen::Index r = 0; r < coverage.size(); ++r)
    if (partial(r)) return false;
  return true;
}

namespace {

std::optional<Eigen::Index> find_id(const std::vector<std::string>& ids, std::string_view id) {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<Eigen::Index>(it - ids.begin());
}

void check_polygon(const NamedPolygon& p) {
  if (p.polygon.rings.empty()) throw InputError("invalid polygon for unit " + p.id);
  for (const Ring& r : p.polygon.rings)
    if (r.size() < 3) throw InputError("invalid polygon for unit " + p.id);
  if (!(area(p.polygon) > 0.0)) throw InputError("invalid polygon (zero area) for unit " + p.id);
}

}  // namespace

std::optional<Eigen::Index> Crosswalk::source_index(std::string_view id) const {
  return find_id(source_ids, id);
}

std::optional<Eigen::Index> Crosswalk::target_index(std::string_view id) const {
  return find_id(target_ids, id);
}

Crosswalk build_crosswalk(std::span<const NamedPolygon> source, std::span<const NamedPolygon> target,
                          std::string source_level, std::string target_level) {
  for (const auto& p : source) check_polygon(p);
  for (const auto& p : target) check_polygon(p);

  Crosswalk out;
  out.source_level = std::move(source_level);
  out.target_level = std::move(target_level);
  const auto ns = static_cast<Eigen::Index>(source.size());
  const auto nt = static_cast<Eigen::Index>(target.size());
  out.source_area.resize(ns);
  out.coverage.resize(ns);
  std::vector<Box> tboxes;
  tboxes.reserve(target.size());
  for (const auto& t : target) {
    out.target_ids.push_back(t.id);
    tboxes.push_back(bounds(t.polygon));
  }

  std::vector<Eigen::Triplet<double>> trip;
  std::vector<std::pair<Eigen::Index, double>> row;
  for (Eigen::Index s = 0; s < ns; ++s) {
    const NamedPolygon& sp = source[static_cast<std::size_t>(s)];
    out.source_ids.push_back(sp.id);
    const double a = area(sp.polygon);
    out.source_area[s] = a;
    const Box sbox = bounds(sp.polygon);
    row.clear();
    double covered = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
      if (!sbox.overlaps(tboxes[static_cast<std::size_t>(t)])) continue;
      const double overlap = intersection_area(sp.polygon, target[static_cast<std::size_t>(t)].polygon);
      // slivers at round-off level are shared edges, not overlap
      if (overlap <= 1e-12 * a) continue;
      row.emplace_back(t, overlap / a);
      covered += overlap / a;
    }
    out.coverage[s] = covered;
    const double scale = std::abs(covered - 1.0) <= Crosswalk::kCoverageTolerance ? covered : 1.0;
    for (const auto& [t, w] : row) trip.emplace_back(s, t, w / scale);
  }
  out.weights.resize(ns, nt);
  out.weights.setFromTriplets(trip.begin(), trip.end());
  out.weights.makeCompressed();
  return out;
}

Crosswalk identity_crosswalk(std::vector<std::string> ids, std::string level, Eigen::VectorXd area) {
  Crosswalk out;
  out.source_level = level;
  out.target_level = std::move(level);
  const auto n = static_cast<Eigen::Index>(ids.size());
  out.source_ids = ids;
  out.target_ids = std::move(ids);
  out.weights.resize(n, n);
  out.weights.setIdentity();
  out.source_area = area.size() == n ? std::move(area) : Eigen::VectorXd::Ones(n);
  out.coverage = Eigen::VectorXd::Ones(n);
  return out;
}

Crosswalk compose(const Crosswalk& a, const Crosswalk& b) {
  std::unordered_map<std::string, Eigen::Index> bsrc;
  for (std::size_t i = 0; i < b.source_ids.size(); ++i)
    bsrc.emplace(b.source_ids[i], static_cast<Eigen::Index>(i));
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < a.target_ids.size(); ++i) {
    const auto it = bsrc.find(a.target_ids[i]);
    if (it != bsrc.end()) trip.emplace_back(static_cast<Eigen::Index>(i), it->second, 1.0);
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> link(static_cast<Eigen::Index>(a.target_ids.size()),
                                                    static_cast<Eigen::Index>(b.source_ids.size()));
  link.setFromTriplets(trip.begin(), trip.end());

  Crosswalk out;
  out.source_level = a.source_level;
  out.target_level = b.target_level;
  out.source_ids = a.source_ids;
  out.target_ids = b.target_ids;
  const Eigen::SparseMatrix<double, Eigen::RowMajor> linked = a.weights * link;
  out.weights = linked * b.weights;
  out.weights.prune(0.0);
  out.source_area = a.source_area;
  out.coverage = out.weights * Eigen::VectorXd::Ones(out.weights.cols());
  // carry forward partial coverage recorded before normalisation
  for (Eigen::Index r = 0; r < out.coverage.size(); ++r)
    out.coverage[r] = std::min(out.coverage[r], a.coverage[r]);
  return out;
}

}  // namespace cdrgeo
