#include "cdrgeo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <tuple>

#include <Eigen/Geometry>

#include "cdrgeo/error.hpp"
#include "cdrgeo/indicators.hpp"

namespace cdrgeo::synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent substream for (seed, stream, a, b).
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t a = 0,
                          std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(seed ^ splitmix64(stream));
  s = splitmix64(s ^ splitmix64(a + 0x1234567ULL));
  s = splitmix64(s ^ splitmix64(b + 0x7654321ULL));
  return std::mt19937_64(s);
}

enum Stream : std::uint64_t { kTowers = 1, kHomes = 2, kEvents = 3, kEdi = 4, kDelineation = 5 };

std::string padded(const char* prefix, std::size_t i, std::size_t width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, static_cast<int>(width), i);
  return buf;
}

std::size_t width_for(std::size_t n, std::size_t min_width) {
  std::size_t w = 1;
  for (std::size_t v = n; v >= 10; v /= 10) ++w;
  return std::max(w, min_width);
}

CellIndex nearest(const Eigen::Matrix2Xd& sites, const Point& p) {
  Eigen::Index best = 0;
  (sites.colwise() - p).colwise().squaredNorm().minCoeff(&best);
  return static_cast<CellIndex>(best);
}

Point uniform_in_disk(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = radius * std::sqrt(u(rng));
  const double th = 2.0 * std::numbers::pi * u(rng);
  return {r * std::cos(th), r * std::sin(th)};
}

Point uniform_in_square(std::mt19937_64& rng, double half) {
  std::uniform_real_distribution<double> u(-half, half);
  const double x = u(rng);
  return {x, u(rng)};
}

/// Rectangle of grid cells [c0, c1) x [r0, r1), traced through every grid
/// node on its boundary so nested units share vertices exactly.
Ring grid_rectangle(const std::vector<double>& xs, const std::vector<double>& ys, std::size_t c0,
                    std::size_t c1, std::size_t r0, std::size_t r1) {
  Ring ring;
  for (std::size_t c = c0; c < c1; ++c) ring.emplace_back(xs[c], ys[r0]);
  for (std::size_t r = r0; r < r1; ++r) ring.emplace_back(xs[c1], ys[r]);
  for (std::size_t c = c1; c > c0; --c) ring.emplace_back(xs[c], ys[r1]);
  for (std::size_t r = r1; r > r0; --r) ring.emplace_back(xs[c0], ys[r]);
  return ring;
}

/// Projected ring after a lon/lat round trip, i.e. what parse_admin yields.
Ring through_geo(const Ring& ring, const LambertAzimuthalEqualArea& proj) {
  Ring out;
  for (const Point& p : ring) out.push_back(proj.forward(proj.inverse(p)));
  return out;
}

}  // namespace

void WorldConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(name) + " must lie in [0,1]");
  };
  prob(p_home_night, "p_home_night");
  prob(p_home_day, "p_home_day");
  prob(p_work_day, "p_work_day");
  prob(urban_home_fraction, "urban_home_fraction");
  if (!(towers_dense > 0.0) || !(towers_sparse > 0.0))
    throw InputError("zero towers in a regime: both towers_dense and towers_sparse must be positive");
  if (users < 1) throw InputError("users must be at least 1");
  if (!(extent_km > 0.0)) throw InputError("extent_km must be positive");
  if (!(dense_radius_km > 0.0) || dense_radius_km >= extent_km * 5.0 / 12.0)
    throw InputError("dense_radius_km must be positive and fit inside the tower area");
  if (!(events_per_day >= 0.0)) throw InputError("events_per_day must be non-negative");
  if (!(work_distance_km >= 0.0)) throw InputError("work_distance_km must be non-negative");
  if (nearby_towers < 1) throw InputError("nearby_towers must be at least 1");
  if (iris_grid < 1 || commune_grid < 1 || iris_grid % commune_grid != 0)
    throw InputError("commune_grid must divide iris_grid");
}

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World world;
  world.config = cfg;
  const LambertAzimuthalEqualArea proj(cfg.origin);
  const double L = cfg.extent_km * 1000.0;
  const double half = L / 2.0;
  // Towers stay inside 5/6 of the region so the padded tessellation box
  // remains within the admin grids.
  const double tower_half = half * 5.0 / 6.0;
  const double radius = cfg.dense_radius_km * 1000.0;
  world.region = Box{{-half, -half}, {half, half}};

  // --- towers
  auto rng = substream(cfg.seed, kTowers);
  const auto n_dense = std::poisson_distribution<std::size_t>(cfg.towers_dense)(rng);
  const auto n_sparse = std::poisson_distribution<std::size_t>(cfg.towers_sparse)(rng);
  if (n_dense == 0 || n_sparse == 0) throw InputError("zero towers realised in a regime");
  std::vector<Point> sites;
  for (std::size_t i = 0; i < n_dense; ++i) sites.push_back(uniform_in_disk(rng, radius));
  while (sites.size() < n_dense + n_sparse) {
    const Point p = uniform_in_square(rng, tower_half);
    if (p.norm() > radius) sites.push_back(p);
  }
  std::vector<Tower> towers;
  const std::size_t cw = width_for(sites.size(), 4);
  for (std::size_t i = 0; i < sites.size(); ++i)
    towers.push_back({padded("c", i, cw), proj.inverse(sites[i]), Eigen::Vector2d::Zero()});
  world.registry = TowerRegistry(std::move(towers), proj);
  const Eigen::Matrix2Xd positions = world.registry.positions();

  // --- admin grids
  const std::size_t g = cfg.iris_grid;
  const std::size_t per = cfg.iris_grid / cfg.commune_grid;
  std::vector<double> grid_x(g + 1), grid_y(g + 1);
  for (std::size_t k = 0; k <= g; ++k) grid_x[k] = grid_y[k] = -half + L * double(k) / double(g);
  const std::size_t iw = width_for(g, 2);
  for (std::size_t r = 0; r < g; ++r)
    for (std::size_t c = 0; c < g; ++c)
      world.admin.push_back({"iris_" + padded("", r, iw) + padded("", c, iw), "iris",
                             Polygon{{through_geo(grid_rectangle(grid_x, grid_y, c, c + 1, r, r + 1), proj)}}});
  const std::size_t mw = width_for(cfg.commune_grid, 2);
  for (std::size_t r = 0; r < cfg.commune_grid; ++r)
    for (std::size_t c = 0; c < cfg.commune_grid; ++c)
      world.admin.push_back(
          {"com_" + padded("", r, mw) + padded("", c, mw), "commune",
           Polygon{{through_geo(grid_rectangle(grid_x, grid_y, c * per, (c + 1) * per, r * per, (r + 1) * per), proj)}}});
  std::sort(world.admin.begin(), world.admin.end(), [](const AdminUnit& a, const AdminUnit& b) {
    return std::tie(a.level, a.unit_id) < std::tie(b.level, b.unit_id);
  });

  // --- users
  auto hrng = substream(cfg.seed, kHomes);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::exponential_distribution<double> commute(cfg.work_distance_km > 0.0 ? 1.0 / (cfg.work_distance_km * 1000.0) : 1.0);
  GroundTruth& truth = world.truth;
  const std::size_t uw = width_for(cfg.users, 6);
  std::vector<std::size_t> iris_count(g * g, 0);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const Point home = u01(hrng) < cfg.urban_home_fraction ? uniform_in_disk(hrng, radius)
                                                           : uniform_in_square(hrng, tower_half);
    const double dist = cfg.work_distance_km > 0.0 ? commute(hrng) : 0.0;
    const double th = 2.0 * std::numbers::pi * u01(hrng);
    const Point work = (home + dist * Point(std::cos(th), std::sin(th))).cwiseMax(-tower_half).cwiseMin(tower_half);
    truth.user_ids.push_back(padded("u", u, uw));
    truth.home_point.push_back(home);
    truth.home_cell.push_back(nearest(positions, home));
    truth.work_cell.push_back(nearest(positions, work));
    const auto gx = std::min<std::size_t>(g - 1, static_cast<std::size_t>((home.x() + half) / L * double(g)));
    const auto gy = std::min<std::size_t>(g - 1, static_cast<std::size_t>((home.y() + half) / L * double(g)));
    ++iris_count[gy * g + gx];
  }

  // --- census tables
  std::vector<CensusRow> cell_rows;
  std::vector<double> per_cell(world.registry.size(), 0.0);
  for (CellIndex c : truth.home_cell) per_cell[c] += 1.0;
  for (CellIndex c = 0; c < world.registry.size(); ++c) cell_rows.push_back({world.registry.id(c), per_cell[c], {}});
  world.census_cell = CensusTable({}, std::move(cell_rows));

  // Deprivation index: rises away from the urban core, plus noise.
  auto erng = substream(cfg.seed, kEdi);
  std::normal_distribution<double> noise(0.0, 0.1);
  auto edi_at = [&](const Point& centre) {
    return 0.5 + 0.3 * std::tanh((centre.norm() - radius) / radius) + noise(erng);
  };
  std::vector<CensusRow> iris_rows, commune_rows;
  for (std::size_t r = 0; r < g; ++r)
    for (std::size_t c = 0; c < g; ++c) {
      const Point centre{0.5 * (grid_x[c] + grid_x[c + 1]), 0.5 * (grid_y[r] + grid_y[r + 1])};
      iris_rows.push_back({"iris_" + padded("", r, iw) + padded("", c, iw),
                           double(iris_count[r * g + c]), {edi_at(centre)}});
    }
  for (std::size_t r = 0; r < cfg.commune_grid; ++r)
    for (std::size_t c = 0; c < cfg.commune_grid; ++c) {
      double pop = 0.0;
      for (std::size_t rr = r * per; rr < (r + 1) * per; ++rr)
        for (std::size_t cc = c * per; cc < (c + 1) * per; ++cc) pop += double(iris_count[rr * g + cc]);
      const Point centre{0.5 * (grid_x[c * per] + grid_x[(c + 1) * per]),
                         0.5 * (grid_y[r * per] + grid_y[(r + 1) * per])};
      commune_rows.push_back({"com_" + padded("", r, mw) + padded("", c, mw), pop, {edi_at(centre)}});
    }
  world.census_iris = CensusTable({"EDI"}, std::move(iris_rows));
  world.census_commune = CensusTable({"EDI"}, std::move(commune_rows));

  // --- study configuration matching the generated stream
  StudyConfig& study = world.study;
  study.window_start = cfg.start;
  study.window_end = cfg.start + static_cast<Timestamp>(cfg.days) * kSecondsPerDay;
  study.utc_offset_seconds = cfg.utc_offset_seconds;
  study.projection_origin = cfg.origin;
  return world;
}

void generate_cdr(const World& world, const std::function<void(const CdrRecord&)>& sink) {
  const WorldConfig& cfg = world.config;
  const std::size_t n_users = world.truth.user_ids.size();
  const Eigen::Matrix2Xd positions = world.registry.positions();
  const auto n_towers = static_cast<std::size_t>(positions.cols());

  // nearest other towers of each tower, for off-home night events
  const std::size_t k = std::min(cfg.nearby_towers, n_towers > 1 ? n_towers - 1 : std::size_t{1});
  std::vector<std::vector<CellIndex>> nearby(n_towers);
  for (std::size_t i = 0; i < n_towers; ++i) {
    const Eigen::VectorXd d2 = (positions.colwise() - positions.col(Eigen::Index(i))).colwise().squaredNorm();
    std::vector<CellIndex> order(n_towers);
    std::iota(order.begin(), order.end(), CellIndex{0});
    std::partial_sort(order.begin(), order.begin() + std::ptrdiff_t(std::min(n_towers, k + 1)), order.end(),
                      [&](CellIndex a, CellIndex b) { return std::tie(d2[a], a) < std::tie(d2[b], b); });
    for (std::size_t j = 0; j < n_towers && nearby[i].size() < k; ++j)
      if (order[j] != i || n_towers == 1) nearby[i].push_back(order[j]);
  }

  // towers along the commute, for transit events
  std::vector<std::array<CellIndex, 3>> transit(n_users);
  for (std::size_t u = 0; u < n_users; ++u) {
    const Point a = positions.col(world.truth.home_cell[u]);
    const Point b = positions.col(world.truth.work_cell[u]);
    for (std::size_t s = 0; s < 3; ++s)
      transit[u][s] = nearest(positions, a + (b - a) * (double(s) + 1.0) / 4.0);
  }

  std::vector<CdrRecord> day_block;
  for (std::size_t d = 0; d < cfg.days; ++d) {
    day_block.clear();
    const Timestamp day_start = cfg.start + static_cast<Timestamp>(d) * kSecondsPerDay;
    for (std::size_t u = 0; u < n_users; ++u) {
      auto rng = substream(cfg.seed, kEvents, u, d);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      std::uniform_int_distribution<Timestamp> second(1, kSecondsPerDay - 1);
      const auto n = std::poisson_distribution<std::size_t>(cfg.events_per_day)(rng);
      const CellIndex home = world.truth.home_cell[u];
      for (std::size_t e = 0; e < n; ++e) {
        const Timestamp t = day_start + second(rng);
        const bool night = world.study.night_broad.contains(local_hour(t, cfg.utc_offset_seconds));
        const double roll = u01(rng);
        CellIndex cell = home;
        if (night) {
          if (roll >= cfg.p_home_night) cell = nearby[home][std::size_t(u01(rng) * double(nearby[home].size()))];
        } else if (roll >= cfg.p_home_day) {
          const double pick = u01(rng);
          if (pick < cfg.p_work_day) cell = world.truth.work_cell[u];
          else cell = transit[u][std::min<std::size_t>(2, std::size_t(u01(rng) * 3.0))];
        }
        day_block.push_back({static_cast<UserIndex>(u), t, cell});
      }
    }
    std::sort(day_block.begin(), day_block.end(), [](const CdrRecord& a, const CdrRecord& b) {
      return std::tie(a.time, a.user, a.cell) < std::tie(b.time, b.user, b.cell);
    });
    for (const CdrRecord& r : day_block) sink(r);
  }
}

std::vector<CdrRecord> generate_cdr(const World& world) {
  std::vector<CdrRecord> out;
  generate_cdr(world, [&out](const CdrRecord& r) { out.push_back(r); });
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Point> reference_path(std::size_t n_points) {
  const Point home{0.0, 0.0};
  const Point work{4.0, 1.5};
  const std::size_t at_home = n_points / 2;
  const std::size_t at_work = n_points * 3 / 10;
  const std::size_t moving = n_points - at_home - at_work;
  std::vector<Point> out;
  out.reserve(n_points);
  for (std::size_t i = 0; i < at_home; ++i) out.push_back(home);
  for (std::size_t i = 0; i < at_work; ++i) out.push_back(work);
  for (std::size_t i = 0; i < moving; ++i)
    out.push_back(home + (work - home) * (double(i) + 1.0) / (double(moving) + 1.0));
  return out;
}

std::vector<std::int64_t> snap_to_lattice(const std::vector<Point>& points, double spacing_km,
                                          const Point& offset) {
  std::vector<std::int64_t> keys;
  keys.reserve(points.size());
  for (const Point& p : points) {
    const auto ix = static_cast<std::int64_t>(std::llround((p.x() - offset.x()) / spacing_km));
    const auto iy = static_cast<std::int64_t>(std::llround((p.y() - offset.y()) / spacing_km));
    keys.push_back((ix << 32) ^ (iy & 0xffffffffLL));
  }
  return keys;
}

double lattice_entropy(const std::vector<Point>& points, double spacing_km, const Point& offset) {
  std::map<std::int64_t, std::size_t> counts;
  for (std::int64_t key : snap_to_lattice(points, spacing_km, offset)) ++counts[key];
  Eigen::VectorXd p(static_cast<Eigen::Index>(counts.size()));
  Eigen::Index i = 0;
  for (const auto& [key, c] : counts) p[i++] = double(c) / double(points.size());
  return entropy_bits(p);
}

std::vector<DelineationUser> generate_delineation_users(const DelineationConfig& cfg) {
  if (cfg.density_multipliers.empty()) throw InputError("need at least one density regime");
  const std::vector<Point> path = reference_path(cfg.path_points);
  auto rng = substream(cfg.seed, kDelineation);
  std::uniform_int_distribution<std::size_t> regime(0, cfg.density_multipliers.size() - 1);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<DelineationUser> out;
  out.reserve(cfg.users);
  std::vector<Point> moved(path.size());
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const double mult = cfg.density_multipliers[regime(rng)];
    const double spacing = cfg.base_spacing_km / std::sqrt(mult);
    const double th = 2.0 * std::numbers::pi * u01(rng);
    const Point offset{u01(rng) * spacing, u01(rng) * spacing};
    const Eigen::Matrix2d rot = Eigen::Rotation2Dd(th).toRotationMatrix();
    for (std::size_t i = 0; i < path.size(); ++i) moved[i] = rot * path[i];
    // a regular lattice tessellates into squares of side `spacing`
    out.push_back({lattice_entropy(moved, spacing, offset), 1.0 / (spacing * spacing)});
  }
  return out;
}

}  // namespace cdrgeo::synth
