#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cdrgeo/indicators.hpp"
#include "cdrgeo/spatial_stats.hpp"

using namespace cdrgeo;

namespace {

std::vector<CdrRecord> visits(std::initializer_list<std::pair<CellIndex, int>> counts) {
  std::vector<CdrRecord> ev;
  Timestamp t = 1180656000;
  for (auto [cell, n] : counts)
    for (int i = 0; i < n; ++i) ev.push_back({0, t += 60, cell});
  return ev;
}

double entropy_of(std::initializer_list<std::pair<CellIndex, int>> counts) {
  return mobility_entropy(visit_distribution(visits(counts)));
}

HomeAssignment homed(UserIndex u, std::optional<CellIndex> cell) {
  HomeAssignment a;
  a.user = u;
  a.home = cell;
  a.qualifies = true;
  return a;
}

}  // namespace

TEST_CASE("visit distribution") {
  const auto one = visit_distribution(visits({{0, 4}}));
  REQUIRE(one.probs.size() == 1);
  CHECK(one.probs[0].second == 1.0);
  CHECK(one.n_events == 4);

  const auto two = visit_distribution(visits({{0, 2}, {1, 2}}));
  CHECK(two.probs[0].second == 0.5);
  CHECK(two.probs[1].second == 0.5);

  const auto three = visit_distribution(visits({{0, 2}, {1, 1}, {2, 1}}));
  CHECK(three.probs[0].second == 0.5);
  CHECK(three.probs[1].second == 0.25);
  CHECK(three.probs[2].second == 0.25);

  CHECK_THROWS_AS(visit_distribution(std::span<const CdrRecord>{}), std::invalid_argument);

  // the streaming accumulator gives the same distribution
  UserActivity act;
  for (const auto& r : visits({{2, 1}, {0, 2}, {1, 1}})) act.add(r.time, r.cell, StudyConfig{});
  const auto streamed = visit_distribution(act, 0);
  REQUIRE(streamed.probs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(streamed.probs[i] == three.probs[i]);
}

TEST_CASE("mobility entropy") {
  CHECK(entropy_of({{0, 4}}) == 0.0);
  CHECK(entropy_of({{0, 1}, {1, 1}, {2, 1}, {3, 1}}) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(entropy_of({{0, 2}, {1, 1}, {2, 1}}) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("entropy bounds and label invariance") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 20);
    std::vector<CdrRecord> ev;
    std::vector<CellIndex> labels(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      labels[static_cast<std::size_t>(c)] = static_cast<CellIndex>(c);
      const int n = 1 + static_cast<int>(rng() % 30);
      for (int i = 0; i < n; ++i) ev.push_back({0, 1180656000 + i, static_cast<CellIndex>(c)});
    }
    const auto dist = visit_distribution(ev);
    double total = 0.0;
    for (auto& [c, p] : dist.probs) {
      CHECK(p > 0.0);
      total += p;
    }
    CHECK(std::abs(total - 1.0) < 1e-9);
    const double h = mobility_entropy(dist);
    CHECK(h >= 0.0);
    CHECK(h <= std::log2(double(k)) + 1e-12);

    std::shuffle(labels.begin(), labels.end(), rng);
    auto relabelled = ev;
    for (auto& r : relabelled) r.cell = labels[r.cell] + 100;
    CHECK(mobility_entropy(visit_distribution(relabelled)) == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("calibration: single bin and two bins") {
  {
    std::vector<double> h, d;
    for (int i = 0; i < 60; ++i) {
      h.push_back(0.5 + 0.01 * i);
      d.push_back(3.0);
    }
    const auto t = calibrate_baseline(h, d);
    REQUIRE(t.bins() == 1);
    double mean = 0.0;
    for (double v : h) mean += v;
    CHECK(t.mean[0] == doctest::Approx(mean / 60.0));
    CHECK(t.count[0] == 60);
  }
  {
    std::vector<double> h, d;
    for (int i = 0; i < 100; ++i) {
      h.push_back(i < 50 ? 1.0 : 3.0);
      d.push_back(i < 50 ? 1.0 : 10.0);
    }
    const auto t = calibrate_baseline(h, d);
    REQUIRE(t.bins() == 2);
    CHECK(t.mean[0] == 1.0);
    CHECK(t.mean[1] == 3.0);
    CHECK(t.count == std::vector<std::size_t>{50, 50});
  }
  CHECK_THROWS_AS(calibrate_baseline(std::vector<double>(10, 1.0), std::vector<double>(10, 1.0)),
                  std::invalid_argument);
}

TEST_CASE("calibration: bins partition the range and respect the minimum") {
  std::mt19937_64 rng(2);
  std::lognormal_distribution<double> dens(0.0, 1.5);
  std::vector<double> h, d;
  for (int i = 0; i < 1237; ++i) {
    d.push_back(dens(rng));
    h.push_back(1.0 + 0.1 * std::log10(d.back()));
  }
  const auto t = calibrate_baseline(h, d);
  CHECK(t.edges.front() == doctest::Approx(std::log10(*std::min_element(d.begin(), d.end()))));
  CHECK(t.edges.back() == doctest::Approx(std::log10(*std::max_element(d.begin(), d.end()))));
  CHECK(std::is_sorted(t.edges.begin(), t.edges.end()));
  std::size_t total = 0;
  for (std::size_t c : t.count) {
    CHECK(c >= kDefaultCalibrationMinUsers);
    total += c;
  }
  CHECK(total == h.size());
  CHECK(t.bins() == 10);

  // a skewed population: most users on one density value
  std::vector<double> h2, d2;
  for (int i = 0; i < 300; ++i) {
    d2.push_back(i < 270 ? 50.0 : 1.0 + i);
    h2.push_back(1.0);
  }
  const auto t2 = calibrate_baseline(h2, d2);
  for (std::size_t c : t2.count) CHECK(c >= kDefaultCalibrationMinUsers);
}

TEST_CASE("calibration: bin means follow a linear trend (least-squares oracle)") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> logd(-1.0, 3.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::vector<double> h, d, x;
  for (int i = 0; i < 5000; ++i) {
    x.push_back(logd(rng));
    d.push_back(std::pow(10.0, x.back()));
    h.push_back(0.7 + 0.4 * x.back() + noise(rng));
  }
  // oracle: ordinary least squares on the raw points
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += h[i];
  }
  mx /= double(x.size());
  my /= double(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (h[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx, icept = my - slope * mx;

  const auto t = calibrate_baseline(h, d);
  for (std::size_t b = 0; b < t.bins(); ++b) {
    const double lo = t.edges[b], hi = t.edges[b + 1];
    const double line = icept + slope * 0.5 * (lo + hi);
    CHECK(std::abs(t.mean[static_cast<Eigen::Index>(b)] - line) <= 2.0 * std::abs(slope) * (hi - lo));
  }
}

TEST_CASE("corrected entropy") {
  std::vector<double> h(60, 1.2), d(60, 2.0);
  const auto single = calibrate_baseline(h, d);
  CHECK(corrected_mobility_entropy(1.5, 2.0, single).value == doctest::Approx(0.3));
  CHECK(corrected_mobility_entropy(single.mean[0], 2.0, single).value == 0.0);
  const auto out = corrected_mobility_entropy(1.2, 500.0, single);
  CHECK(out.clamped);
  CHECK(out.value == doctest::Approx(0.0).scale(1.0));
  CHECK_THROWS_AS(corrected_mobility_entropy(1.0, 1.0, CalibrationTable{}), std::invalid_argument);
}

TEST_CASE("corrected entropy removes a density-driven trend") {
  // 100 users on towers of five density classes, H rising with log10 d
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.1);
  const double classes[] = {1.0, 4.0, 16.0, 64.0, 256.0};
  std::vector<double> h, d;
  for (int i = 0; i < 100; ++i) {
    d.push_back(classes[i % 5]);
    h.push_back(1.0 + 0.8 * std::log10(d.back()) + noise(rng));
  }
  const auto t = calibrate_baseline(h, d, 5, 20);
  REQUIRE(t.bins() == 5);
  Eigen::VectorXd H(100), cme(100), ld(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    H[i] = h[ui];
    cme[i] = corrected_mobility_entropy(h[ui], d[ui], t).value;
    ld[i] = std::log10(d[ui]);
  }
  CHECK(std::abs(pearson(H, ld).r) >= 0.8);
  CHECK(std::abs(pearson(cme, ld).r) <= 0.1);
}

TEST_CASE("CME averages to zero within each bin") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> h, d;
  for (int i = 0; i < 2000; ++i) {
    d.push_back(std::pow(10.0, 3.0 * u(rng)));
    h.push_back(4.0 * u(rng));
  }
  const auto t = calibrate_baseline(h, d);
  std::vector<double> sum(t.bins(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i)
    sum[t.bin_of(std::log10(d[i]))] += corrected_mobility_entropy(h[i], d[i], t).value;
  for (std::size_t b = 0; b < t.bins(); ++b) CHECK(std::abs(sum[b] / double(t.count[b])) < 1e-9);
}

TEST_CASE("average by home") {
  {
    const std::vector<double> v{1.0, 3.0, 7.0};
    const std::vector<HomeAssignment> homes{homed(0, 1), homed(1, 1), homed(2, std::nullopt)};
    const auto t = average_by_home(v, homes);
    REQUIRE(t.cells.size() == 1);
    CHECK(t.cells[0] == 1);
    CHECK(t.mean[0] == 2.0);
    CHECK(t.count[0] == 2);
  }
  {
    // by hand: tower 0 {2, 4} -> 3; tower 1 {5} -> 5; tower 2 {1, 2} -> 1.5
    const std::vector<double> v{2.0, 5.0, 1.0, 4.0, 2.0};
    const std::vector<HomeAssignment> homes{homed(0, 0), homed(1, 1), homed(2, 2), homed(3, 0), homed(4, 2)};
    const auto t = average_by_home(v, homes);
    CHECK(t.cells == std::vector<CellIndex>{0, 1, 2});
    CHECK(t.mean == Eigen::Vector3d(3.0, 5.0, 1.5));
    CHECK(t.count == std::vector<std::size_t>{2, 1, 2});
  }
}
