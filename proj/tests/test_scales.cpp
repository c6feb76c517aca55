#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cdrgeo/error.hpp"
#include "cdrgeo/geometry.hpp"
#include "cdrgeo/scales.hpp"

using namespace cdrgeo;

namespace {

// Crosswalk with every source wholly inside one target.
Crosswalk merge_all(std::size_t n, std::string target = "all") {
  Crosswalk x;
  x.source_level = "src";
  x.target_level = "dst";
  for (std::size_t i = 0; i < n; ++i) x.source_ids.push_back("s" + std::to_string(i));
  x.target_ids = {std::move(target)};
  x.weights.resize(Eigen::Index(n), 1);
  for (Eigen::Index i = 0; i < Eigen::Index(n); ++i) x.weights.insert(i, 0) = 1.0;
  x.weights.makeCompressed();
  x.source_area = Eigen::VectorXd::Ones(Eigen::Index(n));
  x.coverage = Eigen::VectorXd::Ones(Eigen::Index(n));
  return x;
}

Polygon rect(double x0, double y0, double x1, double y1) {
  return Polygon{{Box{{x0, y0}, {x1, y1}}.ring()}};
}

std::vector<NamedPolygon> grid(const Box& b, int k, const std::string& prefix) {
  std::vector<NamedPolygon> out;
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c)
      out.push_back({prefix + std::to_string(r) + "_" + std::to_string(c),
                     rect(b.lo.x() + b.width() * c / k, b.lo.y() + b.height() * r / k,
                          b.lo.x() + b.width() * (c + 1) / k, b.lo.y() + b.height() * (r + 1) / k)});
  return out;
}

// Two vectors over n units whose Pearson correlation is exactly r (up to rounding).
std::pair<Eigen::VectorXd, Eigen::VectorXd> with_correlation(double r, Eigen::Index n) {
  Eigen::VectorXd e1(n), e2(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    e1[i] = double(i);
    e2[i] = double((i * 7) % n);
  }
  e1.array() -= e1.mean();
  e2.array() -= e2.mean();
  e2 -= e2.dot(e1) / e1.squaredNorm() * e1;
  e1.normalize();
  e2.normalize();
  return {e1, r * e1 + std::sqrt(1.0 - r * r) * e2};
}

LevelValues level_values(const Eigen::VectorXd& v, const std::string& prefix) {
  LevelValues out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.ids.push_back(prefix + std::to_string(i));
  out.values = v;
  return out;
}

ScaleLevel bare_level(std::string name) { return {std::move(name), Crosswalk{}}; }

}  // namespace

TEST_CASE("method names") {
  for (auto m : {AggregationMethod::sum, AggregationMethod::mean, AggregationMethod::population_weighted_mean,
                 AggregationMethod::areal_weighted})
    CHECK(aggregation_method_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(aggregation_method_from_string("median"), InputError);
}

TEST_CASE("aggregate: identity crosswalk returns the input") {
  const Eigen::Vector4d x(1.5, -2.0, 7.0, 0.25);
  const Eigen::VectorXd pop = Eigen::Vector4d(10, 20, 30, 40);
  const auto id = identity_crosswalk({"a", "b", "c", "d"}, "cell");
  for (auto m : {AggregationMethod::sum, AggregationMethod::mean, AggregationMethod::population_weighted_mean,
                 AggregationMethod::areal_weighted}) {
    const auto out = aggregate(x, id, m, &pop);
    CHECK(out.ids == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(out.values == Eigen::VectorXd(x));
  }
}

TEST_CASE("aggregate: hand-computed means") {
  CHECK(aggregate(Eigen::Vector2d(1, 3), merge_all(2), AggregationMethod::mean).values[0] == 2.0);
  CHECK(aggregate(Eigen::Vector2d(1, 3), merge_all(2), AggregationMethod::sum).values[0] == 4.0);
  // (100*1 + 300*2 + 600*3) / 1000
  const Eigen::VectorXd pop = Eigen::Vector3d(100, 300, 600);
  CHECK(aggregate(Eigen::Vector3d(1, 2, 3), merge_all(3), AggregationMethod::population_weighted_mean, &pop)
            .values[0] == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(aggregate(Eigen::Vector3d(1, 2, 3), merge_all(3), AggregationMethod::population_weighted_mean),
                  std::invalid_argument);
}

TEST_CASE("aggregate: targets without weight are absent") {
  auto x = merge_all(2);
  x.target_ids.push_back("empty");
  x.weights.conservativeResize(2, 2);
  const auto out = aggregate(Eigen::Vector2d(1, 3), x, AggregationMethod::mean);
  CHECK(out.ids == std::vector<std::string>{"all"});
  CHECK(std::isnan(out.at("empty")));
  const auto none = aggregate(Eigen::Vector2d(std::nan(""), std::nan("")), merge_all(2), AggregationMethod::mean);
  CHECK(none.size() == 0);
}

TEST_CASE("conservation and two-step consistency over real crosswalks") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 8000.0);
  const Eigen::Index n = 300;
  Eigen::Matrix2Xd sites(2, n);
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < n; ++i) {
    sites.col(i) = Eigen::Vector2d(u(rng), u(rng));
    ids.push_back("c" + std::to_string(i));
  }
  const auto tess = build_voronoi(ids, sites);
  const auto cells = named_polygons(tess);
  const auto iris = grid(tess.bbox(), 8, "i");
  const auto communes = grid(tess.bbox(), 2, "m");
  const auto to_iris = build_crosswalk(cells, iris, "cell", "iris");
  const auto iris_to_com = build_crosswalk(iris, communes, "iris", "commune");
  const auto to_com = compose(to_iris, iris_to_com);

  Eigen::VectorXd counts(n), pop(n), ind(n);
  std::uniform_int_distribution<int> cnt(0, 40);
  for (Eigen::Index i = 0; i < n; ++i) {
    counts[i] = cnt(rng);
    pop[i] = 1 + cnt(rng);
    ind[i] = u(rng) / 1000.0;
  }

  const auto at_iris = aggregate(counts, to_iris, AggregationMethod::sum);
  CHECK(std::abs(at_iris.values.sum() - counts.sum()) / counts.sum() < 1e-9);

  // the iris output omits empty units; realign before the second hop
  const Eigen::VectorXd iris_full = align(at_iris, to_iris.target_ids).array().isNaN().select(0.0, align(at_iris, to_iris.target_ids));
  const auto two_step = aggregate(iris_full, iris_to_com, AggregationMethod::sum);
  const auto one_step = aggregate(counts, to_com, AggregationMethod::sum);
  REQUIRE(two_step.ids == one_step.ids);
  CHECK((two_step.values - one_step.values).cwiseAbs().maxCoeff() / counts.sum() < 1e-9);

  // population-weighted mean keeps the global weighted mean
  const auto pw = aggregate(ind, to_iris, AggregationMethod::population_weighted_mean, &pop);
  const Eigen::VectorXd target_pop = to_iris.weights.transpose() * pop;
  const Eigen::VectorXd aligned_pop = [&] {
    Eigen::VectorXd p(Eigen::Index(pw.size()));
    for (std::size_t k = 0; k < pw.size(); ++k) p[Eigen::Index(k)] = target_pop[*to_iris.target_index(pw.ids[k])];
    return p;
  }();
  const double before = pop.dot(ind) / pop.sum();
  const double after = aligned_pop.dot(pw.values) / aligned_pop.sum();
  CHECK(std::abs(after - before) / before < 1e-9);
}

TEST_CASE("table-1 scale differences") {
  const std::vector<std::string> levels{"cell", "iris", "commune"};
  std::vector<MultiScaleRow> rows;
  rows.push_back({"A vs B", {Correlation{0.62, 100}, Correlation{0.92, 50}, std::nullopt}});
  rows.push_back({"C vs D", {std::nullopt, Correlation{-0.03, 50}, Correlation{-0.43, 10}}});
  rows.push_back({"E vs F", {Correlation{0.5, 100}, Correlation{0.5, 50}, std::nullopt}});
  const auto report = build_report(levels, rows);
  REQUIRE(report.differences.size() == 3);
  CHECK(report.differences[0].level_a == "cell");
  CHECK(report.differences[0].level_b == "iris");
  CHECK(std::abs(report.differences[0].delta - 0.30) <= 1e-12);
  CHECK(report.differences[0].flag);
  CHECK(report.differences[1].level_a == "iris");
  CHECK(report.differences[1].level_b == "commune");
  CHECK(std::abs(report.differences[1].delta + 0.40) <= 1e-12);
  CHECK(report.differences[1].flag);
  CHECK(report.differences[2].delta == 0.0);
  CHECK_FALSE(report.differences[2].flag);

  rows.push_back({"short", {Correlation{0.1, 3}}});
  CHECK_THROWS_AS(build_report(levels, rows), std::invalid_argument);
}

TEST_CASE("sign change is flagged even below the threshold") {
  const std::vector<std::string> levels{"a", "b"};
  const MultiScaleRow row{"p", {Correlation{0.05, 10}, Correlation{-0.05, 10}}};
  const auto d = scale_differences(row, levels);
  REQUIRE(d.size() == 1);
  CHECK(d[0].flag);
}

TEST_CASE("multi-scale correlation reports every level") {
  const auto [x, y] = with_correlation(0.6, 12);
  ScaleVariable a{"A", x, AggregationMethod::mean, {}};
  ScaleVariable b{"B", y, AggregationMethod::mean, {}};
  std::vector<std::string> ids;
  for (int i = 0; i < 12; ++i) ids.push_back("s" + std::to_string(i));
  const std::vector<ScaleLevel> levels{{"cell", identity_crosswalk(ids, "cell")}, {"all", merge_all(12)}};
  const std::vector<VariablePair> pairs{{a, b}};
  const auto report = multi_scale_correlate(pairs, levels, nullptr);
  REQUIRE(report.rows.size() == 1);
  CHECK(report.rows[0].pair == "A vs B");
  REQUIRE(report.rows[0].by_level.size() == 2);
  REQUIRE(report.rows[0].by_level[0]);
  CHECK(report.rows[0].by_level[0]->r == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(report.rows[0].by_level[0]->n == 12);
  CHECK_FALSE(report.rows[0].by_level[1]);  // one unit: undefined, not dropped
  CHECK(report.differences.empty());
}

TEST_CASE("sensitivity report") {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("s" + std::to_string(i));
  const std::vector<ScaleLevel> levels{{"cell", identity_crosswalk(ids, "cell")}};

  SUBCASE("constant variable") {
    const ScaleVariable c{"C", Eigen::VectorXd::Constant(10, 4.0), AggregationMethod::mean, {}};
    const ScaleVariable ref{"R", Eigen::VectorXd::LinSpaced(10, 0, 9), AggregationMethod::mean, {}};
    const auto s = sensitivity_report(c, ref, levels, nullptr);
    REQUIRE(s.rows.size() == 1);
    CHECK(s.rows[0].variance == 0.0);
    CHECK(s.rows[0].mean == 4.0);
    CHECK(s.rows[0].support == 10);
    CHECK(s.flags.empty());
  }
  SUBCASE("variable equal to the reference") {
    const ScaleVariable v{"V", Eigen::VectorXd::LinSpaced(10, 0, 9), AggregationMethod::mean, {}};
    const std::vector<ScaleLevel> two{levels[0], {"half", [&] {
                                                    auto x = merge_all(10);
                                                    x.target_ids = {"h0", "h1"};
                                                    x.weights.resize(10, 2);
                                                    for (int i = 0; i < 10; ++i) x.weights.insert(i, i / 5) = 1.0;
                                                    return x;
                                                  }()}};
    const auto s = sensitivity_report(v, v, two, nullptr);
    REQUIRE(s.rows.size() == 2);
    CHECK(s.rows[0].r->r == doctest::Approx(1.0));
    CHECK_FALSE(s.rows[1].r);  // two units only
    CHECK(s.flags.empty());
  }
  SUBCASE("table-1 shaped drop is flagged") {
    const auto [a1, b1] = with_correlation(-0.03, 10);
    const auto [a2, b2] = with_correlation(-0.43, 10);
    ScaleVariable v{"V", std::nullopt, AggregationMethod::mean, {}};
    ScaleVariable ref{"R", std::nullopt, AggregationMethod::mean, {}};
    v.native.emplace("iris", level_values(a1, "i"));
    v.native.emplace("commune", level_values(a2, "m"));
    ref.native.emplace("iris", level_values(b1, "i"));
    ref.native.emplace("commune", level_values(b2, "m"));
    const std::vector<ScaleLevel> lv{bare_level("cell"), bare_level("iris"), bare_level("commune")};
    const auto s = sensitivity_report(v, ref, lv, nullptr);
    REQUIRE(s.rows.size() == 3);
    CHECK_FALSE(s.rows[0].r);
    CHECK(s.rows[1].r->r == doctest::Approx(-0.03).epsilon(1e-12));
    CHECK(s.rows[2].r->r == doctest::Approx(-0.43).epsilon(1e-12));
    REQUIRE(s.flags.size() == 1);
    CHECK(std::abs(s.flags[0].delta + 0.40) < 1e-12);
    CHECK(s.flags[0].level_a == "iris");
  }
}
