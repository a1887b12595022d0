#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rigidity/asymptotics.hpp"
#include "rigidity/errors.hpp"

using namespace rigidity;

namespace {

const ConformalMetric kFlat = ConformalMetric::flat();
const ConformalMetric kBump = ConformalMetric::bump(0.2, {0, 0}, 1.0);

const PointSet& big_lattice() {
  static const PointSet L = PointSet::lattice(1.0, Box::square(2100));
  return L;
}

const PointSet& huge_lattice() {
  static const PointSet L = PointSet::lattice(1.0, Box::square(2.1e4));
  return L;
}

std::vector<Point2> grid_samples(int n, double half, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-half, half);
  std::vector<Point2> out;
  for (int k = 0; k < n; ++k) out.push_back({u(gen), u(gen)});
  return out;
}

}  // namespace

TEST_CASE("busemann function of a flat ray") {
  const auto ray = shoot(kFlat, {0, 0}, 0.0, 210.0, 0.01);
  CHECK(busemann_ray(kFlat, ray, {2, 0}, 2.0) == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(busemann_ray(kFlat, ray, {2, 0}, 50.0) == doctest::Approx(2.0).epsilon(1e-9));
  const double b100 = busemann_ray(kFlat, ray, {0, 1}, 100.0);
  CHECK(std::abs(b100 + (std::sqrt(100.0 * 100.0 + 1.0) - 100.0)) < 1e-7);
  CHECK(busemann_ray(kFlat, ray, {0, 1}, 200.0) >= b100);
  CHECK_THROWS_AS(busemann_ray(kFlat, ray, {0, 1}, 300.0), ArgumentError);
}

TEST_CASE("busemann_ray is non-decreasing in T on the bump metric") {
  const auto ray = shoot(kBump, {-2, 0.3}, 0.1, 60.0, 0.01);
  for (Point2 x : {Point2{0, 0}, Point2{1, -1}, Point2{-3, 2}}) {
    double prev = -INFINITY;
    for (double T : {5.0, 10.0, 20.0, 40.0, 60.0}) {
      const double b = busemann_ray(kBump, ray, x, T);
      CHECK(b >= prev);
      prev = b;
    }
  }
}

TEST_CASE("far points and the insufficient-window error") {
  const auto fp = far_point(big_lattice(), {1, 0}, 1000.0);
  CHECK(fp.point == Point2{1000, 0});
  CHECK(fp.residual == 0.0);
  CHECK_THROWS_AS(far_point(PointSet::lattice(1.0, Box::square(100)), {1, 0}, 1000.0),
                  InsufficientWindowError);
  CHECK_THROWS_AS(ideal_B(kFlat, PointSet::lattice(1.0, Box::square(100)), {1, 0}, 1000.0, {0, 0}),
                  InsufficientWindowError);
}

TEST_CASE("flat ideal B reproduces the linear function") {
  const double R = 1000.0;
  const double v1 = ideal_B(kFlat, big_lattice(), {1, 0}, R, {1, 2});
  CHECK(std::abs(v1 - (1000.0 - std::hypot(999.0, -2.0))) < 1e-9);
  CHECK(std::abs(v1 - 1.0) < 0.01);

  double worst = 0.0;
  const auto xs = grid_samples(6, 2.1, 4);
  for (int k = 0; k < 16; ++k) {
    const Vec2 v = unit_from_angle(2 * std::numbers::pi * k / 16 + 0.05);
    const auto B = BusemannApprox::via_net_points(kFlat, big_lattice(), v, R);
    CHECK(B({0, 0}) == 0.0);
    for (Point2 x : xs) worst = std::max(worst, std::abs(B(x) - dot(x, v)));
  }
  CHECK(worst < 0.01);
}

TEST_CASE("ideal B vanishes at the base point on any metric") {
  CHECK(ideal_B(kBump, big_lattice(), unit_from_angle(0.8), 500.0, {0, 0}) == 0.0);
}

TEST_CASE("busemann approximants are 1-Lipschitz") {
  const auto B = BusemannApprox::via_net_points(kBump, big_lattice(), unit_from_angle(0.4), 500.0);
  const auto ray = shoot(kBump, {0.5, -0.5}, 1.0, 120.0, 0.01);
  const auto Br = BusemannApprox::via_ray(kBump, ray, 30.0, 3.0);
  CHECK(Br.mode() == BusemannApprox::Mode::ViaRay);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (int k = 0; k < 100; ++k) {
    const Point2 x{u(gen), u(gen)}, y{u(gen), u(gen)};
    const double d = distance(kBump, x, y).value;
    CHECK(std::abs(B(x) - B(y)) <= d + 1e-6);
    if (k < 25) CHECK(std::abs(Br(x) - Br(y)) <= d + 1e-6);
  }
}

TEST_CASE("two drift sequences give the same ideal B") {
  double worst = 0.0;
  const Vec2 v = unit_from_angle(0.3);
  for (Point2 x : grid_samples(10, 2.0, 6))
    worst = std::max(worst, std::abs(ideal_B(kBump, big_lattice(), v, 500.0, x, 0) -
                                     ideal_B(kBump, big_lattice(), v, 500.0, x, 1)));
  CHECK(worst < 2e-2);
}

TEST_CASE("singleton gap") {
  const auto samples = grid_samples(10, 3.0, 12);
  const auto flat = singleton_gap(kFlat, big_lattice(), unit_from_angle(1.1), 1000.0, samples);
  CHECK(flat.max_gap < 0.01);
  CHECK(flat.min_gap > -0.01);
  CHECK(flat.gaps.size() == samples.size());

  // at net points the linear values are exact, so only truncation remains
  const auto at_net = singleton_gap(kFlat, big_lattice(), {1, 0}, 1000.0, {{1, 1}, {-2, 1}});
  for (double g : at_net.gaps) CHECK(std::abs(g) < 2 * (5.0 / 1000.0));

  const auto bump = singleton_gap(kBump, big_lattice(), unit_from_angle(1.1), 500.0, samples);
  CHECK(bump.max_gap < 5e-2);
}

TEST_CASE("direction to infinity on the flat plane") {
  for (double a : {0.0, 0.3, 1.0 / std::sqrt(2.0), 2.5, 4.0}) {
    const Vec2 v = unit_from_angle(a);
    const Vec2 d = direction_to_infinity(kFlat, {0, 0}, v, huge_lattice(), 1e4);
    CHECK(std::abs(angle_between(v, d)) < 1e-7);
  }
  const Vec2 d3 = direction_to_infinity(kFlat, {5, 5}, {1, 0}, big_lattice(), 1e3);
  const Vec2 d4 = direction_to_infinity(kFlat, {5, 5}, {1, 0}, huge_lattice(), 1e4);
  CHECK(std::abs(angle_between(d3, d4)) < 1e-3);
}

TEST_CASE("direction map is odd on the bump metric") {
  double worst = 0.0;
  for (int k = 0; k < 16; ++k) {
    const Vec2 v = unit_from_angle(2 * std::numbers::pi * (k + 0.37) / 16);
    const Vec2 a = direction_to_infinity(kBump, {0, 0}, v, big_lattice(), 500.0);
    const Vec2 b = direction_to_infinity(kBump, {0, 0}, -v, big_lattice(), 500.0);
    worst = std::max(worst, std::abs(angle_between(a, -b)));
  }
  CHECK(worst < 2e-3);
}

TEST_CASE("direction map preserves cyclic order") {
  const Point2 p{0.2, -0.1};
  std::vector<double> angles;
  for (int k = 0; k < 64; ++k) {
    const Vec2 v = unit_from_angle(2 * std::numbers::pi * (k + 0.5) / 64);
    angles.push_back(std::atan2(direction_to_infinity(kBump, p, v, big_lattice(), 500.0).y,
                                direction_to_infinity(kBump, p, v, big_lattice(), 500.0).x));
  }
  // unwrap and require a strictly increasing sequence spanning one turn
  for (std::size_t k = 1; k < angles.size(); ++k)
    while (angles[k] <= angles[k - 1]) angles[k] += 2 * std::numbers::pi;
  for (std::size_t k = 1; k < angles.size(); ++k) CHECK(angles[k] - angles[k - 1] < std::numbers::pi / 4);
  CHECK(angles.back() - angles.front() < 2 * std::numbers::pi);
}

TEST_CASE("flat transport lines") {
  const auto tr = transport_line(kFlat, big_lattice(), {1, 0}, {1, 2}, 10.0, 1000.0);
  CHECK(tr.max_residual < 0.01);
  for (const auto& s : tr.path.samples) CHECK(std::abs(s.p.y - 2.0) < 1e-9);
  for (double r : tr.residuals) CHECK(r >= 0.0);

  const Vec2 v = unit_from_angle(0.3);
  const auto axis = transport_line(kFlat, huge_lattice(), v, v * 3.0, 10.0, 1e4);
  CHECK(norm(point_at(axis.path, -3.0)) < 1e-6);
}

TEST_CASE("bump transport lines") {
  const Vec2 v = unit_from_angle(0.3);
  const auto a = transport_line(kBump, big_lattice(), v, {0.3, -0.2}, 6.0, 500.0, 0);
  const auto b = transport_line(kBump, big_lattice(), v, {0.3, -0.2}, 6.0, 500.0, 1);
  CHECK(a.max_residual < 5e-2);
  double worst = 0.0;
  for (double t = -3.0; t <= 3.0; t += 0.25) worst = std::max(worst, dist(point_at(a.path, t), point_at(b.path, t)));
  CHECK(worst < 1e-2);
}

TEST_CASE("distance from the ray to the lattice") {
  const auto e1 = net_distance_decay(kFlat, big_lattice(), {0, 0}, {1, 0}, {10, 20, 40});
  for (double r : e1.ratios) CHECK(r < 1e-9);

  const Vec2 v = unit_from_angle(std::atan(1.0 / std::sqrt(2.0)));
  const auto irr = net_distance_decay(kFlat, big_lattice(), {0, 0}, v, {10, 100, 1000});
  REQUIRE(irr.ratios.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(irr.ratios[k] <= (std::sqrt(2.0) / 2) / irr.radii[k]);
  CHECK(irr.ratios[1] < irr.ratios[0]);
  CHECK(irr.ratios[2] < irr.ratios[1]);

  double max100 = 0.0, max1000 = 0.0;
  for (int k = 0; k < 32; ++k) {
    const Vec2 w = unit_from_angle(2 * std::numbers::pi * k / 32 + 0.01);
    const auto d = net_distance_decay(kFlat, big_lattice(), {0, 0}, w, {100, 1000});
    max100 = std::max(max100, d.ratios[0]);
    max1000 = std::max(max1000, d.ratios[1]);
  }
  CHECK(max1000 < max100);
}

TEST_CASE("decay beyond the window is flagged") {
  const auto L = PointSet::lattice(1.0, Box::square(60));
  const auto d = net_distance_decay(kFlat, L, {0, 0}, {1, 0}, {10, 100}, 20.0);
  CHECK_FALSE(d.warnings.empty());
}

TEST_CASE("flat area growth") {
  for (Point2 x : {Point2{0, 0}, Point2{3, -1}}) {
    const auto g = area_growth(kFlat, x, {1, 5, 10});
    for (double r : g.ratios) CHECK(std::abs(r - 1.0) < 1e-3);
  }
}

TEST_CASE("spherical cap area") {
  const auto g = area_growth(ConformalMetric::stereographic(1.0), {0, 0}, {1.0});
  CHECK(std::abs(g.ratios[0] - 2 * (1 - std::cos(1.0))) < 2e-3);
  CHECK_THROWS_AS(area_growth(ConformalMetric::stereographic(1.0), {0, 0}, {3.5}), MethodError);
}

TEST_CASE("bump area growth tends to the flat value") {
  const auto g = area_growth(kBump, {0, 0}, {5, 10, 20});
  CHECK(std::abs(g.ratios[1] - 1) < std::abs(g.ratios[0] - 1));
  CHECK(std::abs(g.ratios[2] - 1) < std::abs(g.ratios[1] - 1));
  CHECK(g.ratios[0] < 1.0);
}

TEST_CASE("area methods agree") {
  const auto polar = area_growth(kBump, {0, 0}, {5.0}, AreaMethod::PolarJacobi);
  const auto grid = area_growth(kBump, {0, 0}, {5.0}, AreaMethod::GridSum);
  CHECK(std::abs(grid.ratios[0] / polar.ratios[0] - 1) < 0.02);
  CHECK(area_method_from_string(to_string(AreaMethod::GridSum)) == AreaMethod::GridSum);
  CHECK_THROWS_AS(area_method_from_string("monte-carlo"), ArgumentError);
}

TEST_CASE("area growth is independent of the worker count") {
  AreaOptions one, many;
  many.workers = 8;
  const auto a = area_growth(kBump, {0.2, 0.1}, {2, 4}, AreaMethod::PolarJacobi, one);
  const auto b = area_growth(kBump, {0.2, 0.1}, {2, 4}, AreaMethod::PolarJacobi, many);
  CHECK(a.areas == b.areas);
}
