#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rigidity/asymptotics.hpp"
#include "rigidity/distance.hpp"
#include "rigidity/errors.hpp"

using namespace rigidity;

namespace {

const ConformalMetric kBump = ConformalMetric::bump(0.5, {0.5, 0.5}, 0.4);
const oracle::Phi kBumpPhi = oracle::bump(0.5, 0.5, 0.5, 0.4);

}  // namespace

TEST_CASE("flat distance is Euclidean") {
  const auto r = distance(ConformalMetric::flat(), {0, 0}, {3, 4});
  CHECK(std::abs(r.value - 5.0) < 1e-8);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int k = 0; k < 100; ++k) {
    const Point2 x{u(gen), u(gen)}, y{u(gen), u(gen)};
    CHECK(std::abs(distance(ConformalMetric::flat(), x, y).value - dist(x, y)) < 1e-6);
  }
}

TEST_CASE("bump distance agrees with the relaxation oracle") {
  const auto r = distance(kBump, {0, 0}, {1, 1});
  const double ref = oracle::distance(kBumpPhi, {0, 0}, {1, 1});
  CHECK(r.value > std::sqrt(2.0));
  CHECK(std::abs(r.value - ref) < 1e-4);
}

TEST_CASE("result invariants: arclength and endpoints") {
  const auto r = distance(kBump, {-0.2, 0.1}, {1.3, 0.9});
  CHECK(std::abs(r.value - r.path.length()) < 1e-9);
  CHECK(dist(r.path.front().p, {-0.2, 0.1}) == 0.0);
  CHECK(dist(r.path.back().p, {1.3, 0.9}) < 1e-8);
  CHECK_FALSE(r.diagnostics.method.empty());
  CHECK_FALSE(r.diagnostics.branch_lengths.empty());
  CHECK(r.diagnostics.branch_lengths.front() == r.value);
}

TEST_CASE("distance is symmetric") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-1, 2);
  for (int k = 0; k < 10; ++k) {
    const Point2 x{u(gen), u(gen)}, y{u(gen), u(gen)};
    CHECK(std::abs(distance(kBump, x, y).value - distance(kBump, y, x).value) < 1e-7);
  }
}

TEST_CASE("triangle inequality and Euclidean lower bound") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-5, 5);
  const auto m = ConformalMetric::bump_sum({{0.5, {0.5, 0.5}, 0.4}, {0.2, {-1, -1}, 1.5}});
  DistanceOptions o;
  o.keep_path = false;
  for (int k = 0; k < 50; ++k) {
    const Point2 x{u(gen), u(gen)}, y{u(gen), u(gen)}, z{u(gen), u(gen)};
    const double xy = distance(m, x, y, o).value, yz = distance(m, y, z, o).value, xz = distance(m, x, z, o).value;
    CHECK(xz <= xy + yz + 1e-6);
    CHECK(xy >= dist(x, y) - 1e-7);
  }
}

TEST_CASE("shooting and relaxation agree on random pairs") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Point2 x{u(gen), u(gen)}, y{u(gen), u(gen)};
    const double d = distance(kBump, x, y).value;
    worst = std::max(worst, std::abs(d - oracle::distance(kBumpPhi, x, y, 256)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("far endpoints converge") {
  const auto m = ConformalMetric::bump(0.2, {0, 0}, 1.0);
  const auto r = distance(m, {0.3, -0.2}, {1000, 3});
  CHECK(r.value > dist({0.3, -0.2}, {1000, 3}));
  CHECK(r.value < dist({0.3, -0.2}, {1000, 3}) + 0.2);
  CHECK(r.diagnostics.endpoint_miss < 1e-8);
}

TEST_CASE("distance matrix of the flat 3x3 lattice") {
  std::vector<Point2> pts;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) pts.push_back({static_cast<double>(i), static_cast<double>(j)});
  const auto m = distance_matrix(ConformalMetric::flat(), pts);
  REQUIRE(m.size() == 9);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 9; ++j) {
      CHECK(std::abs(m(i, j) - dist(pts[i], pts[j])) < 1e-7);
      CHECK(m(i, j) == m(j, i));
    }
}

TEST_CASE("distance matrix does not depend on the worker count") {
  std::vector<Point2> pts;
  for (int i = -1; i <= 2; ++i)
    for (int j = -1; j <= 1; ++j) pts.push_back({0.5 * i + 0.1, 0.6 * j + 0.4});
  const auto a = distance_matrix(kBump, pts, {}, 1);
  const auto b = distance_matrix(kBump, pts, {}, 8);
  CHECK(a.data() == b.data());
}

TEST_CASE("degenerate and invalid matrix inputs") {
  const auto one = distance_matrix(ConformalMetric::flat(), {{1, 2}});
  CHECK(one.size() == 1);
  CHECK(one(0, 0) == 0.0);
  CHECK_THROWS_AS(distance_matrix(ConformalMetric::flat(), {{1, 2}, {1, 2}}), ArgumentError);
  CHECK_THROWS_AS(distance(ConformalMetric::flat(), {1, 2}, {1, 2}), ArgumentError);
  CHECK_THROWS_AS(distance(ConformalMetric::flat(), {NAN, 2}, {1, 2}), ArgumentError);
}

TEST_CASE("matrix csv round trip") {
  const auto m = distance_matrix(kBump, {{0, 0}, {1, 1}, {1, 0}});
  const auto csv = matrix_to_csv(m);
  CHECK(csv.rfind("0,1,2\n", 0) == 0);
  const auto back = matrix_from_csv(csv);
  CHECK(back.data() == m.data());
}

TEST_CASE("scaled metric on the flat plane") {
  const auto flat = ConformalMetric::flat();
  for (double r : {1.0, 3.0, 50.0}) {
    const ScaledMetric sm(flat, {0, 0}, r);
    CHECK(std::abs(scaled_distance(sm, {1, 0}, {0, 1}) - std::sqrt(2.0)) < 1e-7);
  }
  const ScaledMetric unit(flat, {0, 0}, 1.0);
  CHECK(scaled_distance(unit, {2, 1}, {-1, 3}) == doctest::Approx(distance(flat, {2, 1}, {-1, 3}).value).epsilon(1e-12));
}

TEST_CASE("scaled bump metric approaches the Euclidean distance") {
  const auto m = ConformalMetric::bump(0.5, {0, 0}, 1.0);
  const auto L = PointSet::lattice(1.0, Box::square(300));
  double prev = INFINITY;
  for (double r : {4.0, 8.0, 16.0}) {
    const auto sm = asymptotic_scaled_metric(m, L, {0, 0}, r, 100.0);
    const double dev = std::abs(scaled_distance(sm, {1, 0}, {0, 1}) - std::sqrt(2.0));
    CHECK(dev < prev);
    prev = dev;
  }
}
