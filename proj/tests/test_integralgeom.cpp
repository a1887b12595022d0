#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "rigidity/errors.hpp"
#include "rigidity/integralgeom.hpp"

using namespace rigidity;

namespace {

ConvexRegion unit_square() { return ConvexRegion::polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}); }

bool within(const Estimate& e, double exact, double k = 3.0) { return std::abs(e.value - exact) <= k * e.stderr_; }

}  // namespace

TEST_CASE("sampler law") {
  const LineMeasureSampler s(2.0, 1000, 5);
  CHECK(s.total_mass() == doctest::Approx(8 * kPi));
  double mean_offset = 0.0;
  for (std::size_t k = 0; k < 1000; ++k) {
    const auto l = s.line(k);
    CHECK(l.angle >= 0.0);
    CHECK(l.angle < 2 * kPi);
    CHECK(std::abs(l.offset) < 2.0);
    CHECK(std::abs(dot(l.foot(), l.direction())) < 1e-15);
    mean_offset += l.offset / 1000;
  }
  CHECK(std::abs(mean_offset) < 4 * 2.0 / std::sqrt(3.0 * 1000));
  CHECK(s.line(17).angle == LineMeasureSampler(2.0, 5, 5).line(17).angle);
}

TEST_CASE("chords are exact") {
  const auto sq = unit_square();
  for (double c : {0.0, 0.25, 0.5, 0.999}) {
    CHECK(*sq.chord({0.0, c}) == 1.0);          // horizontal line y = c
    // cos(pi/2) rounds to 6e-17, so vertical lines carry one rounding step
    CHECK(std::abs(*sq.chord({kPi / 2, -c}) - 1.0) <= 2 * std::numeric_limits<double>::epsilon());
  }
  CHECK_FALSE(sq.chord({0.0, 1.5}).has_value());
  const auto disk = ConvexRegion::disk({0, 0}, 1.0);
  CHECK(*disk.chord({0.3, 0.6}) == doctest::Approx(2 * std::sqrt(1 - 0.36)).epsilon(1e-14));
  CHECK(*sq.chord({kPi / 4, 0.0}) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("Crofton perimeter of the square and the disk") {
  const LineMeasureSampler s(2.0, 1000000, 1);
  const auto sq = crofton_perimeter(unit_square(), s);
  CHECK(within(sq, 4.0));
  CHECK(sq.stderr_ < 0.02);
  CHECK(within(crofton_perimeter(ConvexRegion::disk({0, 0}, 1.0), s), 2 * kPi));
}

TEST_CASE("Santalo area of the disk and the square") {
  const LineMeasureSampler s(2.0, 1000000, 2);
  CHECK(within(santalo_area(ConvexRegion::disk({0, 0}, 1.0), s), kPi));
  CHECK(within(santalo_area(unit_square(), s), 1.0));
  CHECK(santalo_area(ConvexRegion::disk({0.5, 0}, 0.0), s).value == 0.0);
  CHECK(crofton_perimeter(ConvexRegion::disk({0.5, 0}, 0.0), s).value == 0.0);
}

TEST_CASE("circle identity fixes the normalization") {
  for (double rho : {0.5, 1.0, 1.5}) {
    const auto e = crofton_perimeter(ConvexRegion::disk({0, 0}, rho), LineMeasureSampler(2.0, 400000, 11));
    CHECK(std::abs(e.value / (2 * kPi * rho) - 1.0) <= 3 * e.stderr_ / (2 * kPi * rho));
  }
}

TEST_CASE("rotation invariance") {
  const auto tri = ConvexRegion::polygon({{-0.5, -0.3}, {0.8, -0.2}, {0.1, 0.9}});
  const LineMeasureSampler s(1.5, 200000, 3);
  const auto c0 = crofton_perimeter(tri, s), a0 = santalo_area(tri, s);
  for (double ang : {0.4, 2.0, 5.1}) {
    const auto r = tri.rotated(ang);
    const auto c = crofton_perimeter(r, s), a = santalo_area(r, s);
    CHECK(std::abs(c.value - c0.value) < 3 * std::hypot(c.stderr_, c0.stderr_));
    CHECK(std::abs(a.value - a0.value) < 3 * std::hypot(a.stderr_, a0.stderr_));
    CHECK(r.perimeter() == doctest::Approx(tri.perimeter()).epsilon(1e-12));
  }
}

TEST_CASE("monotone under inclusion") {
  const LineMeasureSampler s(2.0, 200000, 4);
  const auto inner = ConvexRegion::polygon({{0.1, 0.1}, {0.6, 0.2}, {0.4, 0.7}});
  const auto outer = unit_square();
  const auto ci = crofton_perimeter(inner, s), co = crofton_perimeter(outer, s);
  CHECK(ci.value <= co.value + 3 * co.stderr_);
  // with shared lines every hit of the inner region is a hit of the outer one
  CHECK(ci.value <= co.value);
}

TEST_CASE("degenerate segments scale linearly") {
  const auto seg = ConvexRegion::segment({-0.3, 0.2}, {0.5, -0.4});
  CHECK(seg.perimeter() == doctest::Approx(2.0));
  CHECK(seg.area() == 0.0);
  const auto base = crofton_perimeter(seg, LineMeasureSampler(1.0, 100000, 6));
  CHECK(within(base, 2.0));
  for (double s : {0.5, 2.0}) {
    const auto e = crofton_perimeter(seg.scaled(s), LineMeasureSampler(s, 100000, 6));
    CHECK(e.value == doctest::Approx(s * base.value).epsilon(1e-12));
  }
}

TEST_CASE("estimates do not depend on the worker count") {
  const LineMeasureSampler s(2.0, 100000, 8);
  const auto a = santalo_area(unit_square(), s, 1), b = santalo_area(unit_square(), s, 8);
  CHECK(a.value == b.value);
  CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("region validation") {
  CHECK_THROWS_AS(ConvexRegion::polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), ArgumentError);  // clockwise
  CHECK_THROWS_AS(ConvexRegion::polygon({{0, 0}, {2, 0}, {1, 0.2}, {2, 2}, {0, 2}}), ArgumentError);
  CHECK_THROWS_AS(ConvexRegion::disk({0, 0}, -1.0), ArgumentError);
  CHECK_THROWS_AS(crofton_perimeter(ConvexRegion::disk({0, 0}, 1.0), LineMeasureSampler(0.5, 10, 0)),
                  ArgumentError);
  const auto j = ConvexRegion::from_json(nlohmann::json::parse(R"({"disk":{"c":[0.5,0],"r":0.25}})"));
  CHECK(j.kind() == ConvexRegion::Kind::Disk);
  CHECK(j.area() == doctest::Approx(kPi / 16));
  CHECK(ConvexRegion::from_json(unit_square().to_json()).area() == doctest::Approx(1.0));
  CHECK_THROWS_AS(ConvexRegion::from_json(nlohmann::json::parse(R"({"ellipse":1})")), ArgumentError);
}

TEST_CASE("area continuity") {
  const auto flat = area_continuity(ConformalMetric::flat(), {1, 5, 10});
  for (double mu : flat.mu) CHECK(std::abs(mu - kPi) < 1e-3 * kPi);

  const auto bump = ConformalMetric::bump(0.2, {0, 0}, 1.0);
  const auto ac = area_continuity(bump, {5, 10, 20});
  CHECK(ac.deviation[1] < ac.deviation[0]);
  CHECK(ac.deviation[2] < ac.deviation[1]);
  const auto g = area_growth(bump, {0, 0}, {5, 10, 20});
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(ac.growth.ratios[k] == g.ratios[k]);
    CHECK(ac.mu[k] == kPi * g.ratios[k]);
  }
  CHECK_THROWS_AS(area_continuity(bump, {5, 2}), ArgumentError);
}
