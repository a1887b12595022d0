#include "rigidity/integralgeom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/rng.hpp"

namespace rigidity {
namespace {

constexpr std::size_t kBatch = 1 << 14;

struct Sums {
  double hits = 0.0;
  double chord = 0.0;
  double chord2 = 0.0;
};

// Per-batch partial sums reduced in batch order.
Sums accumulate(const ConvexRegion& region, const LineMeasureSampler& sampler, unsigned workers) {
  if (region.extent() > sampler.bounding_radius() * (1.0 + 1e-12))
    throw ArgumentError("region is not contained in the sampling disk D(0, R0)");
  const std::size_t n = sampler.count();
  const std::size_t batches = (n + kBatch - 1) / kBatch;
  std::vector<Sums> part(batches);
  parallel_for(batches, workers, [&](std::size_t b) {
    Sums s;
    const std::size_t end = std::min(n, (b + 1) * kBatch);
    for (std::size_t k = b * kBatch; k < end; ++k) {
      if (const auto c = region.chord(sampler.line(k))) {
        s.hits += 1.0;
        s.chord += *c;
        s.chord2 += *c * *c;
      }
    }
    part[b] = s;
  });
  Sums total;
  for (const auto& s : part) {
    total.hits += s.hits;
    total.chord += s.chord;
    total.chord2 += s.chord2;
  }
  return total;
}

}  // namespace

LineMeasureSampler::LineMeasureSampler(double bounding_radius, std::size_t count, std::uint64_t seed)
    : r0_(bounding_radius), count_(count), seed_(seed) {
  if (!(r0_ > 0.0) || !std::isfinite(r0_)) throw ArgumentError("bounding radius must be positive");
  if (count_ == 0) throw ArgumentError("sample count must be positive");
}

OrientedLine LineMeasureSampler::line(std::size_t k) const {
  CounterRng rng(stream_key(seed_, k, 0x11e5u));
  OrientedLine l;
  l.angle = 2.0 * kPi * rng.uniform();
  l.offset = r0_ * (2.0 * rng.uniform() - 1.0);
  return l;
}

ConvexRegion ConvexRegion::polygon(std::vector<Point2> vertices) {
  if (vertices.size() < 3) throw ArgumentError("polygon needs at least 3 vertices");
  for (const auto& v : vertices)
    if (!is_finite(v)) throw ArgumentError("polygon vertex is not finite");
  const std::size_t n = vertices.size();
  double twice_area = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = vertices[i], b = vertices[(i + 1) % n], c = vertices[(i + 2) % n];
    twice_area += cross(a, b);
    if (cross(b - a, c - b) < 0.0)
      throw ArgumentError("polygon must be convex with counterclockwise vertices");
    if (a == b) throw ArgumentError("polygon has repeated consecutive vertices");
  }
  if (!(twice_area > 0.0)) throw ArgumentError("polygon must be counterclockwise with positive area");
  // a convex CCW polygon turns by exactly 2π
  double turn = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = vertices[(i + 1) % n] - vertices[i];
    const Vec2 e1 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
    turn += std::atan2(cross(e0, e1), dot(e0, e1));
  }
  if (std::abs(turn - 2.0 * kPi) > 1e-6) throw ArgumentError("polygon is not simple and convex");
  ConvexRegion r;
  r.kind_ = Kind::Polygon;
  r.vertices_ = std::move(vertices);
  return r;
}

ConvexRegion ConvexRegion::disk(Point2 center, double radius) {
  if (!is_finite(center) || !(radius >= 0.0) || !std::isfinite(radius))
    throw ArgumentError("disk needs a finite centre and nonnegative radius");
  ConvexRegion r;
  r.kind_ = Kind::Disk;
  r.center_ = center;
  r.radius_ = radius;
  return r;
}

ConvexRegion ConvexRegion::segment(Point2 a, Point2 b) {
  if (!is_finite(a) || !is_finite(b) || a == b) throw ArgumentError("segment needs distinct finite endpoints");
  ConvexRegion r;
  r.kind_ = Kind::Segment;
  r.vertices_ = {a, b};
  return r;
}

ConvexRegion ConvexRegion::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.size() != 1) throw ArgumentError("region must be {\"polygon\":...} or {\"disk\":...}");
  auto point = [](const nlohmann::json& p) {
    if (!p.is_array() || p.size() != 2) throw ArgumentError("region point must be [x, y]");
    return Point2{p[0].get<double>(), p[1].get<double>()};
  };
  if (j.contains("polygon")) {
    std::vector<Point2> v;
    for (const auto& p : j.at("polygon")) v.push_back(point(p));
    return polygon(std::move(v));
  }
  if (j.contains("disk")) {
    const auto& d = j.at("disk");
    for (const auto& [k, _] : d.items())
      if (k != "c" && k != "r") throw ArgumentError("unknown disk key '" + k + "'");
    return disk(point(d.at("c")), d.at("r").get<double>());
  }
  if (j.contains("segment")) {
    const auto& s = j.at("segment");
    if (!s.is_array() || s.size() != 2) throw ArgumentError("segment must be [[x,y],[x,y]]");
    return segment(point(s[0]), point(s[1]));
  }
  throw ArgumentError("unknown region kind '" + j.begin().key() + "'");
}

std::optional<double> ConvexRegion::chord(const OrientedLine& line) const {
  const Vec2 u = line.direction();
  const Point2 x0 = line.foot();
  switch (kind_) {
    case Kind::Disk: {
      const double d = std::abs(dot(center_ - x0, line.normal()));
      if (d > radius_ || radius_ == 0.0) return std::nullopt;
      return 2.0 * std::sqrt((radius_ - d) * (radius_ + d));
    }
    case Kind::Segment: {
      const double a = dot(vertices_[0] - x0, line.normal());
      const double b = dot(vertices_[1] - x0, line.normal());
      if ((a > 0.0 && b > 0.0) || (a < 0.0 && b < 0.0)) return std::nullopt;
      return 0.0;
    }
    case Kind::Polygon:
      break;
  }
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 v = vertices_[i];
    const Vec2 e = vertices_[(i + 1) % n] - v;
    // inside: cross(e, x0 + s u - v) >= 0
    const double c0 = cross(e, x0 - v);
    const double c1 = cross(e, u);
    if (c1 == 0.0) {
      if (c0 < 0.0) return std::nullopt;
      continue;
    }
    const double s = -c0 / c1;
    if (c1 > 0.0) lo = std::max(lo, s);
    else hi = std::min(hi, s);
    if (lo > hi) return std::nullopt;
  }
  return hi - lo;
}

double ConvexRegion::extent() const {
  if (kind_ == Kind::Disk) return norm(center_) + radius_;
  double m = 0.0;
  for (const auto& v : vertices_) m = std::max(m, norm(v));
  return m;
}

double ConvexRegion::perimeter() const {
  if (kind_ == Kind::Disk) return 2.0 * kPi * radius_;
  if (kind_ == Kind::Segment) return 2.0 * dist(vertices_[0], vertices_[1]);
  double p = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    p += dist(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
  return p;
}

double ConvexRegion::area() const {
  if (kind_ == Kind::Disk) return kPi * radius_ * radius_;
  if (kind_ == Kind::Segment) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    a += cross(vertices_[i], vertices_[(i + 1) % vertices_.size()]);
  return 0.5 * a;
}

ConvexRegion ConvexRegion::rotated(double angle) const {
  const double c = std::cos(angle), s = std::sin(angle);
  auto rot = [&](Point2 p) { return Point2{c * p.x - s * p.y, s * p.x + c * p.y}; };
  ConvexRegion r = *this;
  r.center_ = rot(center_);
  for (auto& v : r.vertices_) v = rot(v);
  return r;
}

ConvexRegion ConvexRegion::scaled(double s) const {
  if (!(s > 0.0)) throw ArgumentError("scale factor must be positive");
  ConvexRegion r = *this;
  r.center_ = center_ * s;
  r.radius_ = radius_ * s;
  for (auto& v : r.vertices_) v = v * s;
  return r;
}

nlohmann::json ConvexRegion::to_json() const {
  auto pts = [&] {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : vertices_) a.push_back({v.x, v.y});
    return a;
  };
  switch (kind_) {
    case Kind::Disk:
      return {{"disk", {{"c", {center_.x, center_.y}}, {"r", radius_}}}};
    case Kind::Segment:
      return {{"segment", pts()}};
    case Kind::Polygon:
      break;
  }
  return {{"polygon", pts()}};
}

nlohmann::json Estimate::to_json() const {
  return {{"value", value}, {"stderr", stderr_}, {"N", samples}, {"seed", seed}};
}

Estimate crofton_perimeter(const ConvexRegion& region, const LineMeasureSampler& sampler,
                           unsigned workers) {
  const Sums s = accumulate(region, sampler, workers);
  const double n = static_cast<double>(sampler.count());
  const double f = s.hits / n;
  Estimate e;
  e.value = 0.5 * sampler.total_mass() * f;
  e.stderr_ = 0.5 * sampler.total_mass() * std::sqrt(f * (1.0 - f) / n);
  e.samples = sampler.count();
  e.seed = sampler.seed();
  return e;
}

Estimate santalo_area(const ConvexRegion& region, const LineMeasureSampler& sampler,
                      unsigned workers) {
  const Sums s = accumulate(region, sampler, workers);
  const double n = static_cast<double>(sampler.count());
  const double mean = s.chord / n;
  const double var = std::max(0.0, s.chord2 / n - mean * mean) * n / std::max(n - 1.0, 1.0);
  const double k = sampler.total_mass() / (2.0 * kPi);
  Estimate e;
  e.value = k * mean;
  e.stderr_ = k * std::sqrt(var / n);
  e.samples = sampler.count();
  e.seed = sampler.seed();
  return e;
}

AreaContinuity area_continuity(const ConformalMetric& metric, const std::vector<double>& radii,
                               AreaMethod method, const AreaOptions& opts) {
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (!(radii[i] > radii[i - 1])) throw ArgumentError("area_continuity: radii must increase");
  AreaContinuity out;
  out.growth = area_growth(metric, {0.0, 0.0}, radii, method, opts);
  for (double r : out.growth.ratios) {
    out.mu.push_back(kPi * r);
    out.deviation.push_back(std::abs(kPi * r - kPi));
  }
  return out;
}

}  // namespace rigidity
