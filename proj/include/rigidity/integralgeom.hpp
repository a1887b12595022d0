#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rigidity/asymptotics.hpp"
#include "rigidity/vec2.hpp"

namespace rigidity {

/// Oriented line {x : <x, n> = offset} traversed along u = (cos angle, sin angle),
/// with n = perp(u).
struct OrientedLine {
  double angle = 0.0;
  double offset = 0.0;

  Vec2 direction() const { return unit_from_angle(angle); }
  Vec2 normal() const { return perp(direction()); }
  Point2 foot() const { return normal() * offset; }
};

/// Lines meeting D(0, R0) drawn from dθ dp: angle uniform on [0, 2π), offset
/// uniform on (-R0, R0). Line k depends only on (seed, k).
class LineMeasureSampler {
 public:
  LineMeasureSampler(double bounding_radius, std::size_t count, std::uint64_t seed);

  double bounding_radius() const { return r0_; }
  std::size_t count() const { return count_; }
  std::uint64_t seed() const { return seed_; }
  /// dθ dp measure of all lines meeting D(0, R0).
  double total_mass() const { return 4.0 * kPi * r0_; }
  OrientedLine line(std::size_t k) const;

 private:
  double r0_;
  std::size_t count_;
  std::uint64_t seed_;
};

class ConvexRegion {
 public:
  enum class Kind { Polygon, Disk, Segment };

  /// Vertices must be counterclockwise and convex with positive area.
  static ConvexRegion polygon(std::vector<Point2> vertices);
  static ConvexRegion disk(Point2 center, double radius);
  /// Degenerate region: a closed segment (perimeter counted twice, area zero).
  static ConvexRegion segment(Point2 a, Point2 b);
  static ConvexRegion from_json(const nlohmann::json& j);

  Kind kind() const { return kind_; }
  const std::vector<Point2>& vertices() const { return vertices_; }
  Point2 center() const { return center_; }
  double radius() const { return radius_; }

  /// Length of line ∩ region (0 when disjoint); nullopt when they miss.
  std::optional<double> chord(const OrientedLine& line) const;
  /// max |x| over the region.
  double extent() const;
  double perimeter() const;
  double area() const;
  ConvexRegion rotated(double angle) const;
  ConvexRegion scaled(double s) const;
  nlohmann::json to_json() const;

 private:
  Kind kind_ = Kind::Disk;
  std::vector<Point2> vertices_;
  Point2 center_{};
  double radius_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// ½ σ{lines meeting the region}.
Estimate crofton_perimeter(const ConvexRegion& region, const LineMeasureSampler& sampler,
                           unsigned workers = 1);
/// (1/2π) ∫ chord length dσ.
Estimate santalo_area(const ConvexRegion& region, const LineMeasureSampler& sampler,
                      unsigned workers = 1);

struct AreaContinuity {
  AreaGrowth growth;
  std::vector<double> mu;         // area(D(0, r)) / r^2 = π * ratio
  std::vector<double> deviation;  // |mu - π|
};

AreaContinuity area_continuity(const ConformalMetric& metric, const std::vector<double>& radii,
                               AreaMethod method = AreaMethod::PolarJacobi,
                               const AreaOptions& opts = {});

}  // namespace rigidity
