#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rigidity/distance.hpp"
#include "rigidity/geodesic.hpp"
#include "rigidity/metric.hpp"
#include "rigidity/nets.hpp"

namespace rigidity {

/// Point on a sampled geodesic at arclength t (cubic Hermite between samples).
Point2 point_at(const GeodesicPath& path, double t);

/// max over t in {stride, 2 stride, ...} u {T}, t <= T, of t - d(ray(t), x).
double busemann_ray(const ConformalMetric& metric, const GeodesicPath& ray, Point2 x, double T,
                    double stride = 1.0, const DistanceOptions& opts = {});

struct FarPoint {
  Point2 point{};
  double residual = 0.0;  // |p - o| - <p - o, v>
};

/// Point of L minimising the drift residual relative to `origin` among
/// those with <p - origin, v> in [2^band R, 2^(band+1) R).
/// Throws InsufficientWindowError when that band holds no point of L.
FarPoint far_point(const PointSet& L, Vec2 v, double R, Point2 origin = {}, int band = 0);

/// Truncated Busemann-type function of a direction.
///   ViaNetPoints: B(x) = d(p, 0) - d(p, x) for the far point p of v.
///   ViaRay:       B(x) = busemann_ray(ray, x, R).
class BusemannApprox {
 public:
  enum class Mode { ViaNetPoints, ViaRay };

  static BusemannApprox via_net_points(const ConformalMetric& metric, const PointSet& L, Vec2 v,
                                       double R, int band = 0, const DistanceOptions& opts = {});
  static BusemannApprox via_ray(const ConformalMetric& metric, GeodesicPath ray, double R,
                                double stride = 1.0, const DistanceOptions& opts = {});

  double operator()(Point2 x) const;

  Mode mode() const { return mode_; }
  Vec2 direction() const { return direction_; }
  double radius() const { return radius_; }
  const FarPoint& anchor() const { return anchor_; }

 private:
  BusemannApprox() = default;

  ConformalMetric metric_;
  Mode mode_ = Mode::ViaNetPoints;
  Vec2 direction_{};
  double radius_ = 0.0;
  DistanceOptions opts_;
  FarPoint anchor_;
  double anchor_to_base_ = 0.0;
  GeodesicPath ray_;
  double stride_ = 1.0;
};

double ideal_B(const ConformalMetric& metric, const PointSet& L, Vec2 v, double R, Point2 x,
               int band = 0, const DistanceOptions& opts = {});

struct GapReport {
  std::vector<Point2> samples;
  std::vector<double> lower;  // B_v approximant
  std::vector<double> upper;  // -B_{-v} approximant
  std::vector<double> gaps;   // upper - lower
  double max_gap = 0.0;
  double min_gap = 0.0;
};

GapReport singleton_gap(const ConformalMetric& metric, const PointSet& L, Vec2 v, double R,
                        const std::vector<Point2>& samples, const DistanceOptions& opts = {},
                        unsigned workers = 1);

/// Departure direction (Euclidean unit vector) at p of the minimising
/// geodesic from p to the far point of v chosen relative to p.
Vec2 direction_to_infinity(const ConformalMetric& metric, Point2 p, Vec2 v, const PointSet& L,
                           double R, int band = 0, const DistanceOptions& opts = {});

struct TransportTrace {
  GeodesicPath path;            // arclength runs from -length/2 to length/2; x at t = 0
  std::vector<double> times;    // sampled arclengths
  std::vector<double> values;   // B(path(t)) at those times
  std::vector<double> residuals;  // |B(t_i) - B(t_j) - (t_i - t_j)| over pairs i < j
  double max_residual = 0.0;
};

TransportTrace transport_line(const ConformalMetric& metric, const PointSet& L, Vec2 v, Point2 x,
                              double length, double R, int band = 0, int n_samples = 21,
                              const DistanceOptions& opts = {});

struct DecayReport {
  Vec2 direction{};
  std::vector<double> radii;
  std::vector<Point2> points;   // gamma(t)
  std::vector<Point2> nearest;  // closest point of L
  std::vector<double> distances;
  std::vector<double> ratios;   // distance / t
  std::vector<std::string> warnings;
};

/// d(gamma_{p,v}(t), L) / t along the asymptotic ray from p. The direction is
/// fixed with far points at radius R (defaults to the largest t).
DecayReport net_distance_decay(const ConformalMetric& metric, const PointSet& L, Point2 p, Vec2 v,
                               const std::vector<double>& radii, std::optional<double> R = {},
                               const DistanceOptions& opts = {});

enum class AreaMethod { PolarJacobi, GridSum };

struct AreaOptions {
  int directions = 256;
  double step = 1e-3;
  double grid_spacing = 0.05;
  int stencil = 5;  // offsets (i, j) with max(|i|, |j|) <= stencil
  unsigned workers = 1;
};

struct AreaGrowth {
  AreaMethod method = AreaMethod::PolarJacobi;
  std::vector<double> radii;
  std::vector<double> areas;
  std::vector<double> ratios;  // area / (pi r^2)
};

/// Area of the metric disk D(x, r) relative to pi r^2.
AreaGrowth area_growth(const ConformalMetric& metric, Point2 x, const std::vector<double>& radii,
                       AreaMethod method = AreaMethod::PolarJacobi, const AreaOptions& opts = {});

std::string to_string(AreaMethod m);
AreaMethod area_method_from_string(const std::string& s);

/// d_r built on asymptotic directions at `base` computed with far points of L.
ScaledMetric asymptotic_scaled_metric(const ConformalMetric& metric, const PointSet& L,
                                      Point2 base, double scale, double R,
                                      const DistanceOptions& opts = {});

}  // namespace rigidity
