#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "rigidity/vec2.hpp"

namespace rigidity {

/// Smooth compactly supported bump phi(p) = A * exp(1 / (s^2 - 1)) for
/// s = |p - c| / rho < 1, and phi = 0 otherwise.
struct Bump {
  double amplitude = 0.0;
  Point2 center{};
  double radius = 1.0;
};

struct MetricSample {
  double phi = 0.0;
  Vec2 grad_phi{};
  double laplacian_phi = 0.0;
  double curvature = 0.0;  // K = -exp(-2 phi) * laplacian(phi)
};

/// Conformal metric g = exp(2 phi) (dx^2 + dy^2) on the plane with closed-form
/// phi, grad phi and laplacian phi. Immutable after construction.
class ConformalMetric {
 public:
  enum class Kind { Flat, Bump, BumpSum, Stereographic };

  static ConformalMetric flat();
  static ConformalMetric bump(double amplitude, Point2 center, double radius);
  static ConformalMetric bump_sum(std::vector<Bump> bumps);
  /// phi = -log(1 + (kappa/4)|p|^2), constant curvature kappa.
  static ConformalMetric stereographic(double kappa);

  Kind kind() const { return kind_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  double kappa() const { return kappa_; }

  MetricSample eval(Point2 p) const;
  double phi(Point2 p) const;
  /// phi and its gradient, without the laplacian.
  void phi_grad(Point2 p, double& phi, Vec2& grad) const;
  double curvature(Point2 p) const { return eval(p).curvature; }
  double conformal_factor(Point2 p) const;  // exp(phi)

  /// True where the metric is exactly Euclidean in a neighbourhood of p.
  bool flat_at(Point2 p) const;
  /// True when phi vanishes outside a compact set (Flat and bump kinds).
  bool compactly_supported() const { return kind_ != Kind::Stereographic; }
  /// All bump amplitudes are >= 0, so conformal lengths dominate Euclidean ones.
  bool nonnegative() const;
  /// Length a straight segment from p along unit direction u can travel before
  /// touching any bump support, capped at max_len. Zero when p is inside a
  /// support. Only meaningful when compactly_supported().
  double clear_length(Point2 p, Vec2 u, double max_len) const;
  /// Does the closed segment [a, b] meet any bump support?
  bool segment_touches_support(Point2 a, Point2 b) const;

  nlohmann::json to_json() const;
  static ConformalMetric from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::Flat;
  std::vector<Bump> bumps_;
  double kappa_ = 0.0;
};

MetricSample eval_metric(const ConformalMetric& metric, Point2 p);
double gaussian_curvature(const ConformalMetric& metric, Point2 p);

/// Conformal length of a polyline (midpoint rule per segment).
double polyline_length(const ConformalMetric& metric, const std::vector<Point2>& pts);

}  // namespace rigidity
