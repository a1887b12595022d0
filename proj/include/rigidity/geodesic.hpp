#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rigidity/metric.hpp"

namespace rigidity {

struct ShootOptions {
  double step = 1e-3;
  /// When positive and the metric is flat outside bump supports, straight
  /// segments that stay clear of every support are advanced analytically in
  /// chunks of up to this length. Zero keeps the uniform step everywhere.
  double flat_step = 0.0;
};

struct GeodesicSample {
  double t = 0.0;  // arclength
  Point2 p{};
  Vec2 v{};        // chart velocity, unit g-norm
};

/// Arclength-sampled geodesic. With flat_step == 0 consecutive samples are
/// exactly `step` apart (the last step may be partial).
struct GeodesicPath {
  std::vector<GeodesicSample> samples;
  ShootOptions options;
  /// Largest | |v|_g - 1 | seen before per-step renormalisation.
  double max_speed_drift = 0.0;

  double length() const { return samples.empty() ? 0.0 : samples.back().t; }
  const GeodesicSample& front() const { return samples.front(); }
  const GeodesicSample& back() const { return samples.back(); }
};

struct JacobiTrace {
  std::vector<double> t;
  std::vector<double> values;      // J(t)
  std::vector<double> derivative;  // J'(t)
  std::vector<double> integral;    // int_0^t J
  std::optional<double> first_zero;
};

/// Chart velocity with unit g-norm at p, pointing along Euclidean angle theta.
Vec2 unit_velocity(const ConformalMetric& metric, Point2 p, double theta);
/// g-norm of a chart vector at p.
double g_norm(const ConformalMetric& metric, Point2 p, Vec2 v);

GeodesicPath shoot(const ConformalMetric& metric, Point2 x0, double theta0, double length,
                   double step);
GeodesicPath shoot(const ConformalMetric& metric, Point2 x0, double theta0, double length,
                   const ShootOptions& opts);
/// Same as shoot, starting from an explicit chart velocity (renormalised to
/// unit g-norm).
GeodesicPath shoot_velocity(const ConformalMetric& metric, Point2 x0, Vec2 v0, double length,
                            const ShootOptions& opts);

/// Solve J'' + K(gamma(t)) J = 0, J(0) = 0, J'(0) = 1 along a sampled path.
JacobiTrace jacobi(const ConformalMetric& metric, const GeodesicPath& path);

/// Geodesic state carried together with the normal Jacobi field and its
/// running integral. Used by the distance solver and by polar area sums.
struct FlowState {
  double t = 0.0;
  Point2 p{};
  Vec2 v{};
  double jacobi = 0.0;
  double jacobi_rate = 1.0;
  double jacobi_integral = 0.0;
};

/// Integrates the geodesic flow, optionally with the Jacobi field. Advances
/// with the fixed RK4 step inside curved regions and analytically along
/// straight runs when options.flat_step > 0.
class GeodesicFlow {
 public:
  GeodesicFlow(const ConformalMetric& metric, ShootOptions opts, bool with_jacobi);

  FlowState start(Point2 x0, Vec2 v0) const;
  /// Advance by min(step, remaining) along the flow, or by a longer analytic
  /// chunk on a straight run. Returns the length advanced.
  double advance(FlowState& s, double remaining);
  /// Run to arclength `length`, invoking on_step (if set) after every step.
  void run(FlowState& s, double length,
           const std::function<void(const FlowState&)>& on_step = {});

  double max_speed_drift() const { return max_drift_; }

 private:
  void rk4(FlowState& s, double h);

  const ConformalMetric* metric_;
  ShootOptions opts_;
  bool with_jacobi_;
  bool straight_runs_;
  double max_drift_ = 0.0;
};

/// Rows "t,x,y,vx,vy" with a header line.
std::string path_to_csv(const GeodesicPath& path);

}  // namespace rigidity
