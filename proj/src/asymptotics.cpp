#include "rigidity/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {
namespace {

double solve(const ConformalMetric& metric, Point2 a, Point2 b, const DistanceOptions& opts) {
  if (a == b) return 0.0;
  DistanceOptions o = opts;
  o.keep_path = false;
  return distance(metric, a, b, o).value;
}

Vec2 unit_or_throw(Vec2 v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw ArgumentError("direction must be a nonzero finite vector");
  return v / n;
}

}  // namespace

Point2 point_at(const GeodesicPath& path, double t) {
  const auto& s = path.samples;
  if (s.empty()) throw ArgumentError("point_at: empty path");
  if (t <= s.front().t) return s.front().p;
  if (t >= s.back().t) return s.back().p;
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double x, const GeodesicSample& g) { return x < g.t; });
  const GeodesicSample& b = *it;
  const GeodesicSample& a = *(it - 1);
  const double h = b.t - a.t;
  const double u = (t - a.t) / h;
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
  return a.p * h00 + a.v * (h10 * h) + b.p * h01 + b.v * (h11 * h);
}

double busemann_ray(const ConformalMetric& metric, const GeodesicPath& ray, Point2 x, double T,
                    double stride, const DistanceOptions& opts) {
  if (!(T > 0.0) || !(stride > 0.0)) throw ArgumentError("busemann_ray: T and stride must be positive");
  if (T > ray.length() * (1.0 + 1e-12)) throw ArgumentError("busemann_ray: ray shorter than T");
  double best = -std::numeric_limits<double>::infinity();
  for (long k = 1;; ++k) {
    const double t = std::min(static_cast<double>(k) * stride, T);
    best = std::max(best, t - solve(metric, point_at(ray, t), x, opts));
    if (t >= T) break;
  }
  return best;
}

FarPoint far_point(const PointSet& L, Vec2 v, double R, Point2 origin, int band) {
  if (!(R > 0.0)) throw ArgumentError("truncation radius must be positive");
  if (band < 0) throw ArgumentError("band index must be nonnegative");
  const auto seq = narrow_drift(L, unit_or_throw(v), 1, origin, std::ldexp(R, band));
  if (seq.points.empty())
    throw InsufficientWindowError("no point of the net drifts to radius " +
                                  std::to_string(std::ldexp(R, band)) + " inside the window");
  return {seq.points.front(), seq.residuals.front()};
}

BusemannApprox BusemannApprox::via_net_points(const ConformalMetric& metric, const PointSet& L,
                                              Vec2 v, double R, int band,
                                              const DistanceOptions& opts) {
  BusemannApprox b;
  b.metric_ = metric;
  b.mode_ = Mode::ViaNetPoints;
  b.direction_ = unit_or_throw(v);
  b.radius_ = R;
  b.opts_ = opts;
  b.anchor_ = far_point(L, b.direction_, R, {0.0, 0.0}, band);
  b.anchor_to_base_ = solve(metric, b.anchor_.point, {0.0, 0.0}, opts);
  return b;
}

BusemannApprox BusemannApprox::via_ray(const ConformalMetric& metric, GeodesicPath ray, double R,
                                       double stride, const DistanceOptions& opts) {
  if (ray.samples.size() < 2) throw ArgumentError("via_ray: ray needs samples");
  if (R > ray.length() * (1.0 + 1e-12)) throw ArgumentError("via_ray: ray shorter than R");
  BusemannApprox b;
  b.metric_ = metric;
  b.mode_ = Mode::ViaRay;
  b.direction_ = normalized(ray.front().v);
  b.radius_ = R;
  b.opts_ = opts;
  b.ray_ = std::move(ray);
  b.stride_ = stride;
  return b;
}

double BusemannApprox::operator()(Point2 x) const {
  if (mode_ == Mode::ViaRay) return busemann_ray(metric_, ray_, x, radius_, stride_, opts_);
  return anchor_to_base_ - solve(metric_, anchor_.point, x, opts_);
}

double ideal_B(const ConformalMetric& metric, const PointSet& L, Vec2 v, double R, Point2 x,
               int band, const DistanceOptions& opts) {
  return BusemannApprox::via_net_points(metric, L, v, R, band, opts)(x);
}

GapReport singleton_gap(const ConformalMetric& metric, const PointSet& L, Vec2 v, double R,
                        const std::vector<Point2>& samples, const DistanceOptions& opts,
                        unsigned workers) {
  if (samples.empty()) throw ArgumentError("singleton_gap: no sample points");
  const auto lower = BusemannApprox::via_net_points(metric, L, v, R, 0, opts);
  const auto opposite = BusemannApprox::via_net_points(metric, L, -v, R, 0, opts);
  GapReport rep;
  rep.samples = samples;
  rep.lower.resize(samples.size());
  rep.upper.resize(samples.size());
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    rep.lower[i] = lower(samples[i]);
    rep.upper[i] = -opposite(samples[i]);
  });
  for (std::size_t i = 0; i < samples.size(); ++i) rep.gaps.push_back(rep.upper[i] - rep.lower[i]);
  rep.max_gap = *std::max_element(rep.gaps.begin(), rep.gaps.end());
  rep.min_gap = *std::min_element(rep.gaps.begin(), rep.gaps.end());
  return rep;
}

Vec2 direction_to_infinity(const ConformalMetric& metric, Point2 p, Vec2 v, const PointSet& L,
                           double R, int band, const DistanceOptions& opts) {
  const FarPoint far = far_point(L, v, R, p, band);
  DistanceOptions o = opts;
  o.keep_path = false;
  return unit_from_angle(distance(metric, p, far.point, o).diagnostics.departure_angle);
}

TransportTrace transport_line(const ConformalMetric& metric, const PointSet& L, Vec2 v, Point2 x,
                              double length, double R, int band, int n_samples,
                              const DistanceOptions& opts) {
  if (!(length > 0.0)) throw ArgumentError("transport_line: length must be positive");
  if (n_samples < 2) throw ArgumentError("transport_line: need at least two samples");
  v = unit_or_throw(v);
  const ShootOptions so{opts.step, opts.flat_step};
  const Vec2 fwd = direction_to_infinity(metric, x, v, L, R, band, opts);
  const Vec2 bwd = direction_to_infinity(metric, x, -v, L, R, band, opts);
  const auto ahead = shoot_velocity(metric, x, fwd, 0.5 * length, so);
  const auto behind = shoot_velocity(metric, x, bwd, 0.5 * length, so);

  TransportTrace tr;
  tr.path.options = so;
  tr.path.max_speed_drift = std::max(ahead.max_speed_drift, behind.max_speed_drift);
  for (auto it = behind.samples.rbegin(); it != behind.samples.rend(); ++it)
    tr.path.samples.push_back({-it->t, it->p, -it->v});
  tr.path.samples.insert(tr.path.samples.end(), ahead.samples.begin() + 1, ahead.samples.end());

  const auto B = BusemannApprox::via_net_points(metric, L, v, R, band, opts);
  for (int i = 0; i < n_samples; ++i) {
    const double t = -0.5 * length + length * i / (n_samples - 1);
    tr.times.push_back(t);
    tr.values.push_back(B(point_at(tr.path, t)));
  }
  for (int i = 0; i < n_samples; ++i)
    for (int j = i + 1; j < n_samples; ++j) {
      const double r = std::abs((tr.values[j] - tr.values[i]) - (tr.times[j] - tr.times[i]));
      tr.residuals.push_back(r);
      tr.max_residual = std::max(tr.max_residual, r);
    }
  return tr;
}

DecayReport net_distance_decay(const ConformalMetric& metric, const PointSet& L, Point2 p, Vec2 v,
                               const std::vector<double>& radii, std::optional<double> R,
                               const DistanceOptions& opts) {
  if (radii.empty()) throw ArgumentError("net_distance_decay: no radii");
  for (double t : radii)
    if (!(t > 0.0)) throw ArgumentError("net_distance_decay: radii must be positive");
  if (L.empty()) throw ArgumentError("net_distance_decay: empty net");
  const double tmax = *std::max_element(radii.begin(), radii.end());
  DecayReport rep;
  rep.direction = direction_to_infinity(metric, p, v, L, R.value_or(tmax), 0, opts);
  const auto ray = shoot_velocity(metric, p, rep.direction, tmax, {opts.step, opts.flat_step});
  for (double t : radii) {
    const Point2 g = point_at(ray, t);
    if (!L.window().contains(g))
      rep.warnings.push_back("ray leaves the window before t = " + std::to_string(t));
    double best = std::numeric_limits<double>::infinity();
    Point2 arg{};
    for (const Point2& c : L.nearest(g, 16)) {
      const double d = solve(metric, g, c, opts);
      if (d < best || (d == best && lex_less(c, arg))) {
        best = d;
        arg = c;
      }
    }
    rep.radii.push_back(t);
    rep.points.push_back(g);
    rep.nearest.push_back(arg);
    rep.distances.push_back(best);
    rep.ratios.push_back(best / t);
  }
  return rep;
}

ScaledMetric asymptotic_scaled_metric(const ConformalMetric& metric, const PointSet& L,
                                      Point2 base, double scale, double R,
                                      const DistanceOptions& opts) {
  return ScaledMetric(metric, base, scale, [metric, L, base, R, opts](Vec2 v) {
    return direction_to_infinity(metric, base, v, L, R, 0, opts);
  });
}

}  // namespace rigidity
