#include "rigidity/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rigidity/errors.hpp"

namespace rigidity {
namespace {

struct FlowRate {
  Vec2 dp{};
  Vec2 dv{};
  double dj = 0.0;
  double ddj = 0.0;
  double da = 0.0;
};

// Chart acceleration of a geodesic of exp(2 phi) delta. The Christoffel
// symbols are G^1_11 = phi_x, G^1_12 = phi_y, G^1_22 = -phi_x,
// G^2_22 = phi_y, G^2_12 = phi_x, G^2_11 = -phi_y.
Vec2 acceleration(const Vec2& g, const Vec2& v) {
  const double vxx = v.x * v.x, vxy = v.x * v.y, vyy = v.y * v.y;
  return {-(g.x * vxx + 2.0 * g.y * vxy - g.x * vyy),
          -(-g.y * vxx + 2.0 * g.x * vxy + g.y * vyy)};
}

void validate_shoot(Point2 x0, double dir_check, double length, double step) {
  if (!is_finite(x0) || !std::isfinite(dir_check) || !std::isfinite(length) ||
      !std::isfinite(step))
    throw ArgumentError("shoot: non-finite input");
  if (!(step > 0.0)) throw ArgumentError("shoot: step must be positive");
  if (!(length > 0.0)) throw ArgumentError("shoot: length must be positive");
  if (step > length) throw ArgumentError("shoot: step exceeds length");
}

}  // namespace

Vec2 unit_velocity(const ConformalMetric& metric, Point2 p, double theta) {
  return unit_from_angle(theta) * std::exp(-metric.phi(p));
}

double g_norm(const ConformalMetric& metric, Point2 p, Vec2 v) {
  return std::exp(metric.phi(p)) * norm(v);
}

GeodesicFlow::GeodesicFlow(const ConformalMetric& metric, ShootOptions opts, bool with_jacobi)
    : metric_(&metric),
      opts_(opts),
      with_jacobi_(with_jacobi),
      straight_runs_(opts.flat_step > 0.0 && metric.compactly_supported()) {
  if (!(opts_.step > 0.0) || !std::isfinite(opts_.step))
    throw ArgumentError("geodesic step must be positive");
}

FlowState GeodesicFlow::start(Point2 x0, Vec2 v0) const {
  FlowState s;
  s.p = x0;
  s.v = v0 / g_norm(*metric_, x0, v0);
  return s;
}

void GeodesicFlow::rk4(FlowState& s, double h) {
  auto rate = [&](const Point2& p, const Vec2& v, double j, double dj) {
    FlowRate r;
    r.dp = v;
    if (with_jacobi_) {
      const auto m = metric_->eval(p);
      r.dv = acceleration(m.grad_phi, v);
      r.dj = dj;
      r.ddj = -m.curvature * j;
      r.da = j;
    } else {
      double phi;
      Vec2 g;
      metric_->phi_grad(p, phi, g);
      r.dv = acceleration(g, v);
    }
    return r;
  };
  const auto k1 = rate(s.p, s.v, s.jacobi, s.jacobi_rate);
  const double h2 = 0.5 * h;
  const auto k2 = rate(s.p + k1.dp * h2, s.v + k1.dv * h2, s.jacobi + k1.dj * h2,
                       s.jacobi_rate + k1.ddj * h2);
  const auto k3 = rate(s.p + k2.dp * h2, s.v + k2.dv * h2, s.jacobi + k2.dj * h2,
                       s.jacobi_rate + k2.ddj * h2);
  const auto k4 = rate(s.p + k3.dp * h, s.v + k3.dv * h, s.jacobi + k3.dj * h,
                       s.jacobi_rate + k3.ddj * h);
  const double w = h / 6.0;
  s.p += (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp) * w;
  s.v += (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv) * w;
  if (with_jacobi_) {
    s.jacobi += (k1.dj + 2.0 * k2.dj + 2.0 * k3.dj + k4.dj) * w;
    s.jacobi_rate += (k1.ddj + 2.0 * k2.ddj + 2.0 * k3.ddj + k4.ddj) * w;
    s.jacobi_integral += (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da) * w;
  }
  const double speed = g_norm(*metric_, s.p, s.v);
  max_drift_ = std::max(max_drift_, std::abs(speed - 1.0));
  s.v = s.v / speed;
  s.t += h;
}

double GeodesicFlow::advance(FlowState& s, double remaining) {
  if (remaining <= 0.0) return 0.0;
  if (straight_runs_) {
    const double cap = std::min(remaining, opts_.flat_step);
    const Vec2 u = normalized(s.v);
    const double run = metric_->clear_length(s.p, u, cap);
    if (run >= opts_.step || (run == remaining && run > 0.0)) {
      s.p += u * run;
      s.v = u;
      s.jacobi_integral += s.jacobi * run + 0.5 * s.jacobi_rate * run * run;
      s.jacobi += s.jacobi_rate * run;
      s.t += run;
      return run;
    }
  }
  const double h = std::min(opts_.step, remaining);
  rk4(s, h);
  return h;
}

void GeodesicFlow::run(FlowState& s, double length,
                       const std::function<void(const FlowState&)>& on_step) {
  const double t_end = s.t + length;
  while (s.t < t_end) {
    const double rem = t_end - s.t;
    const double h = advance(s, rem);
    if (h == rem) s.t = t_end;
    if (on_step) on_step(s);
  }
}

GeodesicPath shoot(const ConformalMetric& metric, Point2 x0, double theta0, double length,
                   double step) {
  return shoot(metric, x0, theta0, length, ShootOptions{step, 0.0});
}

GeodesicPath shoot(const ConformalMetric& metric, Point2 x0, double theta0, double length,
                   const ShootOptions& opts) {
  validate_shoot(x0, theta0, length, opts.step);
  return shoot_velocity(metric, x0, unit_from_angle(theta0), length, opts);
}

GeodesicPath shoot_velocity(const ConformalMetric& metric, Point2 x0, Vec2 v0, double length,
                            const ShootOptions& opts) {
  validate_shoot(x0, norm(v0), length, opts.step);
  if (!(norm(v0) > 0.0)) throw ArgumentError("shoot: zero initial velocity");
  GeodesicFlow flow(metric, opts, false);
  FlowState s = flow.start(x0, v0);
  GeodesicPath path;
  path.options = opts;
  const auto expected = static_cast<std::size_t>(std::ceil(length / opts.step)) + 1;
  if (opts.flat_step == 0.0) path.samples.reserve(expected);
  path.samples.push_back({0.0, s.p, s.v});
  if (opts.flat_step == 0.0) {
    // uniform grid t_k = k h, then one partial step; times are set exactly
    const auto full = static_cast<long>(std::floor(length / opts.step * (1.0 + 1e-12)));
    for (long k = 1; k <= full; ++k) {
      flow.advance(s, opts.step);
      s.t = static_cast<double>(k) * opts.step;
      path.samples.push_back({s.t, s.p, s.v});
    }
    const double rest = length - static_cast<double>(full) * opts.step;
    if (rest > 1e-12 * length) {
      flow.advance(s, rest);
      path.samples.push_back({length, s.p, s.v});
    } else {
      path.samples.back().t = length;
    }
  } else {
    flow.run(s, length, [&](const FlowState& st) { path.samples.push_back({st.t, st.p, st.v}); });
  }
  path.max_speed_drift = flow.max_speed_drift();
  return path;
}

JacobiTrace jacobi(const ConformalMetric& metric, const GeodesicPath& path) {
  if (path.samples.size() < 2) throw ArgumentError("jacobi: path needs at least two samples");
  JacobiTrace out;
  const auto n = path.samples.size();
  out.t.reserve(n);
  out.values.reserve(n);
  out.derivative.reserve(n);
  out.integral.reserve(n);
  double j = 0.0, dj = 1.0, area = 0.0;
  out.t.push_back(path.samples[0].t);
  out.values.push_back(j);
  out.derivative.push_back(dj);
  out.integral.push_back(area);
  for (std::size_t i = 1; i < n; ++i) {
    const auto& a = path.samples[i - 1];
    const auto& b = path.samples[i];
    const double h = b.t - a.t;
    if (!(h > 0.0)) throw ArgumentError("jacobi: path arclength must increase");
    // cubic Hermite midpoint from endpoint positions and velocities
    const Point2 mid = (a.p + b.p) * 0.5 + (a.v - b.v) * (h / 8.0);
    const double ka = gaussian_curvature(metric, a.p);
    const double km = gaussian_curvature(metric, mid);
    const double kb = gaussian_curvature(metric, b.p);
    const double h2 = 0.5 * h;
    const double k1j = dj, k1d = -ka * j;
    const double k2j = dj + h2 * k1d, k2d = -km * (j + h2 * k1j);
    const double k3j = dj + h2 * k2d, k3d = -km * (j + h2 * k2j);
    const double k4j = dj + h * k3d, k4d = -kb * (j + h * k3j);
    const double jn = j + h / 6.0 * (k1j + 2.0 * k2j + 2.0 * k3j + k4j);
    const double djn = dj + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
    // Simpson on J using the RK stage values at the midpoint
    const double jmid = 0.5 * (j + jn) + h / 8.0 * (dj - djn);
    area += h / 6.0 * (j + 4.0 * jmid + jn);
    if (!out.first_zero && j > 0.0 && jn <= 0.0) {
      out.first_zero = a.t + h * j / (j - jn);
    }
    j = jn;
    dj = djn;
    out.t.push_back(b.t);
    out.values.push_back(j);
    out.derivative.push_back(dj);
    out.integral.push_back(area);
  }
  return out;
}

std::string path_to_csv(const GeodesicPath& path) {
  std::ostringstream os;
  os.precision(17);
  os << "t,x,y,vx,vy\n";
  for (const auto& s : path.samples)
    os << s.t << ',' << s.p.x << ',' << s.p.y << ',' << s.v.x << ',' << s.v.y << '\n';
  return os.str();
}

}  // namespace rigidity
