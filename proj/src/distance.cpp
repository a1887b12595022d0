#include "rigidity/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {
namespace {

struct Shot {
  Point2 p{};
  Vec2 v{};
  double jacobi = 0.0;
};

Shot fire(const ConformalMetric& metric, Point2 x, double theta, double length,
          const ShootOptions& opts) {
  GeodesicFlow flow(metric, opts, true);
  FlowState s = flow.start(x, unit_from_angle(theta));
  flow.run(s, length);
  return {s.p, s.v, s.jacobi};
}

struct Branch {
  bool converged = false;
  double theta = 0.0;
  double length = 0.0;
  double miss = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Newton iteration on (departure angle, arclength). The angle column of the
// Jacobian is the normal Jacobi field at the endpoint, the length column is
// the endpoint velocity.
Branch newton_shoot(const ConformalMetric& metric, Point2 x, Point2 y, double theta,
                    double length, const DistanceOptions& opts) {
  const ShootOptions so{opts.step, opts.flat_step};
  Branch b;
  b.theta = theta;
  b.length = length;
  Shot shot = fire(metric, x, theta, length, so);
  double miss = dist(shot.p, y);
  for (int it = 0; it <= opts.max_newton; ++it) {
    b.miss = miss;
    b.iterations = it;
    if (miss < opts.tolerance) {
      b.converged = true;
      return b;
    }
    if (it == opts.max_newton) break;
    const Vec2 vhat = normalized(shot.v);
    const Vec2 col_theta = perp(vhat) * (shot.jacobi * std::exp(-metric.phi(shot.p)));
    const Vec2 col_len = shot.v;
    const double det = cross(col_theta, col_len);
    if (std::abs(det) <= 1e-14 * norm(col_theta) * norm(col_len) || det == 0.0) break;
    const Vec2 rhs = y - shot.p;
    double dtheta = cross(rhs, col_len) / det;
    double dlen = cross(col_theta, rhs) / det;
    const double cap = 0.5;
    if (std::abs(dtheta) > cap) {
      const double s = cap / std::abs(dtheta);
      dtheta *= s;
      dlen *= s;
    }
    bool improved = false;
    double lambda = 1.0;
    for (int bt = 0; bt < 12; ++bt, lambda *= 0.5) {
      const double th = b.theta + lambda * dtheta;
      const double len = b.length + lambda * dlen;
      if (!(len > 0.0)) continue;
      const Shot trial = fire(metric, x, th, len, so);
      const double m = dist(trial.p, y);
      if (m < miss) {
        b.theta = th;
        b.length = len;
        shot = trial;
        miss = m;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return b;
}

// Euclidean gap from p to the nearest bump support; zero for metrics that
// are curved everywhere.
double curvature_gap(const ConformalMetric& metric, Point2 p) {
  if (!metric.compactly_supported()) return 0.0;
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& b : metric.bumps()) gap = std::min(gap, dist(p, b.center) - b.radius);
  return std::max(gap, 0.0);
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

GeodesicPath straight_path(const ConformalMetric& metric, Point2 x, Point2 y,
                           const DistanceOptions& opts) {
  const double len = dist(x, y);
  return shoot(metric, x, angle_of(y - x), len,
               ShootOptions{std::min(opts.step, len), opts.flat_step});
}

void thomas_solve(std::vector<double>& rhs) {
  // tridiag(-1, 2, -1) x = rhs, in place
  const std::size_t n = rhs.size();
  if (n == 0) return;
  std::vector<double> c(n);
  c[0] = -0.5;
  rhs[0] *= 0.5;
  for (std::size_t i = 1; i < n; ++i) {
    const double den = 2.0 + c[i - 1];
    c[i] = -1.0 / den;
    rhs[i] = (rhs[i] + rhs[i - 1]) / den;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
}

}  // namespace

RelaxedPath relax_path(const ConformalMetric& metric, Point2 x, Point2 y, int nodes,
                       int max_iterations, const std::vector<Point2>* init) {
  if (nodes < 3) throw ArgumentError("relax_path: need at least three nodes");
  const auto n = static_cast<std::size_t>(nodes);
  RelaxedPath out;
  if (init) {
    if (init->size() != n) throw ArgumentError("relax_path: init has wrong node count");
    out.nodes = *init;
  } else {
    out.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      out.nodes[i] = x + (y - x) * (static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.nodes.front() = x;
  out.nodes.back() = y;

  auto energy = [&](const std::vector<Point2>& pts) {
    double e = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Point2 mid = (pts[i] + pts[i + 1]) * 0.5;
      e += std::exp(2.0 * metric.phi(mid)) * norm2(pts[i + 1] - pts[i]);
    }
    return e;
  };

  std::vector<Vec2> grad(n);
  std::vector<double> gx(n - 2), gy(n - 2);
  std::vector<Point2> trial(n);
  double e = energy(out.nodes);
  double alpha = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    std::fill(grad.begin(), grad.end(), Vec2{});
    double wsum = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const Vec2 d = out.nodes[i + 1] - out.nodes[i];
      double phi;
      Vec2 gphi;
      metric.phi_grad((out.nodes[i] + out.nodes[i + 1]) * 0.5, phi, gphi);
      const double w = std::exp(2.0 * phi);
      wsum += w;
      const Vec2 common = gphi * (w * norm2(d));
      grad[i] += common - d * (2.0 * w);
      grad[i + 1] += common + d * (2.0 * w);
    }
    const double scale = 2.0 * wsum / static_cast<double>(n - 1);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      gx[i - 1] = grad[i].x / scale;
      gy[i - 1] = grad[i].y / scale;
    }
    thomas_solve(gx);
    thomas_solve(gy);
    double slope = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) slope += grad[i].x * gx[i - 1] + grad[i].y * gy[i - 1];
    out.gradient_norm = std::sqrt(std::max(slope, 0.0));
    out.iterations = it;
    if (slope <= 1e-26 * std::max(e, 1.0)) break;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      trial = out.nodes;
      for (std::size_t i = 1; i + 1 < n; ++i) {
        trial[i].x -= alpha * gx[i - 1];
        trial[i].y -= alpha * gy[i - 1];
      }
      const double et = energy(trial);
      if (et <= e - 1e-4 * alpha * slope) {
        out.nodes.swap(trial);
        e = et;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    alpha = std::min(1.0, alpha * 2.0);
  }
  out.length = polyline_length(metric, out.nodes);
  return out;
}

DistanceResult distance(const ConformalMetric& metric, Point2 x, Point2 y,
                        const DistanceOptions& opts) {
  if (!is_finite(x) || !is_finite(y)) throw ArgumentError("distance: non-finite endpoint");
  if (x == y) throw ArgumentError("distance: endpoints coincide");
  if (!(opts.tolerance > 0.0) || !(opts.step > 0.0))
    throw ArgumentError("distance: tolerance and step must be positive");
  DistanceResult res;
  const double chord = dist(x, y);

  // On a nonnegative compactly supported metric a chord that misses every
  // support is Euclidean, hence globally shortest.
  if (metric.nonnegative() && metric.compactly_supported() &&
      !metric.segment_touches_support(x, y)) {
    res.value = chord;
    res.diagnostics.method = "chord";
    res.diagnostics.departure_angle = angle_of(y - x);
    res.diagnostics.branch_lengths = {chord};
    if (opts.keep_path) res.path = straight_path(metric, x, y, opts);
    return res;
  }

  // Shoot from the endpoint nearer the curvature: far from it the branches
  // separate only by tiny departure angles.
  const bool swap = curvature_gap(metric, y) < curvature_gap(metric, x) ||
                    (curvature_gap(metric, y) == curvature_gap(metric, x) && lex_less(y, x));
  const Point2 a = swap ? y : x;
  const Point2 b = swap ? x : y;
  const double chord_angle_ab = angle_of(b - a);

  const RelaxedPath relaxed = relax_path(metric, a, b, opts.relax_nodes, opts.relax_iterations);
  const double theta_relax = angle_of(relaxed.nodes[1] - relaxed.nodes[0]);
  const double len_guess = relaxed.length;

  std::vector<Branch> branches;
  branches.push_back(newton_shoot(metric, a, b, theta_relax, len_guess, opts));
  const bool primary_ok = branches.front().converged;
  const int starts = std::max(0, opts.multi_start);
  for (int k = 0; k < starts; ++k) {
    const double frac = starts == 1 ? 0.0 : static_cast<double>(k) / (starts - 1) - 0.5;
    branches.push_back(
        newton_shoot(metric, a, b, chord_angle_ab + frac * opts.fan, len_guess, opts));
  }

  std::vector<Branch> good;
  double best_miss = std::numeric_limits<double>::infinity();
  for (const auto& br : branches) {
    best_miss = std::min(best_miss, br.miss);
    if (!br.converged) continue;
    const bool dup = std::any_of(good.begin(), good.end(), [&](const Branch& g) {
      return std::abs(wrap_angle(g.theta - br.theta)) < 1e-7 &&
             std::abs(g.length - br.length) < 1e-7;
    });
    if (!dup) good.push_back(br);
  }
  if (good.empty())
    throw SolverError("distance: no shooting candidate converged", best_miss);

  std::stable_sort(good.begin(), good.end(),
                   [](const Branch& p, const Branch& q) { return p.length < q.length; });
  const Branch& best = good.front();
  double theta_x = best.theta;
  if (swap) {
    const Shot back = fire(metric, a, best.theta, best.length, {opts.step, opts.flat_step});
    theta_x = angle_of(-back.v);
  }
  res.value = best.length;
  res.diagnostics.iterations = best.iterations;
  res.diagnostics.endpoint_miss = best.miss;
  res.diagnostics.departure_angle = wrap_angle(theta_x);
  res.diagnostics.angle_residual = std::abs(wrap_angle(best.theta - theta_relax));
  const bool primary_best = primary_ok && std::abs(branches.front().length - best.length) < 1e-7;
  res.diagnostics.method = primary_best ? "shooting" : "multi-start";
  for (const auto& g : good) res.diagnostics.branch_lengths.push_back(g.length);
  if (opts.keep_path)
    res.path = shoot(metric, x, theta_x, best.length,
                     ShootOptions{std::min(opts.step, best.length), opts.flat_step});
  return res;
}

DistanceMatrix distance_matrix(const ConformalMetric& metric, const std::vector<Point2>& points,
                               const DistanceOptions& opts, unsigned workers) {
  const std::size_t n = points.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (points[i] == points[j]) throw ArgumentError("distance_matrix: repeated point");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - (n > 0)) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> values(pairs.size());
  DistanceOptions o = opts;
  o.keep_path = false;
  parallel_for(pairs.size(), workers, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    try {
      values[k] = distance(metric, points[i], points[j], o).value;
    } catch (const SolverError& e) {
      throw SolverError("distance_matrix: pair (" + std::to_string(i) + ", " +
                            std::to_string(j) + "): " + e.what(),
                        e.best_residual());
    }
  });
  DistanceMatrix m(n);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    m(i, j) = values[k];
    m(j, i) = values[k];
  }
  return m;
}

std::string matrix_to_csv(const DistanceMatrix& m) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t j = 0; j < m.size(); ++j) os << (j ? "," : "") << j;
  os << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
  return os.str();
}

DistanceMatrix matrix_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line)) throw ArgumentError("matrix csv: missing header");
  const std::size_t n = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  DistanceMatrix m(n);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= n) throw ArgumentError("matrix csv: too many rows");
    std::istringstream ls(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ls, cell, ',')) {
      if (col >= n) throw ArgumentError("matrix csv: too many columns in row " + std::to_string(row));
      m(row, col++) = std::stod(cell);
    }
    if (col != n) throw ArgumentError("matrix csv: short row " + std::to_string(row));
    ++row;
  }
  if (row != n) throw ArgumentError("matrix csv: expected " + std::to_string(n) + " rows");
  return m;
}

ScaledMetric::ScaledMetric(ConformalMetric metric, Point2 base, double scale)
    : ScaledMetric(std::move(metric), base, scale, [](Vec2 v) { return v; }) {}

ScaledMetric::ScaledMetric(ConformalMetric metric, Point2 base, double scale,
                           DirectionMap directions)
    : metric_(std::move(metric)),
      base_(base),
      scale_(scale),
      map_(std::move(directions)),
      cache_(std::make_shared<Cache>()) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ArgumentError("scale r must be positive");
}

Vec2 ScaledMetric::direction(Vec2 v) const {
  const auto key = std::make_pair(v.x, v.y);
  {
    std::lock_guard lock(cache_->mutex);
    if (auto it = cache_->values.find(key); it != cache_->values.end()) return it->second;
  }
  const Vec2 d = normalized(map_(v));
  std::lock_guard lock(cache_->mutex);
  return cache_->values.emplace(key, d).first->second;
}

Point2 ScaledMetric::embed(Point2 x, const ShootOptions& opts) const {
  const double a = norm(x);
  if (a == 0.0) return base_;
  const Vec2 d = direction(x / a);
  GeodesicFlow flow(metric_, opts, false);
  FlowState s = flow.start(base_, d);
  flow.run(s, a * scale_);
  return s.p;
}

double scaled_distance(const ScaledMetric& sm, Point2 x, Point2 y, const DistanceOptions& opts) {
  const Point2 tx = sm.embed(x, {opts.step, opts.flat_step});
  const Point2 ty = sm.embed(y, {opts.step, opts.flat_step});
  if (tx == ty) return 0.0;
  DistanceOptions o = opts;
  o.keep_path = false;
  return distance(sm.metric(), tx, ty, o).value / sm.scale();
}

}  // namespace rigidity
