#include "rigidity/nets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/rng.hpp"

namespace rigidity {
namespace {

constexpr double kIndexSlack = 1e-9;

bool lex_tie_less(double da, Point2 a, double db, Point2 b) {
  return da < db || (da == db && lex_less(a, b));
}

nlohmann::json provenance_json(const Provenance& p) {
  switch (p.kind) {
    case Provenance::Kind::Lattice:
      return {{"kind", "lattice"}, {"spacing", p.spacing}};
    case Provenance::Kind::Poisson:
      return {{"kind", "poisson"}, {"intensity", p.intensity}};
    case Provenance::Kind::Jittered:
      return {{"kind", "jittered"}, {"spacing", p.spacing}, {"jitter", p.jitter}};
    case Provenance::Kind::Custom:
      break;
  }
  return {{"kind", "custom"}};
}

void check_window(const Box& w) {
  if (!std::isfinite(w.xmin) || !std::isfinite(w.xmax) || !std::isfinite(w.ymin) ||
      !std::isfinite(w.ymax) || w.degenerate())
    throw ArgumentError("window must be a finite non-degenerate box");
}

}  // namespace

double Box::exit_length(Point2 p, Vec2 u) const {
  double t = std::numeric_limits<double>::infinity();
  if (u.x > 0) t = std::min(t, (xmax - p.x) / u.x);
  if (u.x < 0) t = std::min(t, (xmin - p.x) / u.x);
  if (u.y > 0) t = std::min(t, (ymax - p.y) / u.y);
  if (u.y < 0) t = std::min(t, (ymin - p.y) / u.y);
  return std::max(t, 0.0);
}

PointSet PointSet::from_points(std::vector<Point2> points, Box window, Provenance provenance,
                               std::uint64_t seed) {
  check_window(window);
  for (const auto& p : points) {
    if (!is_finite(p)) throw ArgumentError("point set: non-finite point");
    if (!window.contains(p)) throw ArgumentError("point set: point outside the window");
  }
  std::sort(points.begin(), points.end(), lex_less);
  if (std::adjacent_find(points.begin(), points.end()) != points.end())
    throw ArgumentError("point set: repeated point");
  PointSet s;
  s.points_ = std::move(points);
  s.window_ = window;
  s.provenance_ = provenance;
  s.seed_ = seed;
  s.build_grid();
  return s;
}

PointSet PointSet::lattice(double spacing, Box window, bool force_materialize) {
  check_window(window);
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    throw ArgumentError("lattice spacing must be positive");
  PointSet s;
  s.window_ = window;
  s.provenance_ = Provenance::lattice(spacing);
  s.imin_ = static_cast<long>(std::ceil(window.xmin / spacing - kIndexSlack));
  s.imax_ = static_cast<long>(std::floor(window.xmax / spacing + kIndexSlack));
  s.jmin_ = static_cast<long>(std::ceil(window.ymin / spacing - kIndexSlack));
  s.jmax_ = static_cast<long>(std::floor(window.ymax / spacing + kIndexSlack));
  const std::size_t count = s.size_implicit();
  if (count <= kMaterializeLimit || force_materialize) {
    s.points_.reserve(count);
    for (long i = s.imin_; i <= s.imax_; ++i)
      for (long j = s.jmin_; j <= s.jmax_; ++j) {
        Point2 p{static_cast<double>(i) * spacing, static_cast<double>(j) * spacing};
        p.x = std::clamp(p.x, window.xmin, window.xmax);
        p.y = std::clamp(p.y, window.ymin, window.ymax);
        s.points_.push_back(p);
      }
    s.build_grid();
  } else {
    s.implicit_ = true;
  }
  return s;
}

std::size_t PointSet::size_implicit() const {
  if (imax_ < imin_ || jmax_ < jmin_) return 0;
  return static_cast<std::size_t>(imax_ - imin_ + 1) * static_cast<std::size_t>(jmax_ - jmin_ + 1);
}

std::size_t PointSet::size() const { return implicit_ ? size_implicit() : points_.size(); }

const std::vector<Point2>& PointSet::points() const {
  if (implicit_) throw ArgumentError("point set is an implicit lattice; use for_each");
  return points_;
}

std::vector<Point2> PointSet::materialize() const {
  if (!implicit_) return points_;
  std::vector<Point2> out;
  out.reserve(size());
  for_each([&](Point2 p) { out.push_back(p); });
  return out;
}

void PointSet::build_grid() {
  const std::size_t n = points_.size();
  if (n == 0) {
    gx_ = gy_ = 0;
    return;
  }
  cell_ = std::max(std::sqrt(window_.area() / static_cast<double>(n)) * 1.5, 1e-9);
  gx_ = std::max(1L, static_cast<long>(std::ceil(window_.width() / cell_)));
  gy_ = std::max(1L, static_cast<long>(std::ceil(window_.height() / cell_)));
  const auto cells = static_cast<std::size_t>(gx_ * gy_);
  auto cell_of = [&](Point2 p) {
    const long i = std::clamp(static_cast<long>((p.x - window_.xmin) / cell_), 0L, gx_ - 1);
    const long j = std::clamp(static_cast<long>((p.y - window_.ymin) / cell_), 0L, gy_ - 1);
    return static_cast<std::size_t>(i * gy_ + j);
  };
  cell_start_.assign(cells + 1, 0);
  for (const auto& p : points_) ++cell_start_[cell_of(p) + 1];
  for (std::size_t c = 0; c < cells; ++c) cell_start_[c + 1] += cell_start_[c];
  cell_items_.resize(n);
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t k = 0; k < n; ++k) cell_items_[fill[cell_of(points_[k])]++] = static_cast<std::uint32_t>(k);
}

void PointSet::for_each(const std::function<void(Point2)>& fn) const {
  if (!implicit_) {
    for (const auto& p : points_) fn(p);
    return;
  }
  const double d = provenance_.spacing;
  for (long i = imin_; i <= imax_; ++i)
    for (long j = jmin_; j <= jmax_; ++j)
      fn({static_cast<double>(i) * d, static_cast<double>(j) * d});
}

void PointSet::for_each_in_strip(Point2 origin, Vec2 u, double t0, double t1, double halfwidth,
                                 const std::function<void(Point2)>& fn) const {
  auto inside = [&](Point2 q) {
    const Vec2 d = q - origin;
    const double t = dot(d, u);
    const double s = cross(u, d);
    return t >= t0 && t <= t1 && std::abs(s) <= halfwidth;
  };
  if (!implicit_) {
    for (const auto& p : points_)
      if (inside(p)) fn(p);
    return;
  }
  if (!std::isfinite(halfwidth) || !std::isfinite(t0) || !std::isfinite(t1))
    throw ArgumentError("strip query on an implicit lattice needs finite bounds");
  if (t1 < t0) return;
  const double d = provenance_.spacing;
  // Walk the lattice lines across the dominant axis of u; on each line the
  // strip is an interval.
  const bool x_major = std::abs(u.x) >= std::abs(u.y);
  const double ua = x_major ? u.x : u.y;  // dominant component
  const double ub = x_major ? u.y : u.x;
  const double oa = x_major ? origin.x : origin.y;
  const double ob = x_major ? origin.y : origin.x;
  // s = u.x dy - u.y dx; written in (a, b) coordinates s = sgn * (ua db - ub da)
  const double sgn = x_major ? 1.0 : -1.0;
  const long amin = x_major ? imin_ : jmin_, amax = x_major ? imax_ : jmax_;
  const long bmin = x_major ? jmin_ : imin_, bmax = x_major ? jmax_ : imax_;
  // a-extent of the strip
  double alo = std::numeric_limits<double>::infinity(), ahi = -alo;
  for (double t : {t0, t1})
    for (double s : {-halfwidth, halfwidth}) {
      const Point2 c = origin + u * t + perp(u) * s;
      const double a = x_major ? c.x : c.y;
      alo = std::min(alo, a);
      ahi = std::max(ahi, a);
    }
  const long ia = std::max(amin, static_cast<long>(std::ceil(alo / d - kIndexSlack)));
  const long ib = std::min(amax, static_cast<long>(std::floor(ahi / d + kIndexSlack)));
  for (long i = ia; i <= ib; ++i) {
    const double da = static_cast<double>(i) * d - oa;
    // |s| <= w  <=>  ua db in [ub da - w, ub da + w]   (sign folded into sgn)
    double lo1 = (ub * da - halfwidth) / ua, hi1 = (ub * da + halfwidth) / ua;
    if (lo1 > hi1) std::swap(lo1, hi1);
    double lo = lo1, hi = hi1;
    if (ub != 0.0) {
      double lo2 = (t0 - ua * da) / ub, hi2 = (t1 - ua * da) / ub;
      if (lo2 > hi2) std::swap(lo2, hi2);
      lo = std::max(lo, lo2);
      hi = std::min(hi, hi2);
    } else {
      const double t = ua * da;
      if (t < t0 - 1e-12 * std::abs(t0) - 1e-300 || t > t1 + 1e-12 * std::abs(t1)) continue;
    }
    (void)sgn;
    const long jlo = std::max(bmin, static_cast<long>(std::ceil((lo + ob) / d - kIndexSlack)));
    const long jhi = std::min(bmax, static_cast<long>(std::floor((hi + ob) / d + kIndexSlack)));
    for (long j = jlo; j <= jhi; ++j) {
      const Point2 q = x_major ? Point2{static_cast<double>(i) * d, static_cast<double>(j) * d}
                               : Point2{static_cast<double>(j) * d, static_cast<double>(i) * d};
      if (inside(q)) fn(q);
    }
  }
}

std::vector<Point2> PointSet::nearest(Point2 q, std::size_t k) const {
  std::vector<std::pair<double, Point2>> found;
  if (k == 0 || empty()) return {};
  long ci, cj, i0, i1, j0, j1;
  double cell;
  if (implicit_) {
    cell = provenance_.spacing;
    i0 = imin_, i1 = imax_, j0 = jmin_, j1 = jmax_;
    ci = std::clamp(static_cast<long>(std::lround(q.x / cell)), i0, i1);
    cj = std::clamp(static_cast<long>(std::lround(q.y / cell)), j0, j1);
  } else {
    cell = cell_;
    i0 = 0, i1 = gx_ - 1, j0 = 0, j1 = gy_ - 1;
    ci = std::clamp(static_cast<long>(std::floor((q.x - window_.xmin) / cell)), i0, i1);
    cj = std::clamp(static_cast<long>(std::floor((q.y - window_.ymin) / cell)), j0, j1);
  }
  auto visit = [&](long i, long j) {
    if (i < i0 || i > i1 || j < j0 || j > j1) return;
    if (implicit_) {
      const Point2 p{static_cast<double>(i) * cell, static_cast<double>(j) * cell};
      found.emplace_back(dist(p, q), p);
    } else {
      const auto c = static_cast<std::size_t>(i * gy_ + j);
      for (auto idx = cell_start_[c]; idx < cell_start_[c + 1]; ++idx) {
        const Point2 p = points_[cell_items_[idx]];
        found.emplace_back(dist(p, q), p);
      }
    }
  };
  const long rmax = std::max({ci - i0, i1 - ci, cj - j0, j1 - cj});
  auto by_dist = [](const auto& a, const auto& b) {
    return lex_tie_less(a.first, a.second, b.first, b.second);
  };
  for (long r = 0; r <= rmax; ++r) {
    if (r == 0) {
      visit(ci, cj);
    } else {
      for (long i = ci - r; i <= ci + r; ++i) {
        visit(i, cj - r);
        visit(i, cj + r);
      }
      for (long j = cj - r + 1; j <= cj + r - 1; ++j) {
        visit(ci - r, j);
        visit(ci + r, j);
      }
    }
    if (found.size() >= k) {
      std::nth_element(found.begin(), found.begin() + static_cast<long>(k - 1), found.end(),
                       by_dist);
      if (found[k - 1].first <= static_cast<double>(r) * cell) break;
    }
  }
  std::sort(found.begin(), found.end(), by_dist);
  if (found.size() > k) found.resize(k);
  std::vector<Point2> out;
  out.reserve(found.size());
  for (const auto& f : found) out.push_back(f.second);
  return out;
}

nlohmann::json PointSet::sidecar() const {
  return {{"provenance", provenance_json(provenance_)},
          {"window", {window_.xmin, window_.ymin, window_.xmax, window_.ymax}},
          {"seed", seed_},
          {"count", size()}};
}

PointSet sample_net(const Provenance& prov, const Box& window, std::uint64_t seed,
                    unsigned workers) {
  check_window(window);
  switch (prov.kind) {
    case Provenance::Kind::Lattice: {
      auto s = PointSet::lattice(prov.spacing, window);
      return s;
    }
    case Provenance::Kind::Poisson: {
      if (!(prov.intensity > 0.0) || !std::isfinite(prov.intensity))
        throw ArgumentError("Poisson intensity must be positive");
      const double target = std::sqrt(8.0 / prov.intensity);
      const long nx = std::max(1L, static_cast<long>(std::ceil(window.width() / target)));
      const long ny = std::max(1L, static_cast<long>(std::ceil(window.height() / target)));
      const double cw = window.width() / static_cast<double>(nx);
      const double ch = window.height() / static_cast<double>(ny);
      const double mean = prov.intensity * cw * ch;
      std::vector<std::vector<Point2>> rows(static_cast<std::size_t>(nx));
      parallel_for(rows.size(), workers, [&](std::size_t i) {
        auto& row = rows[i];
        for (long j = 0; j < ny; ++j) {
          CounterRng rng(stream_key(seed, i, static_cast<std::uint64_t>(j)));
          const auto count = rng.poisson(mean);
          const double x0 = window.xmin + cw * static_cast<double>(i);
          const double y0 = window.ymin + ch * static_cast<double>(j);
          for (std::uint64_t c = 0; c < count; ++c) {
            const double x = std::min(x0 + cw * rng.uniform(), window.xmax);
            const double y = std::min(y0 + ch * rng.uniform(), window.ymax);
            row.push_back({x, y});
          }
        }
      });
      std::vector<Point2> pts;
      for (auto& r : rows) pts.insert(pts.end(), r.begin(), r.end());
      std::sort(pts.begin(), pts.end(), lex_less);
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      return PointSet::from_points(std::move(pts), window, prov, seed);
    }
    case Provenance::Kind::Jittered: {
      if (!(prov.spacing > 0.0) || !(prov.jitter >= 0.0))
        throw ArgumentError("jittered net needs spacing > 0 and jitter >= 0");
      const auto base = PointSet::lattice(prov.spacing, window);
      if (!base.materialized()) throw ArgumentError("jittered net window too large");
      std::vector<Point2> pts;
      pts.reserve(base.size());
      for (const auto& p : base.points()) {
        const auto i = static_cast<std::int64_t>(std::llround(p.x / prov.spacing));
        const auto j = static_cast<std::int64_t>(std::llround(p.y / prov.spacing));
        CounterRng rng(stream_key(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j)));
        const double r = prov.jitter * std::sqrt(rng.uniform());
        const double a = 2.0 * kPi * rng.uniform();
        const Point2 q = p + unit_from_angle(a) * r;
        if (window.contains(q)) pts.push_back(q);
      }
      std::sort(pts.begin(), pts.end(), lex_less);
      pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
      return PointSet::from_points(std::move(pts), window, prov, seed);
    }
    case Provenance::Kind::Custom:
      break;
  }
  throw ArgumentError("sample_net: custom point sets are loaded, not sampled");
}

std::string points_to_csv(const PointSet& set) {
  std::ostringstream os;
  os.precision(17);
  os << "x,y\n";
  set.for_each([&](Point2 p) { os << p.x << ',' << p.y << '\n'; });
  return os.str();
}

std::vector<Point2> points_from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<Point2> out;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw ArgumentError("points csv line " + std::to_string(lineno) + ": expected x,y");
    try {
      std::size_t used = 0;
      const double x = std::stod(line.substr(0, comma), &used);
      const double y = std::stod(line.substr(comma + 1));
      out.push_back({x, y});
    } catch (const std::logic_error&) {
      if (lineno == 1) continue;  // header
      throw ArgumentError("points csv line " + std::to_string(lineno) + ": not a number");
    }
  }
  return out;
}

WidthSpec WidthSpec::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ArgumentError("tube width must be positive");
  return {Kind::Constant, c, 0.0};
}

WidthSpec WidthSpec::power_law(double c, double alpha) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ArgumentError("tube width must be positive");
  if (!(alpha >= 0.0 && alpha < 0.5))
    throw ArgumentError("power-law exponent must lie in [0, 1/2) for o(sqrt r) growth");
  return {Kind::PowerLaw, c, alpha};
}

double WidthSpec::operator()(double x) const {
  if (kind == Kind::Constant) return scale;
  return scale * std::pow(std::max(x, 0.0), exponent);
}

nlohmann::json WidthSpec::to_json() const {
  if (kind == Kind::Constant) return {{"kind", "const"}, {"c", scale}};
  return {{"kind", "power"}, {"c", scale}, {"alpha", exponent}};
}

TubeProbe probe_tube(const PointSet& set, const TubeSpec& tube) {
  TubeProbe out;
  out.margin = std::numeric_limits<double>::infinity();
  const Vec2 u = unit_from_angle(tube.angle);
  const Point2 base = tube.translation;
  if (!set.window().contains(base)) return out;
  out.axis_length = set.window().exit_length(base, u);
  if (out.axis_length <= 0.0) return out;
  double half = std::numeric_limits<double>::infinity();
  if (!set.materialized()) half = tube.width(out.axis_length) + 2.0 * set.provenance().spacing;
  set.for_each_in_strip(base, u, 0.0, out.axis_length, half, [&](Point2 p) {
    const Vec2 d = p - base;
    const double t = dot(d, u);
    if (!(t > 0.0)) return;
    const double m = std::abs(cross(u, d)) - tube.width(t);
    out.margin = std::min(out.margin, m);
  });
  out.hit = out.margin <= 0.0;
  return out;
}

Qn1Report check_qn1(const PointSet& set, const WidthSpec& width, std::size_t n_isometries,
                    std::uint64_t seed, unsigned workers) {
  Qn1Report rep;
  rep.tubes = n_isometries;
  const Box& w = set.window();
  std::vector<TubeSpec> tubes(n_isometries);
  std::vector<TubeProbe> probes(n_isometries);
  parallel_for(n_isometries, workers, [&](std::size_t k) {
    CounterRng rng(stream_key(seed, k, 0x71u));
    TubeSpec t;
    t.angle = 2.0 * kPi * rng.uniform();
    const Point2 c = w.center();
    t.translation = {c.x + 0.5 * w.width() * (rng.uniform() - 0.5),
                     c.y + 0.5 * w.height() * (rng.uniform() - 0.5)};
    t.width = width;
    tubes[k] = t;
    probes[k] = probe_tube(set, t);
  });
  double shortest = std::numeric_limits<double>::infinity();
  std::size_t worst = 0;
  for (std::size_t k = 0; k < n_isometries; ++k) {
    if (probes[k].hit) ++rep.hits;
    if (probes[k].margin > probes[worst].margin) worst = k;
    shortest = std::min(shortest, probes[k].axis_length);
  }
  rep.hit_fraction = n_isometries ? static_cast<double>(rep.hits) / n_isometries : 0.0;
  if (n_isometries) {
    rep.worst = tubes[worst];
    rep.worst_probe = probes[worst];
    if (shortest < 4.0 * width(shortest))
      rep.warnings.push_back("window small relative to tube: shortest truncated axis " +
                             std::to_string(shortest) + " is under four tube widths");
  }
  return rep;
}

bool Sector::contains(Point2 p) const {
  const Vec2 d = p - apex;
  if (d.x == 0.0 && d.y == 0.0) return false;
  double rel = std::fmod(angle_of(d) - angle_lo, 2.0 * kPi);
  if (rel < 0.0) rel += 2.0 * kPi;
  return rel > 0.0 && rel < width;
}

Qn2Report check_qn2(const PointSet& set, const Sector& sector, std::size_t min_count,
                    double threshold) {
  if (!(sector.width > 0.0)) throw ArgumentError("sector must have positive angular width");
  Qn2Report rep;
  rep.threshold = threshold;
  rep.min_count = min_count;
  set.for_each([&](Point2 p) {
    if (sector.contains(p)) rep.radii.push_back(dist(p, sector.apex));
  });
  std::sort(rep.radii.begin(), rep.radii.end());
  for (std::size_t i = 1; i < rep.radii.size(); ++i)
    rep.ratios.push_back(rep.radii[i] / rep.radii[i - 1]);
  if (rep.radii.size() < std::max<std::size_t>(min_count, 2)) {
    rep.reason = "only " + std::to_string(rep.radii.size()) + " points in the sector";
    return rep;
  }
  const std::size_t quart = std::max<std::size_t>(1, (rep.ratios.size() + 3) / 4);
  rep.tail_ratio = *std::max_element(rep.ratios.end() - static_cast<long>(quart), rep.ratios.end());
  rep.passed = rep.tail_ratio < threshold;
  if (!rep.passed) rep.reason = "tail ratio " + std::to_string(rep.tail_ratio) + " >= threshold";
  return rep;
}

double drift_residual(Vec2 q, Vec2 v) {
  const double t = dot(q, v);
  const double r = norm(q);
  if (t <= 0.0) return r - t;
  const double s = cross(v, q);
  return s * s / (r + t);
}

DriftSequence narrow_drift(const PointSet& set, Vec2 v, std::size_t count, Point2 origin,
                           double band_start) {
  if (!(band_start > 0.0)) throw ArgumentError("narrow_drift: band start must be positive");
  if (!(std::abs(norm(v) - 1.0) < 1e-9)) throw ArgumentError("narrow_drift: v must be a unit vector");
  if (set.empty()) throw ArgumentError("narrow_drift: empty point set");
  DriftSequence seq;
  seq.direction = v;
  seq.origin = origin;
  const Box& w = set.window();
  double reach = -std::numeric_limits<double>::infinity();
  for (Point2 c : {Point2{w.xmin, w.ymin}, Point2{w.xmin, w.ymax}, Point2{w.xmax, w.ymin},
                   Point2{w.xmax, w.ymax}})
    reach = std::max(reach, dot(c - origin, v));
  const double diag = std::hypot(w.width(), w.height());

  double prev_norm = 0.0;
  for (int k = 0; seq.points.size() < count; ++k) {
    const double lo = band_start * std::ldexp(1.0, k);
    const double hi = 2.0 * lo;
    if (lo > reach) {
      seq.truncated = true;
      break;
    }
    std::optional<Point2> best;
    double best_res = std::numeric_limits<double>::infinity();
    double best_norm = 0.0;
    // smallest residual, then nearest to the origin, then lexicographic
    auto consider = [&](Point2 p) {
      const Vec2 q = p - origin;
      const double t = dot(q, v);
      const double r = norm(q);
      if (t < lo || t >= hi || !(r > prev_norm)) return;
      const double res = drift_residual(q, v);
      if (!best || res < best_res ||
          (res == best_res && (r < best_norm || (r == best_norm && lex_less(p, *best))))) {
        best = p;
        best_res = res;
        best_norm = r;
      }
    };
    if (set.materialized()) {
      set.for_each(consider);
    } else {
      for (double half = set.provenance().spacing;; half *= 2.0) {
        best.reset();
        best_res = std::numeric_limits<double>::infinity();
        set.for_each_in_strip(origin, v, lo, hi, half, consider);
        // anything outside the strip has residual at least this
        const double floor_res = half * half / (std::hypot(hi, half) + hi);
        if ((best && best_res <= floor_res) || half > diag) break;
      }
    }
    if (!best) {
      seq.truncated = true;
      break;
    }
    seq.points.push_back(*best);
    seq.residuals.push_back(best_res);
    prev_norm = norm(*best - origin);
  }
  return seq;
}

}  // namespace rigidity
