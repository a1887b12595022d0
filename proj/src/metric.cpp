#include "rigidity/metric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rigidity/errors.hpp"

namespace rigidity {
namespace {

// exp(1/w) underflows long before w reaches zero; below this the bump and all
// of its derivatives are exactly zero in double precision.
constexpr double kBumpEdge = -1.0 / 745.0;

struct RadialTerms {
  double phi = 0.0;
  Vec2 grad{};
  double lap = 0.0;
};

RadialTerms bump_terms(const Bump& b, Point2 p, bool want_lap) {
  RadialTerms out;
  const Vec2 d = p - b.center;
  const double r2 = b.radius * b.radius;
  const double q = norm2(d);
  const double w = q / r2 - 1.0;
  if (w >= kBumpEdge) return out;
  const double e = std::exp(1.0 / w);
  const double de = -e / (w * w * r2);  // d/dq exp(1/w)
  out.phi = b.amplitude * e;
  out.grad = d * (2.0 * b.amplitude * de);
  if (want_lap) {
    const double w3 = w * w * w;
    const double dde = e / (r2 * r2) * (1.0 / (w3 * w) + 2.0 / w3);
    // radial function of q = |x|^2 in the plane: lap f = 4 f'(q) + 4 q f''(q)
    out.lap = b.amplitude * (4.0 * de + 4.0 * q * dde);
  }
  return out;
}

void check_point(Point2 p) {
  if (!is_finite(p)) throw ArgumentError("metric evaluated at a non-finite point");
}

void check_bump(const Bump& b) {
  if (!std::isfinite(b.amplitude) || !is_finite(b.center) || !std::isfinite(b.radius))
    throw ArgumentError("bump parameters must be finite");
  if (b.radius <= 0.0) throw ArgumentError("bump radius must be positive");
}

double stereo_denominator(double kappa, Point2 p) {
  const double den = 1.0 + 0.25 * kappa * norm2(p);
  if (!(den > 0.0))
    throw DomainError("stereographic chart undefined: 1 + (kappa/4)|p|^2 <= 0");
  return den;
}

}  // namespace

ConformalMetric ConformalMetric::flat() { return {}; }

ConformalMetric ConformalMetric::bump(double amplitude, Point2 center, double radius) {
  Bump b{amplitude, center, radius};
  check_bump(b);
  ConformalMetric m;
  m.kind_ = Kind::Bump;
  m.bumps_ = {b};
  return m;
}

ConformalMetric ConformalMetric::bump_sum(std::vector<Bump> bumps) {
  for (const auto& b : bumps) check_bump(b);
  ConformalMetric m;
  m.kind_ = Kind::BumpSum;
  m.bumps_ = std::move(bumps);
  return m;
}

ConformalMetric ConformalMetric::stereographic(double kappa) {
  if (!std::isfinite(kappa)) throw ArgumentError("kappa must be finite");
  ConformalMetric m;
  m.kind_ = Kind::Stereographic;
  m.kappa_ = kappa;
  return m;
}

MetricSample ConformalMetric::eval(Point2 p) const {
  check_point(p);
  MetricSample s;
  switch (kind_) {
    case Kind::Flat:
      return s;
    case Kind::Bump:
    case Kind::BumpSum:
      for (const auto& b : bumps_) {
        const auto t = bump_terms(b, p, true);
        s.phi += t.phi;
        s.grad_phi += t.grad;
        s.laplacian_phi += t.lap;
      }
      break;
    case Kind::Stereographic: {
      const double den = stereo_denominator(kappa_, p);
      s.phi = -std::log(den);
      s.grad_phi = p * (-0.5 * kappa_ / den);
      s.laplacian_phi = -kappa_ / (den * den);
      break;
    }
  }
  s.curvature = -std::exp(-2.0 * s.phi) * s.laplacian_phi;
  return s;
}

double ConformalMetric::phi(Point2 p) const {
  double phi = 0.0;
  switch (kind_) {
    case Kind::Flat:
      break;
    case Kind::Bump:
    case Kind::BumpSum:
      for (const auto& b : bumps_) phi += bump_terms(b, p, false).phi;
      break;
    case Kind::Stereographic:
      phi = -std::log(stereo_denominator(kappa_, p));
      break;
  }
  return phi;
}

void ConformalMetric::phi_grad(Point2 p, double& phi, Vec2& grad) const {
  phi = 0.0;
  grad = {};
  switch (kind_) {
    case Kind::Flat:
      return;
    case Kind::Bump:
    case Kind::BumpSum:
      for (const auto& b : bumps_) {
        const auto t = bump_terms(b, p, false);
        phi += t.phi;
        grad += t.grad;
      }
      return;
    case Kind::Stereographic: {
      const double den = stereo_denominator(kappa_, p);
      phi = -std::log(den);
      grad = p * (-0.5 * kappa_ / den);
      return;
    }
  }
}

double ConformalMetric::conformal_factor(Point2 p) const { return std::exp(phi(p)); }

bool ConformalMetric::flat_at(Point2 p) const {
  switch (kind_) {
    case Kind::Flat:
      return true;
    case Kind::Stereographic:
      return kappa_ == 0.0;
    default:
      return std::all_of(bumps_.begin(), bumps_.end(), [&](const Bump& b) {
        return dist(p, b.center) > b.radius;
      });
  }
}

bool ConformalMetric::nonnegative() const {
  if (kind_ == Kind::Stereographic) return false;
  return std::all_of(bumps_.begin(), bumps_.end(),
                     [](const Bump& b) { return b.amplitude >= 0.0; });
}

double ConformalMetric::clear_length(Point2 p, Vec2 u, double max_len) const {
  if (kind_ == Kind::Flat) return max_len;
  if (kind_ == Kind::Stereographic) return kappa_ == 0.0 ? max_len : 0.0;
  double best = max_len;
  for (const auto& b : bumps_) {
    const Vec2 d = p - b.center;
    const double c = norm2(d) - b.radius * b.radius;
    if (c <= 0.0) return 0.0;
    const double bq = dot(d, u);
    const double disc = bq * bq - c;
    if (disc < 0.0 || bq >= 0.0) continue;  // missed, or moving away
    const double t = -bq - std::sqrt(disc);
    best = std::min(best, std::max(t, 0.0));
  }
  return best;
}

bool ConformalMetric::segment_touches_support(Point2 a, Point2 b) const {
  if (kind_ == Kind::Flat) return false;
  if (kind_ == Kind::Stereographic) return kappa_ != 0.0;
  const Vec2 ab = b - a;
  const double len2 = norm2(ab);
  for (const auto& bump : bumps_) {
    double t = len2 > 0.0 ? dot(bump.center - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    if (dist(a + ab * t, bump.center) <= bump.radius) return true;
  }
  return false;
}

nlohmann::json ConformalMetric::to_json() const {
  using nlohmann::json;
  auto bump_json = [](const Bump& b) {
    return json{{"kind", "bump"},
                {"A", b.amplitude},
                {"c", {b.center.x, b.center.y}},
                {"rho", b.radius}};
  };
  switch (kind_) {
    case Kind::Flat:
      return json{{"kind", "flat"}};
    case Kind::Bump:
      return bump_json(bumps_.front());
    case Kind::BumpSum: {
      json arr = json::array();
      for (const auto& b : bumps_) arr.push_back(bump_json(b));
      return json{{"kind", "bumpsum"}, {"bumps", arr}};
    }
    case Kind::Stereographic:
      return json{{"kind", "stereographic"}, {"kappa", kappa_}};
  }
  return {};
}

ConformalMetric ConformalMetric::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ArgumentError("metric spec must be an object with a string \"kind\"");
  const auto kind = j["kind"].get<std::string>();
  auto reject_unknown = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
      if (std::find_if(allowed.begin(), allowed.end(),
                       [&](const char* a) { return key == a; }) == allowed.end())
        throw ArgumentError("unknown key \"" + key + "\" in metric spec");
    }
  };
  auto read_bump = [](const nlohmann::json& b) {
    if (!b.contains("A") || !b.contains("c") || !b.contains("rho"))
      throw ArgumentError("bump spec needs A, c and rho");
    const auto& c = b.at("c");
    if (!c.is_array() || c.size() != 2) throw ArgumentError("bump center c must be [x, y]");
    return Bump{b.at("A").get<double>(), {c[0].get<double>(), c[1].get<double>()},
                b.at("rho").get<double>()};
  };
  if (kind == "flat") {
    reject_unknown({"kind"});
    return flat();
  }
  if (kind == "bump") {
    reject_unknown({"kind", "A", "c", "rho"});
    const auto b = read_bump(j);
    return bump(b.amplitude, b.center, b.radius);
  }
  if (kind == "bumpsum") {
    reject_unknown({"kind", "bumps"});
    if (!j.contains("bumps") || !j["bumps"].is_array())
      throw ArgumentError("bumpsum spec needs a \"bumps\" array");
    std::vector<Bump> bumps;
    for (const auto& b : j["bumps"]) bumps.push_back(read_bump(b));
    return bump_sum(std::move(bumps));
  }
  if (kind == "stereographic") {
    reject_unknown({"kind", "kappa"});
    if (!j.contains("kappa")) throw ArgumentError("stereographic spec needs kappa");
    return stereographic(j["kappa"].get<double>());
  }
  throw ArgumentError("unknown metric kind \"" + kind + "\"");
}

MetricSample eval_metric(const ConformalMetric& metric, Point2 p) { return metric.eval(p); }

double gaussian_curvature(const ConformalMetric& metric, Point2 p) {
  if (metric.kind() == ConformalMetric::Kind::Stereographic) {
    metric.eval(p);  // domain check
    return metric.kappa();
  }
  return metric.eval(p).curvature;
}

double polyline_length(const ConformalMetric& metric, const std::vector<Point2>& pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Point2 mid = (pts[i - 1] + pts[i]) * 0.5;
    len += std::exp(metric.phi(mid)) * dist(pts[i - 1], pts[i]);
  }
  return len;
}

}  // namespace rigidity
