// rigidity_lab: command-line front end for the rigidity library.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rigidity/asymptotics.hpp"
#include "rigidity/distance.hpp"
#include "rigidity/embedtest.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/geodesic.hpp"
#include "rigidity/integralgeom.hpp"
#include "rigidity/metric.hpp"
#include "rigidity/nets.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/rng.hpp"

using nlohmann::json;
using namespace rigidity;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Param {
  std::string name;
  std::string fallback;
  std::string help;
};

// ---------------------------------------------------------------- parsing

std::string trim(std::string s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    throw ArgumentError("'" + s + "' is not a number");
  }
  if (used != s.size()) throw ArgumentError("'" + s + "' is not a number");
  return v;
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& part : split(s, ',')) out.push_back(to_double(part));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Resolved parameters: command-line value, else config value, else default.
class Params {
 public:
  void set(const std::string& key, std::string value, std::string source) {
    values_[key] = std::move(value);
    sources_[key] = std::move(source);
  }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& str(const std::string& key) const { return values_.at(key); }
  bool given(const std::string& key) const {
    return sources_.count(key) && sources_.at(key) != "default";
  }

  template <class F>
  auto parse(const std::string& key, F&& f) const -> decltype(f(std::string{})) {
    try {
      return f(str(key));
    } catch (const ArgumentError& e) {
      throw ArgumentError("--" + key + " (" + sources_.at(key) + "): " + e.what());
    } catch (const InvalidMetricError& e) {
      throw ArgumentError("--" + key + " (" + sources_.at(key) + "): " + e.what());
    } catch (const json::exception& e) {
      throw ArgumentError("--" + key + " (" + sources_.at(key) + "): " + e.what());
    }
  }
  double num(const std::string& key) const { return parse(key, to_double); }
  long integer(const std::string& key) const {
    return parse(key, [](const std::string& s) {
      const double v = to_double(s);
      if (v != std::floor(v) || std::abs(v) > 9e15) throw ArgumentError("'" + s + "' is not an integer");
      return static_cast<long>(v);
    });
  }
  std::uint64_t seed() const {
    return parse("seed", [](const std::string& s) {
      std::size_t used = 0;
      std::uint64_t v = 0;
      try {
        v = std::stoull(s, &used, 0);
      } catch (const std::logic_error&) {
        throw ArgumentError("'" + s + "' is not a 64-bit seed");
      }
      if (used != s.size() || s.front() == '-') throw ArgumentError("'" + s + "' is not a 64-bit seed");
      return v;
    });
  }
  Point2 point(const std::string& key) const {
    return parse(key, [](const std::string& s) {
      const auto v = to_doubles(s);
      if (v.size() != 2) throw ArgumentError("expected x,y");
      return Point2{v[0], v[1]};
    });
  }
  std::vector<Point2> points(const std::string& key) const {
    return parse(key, [](const std::string& s) {
      std::vector<Point2> out;
      for (const auto& item : split(s, ';')) {
        if (item.empty()) continue;
        const auto v = to_doubles(item);
        if (v.size() != 2) throw ArgumentError("expected x,y;x,y;...");
        out.push_back({v[0], v[1]});
      }
      return out;
    });
  }
  std::vector<double> list(const std::string& key) const { return parse(key, to_doubles); }
  /// Unit vector from "x,y" or a single angle in radians.
  Vec2 direction(const std::string& key) const {
    return parse(key, [](const std::string& s) {
      const auto v = to_doubles(s);
      Vec2 d;
      if (v.size() == 1) d = unit_from_angle(v[0]);
      else if (v.size() == 2) d = Vec2{v[0], v[1]};
      else throw ArgumentError("expected an angle or x,y");
      if (!(norm(d) > 0.0)) throw ArgumentError("direction must be nonzero");
      return normalized(d);
    });
  }

  json echo() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
  }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, std::string> sources_;
};

ConformalMetric parse_metric(const std::string& s) {
  if (s == "flat") return ConformalMetric::flat();
  if (!s.empty() && s.front() == '{') return ConformalMetric::from_json(json::parse(s));
  if (!s.empty() && s.front() == '@') return ConformalMetric::from_json(json::parse(read_file(s.substr(1))));
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (kind == "bump") {
    const auto v = to_doubles(rest);
    if (v.size() != 4) throw ArgumentError("bump metric needs A,cx,cy,rho");
    return ConformalMetric::bump(v[0], {v[1], v[2]}, v[3]);
  }
  if (kind == "bumps") {
    std::vector<Bump> bumps;
    for (const auto& item : split(rest, ';')) {
      const auto v = to_doubles(item);
      if (v.size() != 4) throw ArgumentError("bumps metric needs A,cx,cy,rho;...");
      bumps.push_back({v[0], {v[1], v[2]}, v[3]});
    }
    return ConformalMetric::bump_sum(std::move(bumps));
  }
  if (kind == "stereo") return ConformalMetric::stereographic(to_double(rest));
  throw ArgumentError("unknown metric '" + s + "' (flat | bump:A,cx,cy,rho | bumps:... | stereo:k | JSON)");
}

Box parse_window(const std::string& s) {
  const auto v = to_doubles(s);
  Box b;
  if (v.size() == 1) b = Box::square(v[0]);
  else if (v.size() == 4) b = {v[0], v[1], v[2], v[3]};
  else throw ArgumentError("window is a half-width h or xmin,ymin,xmax,ymax");
  if (b.degenerate() || !std::isfinite(b.area())) throw ArgumentError("window is empty");
  return b;
}

WidthSpec parse_width(const std::string& s) {
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const auto v = to_doubles(colon == std::string::npos ? "" : s.substr(colon + 1));
  if (kind == "const" && v.size() == 1) return WidthSpec::constant(v[0]);
  if (kind == "power" && v.size() == 2) return WidthSpec::power_law(v[0], v[1]);
  throw ArgumentError("width is const:c or power:c,alpha");
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string fmt_box(const Box& b) {
  return fmt_double(b.xmin) + "," + fmt_double(b.ymin) + "," + fmt_double(b.xmax) + "," + fmt_double(b.ymax);
}

/// Builds the net and resolves an automatic window (custom nets default to
/// their bounding box padded by one unit, sampled nets to [-10, 10]^2).
PointSet build_net(Params& p) {
  const std::string spec = p.str("net");
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "custom") {
    const auto pts = p.parse("net", [&](const std::string&) { return points_from_csv(read_file(rest)); });
    if (p.str("window") == "auto") {
      Box b{0, 0, 0, 0};
      if (!pts.empty()) b = {pts[0].x, pts[0].y, pts[0].x, pts[0].y};
      for (const auto& q : pts) {
        b.xmin = std::min(b.xmin, q.x);
        b.ymin = std::min(b.ymin, q.y);
        b.xmax = std::max(b.xmax, q.x);
        b.ymax = std::max(b.ymax, q.y);
      }
      b = {b.xmin - 1, b.ymin - 1, b.xmax + 1, b.ymax + 1};
      p.set("window", fmt_box(b), "derived");
    }
    const Box w = p.parse("window", parse_window);
    return p.parse("net", [&](const std::string&) {
      return PointSet::from_points(pts, w, Provenance::custom(), p.seed());
    });
  }
  if (p.str("window") == "auto") p.set("window", "10", "derived");
  const Box w = p.parse("window", parse_window);
  const auto v = p.parse("net", [&](const std::string&) { return to_doubles(rest); });
  Provenance prov;
  if (kind == "lattice" && v.size() == 1) prov = Provenance::lattice(v[0]);
  else if (kind == "poisson" && v.size() == 1) prov = Provenance::poisson(v[0]);
  else if (kind == "jittered" && v.size() == 2) prov = Provenance::jittered(v[0], v[1]);
  else
    throw ArgumentError("--net: expected lattice:delta | poisson:lambda | jittered:delta,j | custom:file.csv");
  const unsigned workers = static_cast<unsigned>(p.integer("jobs"));
  return p.parse("net", [&](const std::string&) { return sample_net(prov, w, p.seed(), workers); });
}

json point_json(Point2 p) { return json::array({p.x, p.y}); }

json points_json(const std::vector<Point2>& pts) {
  json a = json::array();
  for (const auto& q : pts) a.push_back(point_json(q));
  return a;
}

DistanceOptions distance_options(const Params& p) {
  DistanceOptions o;
  o.tolerance = p.num("tol");
  o.step = p.num("step");
  return o;
}

// ---------------------------------------------------------------- reports

struct Outcome {
  json values = json::object();
  json tolerances = json::object();
  std::optional<bool> passed;
  std::string csv;  // empty: scalar values flattened to key,value rows
};

std::string flatten_csv(const json& values) {
  std::ostringstream os;
  os << "key,value\n";
  for (const auto& [k, v] : values.items())
    if (v.is_primitive()) os << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  return os.str();
}

struct Command {
  std::string name;
  std::string summary;
  std::string statement;
  std::vector<Param> params;
  std::function<Outcome(Params&)> run;
};

const std::vector<Param> kCommon = {
    {"metric", "flat", "flat | bump:A,cx,cy,rho | bumps:A,cx,cy,rho;... | stereo:k | JSON | @file.json"},
    {"net", "lattice:1", "lattice:delta | poisson:lambda | jittered:delta,j | custom:file.csv"},
    {"window", "auto", "half-width h or xmin,ymin,xmax,ymax (auto: 10, or the custom net's bounding box)"},
    {"seed", "0", "64-bit seed"},
    {"out", "", "write the report here instead of stdout"},
    {"format", "json", "json | csv"},
    {"jobs", "0", "worker threads (0: available parallelism)"},
};

const Param kTol{"tol", "1e-8", "endpoint tolerance of the distance solver"};
const Param kStep{"step", "2e-3", "RK4 step of the distance solver"};

// ---------------------------------------------------------------- commands

Outcome cmd_dist(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto r = distance(metric, p.point("from"), p.point("to"), distance_options(p));
  Outcome o;
  o.values = {{"distance", r.value},
              {"method", r.diagnostics.method},
              {"iterations", r.diagnostics.iterations},
              {"endpoint_miss", r.diagnostics.endpoint_miss},
              {"departure_angle", r.diagnostics.departure_angle},
              {"branch_lengths", r.diagnostics.branch_lengths}};
  o.tolerances = {{"endpoint", p.num("tol")}};
  if (p.str("format") == "csv") o.csv = path_to_csv(r.path);
  return o;
}

Outcome cmd_matrix(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  std::vector<Point2> pts;
  if (!p.str("points").empty()) {
    pts = p.points("points");
  } else {
    const auto net = build_net(p);
    if (net.size() > 4000) throw ArgumentError("--net: more than 4000 points; pass --points or a smaller window");
    pts = net.materialize();
  }
  const auto m = distance_matrix(metric, pts, distance_options(p), static_cast<unsigned>(p.integer("jobs")));
  Outcome o;
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  o.values = {{"points", points_json(pts)}, {"matrix", rows}};
  o.tolerances = {{"endpoint", p.num("tol")}};
  o.csv = matrix_to_csv(m);
  return o;
}

Outcome cmd_shoot(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto path = shoot(metric, p.point("from"), p.num("angle"), p.num("length"), p.num("step"));
  Outcome o;
  o.values = {{"end", point_json(path.back().p)},
              {"end_velocity", point_json(path.back().v)},
              {"length", path.length()},
              {"samples", path.samples.size()},
              {"max_speed_drift", path.max_speed_drift}};
  o.csv = path_to_csv(path);
  return o;
}

Outcome cmd_jacobi(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto path = shoot(metric, p.point("from"), p.num("angle"), p.num("length"), p.num("step"));
  const auto tr = jacobi(metric, path);
  Outcome o;
  o.values = {{"J_end", tr.values.back()},
              {"J_rate_end", tr.derivative.back()},
              {"J_integral", tr.integral.back()},
              {"first_zero", tr.first_zero ? json(*tr.first_zero) : json(nullptr)},
              {"conjugate_point", tr.first_zero.has_value()}};
  std::ostringstream os;
  os.precision(17);
  os << "t,J,dJ,intJ\n";
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    os << tr.t[i] << ',' << tr.values[i] << ',' << tr.derivative[i] << ',' << tr.integral[i] << '\n';
  o.csv = os.str();
  return o;
}

Outcome cmd_net_sample(Params& p) {
  const auto net = build_net(p);
  Outcome o;
  o.values = {{"count", net.size()}, {"sidecar", net.sidecar()}};
  if (net.materialized() && net.size() <= 100000) o.values["points"] = points_json(net.points());
  if (p.str("format") == "csv") o.csv = points_to_csv(net);
  return o;
}

Outcome cmd_qn1(Params& p) {
  const auto net = build_net(p);
  const auto width = p.parse("phi", parse_width);
  const auto rep = check_qn1(net, width, static_cast<std::size_t>(p.integer("tubes")), p.seed(),
                             static_cast<unsigned>(p.integer("jobs")));
  const double need = p.num("min-hit");
  Outcome o;
  json worst = json::object();
  if (rep.tubes) {
    worst = {{"angle", rep.worst.angle},
             {"translation", point_json(rep.worst.translation)},
             {"margin", std::isfinite(rep.worst_probe.margin) ? json(rep.worst_probe.margin) : json(nullptr)},
             {"axis_length", rep.worst_probe.axis_length},
             {"hit", rep.worst_probe.hit}};
  }
  o.values = {{"tubes", rep.tubes},
              {"hits", rep.hits},
              {"hit_fraction", rep.hit_fraction},
              {"width", width.to_json()},
              {"worst", worst},
              {"warnings", rep.warnings}};
  o.tolerances = {{"min_hit_fraction", need}};
  o.passed = rep.tubes > 0 && rep.hit_fraction >= need;
  return o;
}

Outcome cmd_qn2(Params& p) {
  const auto net = build_net(p);
  const auto sec = p.list("sector");
  if (sec.size() != 2) throw ArgumentError("--sector: expected angle_lo,width");
  const Sector sector{p.point("apex"), sec[0], sec[1]};
  const auto rep = check_qn2(net, sector, static_cast<std::size_t>(p.integer("min-count")), p.num("ratio"));
  Outcome o;
  o.values = {{"count", rep.radii.size()},
              {"tail_ratio", rep.tail_ratio},
              {"reason", rep.reason},
              {"ratios", rep.ratios}};
  o.tolerances = {{"ratio_threshold", rep.threshold}, {"min_count", rep.min_count}};
  o.passed = rep.passed;
  std::ostringstream os;
  os.precision(17);
  os << "radius,ratio\n";
  for (std::size_t i = 0; i < rep.radii.size(); ++i)
    os << rep.radii[i] << ',' << (i ? fmt_double(rep.ratios[i - 1]) : "") << '\n';
  o.csv = os.str();
  return o;
}

Outcome cmd_drift(Params& p) {
  const auto net = build_net(p);
  const auto seq = narrow_drift(net, p.direction("v"), static_cast<std::size_t>(p.integer("count")),
                                p.point("origin"), p.num("band-start"));
  Outcome o;
  o.values = {{"direction", point_json(seq.direction)},
              {"points", points_json(seq.points)},
              {"residuals", seq.residuals},
              {"truncated", seq.truncated}};
  std::ostringstream os;
  os.precision(17);
  os << "x,y,residual\n";
  for (std::size_t i = 0; i < seq.points.size(); ++i)
    os << seq.points[i].x << ',' << seq.points[i].y << ',' << seq.residuals[i] << '\n';
  o.csv = os.str();
  return o;
}

Outcome cmd_busemann(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const double T = p.num("T");
  const auto ray = shoot(metric, p.point("from"), p.num("angle"), T, ShootOptions{p.num("step"), 0.5});
  const Point2 x = p.point("x");
  const auto opts = distance_options(p);
  const double value = busemann_ray(metric, ray, x, T, p.num("stride"), opts);
  const double half = busemann_ray(metric, ray, x, 0.5 * T, p.num("stride"), opts);
  Outcome o;
  o.values = {{"value", value}, {"stabilization", {{"value_at_half_T", half}, {"change", value - half}}}};
  return o;
}

Outcome cmd_ideal_b(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto net = build_net(p);
  const Vec2 v = p.direction("v");
  const double R = p.num("R");
  const int band = static_cast<int>(p.integer("band"));
  const auto B = BusemannApprox::via_net_points(metric, net, v, R, band, distance_options(p));
  const Point2 x = p.point("x");
  const double value = B(x);
  Outcome o;
  o.values = {{"value", value},
              {"linear", dot(x, v)},
              {"anchor", point_json(B.anchor().point)},
              {"anchor_residual", B.anchor().residual}};
  try {
    const double half = BusemannApprox::via_net_points(metric, net, v, 0.5 * R, band, distance_options(p))(x);
    o.values["stabilization"] = {{"value_at_half_R", half}, {"change", value - half}};
  } catch (const InsufficientWindowError&) {
    o.values["stabilization"] = nullptr;
  }
  return o;
}

std::vector<Point2> gap_samples(const Params& p) {
  if (!p.str("samples").empty()) return p.points("samples");
  const auto n = p.integer("sample-count");
  const double box = p.num("sample-box");
  std::vector<Point2> out;
  CounterRng rng(stream_key(p.seed(), 0x6a9u, 0));
  for (long i = 0; i < n; ++i) out.push_back({rng.uniform(-box, box), rng.uniform(-box, box)});
  return out;
}

Outcome cmd_gap(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto net = build_net(p);
  const auto rep = singleton_gap(metric, net, p.direction("v"), p.num("R"), gap_samples(p),
                                 distance_options(p), static_cast<unsigned>(p.integer("jobs")));
  Outcome o;
  o.values = {{"samples", points_json(rep.samples)},
              {"gaps", rep.gaps},
              {"max_gap", rep.max_gap},
              {"min_gap", rep.min_gap}};
  o.tolerances = {{"gap", p.num("gap-tol")}};
  o.passed = rep.max_gap < p.num("gap-tol");
  return o;
}

Outcome cmd_transport(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto net = build_net(p);
  const auto tr = transport_line(metric, net, p.direction("v"), p.point("x"), p.num("length"), p.num("R"),
                                 static_cast<int>(p.integer("band")), static_cast<int>(p.integer("samples")),
                                 distance_options(p));
  Outcome o;
  o.values = {{"times", tr.times}, {"values", tr.values}, {"max_residual", tr.max_residual}};
  json pts = json::array();
  for (double t : tr.times) pts.push_back(point_json(point_at(tr.path, t)));
  o.values["points"] = pts;
  o.tolerances = {{"growth_residual", p.num("growth-tol")}};
  o.passed = tr.max_residual < p.num("growth-tol");
  if (p.str("format") == "csv") o.csv = path_to_csv(tr.path);
  return o;
}

Outcome cmd_decay(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto net = build_net(p);
  std::optional<double> R;
  if (!p.str("R").empty()) R = p.num("R");
  const auto rep = net_distance_decay(metric, net, p.point("p"), p.direction("v"), p.list("radii"), R,
                                      distance_options(p));
  Outcome o;
  o.values = {{"direction", point_json(rep.direction)},
              {"radii", rep.radii},
              {"distances", rep.distances},
              {"ratios", rep.ratios},
              {"nearest", points_json(rep.nearest)},
              {"warnings", rep.warnings}};
  std::ostringstream os;
  os.precision(17);
  os << "t,distance,ratio\n";
  for (std::size_t i = 0; i < rep.radii.size(); ++i)
    os << rep.radii[i] << ',' << rep.distances[i] << ',' << rep.ratios[i] << '\n';
  o.csv = os.str();
  return o;
}

AreaOptions area_options(const Params& p) {
  AreaOptions a;
  a.directions = static_cast<int>(p.integer("directions"));
  a.step = p.num("area-step");
  a.grid_spacing = p.num("grid");
  a.workers = static_cast<unsigned>(p.integer("jobs"));
  return a;
}

std::string radial_csv(const AreaGrowth& g, const std::vector<double>* mu) {
  std::ostringstream os;
  os.precision(17);
  os << "r,area,ratio" << (mu ? ",mu" : "") << '\n';
  for (std::size_t i = 0; i < g.radii.size(); ++i) {
    os << g.radii[i] << ',' << g.areas[i] << ',' << g.ratios[i];
    if (mu) os << ',' << (*mu)[i];
    os << '\n';
  }
  return os.str();
}

Outcome cmd_area_growth(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto method = p.parse("method", area_method_from_string);
  const auto g = area_growth(metric, p.point("x"), p.list("radii"), method, area_options(p));
  Outcome o;
  o.values = {{"method", to_string(method)}, {"radii", g.radii}, {"areas", g.areas}, {"ratios", g.ratios}};
  o.csv = radial_csv(g, nullptr);
  return o;
}

Outcome cmd_area_continuity(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto method = p.parse("method", area_method_from_string);
  const auto c = area_continuity(metric, p.list("radii"), method, area_options(p));
  Outcome o;
  o.values = {{"method", to_string(method)},
              {"radii", c.growth.radii},
              {"mu", c.mu},
              {"deviation_from_pi", c.deviation}};
  o.csv = radial_csv(c.growth, &c.mu);
  return o;
}

Outcome cmd_gram(Params& p) {
  QuadDistances q;
  if (!p.str("quad").empty()) {
    q = p.parse("quad", [](const std::string& s) { return QuadDistances::from_csv(read_file(s)); });
  } else {
    q = p.parse("points", [](const std::string& s) {
      const auto items = split(s, ';');
      if (items.size() != 4) throw ArgumentError("expected four points a,b[,c];...");
      std::array<std::vector<double>, 4> pts;
      for (int i = 0; i < 4; ++i) pts[i] = to_doubles(items[i]);
      return QuadDistances::from_points(pts);
    });
  }
  const auto r = gram_rank_test(q, p.num("threshold"));
  Outcome o;
  o.values = r.to_json();
  o.tolerances = {{"ratio_threshold", r.threshold}};
  o.passed = r.planar;
  return o;
}

Outcome cmd_witness(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto net = build_net(p);
  const auto rep = rigidity_witness(metric, net, static_cast<std::size_t>(p.integer("budget")), p.seed(),
                                    distance_options(p), static_cast<unsigned>(p.integer("jobs")));
  const double threshold = p.num("threshold");
  Outcome o;
  json worst = nullptr;
  if (rep.failures < rep.pairs.size()) {
    const auto& w = rep.pairs[rep.worst];
    worst = {{"p", point_json(rep.points[w.i])}, {"q", point_json(rep.points[w.j])}, {"deviation", w.deviation}};
  }
  o.values = {{"max_deviation", rep.max_deviation},
              {"worst_pair", worst},
              {"pairs", rep.pairs.size()},
              {"failures", rep.failures},
              {"sampled", rep.sampled}};
  o.tolerances = {{"deviation", threshold}};
  o.passed = rep.max_deviation <= threshold;
  std::ostringstream os;
  os.precision(17);
  os << "px,py,qx,qy,metric,euclidean,deviation,failed\n";
  for (const auto& pr : rep.pairs)
    os << rep.points[pr.i].x << ',' << rep.points[pr.i].y << ',' << rep.points[pr.j].x << ','
       << rep.points[pr.j].y << ',' << pr.metric_distance << ',' << pr.euclidean << ',' << pr.deviation
       << ',' << (pr.failed ? 1 : 0) << '\n';
  o.csv = os.str();
  return o;
}

ConvexRegion parse_region(const std::string& s) {
  if (!s.empty() && s.front() == '@') return ConvexRegion::from_json(json::parse(read_file(s.substr(1))));
  return ConvexRegion::from_json(json::parse(s));
}

Outcome integral_estimate(Params& p, bool crofton) {
  const auto region = p.parse("region", parse_region);
  const LineMeasureSampler sampler(p.num("R0"), static_cast<std::size_t>(p.integer("N")), p.seed());
  const unsigned workers = static_cast<unsigned>(p.integer("jobs"));
  const auto e = crofton ? crofton_perimeter(region, sampler, workers) : santalo_area(region, sampler, workers);
  const double exact = crofton ? region.perimeter() : region.area();
  Outcome o;
  o.values = e.to_json();
  o.values["region"] = region.to_json();
  o.values["exact"] = exact;
  o.values["z_score"] = e.stderr_ > 0.0 ? json((e.value - exact) / e.stderr_) : json(nullptr);
  o.values["total_mass"] = sampler.total_mass();
  return o;
}

Outcome cmd_scaled(Params& p) {
  const auto metric = p.parse("metric", parse_metric);
  const auto net = build_net(p);
  const auto opts = distance_options(p);
  const auto sm = asymptotic_scaled_metric(metric, net, p.point("base"), p.num("r"), p.num("R"), opts);
  const Point2 x = p.point("from"), y = p.point("to");
  const double d = scaled_distance(sm, x, y, opts);
  Outcome o;
  o.values = {{"scaled_distance", d},
              {"euclidean", dist(x, y)},
              {"deviation", std::abs(d - dist(x, y))},
              {"Tx", point_json(sm.embed(x))},
              {"Ty", point_json(sm.embed(y))}};
  return o;
}

std::vector<Command> commands() {
  const Param from{"from", "0,0", "start point x,y"};
  const Param angle{"angle", "0", "initial direction (radians)"};
  const Param v{"v", "1,0", "direction: angle in radians or x,y"};
  const Param R{"R", "1000", "truncation radius for far net points"};
  const Param band{"band", "0", "far points are taken with <p, v> in [2^band R, 2^(band+1) R)"};
  const Param radii{"radii", "1,5,10", "comma-separated radii"};
  const Param method{"method", "polar-jacobi", "polar-jacobi | grid-sum"};
  const Param directions{"directions", "256", "geodesic directions (polar-jacobi)"};
  const Param astep{"area-step", "1e-3", "RK4 step for polar-jacobi"};
  const Param grid{"grid", "0.05", "grid spacing for grid-sum"};
  const Param region{"region", R"({"polygon":[[0,0],[1,0],[1,1],[0,1]]})",
                     R"(JSON {"polygon":[[x,y],...]} | {"disk":{"c":[x,y],"r":rho}} | {"segment":[[x,y],[x,y]]} or @file)"};
  const Param R0{"R0", "2", "lines are sampled among those meeting D(0, R0)"};
  const Param N{"N", "1000000", "number of sampled lines"};

  return {
      {"dist", "geodesic distance between two points",
       "Computes d(x, y), the length of a minimising geodesic, by shooting with Newton "
       "corrections and multi-start over converged branches.",
       {from, {"to", "1,0", "end point x,y"}, kTol, kStep}, cmd_dist},
      {"matrix", "distance matrix of a point list or a net",
       "Pairwise geodesic distances d(x_i, x_j); CSV has a header row of indices.",
       {{"points", "", "x,y;x,y;... (default: points of --net)"}, kTol, kStep}, cmd_matrix},
      {"shoot", "integrate a unit-speed geodesic",
       "Integrates the geodesic equation of g = exp(2 phi)(dx^2 + dy^2) at unit speed.",
       {from, angle, {"length", "1", "arclength"}, {"step", "1e-3", "RK4 step"}}, cmd_shoot},
      {"jacobi", "Jacobi field along a geodesic",
       "Solves J'' + K J = 0, J(0) = 0, J'(0) = 1 along a geodesic and reports the first "
       "conjugate point, if any.",
       {from, angle, {"length", "1", "arclength"}, {"step", "1e-3", "RK4 step"}}, cmd_jacobi},
      {"net-sample", "sample a discrete set L",
       "Samples a lattice, a Poisson process or a jittered lattice inside the window.", {}, cmd_net_sample},
      {"qn1", "tube condition on a net",
       "Checks on the window that every isometric copy of the tube {x > 0, |y| <= phi(x)} "
       "meets L, with phi = o(sqrt x). Exit 1 when a tube misses.",
       {{"phi", "const:1", "tube width: const:c | power:c,alpha (alpha < 1/2)"},
        {"tubes", "10000", "number of random tube placements"},
        {"min-hit", "1", "required hit fraction"}},
       cmd_qn1},
      {"qn2", "sector condition on a net",
       "Checks that L meets the open sector in points whose consecutive radius ratios tend "
       "to 1; the tail ratio is the maximum over the top quartile. Exit 1 on failure.",
       {{"apex", "0,0", "sector apex"},
        {"sector", "0,0.3", "angle_lo,width (radians)"},
        {"min-count", "10", "fewest points accepted in the sector"},
        {"ratio", "1.1", "tail ratio threshold"}},
       cmd_qn2},
      {"drift", "narrow-drift sequence of a net",
       "Selects points p_m of L with |p_m| increasing and |p_m| - <p_m, v> minimal in the "
       "bands <p, v> in [2^k, 2^(k+1)).",
       {v, {"count", "20", "sequence length"}, {"origin", "0,0", "origin of the bands"},
        {"band-start", "1", "lower edge of the first band"}},
       cmd_drift},
      {"busemann", "Busemann function of a geodesic ray",
       "Evaluates sup_{t <= T} [t - d(gamma(t), x)], which is non-decreasing in T.",
       {from, angle, {"x", "0,1", "evaluation point"}, {"T", "100", "truncation"},
        {"stride", "1", "sampling stride along the ray"}, kTol, kStep},
       cmd_busemann},
      {"ideal-b", "ideal-boundary function of a direction",
       "Evaluates d(p, 0) - d(p, x) for the far net point p drifting to v; on L this "
       "approximates <x, v>.",
       {v, R, band, {"x", "1,2", "evaluation point"}, kTol, kStep}, cmd_ideal_b},
      {"gap", "gap between the extreme ideal-boundary functions",
       "Evaluates -B_{-v}(x) - B_v(x) at sample points; the gap vanishes when the ideal "
       "boundary in direction v is a single function. Exit 1 when the max gap exceeds --gap-tol.",
       {v, R, {"samples", "", "x,y;x,y;... (default: random in the sample box)"},
        {"sample-count", "10", "random samples"}, {"sample-box", "3", "samples in [-b, b]^2"},
        {"gap-tol", "0.05", "gap tolerance"}, kTol, kStep},
       cmd_gap},
      {"transport", "transport line of an ideal-boundary function",
       "Traces the geodesic through x along the asymptotic directions of v and -v and "
       "checks B(gamma(t)) - B(gamma(s)) = t - s. Exit 1 when a residual exceeds --growth-tol.",
       {v, {"x", "1,2", "point on the line"}, {"length", "10", "total arclength"}, R, band,
        {"samples", "21", "sampled arclengths"}, {"growth-tol", "0.01", "growth residual tolerance"},
        kTol, kStep},
       cmd_transport},
      {"decay", "distance from the asymptotic ray to the net",
       "Reports d(gamma_{p,v}(t), L) / t, which tends to 0 uniformly in v.",
       {{"p", "0,0", "ray origin"}, v, {"radii", "10,100", "arclengths t"},
        {"R", "", "far-point radius for the direction (default: largest t)"}, kTol, kStep},
       cmd_decay},
      {"area-growth", "area of metric disks relative to pi r^2",
       "Computes area(D(x, r)) / (pi r^2), which tends to 1, and equals 1 for all r only "
       "on the flat plane.",
       {{"x", "0,0", "centre"}, radii, method, directions, astep, grid}, cmd_area_growth},
      {"gram", "planarity of four points from their distances",
       "Builds G_ij = (-d_ij^2 + d_i4^2 + d_j4^2) / 2; four points of a Euclidean plane give "
       "rank at most two. Exit 1 when sigma_3 / sigma_1 exceeds --threshold.",
       {{"quad", "", "4x4 distance CSV"},
        {"points", "0,0;1,0;1,1;0,1", "four points a,b[,c];... (used without --quad)"},
        {"threshold", "1e-9", "sigma_3 / sigma_1 threshold"}},
       cmd_gram},
      {"witness", "rigidity witness on a net",
       "Measures max |d(p, q) - |p - q|| over pairs of L; a positive deviation shows L is not "
       "isometrically embedded. Exit 1 when it exceeds --threshold.",
       {{"budget", "2000", "all pairs up to this many, else a seeded sample"},
        {"threshold", "1e-6", "deviation threshold"}, kTol, kStep},
       cmd_witness},
      {"crofton", "Crofton perimeter estimate",
       "Monte Carlo of perimeter = 1/2 sigma{lines meeting the region} under d(theta) dp.",
       {region, R0, N}, [](Params& p) { return integral_estimate(p, true); }},
      {"santalo", "Santalo area estimate",
       "Monte Carlo of area = (1/2 pi) integral of chord length d sigma under d(theta) dp.",
       {region, R0, N}, [](Params& p) { return integral_estimate(p, false); }},
      {"area-continuity", "area ratio mu_r = area(D(0, r)) / r^2",
       "Reports mu_r, which tends to pi for metrics flat outside a compact set.",
       {{"radii", "5,10,20", "increasing radii"}, method, directions, astep, grid}, cmd_area_continuity},
      {"scaled", "rescaled distance d_r",
       "Evaluates d_r(x, y) = d(T_r x, T_r y) / r with T_r built on asymptotic rays; d_r "
       "tends to the Euclidean distance.",
       {{"base", "0,0", "base point"}, {"r", "10", "scale"}, R, {"from", "1,0", "x"}, {"to", "0,1", "y"},
        kTol, kStep},
       cmd_scaled},
  };
}

// ---------------------------------------------------------------- config

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

std::string config_value(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  if (v.is_array()) {
    std::string out;
    const bool nested = !v.empty() && v[0].is_array();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += nested ? ";" : ",";
      out += nested ? config_value(v[i]) : (v[i].is_string() ? v[i].get<std::string>() : v[i].dump());
    }
    return out;
  }
  if (v.is_object()) return v.dump();
  throw ArgumentError("unsupported value");
}

/// Merges config-file values under command-line values.
void apply_config(const std::string& path, const Command& cmd, Params& params,
                  const std::map<std::string, bool>& from_cli) {
  const std::string text = read_file(path);
  json cfg;
  try {
    cfg = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ":" + std::to_string(line_of_offset(text, e.byte ? e.byte - 1 : 0)) +
                     ": malformed JSON: " + e.what());
  }
  if (!cfg.is_object()) throw UsageError(path + ":1: config must be a JSON object");
  for (const auto& [key, value] : cfg.items()) {
    const std::size_t line = line_of_key(text, key);
    const std::string where = path + ":" + std::to_string(line);
    if (key == "command") {
      if (!value.is_string() || value.get<std::string>() != cmd.name)
        throw UsageError(where + ": config is for command " + value.dump() + ", not '" + cmd.name + "'");
      continue;
    }
    if (!params.has(key) || key == "config") throw UsageError(where + ": unknown key '" + key + "'");
    if (from_cli.at(key)) continue;
    std::string s;
    try {
      s = config_value(value);
    } catch (const ArgumentError&) {
      throw UsageError(where + ": key '" + key + "' has an unsupported value");
    }
    params.set(key, s, where);
  }
}

int run_command(const Command& cmd, Params& params, const std::string& config_path,
                const std::map<std::string, bool>& from_cli) {
  if (!config_path.empty()) apply_config(config_path, cmd, params, from_cli);
  if (params.integer("jobs") < 0) throw ArgumentError("--jobs must be nonnegative");
  if (params.integer("jobs") == 0) params.set("jobs", std::to_string(default_workers()), "derived");
  const std::string format = params.str("format");
  if (format != "json" && format != "csv") throw ArgumentError("--format must be json or csv");
  (void)params.seed();

  const auto t0 = std::chrono::steady_clock::now();
  Outcome out = cmd.run(params);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::string body;
  if (format == "csv") {
    body = out.csv.empty() ? flatten_csv(out.values) : out.csv;
  } else {
    json report = {{"operation", cmd.name},
                   {"config", params.echo()},
                   {"values", out.values},
                   {"tolerances", out.tolerances},
                   {"verdict", out.passed ? json(*out.passed ? "pass" : "fail") : json(nullptr)},
                   {"duration_s", seconds}};
    body = report.dump(2) + "\n";
  }
  const std::string dest = params.str("out");
  if (dest.empty()) {
    std::cout << body;
  } else {
    std::ofstream f(dest, std::ios::binary);
    if (!f) throw ArgumentError("cannot write '" + dest + "'");
    f << body;
  }
  return out.passed.value_or(true) ? kExitPass : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical experiments on conformal surfaces: geodesic distances, nets, "
               "ideal boundaries, area growth, planarity tests and integral geometry."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  const auto cmds = commands();
  struct Bound {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
    std::string config;
    CLI::App* app = nullptr;
  };
  std::vector<Bound> bound(cmds.size());
  for (std::size_t c = 0; c < cmds.size(); ++c) {
    const auto& cmd = cmds[c];
    auto* sub = app.add_subcommand(cmd.name, cmd.summary);
    sub->footer(cmd.statement);
    bound[c].app = sub;
    auto add = [&](const Param& prm) {
      bound[c].values[prm.name] = prm.fallback;
      bound[c].options[prm.name] = sub->add_option("--" + prm.name, bound[c].values[prm.name], prm.help);
    };
    for (const auto& prm : cmd.params) add(prm);
    for (const auto& prm : kCommon) add(prm);
    sub->add_option("--config", bound[c].config, "JSON file of option values; command-line flags win");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  for (std::size_t c = 0; c < cmds.size(); ++c) {
    if (!bound[c].app->parsed()) continue;
    Params params;
    std::map<std::string, bool> from_cli;
    for (const auto& [name, value] : bound[c].values) {
      const bool given = bound[c].options[name]->count() > 0;
      from_cli[name] = given;
      params.set(name, value, given ? "command line" : "default");
    }
    try {
      return run_command(cmds[c], params, bound[c].config, from_cli);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << '\n';
    } catch (const SolverError& e) {
      std::cerr << "solver error: " << e.what() << " (best residual " << e.best_residual() << ")\n";
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
    }
    return kExitError;
  }
  return kExitError;
}
