#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rigidity/vec2.hpp"

namespace rigidity {

/// Closed axis-aligned box.
struct Box {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  static Box square(double half) { return {-half, -half, half, half}; }
  bool contains(Point2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool degenerate() const { return !(xmax > xmin) || !(ymax > ymin); }
  Point2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
  /// Length of the ray p + t u (t >= 0) inside the box, from a point p inside.
  double exit_length(Point2 p, Vec2 u) const;
};

struct Provenance {
  enum class Kind { Lattice, Poisson, Jittered, Custom };
  Kind kind = Kind::Custom;
  double spacing = 0.0;    // Lattice, Jittered
  double intensity = 0.0;  // Poisson
  double jitter = 0.0;     // Jittered

  static Provenance lattice(double spacing) { return {Kind::Lattice, spacing, 0.0, 0.0}; }
  static Provenance poisson(double intensity) { return {Kind::Poisson, 0.0, intensity, 0.0}; }
  static Provenance jittered(double spacing, double jitter) {
    return {Kind::Jittered, spacing, 0.0, jitter};
  }
  static Provenance custom() { return {}; }
};

/// Finite window of a discrete set L in the plane. Large lattices are kept
/// implicit (enumerated arithmetically) instead of being stored.
class PointSet {
 public:
  PointSet() = default;
  /// Validates that points are finite, inside the window and pairwise distinct.
  static PointSet from_points(std::vector<Point2> points, Box window,
                              Provenance provenance = Provenance::custom(),
                              std::uint64_t seed = 0);
  static PointSet lattice(double spacing, Box window, bool force_materialize = false);

  bool materialized() const { return !implicit_; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  /// Stored points; throws for implicit lattices.
  const std::vector<Point2>& points() const;
  std::vector<Point2> materialize() const;

  const Box& window() const { return window_; }
  const Provenance& provenance() const { return provenance_; }
  std::uint64_t seed() const { return seed_; }

  void for_each(const std::function<void(Point2)>& fn) const;
  /// Visits every point q with t = <q - origin, u> in [t0, t1] and
  /// |<q - origin, perp(u)>| <= halfwidth (u unit). Materialised sets accept
  /// an infinite halfwidth.
  void for_each_in_strip(Point2 origin, Vec2 u, double t0, double t1, double halfwidth,
                         const std::function<void(Point2)>& fn) const;
  /// Up to k nearest points to q (Euclidean), ascending distance, ties
  /// broken lexicographically.
  std::vector<Point2> nearest(Point2 q, std::size_t k) const;

  nlohmann::json sidecar() const;

 private:
  void build_grid();
  std::size_t size_implicit() const;

  std::vector<Point2> points_;
  Box window_{};
  Provenance provenance_{};
  std::uint64_t seed_ = 0;
  bool implicit_ = false;
  // implicit lattice index ranges
  long imin_ = 0, imax_ = -1, jmin_ = 0, jmax_ = -1;
  // uniform bucket grid for materialised sets
  double cell_ = 1.0;
  long gx_ = 0, gy_ = 0;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> cell_items_;
};

/// Sets above this many lattice points are kept implicit by sample_net.
inline constexpr std::size_t kMaterializeLimit = std::size_t{1} << 20;

PointSet sample_net(const Provenance& provenance, const Box& window, std::uint64_t seed,
                    unsigned workers = 1);

std::string points_to_csv(const PointSet& set);
std::vector<Point2> points_from_csv(const std::string& text);

/// Non-decreasing positive width function of a subgraph tube.
struct WidthSpec {
  enum class Kind { Constant, PowerLaw };
  Kind kind = Kind::Constant;
  double scale = 1.0;
  double exponent = 0.0;  // PowerLaw only, in [0, 1/2)

  static WidthSpec constant(double c);
  static WidthSpec power_law(double c, double alpha);
  double operator()(double x) const;
  nlohmann::json to_json() const;
};

/// T(subgraph(phi)) for the rigid motion T(x) = R_angle x + translation:
/// the set {base + t u + s perp(u) : t > 0, |s| <= phi(t)}.
struct TubeSpec {
  double angle = 0.0;
  Point2 translation{};
  WidthSpec width{};
};

struct TubeProbe {
  bool hit = false;
  /// min over points with 0 < t <= axis_length of |s| - phi(t); positive means empty.
  double margin = 0.0;
  double axis_length = 0.0;  // truncated to the window
};

TubeProbe probe_tube(const PointSet& set, const TubeSpec& tube);

struct Qn1Report {
  std::size_t tubes = 0;
  std::size_t hits = 0;
  double hit_fraction = 0.0;
  TubeSpec worst{};  // the emptiest tube
  TubeProbe worst_probe{};
  std::vector<std::string> warnings;
  bool passed() const { return tubes > 0 && hits == tubes; }
};

Qn1Report check_qn1(const PointSet& set, const WidthSpec& width, std::size_t n_isometries,
                    std::uint64_t seed, unsigned workers = 1);

/// Open sector {apex + r (cos a, sin a) : r > 0, a in (angle_lo, angle_lo + width)}.
struct Sector {
  Point2 apex{};
  double angle_lo = 0.0;
  double width = 0.0;
  bool contains(Point2 p) const;
};

struct Qn2Report {
  std::vector<double> radii;   // distances from the apex, ascending
  std::vector<double> ratios;  // consecutive radius ratios
  double tail_ratio = 0.0;     // max ratio over the top quartile
  double threshold = 1.1;
  std::size_t min_count = 0;
  bool passed = false;
  std::string reason;
};

Qn2Report check_qn2(const PointSet& set, const Sector& sector, std::size_t min_count,
                    double threshold = 1.1);

struct DriftSequence {
  std::vector<Point2> points;
  Vec2 direction{};
  Point2 origin{};
  std::vector<double> residuals;  // |p - o| - <p - o, v>
  bool truncated = false;         // ran out of window or hit an empty band
};

/// Residual |q| - <q, v> evaluated without cancellation.
double drift_residual(Vec2 q, Vec2 v);

/// Narrow-drift sequence relative to `origin`: one point per geometric band
/// <p - origin, v> in [b 2^k, b 2^{k+1}), b = band_start, each minimising the
/// residual among points farther from the origin than the previous pick.
DriftSequence narrow_drift(const PointSet& set, Vec2 v, std::size_t count,
                           Point2 origin = {}, double band_start = 1.0);

}  // namespace rigidity
