#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "rigidity/geodesic.hpp"
#include "rigidity/metric.hpp"

namespace rigidity {

struct DistanceOptions {
  double tolerance = 1e-8;  // endpoint miss, chart units
  int multi_start = 8;
  /// Full angular width of the multi-start fan centred on the chord.
  double fan = kPi / 2.0;
  double step = 2e-3;
  double flat_step = 0.5;
  int relax_nodes = 256;
  int relax_iterations = 500;
  int max_newton = 40;
  bool keep_path = true;
};

struct DistanceDiagnostics {
  int iterations = 0;           // Newton iterations of the accepted branch
  double endpoint_miss = 0.0;
  double departure_angle = 0.0;
  /// Angle between the relaxation estimate and the accepted departure angle.
  double angle_residual = 0.0;
  std::string method;           // "chord", "shooting" or "multi-start"
  std::vector<double> branch_lengths;  // all distinct converged geodesics, ascending
};

struct DistanceResult {
  double value = 0.0;
  GeodesicPath path;
  DistanceDiagnostics diagnostics;
};

/// Length of a (locally) minimising geodesic from x to y; the minimum over
/// every converged shooting branch.
DistanceResult distance(const ConformalMetric& metric, Point2 x, Point2 y,
                        const DistanceOptions& opts = {});

struct RelaxedPath {
  std::vector<Point2> nodes;
  double length = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
};

/// Discrete geodesic by preconditioned gradient descent on the polyline
/// energy sum_i exp(2 phi(mid_i)) |x_{i+1} - x_i|^2 with backtracking.
/// Starts from the straight chord unless `init` is given.
RelaxedPath relax_path(const ConformalMetric& metric, Point2 x, Point2 y, int nodes,
                       int max_iterations, const std::vector<Point2>* init = nullptr);

/// Dense symmetric matrix, row-major.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}
  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Pairwise distances, one solve per unordered pair. Results are bitwise
/// independent of `workers`. Solver failures are rethrown naming the pair.
DistanceMatrix distance_matrix(const ConformalMetric& metric, const std::vector<Point2>& points,
                               const DistanceOptions& opts = {}, unsigned workers = 1);

std::string matrix_to_csv(const DistanceMatrix& m);
DistanceMatrix matrix_from_csv(const std::string& text);

/// Rescaled metric d_r(x, y) = d(T_r x, T_r y) / r where T_r(a v) is the
/// point at arclength a r on the geodesic leaving the base point in the
/// asymptotic direction attached to v.
class ScaledMetric {
 public:
  using DirectionMap = std::function<Vec2(Vec2)>;

  /// Identity direction map; exact for the flat metric.
  ScaledMetric(ConformalMetric metric, Point2 base, double scale);
  ScaledMetric(ConformalMetric metric, Point2 base, double scale, DirectionMap directions);

  const ConformalMetric& metric() const { return metric_; }
  Point2 base() const { return base_; }
  double scale() const { return scale_; }

  /// Cached asymptotic direction for unit v.
  Vec2 direction(Vec2 v) const;
  Point2 embed(Point2 x, const ShootOptions& opts = {2e-3, 0.5}) const;

 private:
  ConformalMetric metric_;
  Point2 base_;
  double scale_;
  DirectionMap map_;
  struct Cache {
    std::mutex mutex;
    std::map<std::pair<double, double>, Vec2> values;
  };
  std::shared_ptr<Cache> cache_;
};

double scaled_distance(const ScaledMetric& sm, Point2 x, Point2 y,
                       const DistanceOptions& opts = {});

}  // namespace rigidity
