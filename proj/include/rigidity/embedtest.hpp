#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rigidity/distance.hpp"
#include "rigidity/nets.hpp"

namespace rigidity {

/// Pairwise distances of four points. Construction enforces symmetry, a zero
/// diagonal, nonnegativity and the triangle inequality (slack 1e-9).
class QuadDistances {
 public:
  using Matrix = std::array<std::array<double, 4>, 4>;

  static QuadDistances from_matrix(const Matrix& d);
  /// Exact Euclidean distances of four points in R^k.
  static QuadDistances from_points(const std::array<std::vector<double>, 4>& points);
  static QuadDistances from_csv(const std::string& text);

  double operator()(int i, int j) const { return d_[i][j]; }
  const Matrix& matrix() const { return d_; }

 private:
  Matrix d_{};
};

struct GramReport {
  Eigen::Matrix4d gram;
  std::array<double, 4> sigma{};  // descending
  double ratio = 0.0;             // sigma_3 / sigma_1 with the last point as base
  double max_ratio_all_bases = 0.0;
  double threshold = 1e-9;
  bool planar = false;

  nlohmann::json to_json() const;
};

/// G_ij = (-d_ij^2 + d_ib^2 + d_jb^2) / 2 for base point b.
Eigen::Matrix4d gram_matrix(const QuadDistances& q, int base = 3);
GramReport gram_rank_test(const QuadDistances& q, double threshold = 1e-9);

struct WitnessPair {
  std::size_t i = 0, j = 0;
  double metric_distance = 0.0;
  double euclidean = 0.0;
  double deviation = 0.0;
  bool failed = false;
  std::string error;
};

struct WitnessReport {
  std::vector<Point2> points;  // canonical (lexicographic) order; pairs index into it
  std::vector<WitnessPair> pairs;
  double max_deviation = 0.0;
  std::size_t worst = 0;  // index into pairs
  std::size_t failures = 0;
  bool sampled = false;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
};

/// |d_M(p, q) - |p - q|| over pairs of L: every pair when there are at most
/// `budget` of them, otherwise `budget` pairs drawn with `seed`.
WitnessReport rigidity_witness(const ConformalMetric& metric, const PointSet& L,
                               std::size_t budget = 2000, std::uint64_t seed = 0,
                               const DistanceOptions& opts = {}, unsigned workers = 1);

}  // namespace rigidity
