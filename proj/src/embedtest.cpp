#include "rigidity/embedtest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"
#include "rigidity/rng.hpp"

namespace rigidity {

QuadDistances QuadDistances::from_matrix(const Matrix& d) {
  QuadDistances q;
  double scale = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (!std::isfinite(d[i][j])) throw InvalidMetricError("distance matrix has a non-finite entry");
      scale = std::max(scale, std::abs(d[i][j]));
    }
  for (int i = 0; i < 4; ++i) {
    if (d[i][i] != 0.0) throw InvalidMetricError("distance matrix diagonal must be zero");
    for (int j = 0; j < 4; ++j) {
      if (d[i][j] < 0.0) throw InvalidMetricError("distances must be nonnegative");
      if (std::abs(d[i][j] - d[j][i]) > 1e-12 * std::max(scale, 1.0))
        throw InvalidMetricError("distance matrix must be symmetric");
      q.d_[i][j] = i < j ? d[i][j] : d[j][i];
    }
  }
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        if (q.d_[i][k] > q.d_[i][j] + q.d_[j][k] + 1e-9) {
          std::ostringstream os;
          os << "triangle inequality fails: d(" << i << "," << k << ") > d(" << i << "," << j
             << ") + d(" << j << "," << k << ")";
          throw InvalidMetricError(os.str());
        }
  return q;
}

QuadDistances QuadDistances::from_points(const std::array<std::vector<double>, 4>& points) {
  Matrix d{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (points[i].size() != points[j].size()) throw ArgumentError("points differ in dimension");
      double s = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double t = points[i][k] - points[j][k];
        s += t * t;
      }
      d[i][j] = std::sqrt(s);
    }
  return from_matrix(d);
}

QuadDistances QuadDistances::from_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  Matrix d{};
  int row = 0;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::logic_error&) {
        numeric = false;
        break;
      }
    }
    if (!numeric && row == 0 && lineno == 1) continue;  // header
    if (!numeric || vals.size() != 4)
      throw ArgumentError("quad csv line " + std::to_string(lineno) + ": expected 4 numbers");
    if (row >= 4) throw ArgumentError("quad csv line " + std::to_string(lineno) + ": more than 4 rows");
    for (int j = 0; j < 4; ++j) d[row][j] = vals[j];
    ++row;
  }
  if (row != 4) throw ArgumentError("quad csv: expected 4 rows");
  return from_matrix(d);
}

Eigen::Matrix4d gram_matrix(const QuadDistances& q, int base) {
  Eigen::Matrix4d g;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double dij = q(i, j), dib = q(i, base), djb = q(j, base);
      g(i, j) = (-dij * dij + dib * dib + djb * djb) / 2.0;
    }
  return g;
}

namespace {

std::array<double, 4> singular_values(const Eigen::Matrix4d& g) {
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(g);
  const auto s = svd.singularValues();
  return {s(0), s(1), s(2), s(3)};
}

double rank_ratio(const std::array<double, 4>& s) { return s[0] > 0.0 ? s[2] / s[0] : 0.0; }

}  // namespace

GramReport gram_rank_test(const QuadDistances& q, double threshold) {
  if (!(threshold >= 0.0)) throw ArgumentError("gram threshold must be nonnegative");
  GramReport r;
  r.threshold = threshold;
  r.gram = gram_matrix(q, 3);
  r.sigma = singular_values(r.gram);
  r.ratio = rank_ratio(r.sigma);
  r.planar = r.ratio <= threshold;
  for (int b = 0; b < 4; ++b)
    r.max_ratio_all_bases = std::max(r.max_ratio_all_bases, rank_ratio(singular_values(gram_matrix(q, b))));
  return r;
}

nlohmann::json GramReport::to_json() const {
  nlohmann::json g = nlohmann::json::array();
  for (int i = 0; i < 4; ++i) g.push_back({gram(i, 0), gram(i, 1), gram(i, 2), gram(i, 3)});
  return {{"gram", g},
          {"sigma", sigma},
          {"ratio", ratio},
          {"max_ratio_all_bases", max_ratio_all_bases},
          {"threshold", threshold},
          {"planar", planar}};
}

WitnessReport rigidity_witness(const ConformalMetric& metric, const PointSet& L, std::size_t budget,
                               std::uint64_t seed, const DistanceOptions& opts, unsigned workers) {
  if (budget == 0) throw ArgumentError("witness pair budget must be positive");
  WitnessReport rep;
  rep.points = L.materialize();
  std::sort(rep.points.begin(), rep.points.end(), lex_less);
  rep.budget = budget;
  rep.seed = seed;
  const std::size_t n = rep.points.size();
  if (n < 2) throw ArgumentError("witness needs at least two points");
  const std::size_t all = n * (n - 1) / 2;
  auto add = [&](std::size_t i, std::size_t j) {
    WitnessPair pr;
    pr.i = i;
    pr.j = j;
    rep.pairs.push_back(pr);
  };
  if (all <= budget) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) add(i, j);
  } else {
    rep.sampled = true;
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    CounterRng rng(stream_key(seed, 0x77u, 0));
    while (chosen.size() < budget) {
      std::size_t i = static_cast<std::size_t>(rng.next() % n);
      std::size_t j = static_cast<std::size_t>(rng.next() % n);
      if (i == j) continue;
      if (i > j) std::swap(i, j);
      chosen.insert({i, j});
    }
    for (const auto& [i, j] : chosen) add(i, j);
  }
  DistanceOptions o = opts;
  o.keep_path = false;
  parallel_for(rep.pairs.size(), workers, [&](std::size_t k) {
    auto& pr = rep.pairs[k];
    const Point2 a = rep.points[pr.i], b = rep.points[pr.j];
    pr.euclidean = dist(a, b);
    try {
      pr.metric_distance = distance(metric, a, b, o).value;
      pr.deviation = std::abs(pr.metric_distance - pr.euclidean);
    } catch (const SolverError& e) {
      pr.failed = true;
      pr.error = e.what();
    }
  });
  bool any = false;
  for (std::size_t k = 0; k < rep.pairs.size(); ++k) {
    const auto& pr = rep.pairs[k];
    if (pr.failed) {
      ++rep.failures;
      continue;
    }
    if (!any || pr.deviation > rep.max_deviation) {
      rep.max_deviation = pr.deviation;
      rep.worst = k;
      any = true;
    }
  }
  return rep;
}

}  // namespace rigidity
