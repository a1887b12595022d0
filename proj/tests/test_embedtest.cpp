#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rigidity/embedtest.hpp"
#include "rigidity/errors.hpp"

using namespace rigidity;

namespace {

using Quad = std::array<std::vector<double>, 4>;

Quad random_quad(std::mt19937_64& gen, int dim) {
  std::uniform_real_distribution<double> u(-1, 1);
  Quad q;
  for (auto& p : q) {
    p.resize(dim);
    for (auto& c : p) c = u(gen);
  }
  return q;
}

double oracle_ratio(const Quad& q) {
  const Eigen::Matrix4d g = oracle::coordinate_gram({q.begin(), q.end()});
  const Eigen::Vector4d s = Eigen::JacobiSVD<Eigen::Matrix4d>(g).singularValues();
  return s(2) / s(0);
}

}  // namespace

TEST_CASE("unit square is planar") {
  const auto q = QuadDistances::from_points({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}});
  const auto rep = gram_rank_test(q);
  CHECK(rep.ratio < 1e-12);
  CHECK(rep.planar);
  CHECK(q(0, 2) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("regular simplex corner is not planar") {
  const auto q = QuadDistances::from_points({{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}});
  const auto rep = gram_rank_test(q);
  Eigen::Matrix4d expected = Eigen::Matrix4d::Zero();
  expected.topLeftCorner<3, 3>() << 1, 1, 1, 1, 2, 1, 1, 1, 2;
  CHECK((rep.gram - expected).cwiseAbs().maxCoeff() < 1e-15);
  // eigenvalues of that block are 1 and 2 +- sqrt(3)
  const double closed = (2 - std::sqrt(3.0)) / (2 + std::sqrt(3.0));
  CHECK(std::abs(rep.ratio - closed) < 1e-12);
  CHECK_FALSE(rep.planar);
  CHECK(rep.max_ratio_all_bases == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("collinear points are planar") {
  const auto q = QuadDistances::from_points({{{0}, {1}, {2.5}, {-3}}});
  const auto rep = gram_rank_test(q);
  CHECK(rep.planar);
  CHECK(rep.sigma[1] / rep.sigma[0] < 1e-12);
}

TEST_CASE("coincident points have a zero Gram matrix") {
  const auto q = QuadDistances::from_matrix({});
  const auto rep = gram_rank_test(q);
  CHECK(rep.planar);
  CHECK(rep.sigma[0] == 0.0);
}

TEST_CASE("Gram structure") {
  std::mt19937_64 gen(1);
  const auto q = QuadDistances::from_points(random_quad(gen, 3));
  const auto g = gram_matrix(q);
  for (int i = 0; i < 4; ++i) {
    CHECK(g(3, i) == 0.0);
    CHECK(g(i, 3) == 0.0);
    for (int j = 0; j < 4; ++j) CHECK(g(i, j) == g(j, i));
  }
}

TEST_CASE("Gram matrix agrees with coordinates") {
  std::mt19937_64 gen(2);
  for (int k = 0; k < 20; ++k) {
    const auto pts = random_quad(gen, 3);
    const auto g = gram_matrix(QuadDistances::from_points(pts));
    CHECK((g - oracle::coordinate_gram({pts.begin(), pts.end()})).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("random planar and spatial quadruples") {
  std::mt19937_64 gen(3);
  int planar = 0, spatial = 0;
  for (int k = 0; k < 100; ++k) planar += gram_rank_test(QuadDistances::from_points(random_quad(gen, 2))).planar;
  for (int k = 0; k < 100;) {
    const auto pts = random_quad(gen, 3);
    if (oracle_ratio(pts) < 1e-2) continue;  // nearly flat tetrahedron
    const auto rep = gram_rank_test(QuadDistances::from_points(pts));
    spatial += !rep.planar && rep.ratio > 1e-3;
    ++k;
  }
  CHECK(planar == 100);
  CHECK(spatial == 100);
}

TEST_CASE("permutation invariance over the first three points") {
  std::mt19937_64 gen(4);
  const auto pts = random_quad(gen, 3);
  const auto ref = gram_rank_test(QuadDistances::from_points(pts));
  std::array<int, 3> perm{0, 1, 2};
  while (std::next_permutation(perm.begin(), perm.end())) {
    const Quad p{pts[perm[0]], pts[perm[1]], pts[perm[2]], pts[3]};
    const auto rep = gram_rank_test(QuadDistances::from_points(p));
    for (int i = 0; i < 4; ++i) CHECK(std::abs(rep.sigma[i] - ref.sigma[i]) < 1e-12);
  }
}

TEST_CASE("scale equivariance") {
  std::mt19937_64 gen(5);
  for (int dim : {2, 3}) {
    const auto q = QuadDistances::from_points(random_quad(gen, dim));
    auto m = q.matrix();
    const double s = 3.7;
    for (auto& row : m)
      for (auto& x : row) x *= s;
    const auto a = gram_rank_test(q), b = gram_rank_test(QuadDistances::from_matrix(m));
    for (int i = 0; i < 4; ++i) CHECK(std::abs(b.sigma[i] - s * s * a.sigma[i]) <= 1e-12 * s * s * a.sigma[0]);
    CHECK(a.planar == b.planar);
  }
}

TEST_CASE("invalid distance matrices") {
  QuadDistances::Matrix bad{};
  bad[0][1] = bad[1][0] = 1.0;
  bad[1][2] = bad[2][1] = 1.0;
  bad[0][2] = bad[2][0] = 3.0;  // 3 > 1 + 1
  CHECK_THROWS_AS(QuadDistances::from_matrix(bad), InvalidMetricError);
  QuadDistances::Matrix asym{};
  asym[0][1] = 1.0;
  CHECK_THROWS_AS(QuadDistances::from_matrix(asym), InvalidMetricError);
  QuadDistances::Matrix neg{};
  neg[0][1] = neg[1][0] = -1.0;
  CHECK_THROWS_AS(QuadDistances::from_matrix(neg), InvalidMetricError);
}

TEST_CASE("quadruple csv") {
  const auto q = QuadDistances::from_csv("a,b,c,d\n0,1,1.4142135623730951,1\n1,0,1,1.4142135623730951\n"
                                         "1.4142135623730951,1,0,1\n1,1.4142135623730951,1,0\n");
  CHECK(gram_rank_test(q).planar);
  CHECK_THROWS_AS(QuadDistances::from_csv("0,1\n1,0\n"), ArgumentError);
}

TEST_CASE("flat witness vanishes") {
  const auto L = PointSet::lattice(1.0, Box::square(3));
  const auto rep = rigidity_witness(ConformalMetric::flat(), L);
  CHECK(rep.pairs.size() == 49 * 48 / 2);
  CHECK_FALSE(rep.sampled);
  CHECK(rep.max_deviation < 1e-6);
  CHECK(rep.failures == 0);
}

TEST_CASE("bump witness detects curvature") {
  const auto metric = ConformalMetric::bump(0.5, {0.5, 0.5}, 0.4);
  const auto L = PointSet::lattice(1.0, Box::square(2));
  const auto rep = rigidity_witness(metric, L);
  CHECK(rep.max_deviation > 1e-3);
  const auto& w = rep.pairs[rep.worst];
  const Point2 a = rep.points[w.i], b = rep.points[w.j];
  // a diagonal of the unit cell holding the bump
  CHECK(std::abs(a.x - b.x) == 1.0);
  CHECK(std::abs(a.y - b.y) == 1.0);
  CHECK(std::min(a.x, b.x) == 0.0);
  CHECK(std::min(a.y, b.y) == 0.0);

  std::vector<Point2> shuffled = L.points();
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(9));
  const auto again = rigidity_witness(metric, PointSet::from_points(shuffled, L.window()));
  CHECK(again.max_deviation == rep.max_deviation);
  CHECK(again.points == rep.points);
}

TEST_CASE("witness sampling under a budget") {
  const auto L = PointSet::lattice(1.0, Box::square(4));
  const auto a = rigidity_witness(ConformalMetric::flat(), L, 100, 7);
  const auto b = rigidity_witness(ConformalMetric::flat(), L, 100, 7, {}, 4);
  CHECK(a.sampled);
  CHECK(a.pairs.size() == 100);
  REQUIRE(b.pairs.size() == 100);
  for (std::size_t k = 0; k < 100; ++k) {
    CHECK(a.pairs[k].i == b.pairs[k].i);
    CHECK(a.pairs[k].j == b.pairs[k].j);
    CHECK(a.pairs[k].i < a.pairs[k].j);
  }
}
