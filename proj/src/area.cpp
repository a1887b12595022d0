#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "rigidity/asymptotics.hpp"
#include "rigidity/errors.hpp"
#include "rigidity/parallel.hpp"

namespace rigidity {
namespace {

std::vector<double> polar_jacobi(const ConformalMetric& metric, Point2 x,
                                 const std::vector<double>& sorted, const AreaOptions& opts) {
  if (opts.directions < 4) throw ArgumentError("area_growth: need at least 4 directions");
  const auto n = static_cast<std::size_t>(opts.directions);
  std::vector<std::vector<double>> integrals(n);
  parallel_for(n, opts.workers, [&](std::size_t k) {
    const double theta = 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n);
    GeodesicFlow flow(metric, {opts.step, 0.5}, true);
    FlowState s = flow.start(x, unit_velocity(metric, x, theta));
    double t_prev = 0.0, j_prev = 0.0;
    auto watch = [&](const FlowState& st) {
      if (st.jacobi <= 0.0) {
        const double zero = t_prev + (st.t - t_prev) * j_prev / (j_prev - st.jacobi);
        std::ostringstream os;
        os << "conjugate point: Jacobi field vanishes at t = " << zero << " in direction "
           << theta << " before the largest radius";
        throw MethodError(os.str());
      }
      t_prev = st.t;
      j_prev = st.jacobi;
    };
    auto& out = integrals[k];
    for (double r : sorted) {
      flow.run(s, r - s.t, watch);
      out.push_back(s.jacobi_integral);
    }
  });
  std::vector<double> areas(sorted.size(), 0.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += integrals[k][i];
    areas[i] = sum * 2.0 * kPi / static_cast<double>(n);
  }
  return areas;
}

std::vector<double> grid_sum(const ConformalMetric& metric, Point2 x,
                             const std::vector<double>& sorted, const AreaOptions& opts) {
  const double h = opts.grid_spacing;
  if (!(h > 0.0)) throw ArgumentError("area_growth: grid spacing must be positive");
  if (opts.stencil < 1) throw ArgumentError("area_growth: stencil must be at least 1");
  const double rmax = sorted.back();

  // Enough room for the metric disk: radius r needs Euclidean reach r * max e^-phi.
  double shrink = 1.0;
  for (double i = -16; i <= 16; ++i)
    for (double j = -16; j <= 16; ++j) {
      const Point2 p = x + Vec2{i, j} * (3.0 * rmax / 16.0);
      try {
        shrink = std::max(shrink, std::exp(-metric.phi(p)));
      } catch (const DomainError&) {
      }
    }
  const double half = std::min(rmax * shrink, 3.0 * rmax) + (opts.stencil + 2) * h;
  const long K = static_cast<long>(std::ceil(half / h));
  const long n = 2 * K + 1;
  const long hn = 2 * n - 1;  // half-step grid for edge midpoints

  std::vector<double> f(static_cast<std::size_t>(hn * hn));
  parallel_for(static_cast<std::size_t>(hn), opts.workers, [&](std::size_t a) {
    for (long b = 0; b < hn; ++b) {
      const Point2 p{x.x + 0.5 * h * (static_cast<double>(a) - 2.0 * K),
                     x.y + 0.5 * h * (static_cast<double>(b) - 2.0 * K)};
      f[a * hn + b] = std::exp(metric.phi(p));
    }
  });
  auto fat = [&](long a, long b) { return f[static_cast<std::size_t>(a * hn + b)]; };

  struct Offset {
    long di, dj;
    double len;
  };
  std::vector<Offset> offsets;
  for (long di = -opts.stencil; di <= opts.stencil; ++di)
    for (long dj = -opts.stencil; dj <= opts.stencil; ++dj)
      if ((di || dj) && std::gcd(std::labs(di), std::labs(dj)) == 1)
        offsets.push_back({di, dj, h * std::hypot(static_cast<double>(di), static_cast<double>(dj))});

  const auto total = static_cast<std::size_t>(n * n);
  std::vector<double> dist(total, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  const auto src = static_cast<std::size_t>(K * n + K);
  dist[src] = 0.0;
  queue.push({0.0, src});
  const double cutoff = rmax + 2.0 * h * (opts.stencil + 1) * shrink;
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (d > dist[u] || d > cutoff) continue;
    const long i = static_cast<long>(u) / n, j = static_cast<long>(u) % n;
    for (const auto& o : offsets) {
      const long a = i + o.di, b = j + o.dj;
      if (a < 0 || a >= n || b < 0 || b >= n) continue;
      // Simpson rule for the conformal length of the straight edge
      const double w = o.len * (fat(2 * i, 2 * j) + 4.0 * fat(2 * i + o.di, 2 * j + o.dj) +
                                fat(2 * a, 2 * b)) / 6.0;
      const auto v = static_cast<std::size_t>(a * n + b);
      if (d + w < dist[v]) {
        dist[v] = d + w;
        queue.push({dist[v], v});
      }
    }
  }

  // Each node carries its cell of metric area e^{2 phi} h^2; cells straddling
  // the level set count by the linearised fraction inside.
  std::vector<double> areas(sorted.size(), 0.0);
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    double sum = 0.0;
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) {
        const double e = fat(2 * i, 2 * j);
        const double frac =
            std::clamp((sorted[r] - dist[static_cast<std::size_t>(i * n + j)]) / (h * e) + 0.5, 0.0, 1.0);
        sum += frac * e * e;
      }
    areas[r] = sum * h * h;
  }
  return areas;
}

}  // namespace

std::string to_string(AreaMethod m) {
  return m == AreaMethod::PolarJacobi ? "polar-jacobi" : "grid-sum";
}

AreaMethod area_method_from_string(const std::string& s) {
  if (s == "polar-jacobi" || s == "polar") return AreaMethod::PolarJacobi;
  if (s == "grid-sum" || s == "grid") return AreaMethod::GridSum;
  throw ArgumentError("unknown area method '" + s + "' (polar-jacobi | grid-sum)");
}

AreaGrowth area_growth(const ConformalMetric& metric, Point2 x, const std::vector<double>& radii,
                       AreaMethod method, const AreaOptions& opts) {
  if (radii.empty()) throw ArgumentError("area_growth: no radii");
  for (double r : radii)
    if (!(r > 0.0) || !std::isfinite(r)) throw ArgumentError("area_growth: radii must be positive");
  if (!is_finite(x)) throw ArgumentError("area_growth: non-finite centre");
  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  const auto areas_sorted = method == AreaMethod::PolarJacobi ? polar_jacobi(metric, x, sorted, opts)
                                                              : grid_sum(metric, x, sorted, opts);
  AreaGrowth out;
  out.method = method;
  for (double r : radii) {
    const auto k = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), r) -
                                            sorted.begin());
    out.radii.push_back(r);
    out.areas.push_back(areas_sorted[k]);
    out.ratios.push_back(areas_sorted[k] / (kPi * r * r));
  }
  return out;
}

}  // namespace rigidity
