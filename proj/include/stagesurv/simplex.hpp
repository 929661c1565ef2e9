#pragma once

// Nelder-Mead downhill simplex over an unconstrained vector space.
//
// Uses the dimension-adaptive coefficients of Gao & Han (2012), which keep
// the method effective beyond two or three dimensions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace stagesurv {

struct SimplexOptions {
  double initial_step = 0.5;
  int max_iterations = 2000;
  double x_tolerance = 1e-9;  // simplex diameter (inf-norm to the best vertex)
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

template <class F>
SimplexResult nelder_mead(F&& f, std::vector<double> start, const SimplexOptions& opt = {}) {
  using Point = std::vector<double>;
  const std::size_t n = start.size();
  SimplexResult res;
  if (n == 0) {
    res.x = std::move(start);
    res.value = f(res.x);
    res.evaluations = 1;
    res.converged = true;
    return res;
  }

  const double dn = static_cast<double>(n);
  const double reflect = 1.0;
  const double expand = 1.0 + 2.0 / dn;
  const double contract = 0.75 - 1.0 / (2.0 * dn);
  const double shrink = 1.0 - 1.0 / dn;

  std::vector<Point> pts(n + 1, start);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step;
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i <= n; ++i) vals[i] = f(pts[i]);
  res.evaluations = static_cast<int>(n + 1);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<Point> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = std::move(pts[order[i]]);
      v2[i] = vals[order[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };
  auto diameter = [&] {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k) d = std::max(d, std::abs(pts[i][k] - pts[0][k]));
    return d;
  };
  // base + t * (base - worst)
  auto along = [&](const Point& base, double t) {
    Point p(n);
    for (std::size_t k = 0; k < n; ++k) p[k] = base[k] + t * (base[k] - pts[n][k]);
    return p;
  };
  auto eval = [&](const Point& p) {
    ++res.evaluations;
    return f(p);
  };

  sort_simplex();
  Point centroid(n);
  while (true) {
    if (diameter() < opt.x_tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iterations) break;
    ++res.iterations;

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / dn;

    Point xr = along(centroid, reflect);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      Point xe = along(centroid, reflect * expand);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = std::move(xe);
        vals[n] = fe;
      } else {
        pts[n] = std::move(xr);
        vals[n] = fr;
      }
    } else if (fr < vals[n - 1]) {
      pts[n] = std::move(xr);
      vals[n] = fr;
    } else {
      const bool outside = fr < vals[n];
      Point xc = along(centroid, outside ? reflect * contract : -contract);
      const double fc = eval(xc);
      if (fc < (outside ? fr : vals[n])) {
        pts[n] = std::move(xc);
        vals[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[0][k] + shrink * (pts[i][k] - pts[0][k]);
          vals[i] = eval(pts[i]);
        }
      }
    }
    sort_simplex();
  }

  res.x = pts[0];
  res.value = vals[0];
  return res;
}

}  // namespace stagesurv
