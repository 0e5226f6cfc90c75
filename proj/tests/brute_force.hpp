#pragma once

#include <cmath>
#include <vector>

#include "ellipse/numeric.hpp"

namespace ellipse::oracle {

// Independent root finder for the brute-force oracle: plain Newton with a
// backtracking line search on |p|^2 + |q|^2, started from every grid node.
// Only starts that converge to a small backward error count as roots.
struct Root {
  double alpha, beta;
};

// |p(a, b)| relative to the sum of absolute term values.
inline double backward_error(const numeric::BivarPoly& p, double a, double b) {
  double mag = 0.0;
  for (int i = 0; i <= p.total_degree(); ++i)
    for (int j = 0; i + j <= p.total_degree(); ++j)
      mag += std::abs(p.coeff(i, j) * std::pow(a, i) * std::pow(b, j));
  return mag == 0.0 ? 0.0 : std::abs(p(a, b)) / mag;
}

inline std::vector<Root> grid_roots(const numeric::BivarPoly& p, const numeric::BivarPoly& q) {
  const numeric::BivarPoly pa = p.partial(numeric::Var::Alpha), pb = p.partial(numeric::Var::Beta);
  const numeric::BivarPoly qa = q.partial(numeric::Var::Alpha), qb = q.partial(numeric::Var::Beta);
  const double sp = p.max_abs_coeff(), sq = q.max_abs_coeff();
  auto merit = [&](double a, double b) {
    const double r = p(a, b) / sp, s = q(a, b) / sq;
    return r * r + s * s;
  };
  std::vector<Root> roots;
  const int n = 61;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double a = -50.0 + 100.0 * i / (n - 1), b = -50.0 + 100.0 * j / (n - 1);
      for (int it = 0; it < 100; ++it) {
        const double r = p(a, b), s = q(a, b);
        const double j11 = pa(a, b), j12 = pb(a, b), j21 = qa(a, b), j22 = qb(a, b);
        const double det = j11 * j22 - j12 * j21;
        if (det == 0.0) break;
        const double da = (r * j22 - s * j12) / det, db = (j11 * s - j21 * r) / det;
        const double m0 = merit(a, b);
        double step = 1.0;
        while (step > 1e-6 && merit(a - step * da, b - step * db) > m0) step *= 0.5;
        a -= step * da;
        b -= step * db;
        if (std::abs(step * da) + std::abs(step * db) <= 1e-15 * (1 + std::abs(a) + std::abs(b)))
          break;
      }
      if (std::isfinite(a) && std::isfinite(b) && backward_error(p, a, b) <= 1e-12 &&
          backward_error(q, a, b) <= 1e-12)
        roots.push_back({a, b});
    }
  }
  return roots;
}

}  // namespace ellipse::oracle
