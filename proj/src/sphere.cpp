#include "ellipse/sphere.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "ellipse/error.hpp"
#include "ellipse/numeric.hpp"

namespace ellipse {

using numeric::Mat;

bool scene_is_valid(const SphereScene& s) {
  if (!std::isfinite(s.u) || !std::isfinite(s.v) || !std::isfinite(s.theta)) return false;
  if (!(s.theta > 0.0) || !(s.theta < 0.5 * std::numbers::pi)) return false;
  const double off_axis = std::atan(std::hypot(s.u, s.v));
  return off_axis + s.theta < 0.5 * std::numbers::pi;
}

double s1_residual(const ConicCoeffs& in) {
  const ConicCoeffs c = normalize(in);
  return c.d * (c.b * c.d - c.a * c.e) - c.e * (c.b * c.e - c.c * c.d);
}

double s2_residual(const ConicCoeffs& in, const Intrinsics& intr) {
  const ConicCoeffs c = normalize(in);
  const double f2 = intr.focal * intr.focal;
  return c.b * (c.a * c.e - c.b * c.d) * f2 -
         c.e * (c.d * c.e - c.b * c.f) * (intr.l * intr.l - 1.0);
}

ConicCoeffs project_sphere(const SphereScene& scene, const Intrinsics& intr) {
  if (!scene_is_valid(scene))
    throw Error(ErrorCode::NotAnEllipse, "sphere is not fully in front of the camera");
  if (!(intr.focal > 0.0)) throw Error(ErrorCode::InvalidInput, "focal length must be positive");

  const double norm = std::sqrt(scene.u * scene.u + scene.v * scene.v + 1.0);
  const double n[3] = {scene.u / norm, scene.v / norm, 1.0 / norm};
  const double cos2 = std::cos(scene.theta) * std::cos(scene.theta);
  const double kinv[3] = {1.0 / intr.focal, 1.0 / intr.focal, 1.0};

  double q[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      q[i][j] = kinv[i] * (n[i] * n[j] - (i == j ? cos2 : 0.0)) * kinv[j];

  const ConicCoeffs c{q[0][0], q[0][1], q[1][1], q[0][2], q[1][2], q[2][2]};
  if (!is_ellipse(c)) throw Error(ErrorCode::NotAnEllipse, "silhouette is not an ellipse");
  return normalize(c);
}

PointSet sample_conic_points(const ConicCoeffs& c, int n, double arc_start,
                             double arc_end, double sigma, std::mt19937_64& rng) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "sample_conic_points: n must be >= 1");
  if (!(sigma >= 0.0)) throw Error(ErrorCode::InvalidInput, "sample_conic_points: sigma must be >= 0");
  const EllipseGeom g = to_geometry(c);
  const double cs = std::cos(g.angle), sn = std::sin(g.angle);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);

  PointSet ps;
  ps.points.reserve(static_cast<std::size_t>(n));
  const double step = (arc_end - arc_start) / n;
  for (int k = 0; k < n; ++k) {
    const double t = arc_start + k * step;
    const double ex = g.major * std::cos(t), ey = g.minor * std::sin(t);
    Point2 p{g.center.x + ex * cs - ey * sn, g.center.y + ex * sn + ey * cs};
    if (sigma > 0.0) {
      p.x += noise(rng);
      p.y += noise(rng);
    }
    ps.points.push_back(p);
  }
  ps.labels.assign(ps.points.size(), PointLabel::Inlier);
  ps.sigma = sigma;
  return ps;
}

PointSet add_outliers(PointSet ps, int count, const BBox& box, std::mt19937_64& rng) {
  if (count <= 0) return ps;
  if (ps.labels.size() != ps.points.size()) ps.labels.assign(ps.points.size(), PointLabel::Inlier);
  std::uniform_real_distribution<double> ux(box.xmin, box.xmax);
  std::uniform_real_distribution<double> uy(box.ymin, box.ymax);
  for (int k = 0; k < count; ++k) {
    const double x = ux(rng);
    const double y = uy(rng);
    ps.points.push_back({x, y});
    ps.labels.push_back(PointLabel::Outlier);
  }
  return ps;
}

BBox ellipse_bbox(const ConicCoeffs& c, double inflate) {
  const EllipseGeom g = to_geometry(c);
  const double cs = std::cos(g.angle), sn = std::sin(g.angle);
  const double hx = inflate * std::sqrt(g.major * g.major * cs * cs + g.minor * g.minor * sn * sn);
  const double hy = inflate * std::sqrt(g.major * g.major * sn * sn + g.minor * g.minor * cs * cs);
  return {g.center.x - hx, g.center.y - hy, g.center.x + hx, g.center.y + hy};
}

std::optional<SphereScene> invert_projection(const ConicCoeffs& c, const Intrinsics& intr) {
  if (!is_ellipse(c) || !(intr.focal > 0.0)) return std::nullopt;
  const ConicCoeffs q = normalize(c);
  const double f = intr.focal;
  // K^T Q K with K = diag(f, f, 1).
  Mat<3> m{{{q.a * f * f, q.b * f * f, q.d * f},
            {q.b * f * f, q.c * f * f, q.e * f},
            {q.d * f, q.e * f, q.f}}};
  const auto eig = numeric::jacobi_eigen<3>(m);

  int negatives = 0;
  for (double v : eig.values) negatives += v < 0.0 ? 1 : 0;
  int odd = -1;
  if (negatives == 2) odd = 2;
  else if (negatives == 1) odd = 0;
  else return std::nullopt;

  double pair = 0.0;
  for (int k = 0; k < 3; ++k)
    if (k != odd) pair += 0.5 * eig.values[static_cast<std::size_t>(k)];
  const double ratio = -eig.values[static_cast<std::size_t>(odd)] / pair;
  if (!(ratio > 0.0) || !std::isfinite(ratio)) return std::nullopt;

  auto axis = eig.vectors[static_cast<std::size_t>(odd)];
  if (std::abs(axis[2]) < 1e-12) return std::nullopt;
  if (axis[2] < 0.0)
    for (double& x : axis) x = -x;

  SphereScene s{axis[0] / axis[2], axis[1] / axis[2], std::atan(std::sqrt(ratio))};
  if (!scene_is_valid(s)) return std::nullopt;
  return s;
}

namespace {

using Params = std::array<double, 3>;

SphereScene scene_of(const Params& x) { return {x[0], x[1], x[2]}; }

// Signed Sampson residuals; false when the scene is invalid or a point sits
// at a singular location of the conic.
bool residuals(std::span<const Point2> pts, const Params& x, const Intrinsics& intr,
               std::vector<double>& out) {
  const SphereScene s = scene_of(x);
  if (!scene_is_valid(s)) return false;
  ConicCoeffs c;
  try {
    c = project_sphere(s, intr);
  } catch (const Error&) {
    return false;
  }
  out.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out[i] = signed_sampson_distance(c, pts[i]);
    if (!std::isfinite(out[i])) return false;
  }
  return true;
}

double sum_sq(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

bool solve3(Mat<3> a, Params b, Params& x) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double m = a[r][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[r][k] -= m * a[col][k];
      b[r] -= m * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

constexpr double kThetaLo = 1e-9;
constexpr double kThetaHi = 0.5 * std::numbers::pi - 1e-9;

}  // namespace

double scene_cost(std::span<const Point2> pts, const SphereScene& scene, const Intrinsics& intr) {
  std::vector<double> r;
  if (!residuals(pts, {scene.u, scene.v, scene.theta}, intr, r))
    return std::numeric_limits<double>::infinity();
  return sum_sq(r);
}

RefineResult refine_constrained(std::span<const Point2> pts, const ConicCoeffs& init,
                                const Intrinsics& intr) {
  if (pts.size() < 3)
    throw Error(ErrorCode::InsufficientData, "refine_constrained needs at least 3 points");
  if (!is_ellipse(init))
    throw Error(ErrorCode::InvalidInit, "refine_constrained: initial conic is not an ellipse");

  std::optional<SphereScene> start = invert_projection(init, intr);
  double start_cost = start ? scene_cost(pts, *start, intr)
                            : std::numeric_limits<double>::infinity();
  if (!start || !std::isfinite(start_cost)) {
    // Coarse grid over theta along the ray through the ellipse center.
    const EllipseGeom g = to_geometry(init);
    const double u = g.center.x / intr.focal, v = g.center.y / intr.focal;
    for (int k = 1; k < 64; ++k) {
      const SphereScene s{u, v, k * (0.5 * std::numbers::pi) / 64.0};
      const double cost = scene_cost(pts, s, intr);
      if (cost < start_cost) {
        start_cost = cost;
        start = s;
      }
    }
  }
  if (!start || !std::isfinite(start_cost))
    throw Error(ErrorCode::InvalidInit, "refine_constrained: cannot invert initial conic to a scene");

  const std::size_t n = pts.size();
  Params x{start->u, start->v, start->theta};
  std::vector<double> r;
  residuals(pts, x, intr, r);
  double cost = sum_sq(r);

  RefineResult out;
  out.initial_cost = cost;

  bool converged = cost <= static_cast<double>(n) * 1e-24;
  int iterations = 0;
  double mu = 1e-3;
  std::vector<double> rp, rm, rn;
  std::vector<std::array<double, 3>> jac(n);

  while (!converged && iterations < 100) {
    // Central-difference Jacobian, one-sided at the edge of the valid region.
    bool jac_ok = true;
    for (int k = 0; k < 3 && jac_ok; ++k) {
      const double h = 1e-6 * std::max(std::abs(x[k]), 1e-2);
      Params xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      const bool okp = residuals(pts, xp, intr, rp);
      const bool okm = residuals(pts, xm, intr, rm);
      for (std::size_t i = 0; i < n; ++i) {
        if (okp && okm) jac[i][k] = (rp[i] - rm[i]) / (2.0 * h);
        else if (okp) jac[i][k] = (rp[i] - r[i]) / h;
        else if (okm) jac[i][k] = (r[i] - rm[i]) / h;
        else jac_ok = false;
      }
    }
    if (!jac_ok) break;

    Mat<3> h{};
    Params g{};
    for (std::size_t i = 0; i < n; ++i)
      for (int a = 0; a < 3; ++a) {
        g[a] += jac[i][a] * r[i];
        for (int b = 0; b < 3; ++b) h[a][b] += jac[i][a] * jac[i][b];
      }

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      Mat<3> damped = h;
      for (int a = 0; a < 3; ++a) damped[a][a] += mu * std::max(h[a][a], 1e-12);
      Params delta{};
      Params rhs{-g[0], -g[1], -g[2]};
      if (!solve3(damped, rhs, delta)) {
        mu *= 4.0;
        continue;
      }
      Params xn{x[0] + delta[0], x[1] + delta[1],
                std::clamp(x[2] + delta[2], kThetaLo, kThetaHi)};
      if (residuals(pts, xn, intr, rn)) {
        const double cost_n = sum_sq(rn);
        if (cost_n < cost) {
          const double step = std::hypot(xn[0] - x[0], xn[1] - x[1], xn[2] - x[2]);
          const double scale = std::hypot(x[0], x[1], x[2]);
          const double drop = cost - cost_n;
          x = xn;
          r.swap(rn);
          cost = cost_n;
          mu = std::max(mu / 3.0, 1e-12);
          accepted = true;
          ++iterations;
          if (drop <= 1e-12 * cost || step <= 1e-12 * (scale + 1e-12) ||
              cost <= static_cast<double>(n) * 1e-24)
            converged = true;
          break;
        }
      }
      mu *= 4.0;
    }
    // No descent direction left at working precision: a local minimum.
    if (!accepted) converged = true;
  }

  out.scene = scene_of(x);
  out.conic = project_sphere(out.scene, intr);
  out.iterations = iterations;
  out.converged = converged;
  out.final_cost = cost;
  return out;
}

SphereScene random_scene(std::mt19937_64& rng, const SceneRanges& ranges) {
  std::uniform_real_distribution<double> uv(-ranges.uv_max, ranges.uv_max);
  std::uniform_real_distribution<double> th(ranges.theta_min, ranges.theta_max);
  for (;;) {
    const double u = uv(rng);
    const double v = uv(rng);
    const double theta = th(rng);
    const SphereScene s{u, v, theta};
    if (scene_is_valid(s)) return s;
  }
}

}  // namespace ellipse
