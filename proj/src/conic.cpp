#include "ellipse/conic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ellipse/error.hpp"

namespace ellipse {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::NotAnEllipse: return "not-an-ellipse";
    case ErrorCode::DegenerateSample: return "degenerate-sample";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::InvalidInit: return "invalid-init";
    case ErrorCode::NoModel: return "no-model";
  }
  return "unknown";
}

double ConicMatrix::operator()(int row, int col) const {
  if (row > col) std::swap(row, col);
  switch (row * 3 + col) {
    case 0: return c_.a;
    case 1: return c_.b;
    case 2: return c_.d;
    case 4: return c_.c;
    case 5: return c_.e;
    case 8: return c_.f;
    default: throw Error(ErrorCode::InvalidInput, "conic matrix index out of range");
  }
}

std::array<std::array<double, 3>, 3> ConicMatrix::dense() const {
  return {{{c_.a, c_.b, c_.d}, {c_.b, c_.c, c_.e}, {c_.d, c_.e, c_.f}}};
}

ConicMatrix to_matrix(const ConicCoeffs& c) { return ConicMatrix(c); }

ConicCoeffs from_matrix(const std::array<std::array<double, 3>, 3>& m) {
  double scale = 0.0;
  for (const auto& row : m)
    for (double v : row) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * scale;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(m[i][j] - m[j][i]) > tol)
        throw Error(ErrorCode::InvalidInput, "conic matrix is not symmetric");
  return {m[0][0], m[0][1], m[1][1], m[0][2], m[1][2], m[2][2]};
}

double evaluate(const ConicCoeffs& c, Point2 p) {
  const double x = p.x, y = p.y;
  return c.a * x * x + 2.0 * c.b * x * y + c.c * y * y + 2.0 * c.d * x +
         2.0 * c.e * y + c.f;
}

std::array<double, 2> gradient(const ConicCoeffs& c, Point2 p) {
  return {2.0 * (c.a * p.x + c.b * p.y + c.d),
          2.0 * (c.b * p.x + c.c * p.y + c.e)};
}

namespace {

double norm6(const ConicCoeffs& c) {
  const auto v = c.vec();
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Geometry of a normalized conic, or nullopt when it is not a real ellipse.
// a*b - c*d with one rounding (Kahan).
double diff_of_products(double a, double b, double c, double d) {
  const double w = c * d;
  const double e = std::fma(-c, d, w);
  const double f = std::fma(a, b, -w);
  return f + e;
}

std::optional<EllipseGeom> geometry_of(const ConicCoeffs& in) {
  for (double v : in.vec())
    if (!std::isfinite(v)) return std::nullopt;

  // Orient so the quadratic block is positive definite.
  ConicCoeffs c = in;
  if (c.a + c.c < 0.0) c = c * -1.0;

  const double det = diff_of_products(c.a, c.c, c.b, c.b);
  if (!(det > 0.0)) return std::nullopt;

  const double cx = diff_of_products(c.b, c.e, c.c, c.d) / det;
  const double cy = diff_of_products(c.b, c.d, c.a, c.e) / det;
  const double f0 = c.d * cx + c.e * cy + c.f;
  if (!(f0 < 0.0)) return std::nullopt;

  const double mean = 0.5 * (c.a + c.c);
  const double half_diff = std::hypot(0.5 * (c.a - c.c), c.b);
  const double lambda_large = mean + half_diff;
  const double lambda_small = det / lambda_large;  // no cancellation
  if (!(lambda_small > 0.0)) return std::nullopt;

  EllipseGeom g;
  g.center = {cx, cy};
  g.major = std::sqrt(-f0 / lambda_small);
  g.minor = std::sqrt(-f0 / lambda_large);
  if (!(g.minor > 0.0) || !std::isfinite(g.major)) return std::nullopt;

  if (half_diff <= 1e-14 * mean) {
    g.angle = 0.0;  // circle
  } else {
    // Direction of the large eigenvalue is 0.5*atan2(2b, a-c); the major
    // axis is perpendicular to it.
    double angle = 0.5 * std::atan2(2.0 * c.b, c.a - c.c) + 0.5 * std::numbers::pi;
    angle = std::fmod(angle, std::numbers::pi);
    if (angle < 0.0) angle += std::numbers::pi;
    if (angle >= std::numbers::pi) angle -= std::numbers::pi;
    g.angle = angle;
  }
  return g;
}

}  // namespace

bool is_ellipse(const ConicCoeffs& c) {
  if (norm6(c) == 0.0 || !std::isfinite(norm6(c))) return false;
  return geometry_of(normalize(c)).has_value();
}

EllipseGeom to_geometry(const ConicCoeffs& c) {
  const double n = norm6(c);
  if (n == 0.0 || !std::isfinite(n))
    throw Error(ErrorCode::NotAnEllipse, "conic is zero or not finite");
  auto g = geometry_of(c * (1.0 / n));
  if (!g) throw Error(ErrorCode::NotAnEllipse, "conic is not a real ellipse");
  return *g;
}

ConicCoeffs conic_of(const EllipseGeom& g) {
  const double p = 1.0 / (g.major * g.major);
  const double q = 1.0 / (g.minor * g.minor);
  const double cs = std::cos(g.angle), sn = std::sin(g.angle);
  ConicCoeffs c;
  c.a = p * cs * cs + q * sn * sn;
  c.b = (p - q) * sn * cs;
  c.c = p * sn * sn + q * cs * cs;
  const double cx = g.center.x, cy = g.center.y;
  c.d = -(c.a * cx + c.b * cy);
  c.e = -(c.b * cx + c.c * cy);
  c.f = c.a * cx * cx + 2.0 * c.b * cx * cy + c.c * cy * cy - 1.0;
  return c;
}

std::optional<Point2> conic_center(const ConicCoeffs& c) {
  const double det = c.a * c.c - c.b * c.b;
  const double scale = c.a * c.a + 2.0 * c.b * c.b + c.c * c.c;
  if (scale == 0.0 || std::abs(det) <= 1e-14 * scale) return std::nullopt;
  return Point2{(c.b * c.e - c.c * c.d) / det, (c.b * c.d - c.a * c.e) / det};
}

double signed_sampson_distance(const ConicCoeffs& c, Point2 p) {
  const double v = evaluate(c, p);
  const auto g = gradient(c, p);
  const double gn = std::hypot(g[0], g[1]);
  if (gn == 0.0) {
    return v < 0.0 ? -std::numeric_limits<double>::infinity()
                   : std::numeric_limits<double>::infinity();
  }
  return v / gn;
}

double sampson_distance(const ConicCoeffs& c, Point2 p) {
  return std::abs(signed_sampson_distance(c, p));
}

ConicCoeffs normalize(const ConicCoeffs& c) {
  const double n = norm6(c);
  if (n == 0.0 || !std::isfinite(n))
    throw Error(ErrorCode::InvalidInput, "cannot normalize a zero or non-finite conic");
  auto v = c.vec();
  double sign = 1.0;
  for (double x : v) {
    if (x != 0.0) {
      sign = x > 0.0 ? 1.0 : -1.0;
      break;
    }
  }
  for (double& x : v) x *= sign / n;
  return ConicCoeffs::from_vec(v);
}

double compare_up_to_scale(const ConicCoeffs& c1, const ConicCoeffs& c2) {
  const double n1 = norm6(c1), n2 = norm6(c2);
  if (n1 == 0.0 || n2 == 0.0)
    throw Error(ErrorCode::InvalidInput, "compare_up_to_scale on a zero conic");
  const auto v1 = c1.vec(), v2 = c2.vec();
  double dot = 0.0;
  for (int i = 0; i < 6; ++i) dot += (v1[i] / n1) * (v2[i] / n2);
  return std::clamp(1.0 - std::abs(dot), 0.0, 1.0);
}

ConicCoeffs translate(const ConicCoeffs& c, double dx, double dy) {
  ConicCoeffs r = c;
  r.d = c.d - c.a * dx - c.b * dy;
  r.e = c.e - c.b * dx - c.c * dy;
  r.f = c.f - 2.0 * c.d * dx - 2.0 * c.e * dy + c.a * dx * dx +
        2.0 * c.b * dx * dy + c.c * dy * dy;
  return r;
}

std::vector<Point2> shift_points(std::span<const Point2> pts, double dx,
                                 double dy) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back({p.x + dx, p.y + dy});
  return out;
}

}  // namespace ellipse
