#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

namespace ellipse {

/// A 2D point in pixels, measured relative to the principal point unless a
/// function says otherwise.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Coefficients of a*x^2 + 2b*xy + c*y^2 + 2d*x + 2e*y + f = 0.
///
/// The cross and linear terms carry a factor of two, so the coefficients
/// map one-to-one onto the symmetric matrix [a b d; b c e; d e f]. This is
/// NOT the raw-monomial convention (x^2, xy, y^2, x, y, 1) used by most
/// direct-fit references.
struct ConicCoeffs {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double e = 0.0;
  double f = 0.0;

  std::array<double, 6> vec() const { return {a, b, c, d, e, f}; }
  static ConicCoeffs from_vec(const std::array<double, 6>& v) {
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
  }

  ConicCoeffs operator*(double s) const {
    return {a * s, b * s, c * s, d * s, e * s, f * s};
  }

  friend bool operator==(const ConicCoeffs&, const ConicCoeffs&) = default;
};

/// Symmetric 3x3 conic matrix. Symmetry holds by construction: only the
/// six independent entries are stored.
class ConicMatrix {
 public:
  ConicMatrix() = default;
  explicit ConicMatrix(const ConicCoeffs& c) : c_(c) {}

  double operator()(int row, int col) const;
  std::array<std::array<double, 3>, 3> dense() const;

  const ConicCoeffs& coeffs() const { return c_; }

 private:
  ConicCoeffs c_;
};

struct EllipseGeom {
  Point2 center;
  double major = 0.0;  // semi-axis, px
  double minor = 0.0;  // semi-axis, px, 0 < minor <= major
  double angle = 0.0;  // +x axis to the major axis, CCW, in [0, pi)
};

ConicMatrix to_matrix(const ConicCoeffs& c);

/// Throws InvalidInput when the matrix is asymmetric beyond 1e-12 relative.
ConicCoeffs from_matrix(const std::array<std::array<double, 3>, 3>& m);

double evaluate(const ConicCoeffs& c, Point2 p);

/// Gradient of evaluate() with respect to (x, y).
std::array<double, 2> gradient(const ConicCoeffs& c, Point2 p);

/// Real, nondegenerate ellipse with positive area. Tested on the normalized
/// representative, so the answer does not depend on the sign of c.
bool is_ellipse(const ConicCoeffs& c);

/// Throws NotAnEllipse for hyperbolas, parabolas, imaginary and point
/// ellipses.
EllipseGeom to_geometry(const ConicCoeffs& c);

/// Inverse of to_geometry, scaled so the conic value at the center is -1.
ConicCoeffs conic_of(const EllipseGeom& g);

/// Center of any central conic (a*c - b^2 != 0); nullopt for parabolas.
std::optional<Point2> conic_center(const ConicCoeffs& c);

/// First-order geometric distance |f| / |grad f|. Returns +infinity at points
/// where the gradient vanishes (the center of a conic, singular points).
double sampson_distance(const ConicCoeffs& c, Point2 p);

/// Signed variant of sampson_distance; +/-infinity at singular points.
double signed_sampson_distance(const ConicCoeffs& c, Point2 p);

/// Unit 6-vector norm, first nonzero coefficient positive. Throws
/// InvalidInput for the zero conic.
ConicCoeffs normalize(const ConicCoeffs& c);

/// 1 - |<c1,c2>| / (|c1| |c2|); zero iff proportional.
double compare_up_to_scale(const ConicCoeffs& c1, const ConicCoeffs& c2);

/// Conic in coordinates shifted by (dx, dy): if c describes a curve in
/// frame u, the result describes the same curve in frame u + (dx, dy).
ConicCoeffs translate(const ConicCoeffs& c, double dx, double dy);

std::vector<Point2> shift_points(std::span<const Point2> pts, double dx,
                                 double dy);

}  // namespace ellipse
