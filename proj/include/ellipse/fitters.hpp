#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "ellipse/conic.hpp"
#include "ellipse/numeric.hpp"
#include "ellipse/sphere.hpp"

namespace ellipse {

/// (x^2, 2xy, y^2, 2x, 2y, 1): dot with ConicCoeffs::vec() equals evaluate().
numeric::Vec<6> design_row(Point2 p);

/// Minimum-eigenvector algebraic fit, |p| = 1. Any conic type may come back.
/// Throws InsufficientData below 5 points or when the design matrix has rank
/// below 5.
ConicCoeffs fit_ls_svd(std::span<const Point2> pts);

/// Ellipse-specific direct least squares (4ac - b^2 = 1 in the raw-monomial
/// convention), solved through the reduced 3x3 eigenproblem. The result is
/// always an ellipse. Throws InsufficientData below 5 points and
/// DegenerateSample when the points are collinear.
ConicCoeffs fit_direct_ellipse(std::span<const Point2> pts);

/// The two sphere-projection constraints restricted to the pencil
/// P(alpha, beta) = P1 + alpha P2 + beta P3, as cubics in (alpha, beta):
/// det [a b d; b c e; e -d 0] and det [a -e(l^2-1) d; b 0 e; d -b f^2 f].
std::pair<numeric::BivarPoly, numeric::BivarPoly> constraint_polys(
    const std::array<numeric::Vec<6>, 3>& basis, const Intrinsics& intr);

struct ThreePointCandidate {
  ConicCoeffs conic;  // normalized
  double alpha = 0.0;
  double beta = 0.0;
  int lead = 0;       // basis vector carrying unit weight in the pencil
  double s1 = 0.0;    // s1_residual(conic)
  double s2 = 0.0;    // s2_residual(conic, intr)

  double residual() const;
};

struct ThreePointSolutions {
  std::vector<ThreePointCandidate> candidates;  // ascending residual()
};

/// Conics through three points that satisfy both sphere constraints and are
/// real ellipses. Points are in principal-point-centered coordinates and are
/// not normalized. Throws DegenerateSample for collinear or coincident
/// points; an empty result is not an error.
ThreePointSolutions fit_three_point(Point2 p1, Point2 p2, Point2 p3, const Intrinsics& intr);

namespace detail {

/// Interpolation and constraint tolerances every returned candidate meets.
inline constexpr double kInterpolationTol = 1e-8;
inline constexpr double kConstraintTol = 1e-6;
inline constexpr double kDedupTol = 1e-7;

struct PolishResult {
  double alpha = 0.0;
  double beta = 0.0;
  double residual = 0.0;  // scaled, see polish_pair
  /// max(|p| / sum|terms of p|, same for q) at the returned point.
  double backward_error = 0.0;
};

/// Damped 2D Newton on (p, q) = (0, 0): at most 20 iterations, step halving
/// when the residual grows, stop at residual <= 1e-12 or step <= 1e-14.
PolishResult polish_pair(const numeric::BivarPoly& p, const numeric::BivarPoly& q,
                         double alpha, double beta);

/// Applies the candidate filters (interpolation, constraints, ellipse) to
/// the pencil point and returns the candidate if it passes.
bool make_candidate(const std::array<numeric::Vec<6>, 3>& basis, int lead, double alpha,
                    double beta, std::span<const Point2> pts, const Intrinsics& intr,
                    ThreePointCandidate& out);

}  // namespace detail

}  // namespace ellipse
