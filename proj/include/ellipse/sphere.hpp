#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "ellipse/conic.hpp"

namespace ellipse {

/// Pinhole intrinsics. Coordinates inside the library are measured from the
/// principal point; (px, py) is only used to move in and out of image
/// coordinates. `l` is the extra model parameter of the second sphere
/// constraint, 0 for a pinhole camera.
struct Intrinsics {
  double focal = 1.0;  // f_e, px
  double px = 0.0;
  double py = 0.0;
  double l = 0.0;
};

/// Sphere seen from the camera center: its center direction is
/// n = (u, v, 1) / |(u, v, 1)|, its angular radius theta.
struct SphereScene {
  double u = 0.0;
  double v = 0.0;
  double theta = 0.1;

  friend bool operator==(const SphereScene&, const SphereScene&) = default;
};

enum class PointLabel : std::uint8_t { Inlier, Outlier };

struct PointSet {
  std::vector<Point2> points;
  std::vector<PointLabel> labels;  // empty, or one per point
  std::optional<double> sigma;
};

struct BBox {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
};

/// Angle between the optical axis and the sphere center plus theta must stay
/// below pi/2 for the silhouette to be an ellipse.
bool scene_is_valid(const SphereScene& s);

/// d(bd - ae) - e(be - cd) on the normalized conic: zero when the major axis
/// passes through the principal point.
double s1_residual(const ConicCoeffs& c);

/// b(ae - bd) f^2 - e(de - bf)(l^2 - 1) on the normalized conic.
double s2_residual(const ConicCoeffs& c, const Intrinsics& intr);

/// Normalized silhouette conic, from the tangent cone
/// K^-T (n n^T - cos^2(theta) I) K^-1 with K = diag(f, f, 1). Throws
/// NotAnEllipse for scenes that do not project to an ellipse.
ConicCoeffs project_sphere(const SphereScene& scene, const Intrinsics& intr);

/// n points at parameter angles t_k = arc_start + k (arc_end - arc_start) / n
/// on the ellipse x = center + major cos t u_major + minor sin t u_minor,
/// each perturbed by isotropic Gaussian noise of std sigma. All labeled
/// inlier.
PointSet sample_conic_points(const ConicCoeffs& c, int n, double arc_start,
                             double arc_end, double sigma, std::mt19937_64& rng);

/// Appends `count` points uniform in `box`, labeled outlier.
PointSet add_outliers(PointSet ps, int count, const BBox& box, std::mt19937_64& rng);

/// Axis-aligned bounding box of an ellipse, scaled about its center.
BBox ellipse_bbox(const ConicCoeffs& c, double inflate = 2.0);

/// Scene whose silhouette best matches an ellipse, by reading the cone axis
/// and opening angle off the eigenstructure of K^T Q K. Returns nullopt when
/// the conic is not cone-like enough to invert.
std::optional<SphereScene> invert_projection(const ConicCoeffs& c, const Intrinsics& intr);

struct RefineResult {
  ConicCoeffs conic;
  SphereScene scene;
  int iterations = 0;
  bool converged = false;
  double initial_cost = 0.0;  // sum of squared Sampson distances
  double final_cost = 0.0;
};

/// Least-squares re-estimation over (u, v, theta) minimizing the sum of
/// squared Sampson distances, Levenberg-Marquardt with central differences.
/// Throws InsufficientData below 3 points and InvalidInit when `init` cannot
/// be turned into a valid scene.
RefineResult refine_constrained(std::span<const Point2> pts, const ConicCoeffs& init,
                                const Intrinsics& intr);

/// Sum of squared Sampson distances of `pts` to the silhouette of `scene`;
/// +infinity for invalid scenes.
double scene_cost(std::span<const Point2> pts, const SphereScene& scene,
                  const Intrinsics& intr);

struct SceneRanges {
  double uv_max = 0.5;
  double theta_min = 0.05;
  double theta_max = 0.3;
};

/// Uniform random valid scene within `ranges`.
SphereScene random_scene(std::mt19937_64& rng, const SceneRanges& ranges = {});

}  // namespace ellipse
