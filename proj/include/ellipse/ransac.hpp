#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ellipse/conic.hpp"
#include "ellipse/sphere.hpp"

namespace ellipse {

enum class Refinement { Constrained, LeastSquares, None };

struct RansacConfig {
  double threshold = 1.0;   // px, Sampson distance
  double confidence = 0.99;
  int max_iterations = 1000;
  /// Early exit once a consensus set reaches this size. Unset means the
  /// number of input points.
  std::optional<std::size_t> min_consensus;
  std::uint64_t seed = 0;
  Refinement refinement = Refinement::Constrained;
};

struct RansacResult {
  ConicCoeffs conic;                // after refinement, normalized
  std::optional<SphereScene> scene;  // set by constrained refinement
  std::vector<bool> inlier_mask;    // against `conic`
  std::size_t consensus = 0;        // true entries in inlier_mask
  std::vector<double> distances;    // Sampson distance of every point to `conic`

  ConicCoeffs best_candidate;      // winning minimal-sample model
  std::vector<bool> winning_mask;  // against best_candidate
  std::size_t winning_consensus = 0;
  std::array<std::size_t, 3> sample{};
  int iterations = 0;
  int winning_iteration = 0;
  bool refined = false;
  bool refine_converged = false;

  /// Per executed iteration: best consensus so far and the adaptive bound
  /// in force after it.
  std::vector<std::size_t> consensus_trace;
  std::vector<int> bound_trace;
};

/// ceil(ln(1 - p) / ln(1 - w^s)), and 1 when w^s == 1. Throws InvalidInput
/// outside 0 < w <= 1, 0 < p < 1, s >= 1.
int required_iterations(double w, double p, int s);

/// Three-point RANSAC over `ps.points` (centered coordinates). Deterministic
/// given cfg.seed. Throws InsufficientData below 3 points and NoModel when no
/// sample produced an elliptic candidate.
RansacResult run_ransac(const PointSet& ps, const Intrinsics& intr, const RansacConfig& cfg);

}  // namespace ellipse
