#include "ellipse/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ellipse/error.hpp"
#include "ellipse/fitters.hpp"

namespace ellipse {

int required_iterations(double w, double p, int s) {
  if (!(w > 0.0 && w <= 1.0) || !(p > 0.0 && p < 1.0) || s < 1)
    throw Error(ErrorCode::InvalidInput, "required_iterations: argument out of range");
  const double ws = std::pow(w, s);
  if (ws >= 1.0) return 1;
  const double denom = std::log1p(-ws);
  if (denom == 0.0) return std::numeric_limits<int>::max();
  const double n = std::ceil(std::log(1.0 - p) / denom);
  if (!(n < static_cast<double>(std::numeric_limits<int>::max())))
    return std::numeric_limits<int>::max();
  return std::max(1, static_cast<int>(n));
}

namespace {

struct Score {
  std::size_t count = 0;
  double sum = 0.0;
};

Score score(const ConicCoeffs& c, const std::vector<Point2>& pts, double t) {
  Score s;
  for (const auto& p : pts) {
    const double d = sampson_distance(c, p);
    if (d <= t) {
      ++s.count;
      s.sum += d;
    }
  }
  return s;
}

}  // namespace

RansacResult run_ransac(const PointSet& ps, const Intrinsics& intr, const RansacConfig& cfg) {
  const auto& pts = ps.points;
  const std::size_t n = pts.size();
  if (n < 3) throw Error(ErrorCode::InsufficientData, "run_ransac needs at least 3 points");
  if (!(cfg.threshold > 0.0)) throw Error(ErrorCode::InvalidInput, "run_ransac: threshold must be > 0");
  if (cfg.max_iterations < 1) throw Error(ErrorCode::InvalidInput, "run_ransac: max_iterations must be >= 1");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0))
    throw Error(ErrorCode::InvalidInput, "run_ransac: confidence must be in (0, 1)");
  const std::size_t min_consensus = cfg.min_consensus.value_or(n);
  if (min_consensus < 3) throw Error(ErrorCode::InvalidInput, "run_ransac: min_consensus must be >= 3");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);

  bool have_best = false;
  Score best;
  RansacResult out;
  int bound = cfg.max_iterations;
  int iter = 0;

  while (iter < std::min(cfg.max_iterations, bound)) {
    ++iter;
    ThreePointSolutions sols;
    std::array<std::size_t, 3> idx{};
    bool sampled = false;
    for (int retry = 0; retry < 100 && !sampled; ++retry) {
      idx[0] = pick(rng);
      do idx[1] = pick(rng); while (idx[1] == idx[0]);
      do idx[2] = pick(rng); while (idx[2] == idx[0] || idx[2] == idx[1]);
      try {
        sols = fit_three_point(pts[idx[0]], pts[idx[1]], pts[idx[2]], intr);
        sampled = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateSample) throw;
      }
    }
    if (!sampled) {
      out.consensus_trace.push_back(best.count);
      out.bound_trace.push_back(bound);
      continue;
    }

    bool improved = false;
    for (const auto& cand : sols.candidates) {
      const Score s = score(cand.conic, pts, cfg.threshold);
      if (!have_best || s.count > best.count || (s.count == best.count && s.sum < best.sum)) {
        have_best = true;
        best = s;
        out.best_candidate = cand.conic;
        out.sample = idx;
        out.winning_iteration = iter;
        improved = true;
      }
    }
    if (improved && best.count > 0)
      bound = required_iterations(static_cast<double>(best.count) / static_cast<double>(n),
                                  cfg.confidence, 3);
    out.consensus_trace.push_back(best.count);
    out.bound_trace.push_back(bound);
    if (improved && best.count >= min_consensus) break;
  }
  out.iterations = iter;
  if (!have_best) throw Error(ErrorCode::NoModel, "run_ransac: no sample produced an elliptic candidate");

  out.winning_mask.assign(n, false);
  std::vector<Point2> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    if (sampson_distance(out.best_candidate, pts[i]) <= cfg.threshold) {
      out.winning_mask[i] = true;
      inliers.push_back(pts[i]);
    }
  }
  out.winning_consensus = inliers.size();

  out.conic = out.best_candidate;
  try {
    if (cfg.refinement == Refinement::Constrained) {
      const RefineResult r = refine_constrained(inliers, out.best_candidate, intr);
      out.conic = r.conic;
      out.scene = r.scene;
      out.refined = true;
      out.refine_converged = r.converged;
    } else if (cfg.refinement == Refinement::LeastSquares && inliers.size() >= 5) {
      out.conic = fit_ls_svd(inliers);
      out.refined = true;
      out.refine_converged = true;
    }
  } catch (const Error&) {
    // Keep the minimal-sample model.
    out.conic = out.best_candidate;
    out.scene.reset();
    out.refined = false;
  }
  out.conic = normalize(out.conic);

  out.distances.resize(n);
  out.inlier_mask.assign(n, false);
  out.consensus = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.distances[i] = sampson_distance(out.conic, pts[i]);
    if (out.distances[i] <= cfg.threshold) {
      out.inlier_mask[i] = true;
      ++out.consensus;
    }
  }
  return out;
}

}  // namespace ellipse
