#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ellipse/conic.hpp"
#include "ellipse/error.hpp"
#include "ellipse/fitters.hpp"
#include "ellipse/sphere.hpp"
#include "brute_force.hpp"

namespace ellipse {
namespace {

using numeric::BivarPoly;
using numeric::Vec;

constexpr ConicCoeffs kUnitCircle{1, 0, 1, 0, 0, -1};
constexpr double kPi = std::numbers::pi;

void expect_error(ErrorCode code, auto&& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(code);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

// Points on an ellipse from its parametric form.
Point2 on_ellipse(const EllipseGeom& g, double t) {
  const double ca = std::cos(g.angle), sa = std::sin(g.angle);
  const double x = g.major * std::cos(t), y = g.minor * std::sin(t);
  return {g.center.x + ca * x - sa * y, g.center.y + sa * x + ca * y};
}

std::vector<Point2> circle_points(int n, double r = 1.0) {
  std::vector<Point2> pts;
  for (int k = 0; k < n; ++k) {
    const double t = 2.0 * kPi * k / n;
    pts.push_back({r * std::cos(t), r * std::sin(t)});
  }
  return pts;
}

EllipseGeom random_geom(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-5, 5), ax(1, 4), ang(0, kPi);
  EllipseGeom g;
  g.center = {pos(rng), pos(rng)};
  const double p = ax(rng), q = ax(rng);
  g.major = std::max(p, q);
  g.minor = std::min(p, q);
  g.angle = ang(rng);
  return g;
}

double residual_norm(std::span<const Point2> pts, const Vec<6>& p) {
  double s = 0.0;
  for (const auto& pt : pts) {
    const auto r = design_row(pt);
    double d = 0.0;
    for (int k = 0; k < 6; ++k) d += r[k] * p[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double det3(const std::array<std::array<double, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

// ---- design row / ls-svd ----------------------------------------------------

TEST(DesignRow, DotEqualsEvaluate) {
  const ConicCoeffs c{1.5, -0.25, 2, 0.75, -1, 3};
  const Point2 p{0.3, -1.7};
  const auto r = design_row(p);
  const auto v = c.vec();
  double d = 0.0;
  for (int k = 0; k < 6; ++k) d += r[k] * v[k];
  EXPECT_NEAR(d, evaluate(c, p), 1e-14);
}

TEST(LsSvd, UnitCircle) {
  const auto pts = circle_points(8);
  EXPECT_LE(compare_up_to_scale(fit_ls_svd(pts), kUnitCircle), 1e-9);
}

TEST(LsSvd, FivePointsOnRandomEllipse) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> t(0, 2 * kPi);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_geom(rng);
    std::vector<Point2> pts;
    for (int k = 0; k < 5; ++k) pts.push_back(on_ellipse(g, 2 * kPi * k / 5 + 0.1 * t(rng)));
    EXPECT_LE(compare_up_to_scale(fit_ls_svd(pts), conic_of(g)), 1e-8);
  }
}

TEST(LsSvd, Errors) {
  const auto four = circle_points(4);
  expect_error(ErrorCode::InsufficientData, [&] { fit_ls_svd(four); });
  // Five collinear points: rank 3.
  std::vector<Point2> line;
  for (int k = 0; k < 5; ++k) line.push_back({1.0 * k, 2.0 * k});
  expect_error(ErrorCode::InsufficientData, [&] { fit_ls_svd(line); });
}

TEST(LsSvd, ObjectiveIsOptimal) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-10, 10);
  std::normal_distribution<double> gauss;
  for (int set = 0; set < 100; ++set) {
    std::vector<Point2> pts(12);
    for (auto& p : pts) p = {u(rng), u(rng)};
    const auto fit = fit_ls_svd(pts).vec();
    const double best = residual_norm(pts, fit);
    for (int k = 0; k < 100; ++k) {
      Vec<6> q;
      double n = 0.0;
      for (double& x : q) {
        x = gauss(rng);
        n += x * x;
      }
      for (double& x : q) x /= std::sqrt(n);
      EXPECT_LE(best, residual_norm(pts, q) + 1e-9);
    }
  }
}

// ---- direct ellipse fit ----------------------------------------------------

TEST(DirectFit, UnitCircle) {
  const auto pts = circle_points(8);
  const auto c = fit_direct_ellipse(pts);
  EXPECT_TRUE(is_ellipse(c));
  EXPECT_LE(compare_up_to_scale(c, kUnitCircle), 1e-9);
}

TEST(DirectFit, HyperbolaBranchStillGivesEllipse) {
  std::vector<Point2> pts;
  for (double x : {0.5, 0.8, 1.0, 1.5, 2.0, 3.0}) pts.push_back({x, 1.0 / x});
  EXPECT_TRUE(is_ellipse(fit_direct_ellipse(pts)));
  // The unconstrained fit recovers the hyperbola itself.
  EXPECT_FALSE(is_ellipse(fit_ls_svd(pts)));
}

TEST(DirectFit, Errors) {
  const auto four = circle_points(4);
  expect_error(ErrorCode::InsufficientData, [&] { fit_direct_ellipse(four); });
  std::vector<Point2> line;
  for (int k = 0; k < 6; ++k) line.push_back({1.0 * k + 3, -0.5 * k});
  expect_error(ErrorCode::DegenerateSample, [&] { fit_direct_ellipse(line); });
}

TEST(DirectFit, ExactEllipseRecovered) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_geom(rng);
    std::vector<Point2> pts;
    for (int k = 0; k < 7; ++k) pts.push_back(on_ellipse(g, 0.7 * k));
    EXPECT_LE(compare_up_to_scale(fit_direct_ellipse(pts), conic_of(g)), 1e-8);
  }
}

TEST(DirectFit, BeatsLsSvdInMonteCarlo) {
  const EllipseGeom g{{40.0, -25.0}, 60.0, 35.0, 0.4};
  const auto truth = conic_of(g);
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> noise(0.0, 0.1);
  int better = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Point2> pts;
    for (int k = 0; k < 200; ++k) {
      auto p = on_ellipse(g, 2 * kPi * k / 200);
      p.x += noise(rng);
      p.y += noise(rng);
      pts.push_back(p);
    }
    const auto direct = fit_direct_ellipse(pts);
    ASSERT_TRUE(is_ellipse(direct));
    if (compare_up_to_scale(direct, truth) < compare_up_to_scale(fit_ls_svd(pts), truth)) ++better;
  }
  EXPECT_GE(better, trials / 2);
}

// ---- constraint polynomials ------------------------------------------------

std::array<Vec<6>, 3> random_basis(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  std::array<Vec<6>, 3> b;
  for (auto& v : b)
    for (double& x : v) x = u(rng);
  return b;
}

struct Dets {
  double s1, s2;
};

Dets direct_dets(const std::array<Vec<6>, 3>& basis, double al, double be, const Intrinsics& intr) {
  Vec<6> p;
  for (int k = 0; k < 6; ++k) p[k] = basis[0][k] + al * basis[1][k] + be * basis[2][k];
  const double a = p[0], b = p[1], c = p[2], d = p[3], e = p[4], f = p[5];
  const double l2 = intr.l * intr.l, fe2 = intr.focal * intr.focal;
  return {det3({{{a, b, d}, {b, c, e}, {e, -d, 0}}}),
          det3({{{a, -e * (l2 - 1), d}, {b, 0, e}, {d, -b * fe2, f}}})};
}

TEST(ConstraintPolys, CenteredCircleLeadVanishesAtOrigin) {
  std::mt19937_64 rng(5);
  auto basis = random_basis(rng);
  basis[0] = kUnitCircle.vec();
  const auto [p, q] = constraint_polys(basis, {800, 0, 0, 0});
  EXPECT_EQ(p(0, 0), 0.0);
  EXPECT_EQ(q(0, 0), 0.0);
}

TEST(ConstraintPolys, MatchDirectDeterminants) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-3, 3);
  for (const Intrinsics intr : {Intrinsics{1, 0, 0, 0}, Intrinsics{800, 0, 0, 0},
                                Intrinsics{2.5, 0, 0, 0.4}}) {
    const auto basis = random_basis(rng);
    const auto [p, q] = constraint_polys(basis, intr);
    EXPECT_LE(p.total_degree(), 3);
    EXPECT_LE(q.total_degree(), 3);
    for (int k = 0; k < 100; ++k) {
      const double al = u(rng), be = u(rng);
      const Dets d = direct_dets(basis, al, be, intr);
      EXPECT_NEAR(p(al, be), d.s1, 1e-10 * std::max(1.0, std::abs(d.s1)));
      EXPECT_NEAR(q(al, be), d.s2, 1e-10 * std::max(1.0, std::abs(d.s2)));
    }
  }
}

TEST(ConstraintPolys, FirstDeterminantIsNegatedS1) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 100; ++k) {
    const auto c = normalize({u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)});
    const double det = det3({{{c.a, c.b, c.d}, {c.b, c.c, c.e}, {c.e, -c.d, 0}}});
    EXPECT_NEAR(det, -s1_residual(c), 1e-14);
  }
}

TEST(ConstraintPolys, SecondDeterminantIsS2) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 1000; ++k) {
    const Intrinsics intr{1.0 + 3.0 * (u(rng) + 1.0), 0, 0, 0.5 * (u(rng) + 1.0)};
    const auto c = normalize({u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)});
    const double l2 = intr.l * intr.l, fe2 = intr.focal * intr.focal;
    const double det =
        det3({{{c.a, -c.e * (l2 - 1), c.d}, {c.b, 0, c.e}, {c.d, -c.b * fe2, c.f}}});
    const double s2 = s2_residual(c, intr);
    EXPECT_NEAR(det, s2, 1e-10 * std::max(1.0, std::abs(s2)));
  }
}

// ---- three-point solver ----------------------------------------------------

std::array<Point2, 3> scene_points(const ConicCoeffs& c, double t0, double t1, double t2) {
  const auto g = to_geometry(c);
  return {on_ellipse(g, t0), on_ellipse(g, t1), on_ellipse(g, t2)};
}

double best_match(const ThreePointSolutions& s, const ConicCoeffs& c) {
  double best = 1.0;
  for (const auto& cand : s.candidates) best = std::min(best, compare_up_to_scale(cand.conic, c));
  return best;
}

void check_invariants(const ThreePointSolutions& sols, const std::array<Point2, 3>& pts,
                      const Intrinsics& intr) {
  EXPECT_LE(sols.candidates.size(), 9u);
  for (std::size_t i = 0; i < sols.candidates.size(); ++i) {
    const auto& cand = sols.candidates[i];
    EXPECT_TRUE(is_ellipse(cand.conic));
    for (const auto& p : pts) EXPECT_LE(std::abs(evaluate(cand.conic, p)), 1e-8);
    EXPECT_LE(std::abs(s1_residual(cand.conic)), 1e-6);
    EXPECT_LE(std::abs(s2_residual(cand.conic, intr)), 1e-6);
    if (i > 0) {
      EXPECT_LE(sols.candidates[i - 1].residual(), cand.residual());
    }
  }
}

TEST(ThreePoint, RecoversSceneEllipse) {
  const Intrinsics intr{800, 0, 0, 0};
  const auto truth = project_sphere({0.1, 0.05, 0.1}, intr);
  const auto pts = scene_points(truth, 0.3, 2.1, 4.4);
  const auto sols = fit_three_point(pts[0], pts[1], pts[2], intr);
  EXPECT_LE(best_match(sols, truth), 1e-6);
  check_invariants(sols, pts, intr);
}

TEST(ThreePoint, CenteredCircle) {
  const Intrinsics intr{800, 0, 0, 0};
  const auto pts = circle_points(3, 100.0);
  const auto sols = fit_three_point(pts[0], pts[1], pts[2], intr);
  EXPECT_LE(best_match(sols, {1, 0, 1, 0, 0, -1e4}), 1e-6);
}

TEST(ThreePoint, CollinearIsDegenerate) {
  expect_error(ErrorCode::DegenerateSample,
               [] { fit_three_point({0, 0}, {1, 1}, {2, 2}, {800, 0, 0, 0}); });
  expect_error(ErrorCode::DegenerateSample,
               [] { fit_three_point({3, 4}, {3, 4}, {5, 1}, {800, 0, 0, 0}); });
}

TEST(ThreePoint, RandomScenesRecoveredWithInvariants) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> t(0, 2 * kPi);
  const Intrinsics intr{800, 0, 0, 0};
  for (int trial = 0; trial < 300; ++trial) {
    const auto scene = random_scene(rng);
    const auto truth = project_sphere(scene, intr);
    const auto pts = scene_points(truth, t(rng), t(rng), t(rng));
    const double area = 0.5 * std::abs((pts[1].x - pts[0].x) * (pts[2].y - pts[0].y) -
                                       (pts[2].x - pts[0].x) * (pts[1].y - pts[0].y));
    if (area < 1.0) continue;
    const auto sols = fit_three_point(pts[0], pts[1], pts[2], intr);
    EXPECT_LE(best_match(sols, truth), 1e-6) << "trial " << trial;
    check_invariants(sols, pts, intr);
  }
}

TEST(ThreePoint, CompleteAgainstBruteForce) {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> t(0, 2 * kPi);
  const Intrinsics intr{800, 0, 0, 0};
  int scenes = 0;
  while (scenes < 200) {
    const auto truth = project_sphere(random_scene(rng), intr);
    const auto pts = scene_points(truth, t(rng), t(rng), t(rng));
    const double area = 0.5 * std::abs((pts[1].x - pts[0].x) * (pts[2].y - pts[0].y) -
                                       (pts[2].x - pts[0].x) * (pts[1].y - pts[0].y));
    if (area < 1.0) continue;
    ++scenes;

    const std::array<Vec<6>, 3> rows{design_row(pts[0]), design_row(pts[1]), design_row(pts[2])};
    const auto basis = numeric::nullspace_3x6(rows);
    const auto [p, q] = constraint_polys(basis, intr);

    std::vector<ConicCoeffs> brute;
    for (const auto& r : oracle::grid_roots(p, q)) {
      ThreePointCandidate cand;
      if (!detail::make_candidate(basis, 0, r.alpha, r.beta, pts, intr, cand)) continue;
      bool dup = false;
      for (const auto& b : brute) dup = dup || compare_up_to_scale(b, cand.conic) <= 1e-5;
      if (!dup) brute.push_back(cand.conic);
    }

    const auto sols = fit_three_point(pts[0], pts[1], pts[2], intr);
    for (const auto& b : brute) EXPECT_LE(best_match(sols, b), 1e-5) << "scene " << scenes;

    // Solver candidates inside the grid window must be found by the grid too.
    for (const auto& cand : sols.candidates) {
      const auto v = cand.conic.vec();
      double w[3] = {0, 0, 0};
      for (int k = 0; k < 3; ++k)
        for (int m = 0; m < 6; ++m) w[k] += basis[k][m] * v[m];
      if (std::abs(w[0]) < 1e-12) continue;
      const double al = w[1] / w[0], be = w[2] / w[0];
      if (std::abs(al) > 50.0 || std::abs(be) > 50.0) continue;
      double best = 1.0;
      for (const auto& b : brute) best = std::min(best, compare_up_to_scale(b, cand.conic));
      EXPECT_LE(best, 1e-5) << "scene " << scenes << " alpha " << al << " beta " << be;
    }
  }
}

TEST(ThreePoint, JointShiftEquivariance) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(0, 2 * kPi), shift(-700, 700);
  const Intrinsics centered{800, 0, 0, 0};
  for (int trial = 0; trial < 50; ++trial) {
    const auto truth = project_sphere(random_scene(rng), centered);
    const auto c_pts = scene_points(truth, t(rng), t(rng) + 1.0, t(rng) + 2.5);
    // Image-frame workflow: points and principal point move together;
    // fitting happens after centering, results go back to the image frame.
    auto fit_image = [&](const Intrinsics& intr) {
      std::array<Point2, 3> centred;
      for (int k = 0; k < 3; ++k) {
        const Point2 img{c_pts[k].x + intr.px, c_pts[k].y + intr.py};
        centred[k] = {img.x - intr.px, img.y - intr.py};
      }
      std::vector<ConicCoeffs> out;
      for (const auto& cand : fit_three_point(centred[0], centred[1], centred[2], intr).candidates)
        out.push_back(translate(cand.conic, intr.px, intr.py));
      return out;
    };
    const Intrinsics a{800, 320.25, 240.5, 0};
    const Intrinsics b{800, a.px + shift(rng), a.py + shift(rng), 0};
    const auto ca = fit_image(a), cb = fit_image(b);
    ASSERT_EQ(ca.size(), cb.size()) << "trial " << trial;
    for (const auto& x : ca) {
      // Undo each frame's shift and pair with the closest counterpart.
      const auto xa = translate(x, -a.px, -a.py);
      const auto ga = to_geometry(xa);
      double best = 1.0;
      EllipseGeom gb{};
      for (const auto& y : cb) {
        const auto yb = translate(y, -b.px, -b.py);
        const double d = compare_up_to_scale(xa, yb);
        if (d < best) {
          best = d;
          gb = to_geometry(yb);
        }
      }
      EXPECT_LE(best, 1e-9) << "trial " << trial;
      EXPECT_NEAR(gb.center.x, ga.center.x, 1e-6);
      EXPECT_NEAR(gb.center.y, ga.center.y, 1e-6);
      EXPECT_NEAR(gb.major, ga.major, 1e-6 * ga.major);
      EXPECT_NEAR(gb.minor, ga.minor, 1e-6 * ga.minor);
    }
  }
}

}  // namespace
}  // namespace ellipse
