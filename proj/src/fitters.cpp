#include "ellipse/fitters.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <tuple>

#include "ellipse/error.hpp"

namespace ellipse {

using numeric::BivarPoly;
using numeric::Mat;
using numeric::Poly1;
using numeric::Var;
using numeric::Vec;

numeric::Vec<6> design_row(Point2 p) {
  return {p.x * p.x, 2.0 * p.x * p.y, p.y * p.y, 2.0 * p.x, 2.0 * p.y, 1.0};
}

ConicCoeffs fit_ls_svd(std::span<const Point2> pts) {
  if (pts.size() < 5) throw Error(ErrorCode::InsufficientData, "fit_ls_svd needs at least 5 points");
  Mat<6> m{};
  for (const auto& p : pts) {
    const auto row = design_row(p);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m[i][j] += row[i] * row[j];
  }

  // Rank test on the column-equilibrated scatter matrix, so that pixel-scale
  // coordinates do not masquerade as rank loss.
  Mat<6> scaled = m;
  Vec<6> dinv{};
  for (int i = 0; i < 6; ++i) dinv[i] = m[i][i] > 0.0 ? 1.0 / std::sqrt(m[i][i]) : 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) scaled[i][j] = m[i][j] * dinv[i] * dinv[j];
  const auto eq = numeric::jacobi_eigen<6>(scaled);
  if (!(eq.values[1] > 1e-12 * 6.0))
    throw Error(ErrorCode::InsufficientData, "fit_ls_svd: design matrix rank below 5");

  const auto v = numeric::min_eigvec_sym6(m);
  return normalize(ConicCoeffs::from_vec(v));
}

namespace {

bool solve3(Mat<3> a, Vec<3>& x, Vec<3> b) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (a[piv][col] == 0.0) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int k = col; k < 3; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return true;
}

Vec<3> cross(const Vec<3>& u, const Vec<3>& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}

double dot3(const Vec<3>& u, const Vec<3>& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; }

}  // namespace

ConicCoeffs fit_direct_ellipse(std::span<const Point2> pts) {
  if (pts.size() < 5)
    throw Error(ErrorCode::InsufficientData, "fit_direct_ellipse needs at least 5 points");

  // The estimator is invariant under similarity transforms, so centering and
  // scaling only improve conditioning; the result is mapped back below.
  double mx = 0.0, my = 0.0;
  for (const auto& p : pts) {
    mx += p.x;
    my += p.y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : pts) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  const double tr = sxx + syy;
  const double det = sxx * syy - sxy * sxy;
  if (!(tr > 0.0) || det <= 1e-12 * tr * tr)
    throw Error(ErrorCode::DegenerateSample, "fit_direct_ellipse: points are collinear");
  const double s = std::sqrt(tr / static_cast<double>(pts.size()));

  // Raw monomials: A x^2 + B xy + C y^2 + D x + E y + F.
  Mat<3> s1{}, s2{}, s3{};
  for (const auto& p : pts) {
    const double x = (p.x - mx) / s, y = (p.y - my) / s;
    const Vec<3> q{x * x, x * y, y * y};
    const Vec<3> l{x, y, 1.0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        s1[i][j] += q[i] * q[j];
        s2[i][j] += q[i] * l[j];
        s3[i][j] += l[i] * l[j];
      }
  }

  // T = -S3^-1 S2^T
  Mat<3> t{};
  for (int col = 0; col < 3; ++col) {
    Vec<3> rhs{-s2[col][0], -s2[col][1], -s2[col][2]};
    Vec<3> x{};
    if (!solve3(s3, x, rhs))
      throw Error(ErrorCode::DegenerateSample, "fit_direct_ellipse: singular scatter matrix");
    for (int r = 0; r < 3; ++r) t[r][col] = x[r];
  }
  Mat<3> m = s1;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) m[i][j] += s2[i][k] * t[k][j];

  // Premultiply by the inverse of the constraint block [0 0 2; 0 -1 0; 2 0 0].
  const Mat<3> red{{{0.5 * m[2][0], 0.5 * m[2][1], 0.5 * m[2][2]},
                    {-m[1][0], -m[1][1], -m[1][2]},
                    {0.5 * m[0][0], 0.5 * m[0][1], 0.5 * m[0][2]}}};
  numeric::DynMat dyn(3, std::vector<double>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) dyn[i][j] = red[i][j];
  const auto lambdas = numeric::eigenvalues_general(dyn);

  bool found = false;
  Vec<3> best{};
  double best_obj = 0.0;
  for (const auto& lam : lambdas) {
    if (std::abs(lam.imag()) > 1e-8 * (1.0 + std::abs(lam.real()))) continue;
    Vec<3> rows[3];
    for (int i = 0; i < 3; ++i) {
      rows[i] = red[i];
      rows[i][i] -= lam.real();
    }
    Vec<3> cands[3] = {cross(rows[0], rows[1]), cross(rows[0], rows[2]), cross(rows[1], rows[2])};
    Vec<3> v = cands[0];
    for (const auto& c : cands)
      if (dot3(c, c) > dot3(v, v)) v = c;
    const double vn = std::sqrt(dot3(v, v));
    if (vn == 0.0) continue;
    for (double& x : v) x /= vn;
    const double cond = 4.0 * v[0] * v[2] - v[1] * v[1];
    if (!(cond > 0.0)) continue;
    Vec<3> mv{};
    for (int i = 0; i < 3; ++i) mv[i] = dot3(m[i], v);
    const double obj = dot3(v, mv) / cond;
    if (!found || obj < best_obj) {
      found = true;
      best = v;
      best_obj = obj;
    }
  }
  if (!found) throw Error(ErrorCode::DegenerateSample, "fit_direct_ellipse: no elliptic eigenvector");

  Vec<3> lin{};
  for (int i = 0; i < 3; ++i) lin[i] = dot3(t[i], best);
  // Back to the factor-of-two convention, then undo the normalization: the
  // fitted conic lives in u = (x - m) / s.
  ConicCoeffs c{best[0], 0.5 * best[1], best[2], 0.5 * lin[0], 0.5 * lin[1], lin[2]};
  c.d /= s;
  c.e /= s;
  c.a /= s * s;
  c.b /= s * s;
  c.c /= s * s;
  c = translate(c, mx, my);
  return normalize(c);
}

std::pair<BivarPoly, BivarPoly> constraint_polys(const std::array<Vec<6>, 3>& basis,
                                                 const Intrinsics& intr) {
  const ConicCoeffs c1 = ConicCoeffs::from_vec(basis[0]);
  const ConicCoeffs c2 = ConicCoeffs::from_vec(basis[1]);
  const ConicCoeffs c3 = ConicCoeffs::from_vec(basis[2]);
  auto entry = [&](auto field) { return BivarPoly::linear(c1.*field, c2.*field, c3.*field); };
  const BivarPoly a = entry(&ConicCoeffs::a);
  const BivarPoly b = entry(&ConicCoeffs::b);
  const BivarPoly c = entry(&ConicCoeffs::c);
  const BivarPoly d = entry(&ConicCoeffs::d);
  const BivarPoly e = entry(&ConicCoeffs::e);
  const BivarPoly f = entry(&ConicCoeffs::f);
  const BivarPoly zero = BivarPoly::constant(0.0);

  auto det3 = [](const std::array<std::array<BivarPoly, 3>, 3>& m) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };

  const double l2m1 = intr.l * intr.l - 1.0;
  const double f2 = intr.focal * intr.focal;
  const std::array<std::array<BivarPoly, 3>, 3> s1{{{a, b, d}, {b, c, e}, {e, d * -1.0, zero}}};
  const std::array<std::array<BivarPoly, 3>, 3> s2{
      {{a, e * -l2m1, d}, {b, zero, e}, {d, b * -f2, f}}};
  return {det3(s1), det3(s2)};
}

double ThreePointCandidate::residual() const { return std::abs(s1) + std::abs(s2); }

namespace detail {

namespace {

double pair_residual(const BivarPoly& p, const BivarPoly& q, double sp, double sq, double alpha,
                     double beta) {
  const double w = std::pow(1.0 + alpha * alpha + beta * beta, 1.5);
  return (std::abs(p(alpha, beta)) / sp + std::abs(q(alpha, beta)) / sq) / w;
}

}  // namespace

PolishResult polish_pair(const BivarPoly& p, const BivarPoly& q, double alpha, double beta) {
  const double sp = std::max(p.max_abs_coeff(), 1e-300);
  const double sq = std::max(q.max_abs_coeff(), 1e-300);
  const BivarPoly pa = p.partial(Var::Alpha), pb = p.partial(Var::Beta);
  const BivarPoly qa = q.partial(Var::Alpha), qb = q.partial(Var::Beta);

  double res = pair_residual(p, q, sp, sq, alpha, beta);
  for (int it = 0; it < 20 && res > 1e-12; ++it) {
    const double f0 = p(alpha, beta) / sp, f1 = q(alpha, beta) / sq;
    const double j00 = pa(alpha, beta) / sp, j01 = pb(alpha, beta) / sp;
    const double j10 = qa(alpha, beta) / sq, j11 = qb(alpha, beta) / sq;
    const double det = j00 * j11 - j01 * j10;
    const double jn = std::abs(j00) + std::abs(j01) + std::abs(j10) + std::abs(j11);
    double da = 0.0, db = 0.0;
    if (std::abs(det) > 1e-14 * jn * jn) {
      da = -(j11 * f0 - j01 * f1) / det;
      db = -(-j10 * f0 + j00 * f1) / det;
    } else {
      // Singular Jacobian: regularized Gauss-Newton step.
      const double h00 = j00 * j00 + j10 * j10 + 1e-12 * jn * jn;
      const double h01 = j00 * j01 + j10 * j11;
      const double h11 = j01 * j01 + j11 * j11 + 1e-12 * jn * jn;
      const double g0 = j00 * f0 + j10 * f1, g1 = j01 * f0 + j11 * f1;
      const double hd = h00 * h11 - h01 * h01;
      if (hd == 0.0 || !std::isfinite(hd)) break;
      da = -(h11 * g0 - h01 * g1) / hd;
      db = -(-h01 * g0 + h00 * g1) / hd;
    }
    if (!std::isfinite(da) || !std::isfinite(db)) break;

    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving, step *= 0.5) {
      const double na = alpha + step * da, nb = beta + step * db;
      const double nres = pair_residual(p, q, sp, sq, na, nb);
      if (nres < res) {
        alpha = na;
        beta = nb;
        res = nres;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (std::hypot(step * da, step * db) <= 1e-14 * (1.0 + std::abs(alpha) + std::abs(beta))) break;
  }
  auto rel = [&](const BivarPoly& r) {
    const double mag = r.abs_terms(alpha, beta);
    return mag > 0.0 ? std::abs(r(alpha, beta)) / mag : 0.0;
  };
  return {alpha, beta, res, std::max(rel(p), rel(q))};
}

bool make_candidate(const std::array<Vec<6>, 3>& basis, int lead, double alpha, double beta,
                    std::span<const Point2> pts, const Intrinsics& intr, ThreePointCandidate& out) {
  if (!std::isfinite(alpha) || !std::isfinite(beta)) return false;
  const auto& v0 = basis[static_cast<std::size_t>(lead % 3)];
  const auto& v1 = basis[static_cast<std::size_t>((lead + 1) % 3)];
  const auto& v2 = basis[static_cast<std::size_t>((lead + 2) % 3)];
  Vec<6> v{};
  for (int k = 0; k < 6; ++k) v[k] = v0[k] + alpha * v1[k] + beta * v2[k];
  ConicCoeffs c;
  try {
    c = normalize(ConicCoeffs::from_vec(v));
  } catch (const Error&) {
    return false;
  }
  for (const auto& p : pts)
    if (!(std::abs(evaluate(c, p)) <= kInterpolationTol)) return false;
  const double r1 = s1_residual(c);
  const double r2 = s2_residual(c, intr);
  if (!(std::abs(r1) <= kConstraintTol) || !(std::abs(r2) <= kConstraintTol)) return false;
  if (!is_ellipse(c)) return false;
  out = {c, alpha, beta, lead % 3, r1, r2};
  return true;
}

}  // namespace detail

namespace {

// Near-real roots of p. The loose tolerance keeps clustered roots of
// multiple solutions, which the companion matrix splits into complex pairs;
// Newton polishing and the candidate filters reject spurious ones.
constexpr double kNearRealTol = 1e-2;

// Backward error a polished root must reach to count as a root. Pixel-scale
// pencils cancel heavily, so a residual relative to the largest coefficient
// says little.
constexpr double kPolishedTol = 1e-10;

// Two coefficients vanishing together satisfy both constraints identically:
// b = e = 0 and d = e = 0 are double points of the cubic pair, b = d = 0 a
// simple one. Newton converges only linearly at double points, so these are
// solved exactly instead. Indices into (a, b, c, d, e, f).

constexpr std::array<std::pair<int, int>, 3> kSpecialPairs{{{1, 4}, {3, 4}, {1, 3}}};
struct SpecialPoint {
  std::array<double, 3> w;  // pencil weights
  ConicCoeffs conic;        // normalized
};

std::vector<SpecialPoint> special_points(const std::array<Vec<6>, 3>& basis) {
  std::vector<SpecialPoint> out;
  for (const auto& [i, j] : kSpecialPairs) {
    const std::array<double, 3> r{basis[0][i], basis[1][i], basis[2][i]};
    const std::array<double, 3> q{basis[0][j], basis[1][j], basis[2][j]};
    std::array<double, 3> w{r[1] * q[2] - r[2] * q[1], r[2] * q[0] - r[0] * q[2],
                            r[0] * q[1] - r[1] * q[0]};
    const double len = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    // A whole line of such conics would make the pair dependent; skip.
    if (!(len > 1e-12)) continue;
    for (double& x : w) x /= len;
    Vec<6> v{};
    for (int k = 0; k < 6; ++k) v[k] = w[0] * basis[0][k] + w[1] * basis[1][k] + w[2] * basis[2][k];
    v[i] = v[j] = 0.0;
    out.push_back({w, normalize(ConicCoeffs::from_vec(v))});
  }
  return out;
}

std::vector<double> near_real_roots(const Poly1& p) {
  const Poly1 t = p.trimmed(1e-12);
  if (t.degree() < 1) return {};
  std::vector<double> out;
  for (const auto& r : numeric::real_roots(t, kNearRealTol)) out.push_back(r.value);
  return out;
}

}  // namespace

ThreePointSolutions fit_three_point(Point2 p1, Point2 p2, Point2 p3, const Intrinsics& intr) {
  const double area = 0.5 * std::abs((p2.x - p1.x) * (p3.y - p1.y) - (p3.x - p1.x) * (p2.y - p1.y));
  if (!(area > 1e-9))
    throw Error(ErrorCode::DegenerateSample, "fit_three_point: points are collinear or coincident");

  const std::array<Point2, 3> pts{p1, p2, p3};
  const std::array<Vec<6>, 3> rows{design_row(p1), design_row(p2), design_row(p3)};
  const auto basis = numeric::nullspace_3x6(rows);

  std::vector<ThreePointCandidate> found;
  const auto specials = special_points(basis);
  for (const auto& sp : specials) {
    int lead = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(sp.w[static_cast<std::size_t>(k)]) > std::abs(sp.w[static_cast<std::size_t>(lead)]))
        lead = k;
    const double w0 = sp.w[static_cast<std::size_t>(lead)];
    ThreePointCandidate cand;
    if (detail::make_candidate(basis, lead, sp.w[static_cast<std::size_t>((lead + 1) % 3)] / w0,
                               sp.w[static_cast<std::size_t>((lead + 2) % 3)] / w0, pts, intr, cand)) {
      // Keep the exact zeros that rounding in the pencil sum loses.
      cand.conic = sp.conic;
      cand.s1 = s1_residual(cand.conic);
      cand.s2 = s2_residual(cand.conic, intr);
      found.push_back(cand);
    }
  }

  for (int lead = 0; lead < 3; ++lead) {
    const std::array<Vec<6>, 3> rotated{basis[static_cast<std::size_t>(lead)],
                                        basis[static_cast<std::size_t>((lead + 1) % 3)],
                                        basis[static_cast<std::size_t>((lead + 2) % 3)]};
    const auto [sp, sq] = constraint_polys(rotated, intr);
    for (Var eliminated : {Var::Beta, Var::Alpha}) {
      const Var survivor = eliminated == Var::Beta ? Var::Alpha : Var::Beta;
      if (sp.degree_in(eliminated) <= 0 || sq.degree_in(eliminated) <= 0) continue;
      const Poly1 eliminant = numeric::resultant_eliminate(sp, sq, eliminated);
      if (eliminant.is_zero()) continue;
      for (double s : near_real_roots(eliminant)) {
        std::vector<double> others = near_real_roots(sp.substitute(survivor, s));
        const auto more = near_real_roots(sq.substitute(survivor, s));
        others.insert(others.end(), more.begin(), more.end());
        for (double t : others) {
          const double alpha0 = survivor == Var::Alpha ? s : t;
          const double beta0 = survivor == Var::Alpha ? t : s;
          const auto pol = detail::polish_pair(sp, sq, alpha0, beta0);
          if (!(pol.backward_error <= kPolishedTol)) continue;
          ThreePointCandidate cand;
          if (detail::make_candidate(basis, lead, pol.alpha, pol.beta, pts, intr, cand))
            found.push_back(cand);
        }
      }
    }
  }

  auto order = [](const ThreePointCandidate& x, const ThreePointCandidate& y) {
    return std::make_tuple(x.residual(), x.alpha, x.beta) <
           std::make_tuple(y.residual(), y.alpha, y.beta);
  };
  std::sort(found.begin(), found.end(), order);

  ThreePointSolutions out;
  for (const auto& cand : found) {
    bool duplicate = false;
    for (const auto& kept : out.candidates)
      if (compare_up_to_scale(kept.conic, cand.conic) <= detail::kDedupTol) {
        duplicate = true;
        break;
      }
    if (!duplicate) out.candidates.push_back(cand);
  }
  return out;
}

}  // namespace ellipse
