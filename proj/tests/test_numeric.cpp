#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ellipse/error.hpp"
#include "ellipse/fitters.hpp"
#include "ellipse/numeric.hpp"

namespace ellipse::numeric {
namespace {

Mat<6> random_symmetric(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Mat<6> m{};
  for (int i = 0; i < 6; ++i)
    for (int j = i; j < 6; ++j) m[i][j] = m[j][i] = u(rng);
  return m;
}

double quad(const Mat<6>& m, const Vec<6>& v) {
  double s = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) s += v[i] * m[i][j] * v[j];
  return s;
}

Vec<6> random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vec<6> w;
  double n = 0.0;
  for (double& x : w) {
    x = g(rng);
    n += x * x;
  }
  for (double& x : w) x /= std::sqrt(n);
  return w;
}

TEST(MinEigvec, Diagonal) {
  Mat<6> m{};
  for (int i = 0; i < 6; ++i) m[i][i] = 5.0 - i;
  const auto v = min_eigvec_sym6(m);
  EXPECT_NEAR(std::abs(v[5]), 1.0, 1e-15);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(v[i], 0.0, 1e-15);
}

TEST(MinEigvec, IdentityGivesUnitEigenvalue) {
  Mat<6> m{};
  for (int i = 0; i < 6; ++i) m[i][i] = 1.0;
  const auto v = min_eigvec_sym6(m);
  EXPECT_NEAR(quad(m, v), 1.0, 1e-15);
}

TEST(MinEigvec, UnitCircleScatter) {
  Mat<6> m{};
  for (int k = 0; k < 8; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 8.0;
    const auto row = design_row({std::cos(t), std::sin(t)});
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) m[i][j] += row[i] * row[j];
  }
  const auto v = min_eigvec_sym6(m);
  // Independent check: the circle row-products vanish.
  const double r3 = 1.0 / std::sqrt(3.0);
  const double dot = r3 * (v[0] + v[2] - v[5]);
  EXPECT_NEAR(std::abs(dot), 1.0, 1e-12);
}

TEST(MinEigvec, RejectsAsymmetric) {
  Mat<6> m{};
  m[0][1] = 1.0;
  EXPECT_THROW(min_eigvec_sym6(m), Error);
}

TEST(MinEigvec, OptimalityProperty) {
  std::mt19937_64 rng(101);
  for (int t = 0; t < 100; ++t) {
    const auto m = random_symmetric(rng);
    const auto v = min_eigvec_sym6(m);
    const double lambda = quad(m, v);
    const double norm = frobenius(m);
    // Residual |Mv - lambda v|.
    double res = 0.0;
    for (int i = 0; i < 6; ++i) {
      double mv = 0.0;
      for (int j = 0; j < 6; ++j) mv += m[i][j] * v[j];
      res += (mv - lambda * v[i]) * (mv - lambda * v[i]);
    }
    EXPECT_LE(std::sqrt(res), 1e-9 * norm);
    for (int k = 0; k < 100; ++k) EXPECT_LE(lambda, quad(m, random_unit(rng)) + 1e-9 * norm);
  }
}

TEST(JacobiEigen, AgreesWithEigen) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_symmetric(rng);
    Eigen::Matrix<double, 6, 6> em;
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) em(i, j) = m[i][j];
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> es(em);
    const auto ours = jacobi_eigen<6>(m);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(ours.values[k], es.eigenvalues()(k), 1e-12);
  }
}

TEST(Nullspace, CoordinateRows) {
  std::array<Vec<6>, 3> rows{};
  for (int i = 0; i < 3; ++i) rows[i][i] = 1.0;
  const auto basis = nullspace_3x6(rows);
  for (const auto& v : basis) {
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(v[i], 0.0, 1e-15);
    double n = 0.0;
    for (double x : v) n += x * x;
    EXPECT_NEAR(n, 1.0, 1e-14);
  }
}

TEST(Nullspace, RankDeficientIsDegenerate) {
  std::array<Vec<6>, 3> rows{};
  rows[0][0] = 1.0;
  rows[1][1] = 1.0;
  rows[2][0] = 1.0;
  rows[2][1] = 1.0;
  try {
    nullspace_3x6(rows);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSample);
  }
}

TEST(Nullspace, ContainsCircleThroughThreePoints) {
  const std::array<Vec<6>, 3> rows{design_row({1, 0}), design_row({0, 1}),
                                   design_row({-0.6, -0.8})};
  const auto basis = nullspace_3x6(rows);
  const double r3 = 1.0 / std::sqrt(3.0);
  const Vec<6> circle{r3, 0, r3, 0, 0, -r3};
  double proj = 0.0;
  for (const auto& v : basis) {
    double d = 0.0;
    for (int k = 0; k < 6; ++k) d += v[k] * circle[k];
    proj += d * d;
  }
  EXPECT_NEAR(proj, 1.0, 1e-10);
}

TEST(Nullspace, OrthonormalAndSmallResidual) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-400, 400);
  for (int t = 0; t < 200; ++t) {
    const std::array<Vec<6>, 3> rows{design_row({u(rng), u(rng)}), design_row({u(rng), u(rng)}),
                                     design_row({u(rng), u(rng)})};
    double anorm = 0.0;
    for (const auto& r : rows)
      for (double x : r) anorm += x * x;
    anorm = std::sqrt(anorm);
    const auto basis = nullspace_3x6(rows);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double d = 0.0;
        for (int k = 0; k < 6; ++k) d += basis[i][k] * basis[j][k];
        EXPECT_NEAR(d, i == j ? 1.0 : 0.0, 1e-12);
      }
      double res = 0.0;
      for (const auto& r : rows) {
        double d = 0.0;
        for (int k = 0; k < 6; ++k) d += r[k] * basis[i][k];
        res += d * d;
      }
      EXPECT_LE(std::sqrt(res), 1e-10 * anorm);
    }
  }
}

TEST(EigenvaluesGeneral, AgreesWithEigen) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int t = 0; t < 100; ++t) {
    const int n = 2 + t % 9;
    DynMat a(n, std::vector<double>(n));
    Eigen::MatrixXd em(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) em(i, j) = a[i][j] = u(rng);
    auto ours = eigenvalues_general(a);
    Eigen::EigenSolver<Eigen::MatrixXd> es(em, false);
    std::vector<std::complex<double>> ref(es.eigenvalues().data(), es.eigenvalues().data() + n);
    auto key = [](const std::complex<double>& z) { return std::make_pair(z.real(), z.imag()); };
    auto by = [&](auto& x, auto& y) { return key(x) < key(y); };
    std::sort(ours.begin(), ours.end(), by);
    std::sort(ref.begin(), ref.end(), by);
    for (int k = 0; k < n; ++k) EXPECT_LT(std::abs(ours[k] - ref[k]), 1e-9) << "n=" << n;
  }
}

TEST(RealRoots, Examples) {
  auto values = [](const Poly1& p) {
    std::vector<double> v;
    for (const auto& r : real_roots(p)) v.push_back(r.value);
    return v;
  };
  const auto r1 = values(Poly1({-1, 0, 1}));
  ASSERT_EQ(r1.size(), 2u);
  EXPECT_NEAR(r1[0], -1.0, 1e-14);
  EXPECT_NEAR(r1[1], 1.0, 1e-14);
  EXPECT_TRUE(values(Poly1({1, 0, 1})).empty());
  const auto r3 = values(Poly1({-6, 11, -6, 1}));
  ASSERT_EQ(r3.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(r3[k], k + 1.0, 1e-12);
}

TEST(RealRoots, ReportsMultiplicity) {
  // (x - 1)^2 (x + 2) = x^3 - 3x + 2
  const auto roots = real_roots(Poly1({2, -3, 0, 1}));
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0].value, -2.0, 1e-12);
  EXPECT_EQ(roots[0].multiplicity, 1);
  EXPECT_NEAR(roots[1].value, 1.0, 1e-7);
  EXPECT_EQ(roots[1].multiplicity, 2);
}

TEST(RealRoots, ZeroPolynomialIsInvalid) {
  try {
    real_roots(Poly1{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

TEST(RealRoots, RecoversPlantedRoots) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-10, 10);
  std::uniform_int_distribution<int> deg(1, 9);
  for (int t = 0; t < 100; ++t) {
    const int n = deg(rng);
    std::vector<double> planted;
    while (static_cast<int>(planted.size()) < n) {
      const double r = u(rng);
      bool ok = true;
      for (double q : planted) ok = ok && std::abs(q - r) >= 1e-3;
      if (ok) planted.push_back(r);
    }
    std::sort(planted.begin(), planted.end());
    Poly1 p({1.0});
    for (double r : planted) p = p * Poly1({-r, 1.0});
    const auto roots = real_roots(p);
    ASSERT_EQ(roots.size(), planted.size()) << "t=" << t;
    double scale = p.max_abs_coeff();
    for (std::size_t k = 0; k < roots.size(); ++k) {
      EXPECT_NEAR(roots[k].value, planted[k], 1e-7);
      const double r = roots[k].value;
      EXPECT_LE(std::abs(p(r)), 1e-8 * scale * std::pow(std::max(1.0, std::abs(r)), n));
    }
  }
}

TEST(BivarPoly, ArithmeticAndPartials) {
  const auto x = BivarPoly::linear(0, 1, 0);
  const auto y = BivarPoly::linear(0, 0, 1);
  const auto p = x * x * y + y * 3.0 - BivarPoly::constant(2.0);  // a^2 b + 3b - 2
  EXPECT_DOUBLE_EQ(p(2.0, 5.0), 20.0 + 15.0 - 2.0);
  EXPECT_EQ(p.degree_in(Var::Alpha), 2);
  EXPECT_EQ(p.degree_in(Var::Beta), 1);
  EXPECT_DOUBLE_EQ(p.partial(Var::Alpha)(2.0, 5.0), 2.0 * 2.0 * 5.0);
  EXPECT_DOUBLE_EQ(p.partial(Var::Beta)(2.0, 5.0), 4.0 + 3.0);
  const Poly1 in_beta = p.substitute(Var::Alpha, 2.0);  // 7b - 2
  EXPECT_DOUBLE_EQ(in_beta(1.0), 5.0);
  const Poly1 lead = p.coeff_poly(Var::Beta, 1);  // a^2 + 3
  EXPECT_DOUBLE_EQ(lead(2.0), 7.0);
}

TEST(Resultant, Examples) {
  const auto a = BivarPoly::linear(0, 1, 0);
  const auto b = BivarPoly::linear(0, 0, 1);
  const auto one = BivarPoly::constant(1.0);
  {
    const auto r = resultant_eliminate(b - one, b - a, Var::Beta);
    const auto roots = real_roots(r);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_NEAR(roots[0].value, 1.0, 1e-14);
  }
  {
    const auto r = resultant_eliminate(b * b - a, b - one, Var::Beta);
    const auto roots = real_roots(r);
    ASSERT_EQ(roots.size(), 1u);
    EXPECT_NEAR(roots[0].value, 1.0, 1e-14);
  }
  try {
    resultant_eliminate(a, b - one, Var::Beta);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
  }
}

BivarPoly random_cubic(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  BivarPoly p(3);
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; i + j <= 3; ++j) p.set(i, j, u(rng));
  return p;
}

TEST(Resultant, VanishesAtPlantedCommonRoot) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int t = 0; t < 100; ++t) {
    const double a0 = u(rng), b0 = u(rng);
    BivarPoly p = random_cubic(rng), q = random_cubic(rng);
    p.add(0, 0, -p(a0, b0));
    q.add(0, 0, -q(a0, b0));
    const Poly1 r = resultant_eliminate(p, q, Var::Beta);
    EXPECT_LE(r.degree(), 9);
    double scale = 0.0;
    for (std::size_t k = 0; k < r.coeffs().size(); ++k)
      scale += std::abs(r.coeffs()[k]) * std::pow(std::abs(a0), static_cast<double>(k));
    EXPECT_LE(std::abs(r(a0)), 1e-6 * scale);
  }
}

TEST(PolyDeterminant, MatchesPointwiseDeterminant) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  const int n = 5;
  std::vector<std::vector<Poly1>> m(n, std::vector<Poly1>(n));
  for (auto& row : m)
    for (auto& e : row) e = Poly1({u(rng), u(rng), u(rng)});
  const Poly1 d = poly_determinant(m);
  for (double x : {-1.5, -0.3, 0.0, 0.7, 2.0}) {
    Eigen::MatrixXd em(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) em(i, j) = m[i][j](x);
    EXPECT_NEAR(d(x), em.determinant(), 1e-10 * std::max(1.0, std::abs(em.determinant())));
  }
}

}  // namespace
}  // namespace ellipse::numeric
