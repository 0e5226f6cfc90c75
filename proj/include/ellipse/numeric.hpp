#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "ellipse/error.hpp"

namespace ellipse::numeric {

template <std::size_t N>
using Vec = std::array<double, N>;

/// Row-major dense N x N matrix.
template <std::size_t N>
using Mat = std::array<std::array<double, N>, N>;

template <std::size_t N>
struct SymEigen {
  Vec<N> values;   // ascending
  Mat<N> vectors;  // vectors[k] is the unit eigenvector of values[k]
};

template <std::size_t N>
double frobenius(const Mat<N>& m) {
  double s = 0.0;
  for (const auto& row : m)
    for (double v : row) s += v * v;
  return std::sqrt(s);
}

/// Cyclic Jacobi rotations. Stops when the off-diagonal Frobenius norm drops
/// below 1e-14 |M| or after 50 sweeps. Throws InvalidInput when M is not
/// symmetric within 1e-10 relative.
template <std::size_t N>
SymEigen<N> jacobi_eigen(Mat<N> a) {
  const double norm = frobenius(a);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j)
      if (std::abs(a[i][j] - a[j][i]) > 1e-10 * norm)
        throw Error(ErrorCode::InvalidInput, "jacobi_eigen: matrix is not symmetric");
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = i + 1; j < N; ++j) a[i][j] = a[j][i] = 0.5 * (a[i][j] + a[j][i]);

  Mat<N> v{};
  for (std::size_t i = 0; i < N; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 50; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j) off += 2.0 * a[i][j] * a[i][j];
    if (std::sqrt(off) <= 1e-14 * norm || off == 0.0) break;

    for (std::size_t p = 0; p < N; ++p) {
      for (std::size_t q = p + 1; q < N; ++q) {
        const double apq = a[p][q];
        if (apq == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < N; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < N; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        a[p][q] = a[q][p] = 0.0;
        for (std::size_t k = 0; k < N; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<std::size_t, N> order;
  for (std::size_t i = 0; i < N; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a[i][i] < a[j][j]; });
  SymEigen<N> out;
  for (std::size_t k = 0; k < N; ++k) {
    out.values[k] = a[order[k]][order[k]];
    for (std::size_t i = 0; i < N; ++i) out.vectors[k][i] = v[i][order[k]];
  }
  return out;
}

/// Unit minimizer of v^T M v for symmetric 6x6 M.
Vec<6> min_eigvec_sym6(const Mat<6>& m);

/// Orthonormal basis of the null space of a rank-3, 3x6 matrix given by its
/// rows. Throws DegenerateSample when the rank is below 3.
std::array<Vec<6>, 3> nullspace_3x6(const std::array<Vec<6>, 3>& rows);

/// Dense square matrix used by the general eigenvalue routine.
using DynMat = std::vector<std::vector<double>>;

/// All eigenvalues of a real square matrix: balancing, Hessenberg reduction,
/// then Francis double-shift QR. Throws InvalidInput when QR fails to
/// converge.
std::vector<std::complex<double>> eigenvalues_general(DynMat a);

/// Univariate polynomial, ascending powers.
class Poly1 {
 public:
  Poly1() = default;
  explicit Poly1(std::vector<double> coeffs);

  /// Degree after trimming; -1 for the zero polynomial.
  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  const std::vector<double>& coeffs() const { return c_; }
  double operator[](std::size_t k) const { return k < c_.size() ? c_[k] : 0.0; }

  double operator()(double x) const;
  Poly1 derivative() const;
  double max_abs_coeff() const;

  /// Drops leading coefficients with |c| <= rel * max|c|.
  Poly1 trimmed(double rel) const;

  friend Poly1 operator+(const Poly1& p, const Poly1& q);
  friend Poly1 operator-(const Poly1& p, const Poly1& q);
  friend Poly1 operator*(const Poly1& p, const Poly1& q);
  Poly1 operator-() const;

 private:
  std::vector<double> c_;
};

struct RealRoot {
  double value = 0.0;
  int multiplicity = 1;
};

/// Default acceptance of a companion eigenvalue as real:
/// |imag| <= 1e-7 (1 + |real|).
inline constexpr double kRealRootImagTol = 1e-7;

/// Sorted real roots via the companion matrix, each polished by one Newton
/// step. Roots closer than 1e-5 (1 + |r|) are merged and reported once with
/// their multiplicity. Degree up to 16. Throws InvalidInput for the zero
/// polynomial or unsupported degree.
std::vector<RealRoot> real_roots(const Poly1& p, double imag_tol = kRealRootImagTol);

enum class Var { Alpha, Beta };

/// Dense bivariate polynomial sum c_ij alpha^i beta^j with i + j <= degree.
class BivarPoly {
 public:
  BivarPoly() : BivarPoly(0) {}
  explicit BivarPoly(int total_degree);

  static BivarPoly constant(double c);
  /// c0 + c_alpha * alpha + c_beta * beta
  static BivarPoly linear(double c0, double c_alpha, double c_beta);

  int total_degree() const { return deg_; }
  double coeff(int i, int j) const;
  void set(int i, int j, double v);
  void add(int i, int j, double v);

  double operator()(double alpha, double beta) const;
  /// Sum of |term| at (alpha, beta); the scale for backward errors.
  double abs_terms(double alpha, double beta) const;
  BivarPoly partial(Var v) const;

  /// Highest power of v with a nonzero coefficient; -1 for zero.
  int degree_in(Var v) const;

  /// Coefficient of v^k as a polynomial in the other variable.
  Poly1 coeff_poly(Var v, int k) const;

  /// Restriction to v = value, as a polynomial in the other variable.
  Poly1 substitute(Var v, double value) const;

  double max_abs_coeff() const;

  friend BivarPoly operator+(const BivarPoly& p, const BivarPoly& q);
  friend BivarPoly operator-(const BivarPoly& p, const BivarPoly& q);
  friend BivarPoly operator*(const BivarPoly& p, const BivarPoly& q);
  BivarPoly operator*(double s) const;

 private:
  int deg_;
  std::vector<double> c_;  // (deg_+1)^2 grid, index i*(deg_+1)+j
};

/// Sylvester resultant of p and q with respect to `eliminated`, as a
/// polynomial in the surviving variable. Throws InvalidInput when either
/// input does not depend on the eliminated variable.
Poly1 resultant_eliminate(const BivarPoly& p, const BivarPoly& q, Var eliminated);

/// Determinant of a square matrix of univariate polynomials, by expansion
/// over column subsets (division free).
Poly1 poly_determinant(const std::vector<std::vector<Poly1>>& m);

}  // namespace ellipse::numeric
