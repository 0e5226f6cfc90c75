#include <cmath>
#include <complex>
#include <vector>

#include "ellipse/numeric.hpp"

namespace ellipse::numeric {

Vec<6> min_eigvec_sym6(const Mat<6>& m) {
  const auto eig = jacobi_eigen<6>(m);
  return eig.vectors[0];
}

std::array<Vec<6>, 3> nullspace_3x6(const std::array<Vec<6>, 3>& rows) {
  // Rank test on the nonzero spectrum of A^T A, read off the 3x3 Gram
  // matrix A A^T which shares it.
  Mat<3> gram{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 6; ++k) s += rows[i][k] * rows[j][k];
      gram[i][j] = s;
    }
  const double trace = gram[0][0] + gram[1][1] + gram[2][2];
  const auto eig = jacobi_eigen<3>(gram);
  if (!(trace > 0.0) || !(eig.values[0] > 1e-10 * trace))
    throw Error(ErrorCode::DegenerateSample, "nullspace_3x6: matrix rank below 3");

  // Householder QR of A^T (6x3); the trailing three columns of Q span the
  // null space of A.
  std::array<Vec<6>, 3> cols = rows;  // cols[j] = column j of A^T
  std::array<Vec<6>, 3> reflectors{};
  for (int j = 0; j < 3; ++j) {
    double alpha = 0.0;
    for (int k = j; k < 6; ++k) alpha += cols[j][k] * cols[j][k];
    alpha = std::sqrt(alpha);
    if (cols[j][j] > 0.0) alpha = -alpha;
    Vec<6> v{};
    for (int k = j; k < 6; ++k) v[k] = cols[j][k];
    v[j] -= alpha;
    double vn = 0.0;
    for (int k = j; k < 6; ++k) vn += v[k] * v[k];
    vn = std::sqrt(vn);
    if (vn > 0.0)
      for (int k = j; k < 6; ++k) v[k] /= vn;
    reflectors[j] = v;
    for (int c = j; c < 3; ++c) {
      double dot = 0.0;
      for (int k = j; k < 6; ++k) dot += v[k] * cols[c][k];
      for (int k = j; k < 6; ++k) cols[c][k] -= 2.0 * dot * v[k];
    }
  }

  std::array<Vec<6>, 3> basis{};
  for (int b = 0; b < 3; ++b) {
    Vec<6> x{};
    x[3 + b] = 1.0;
    for (int j = 2; j >= 0; --j) {
      const auto& v = reflectors[j];
      double dot = 0.0;
      for (int k = 0; k < 6; ++k) dot += v[k] * x[k];
      for (int k = 0; k < 6; ++k) x[k] -= 2.0 * dot * v[k];
    }
    basis[b] = x;
  }
  return basis;
}

namespace {

void balance(DynMat& a) {
  constexpr double radix = 2.0;
  constexpr double sqrdx = radix * radix;
  const std::size_t n = a.size();
  bool done = false;
  while (!done) {
    done = true;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a[j][i]);
        r += std::abs(a[i][j]);
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sqrdx;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sqrdx;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        g = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a[i][j] *= g;
        for (std::size_t j = 0; j < n; ++j) a[j][i] *= f;
      }
    }
  }
}

// Similarity reduction to upper Hessenberg form by stabilized elimination.
void to_hessenberg(DynMat& a) {
  const std::size_t n = a.size();
  for (std::size_t m = 1; m + 1 < n; ++m) {
    double x = 0.0;
    std::size_t piv = m;
    for (std::size_t j = m; j < n; ++j) {
      if (std::abs(a[j][m - 1]) > std::abs(x)) {
        x = a[j][m - 1];
        piv = j;
      }
    }
    if (piv != m) {
      for (std::size_t j = m - 1; j < n; ++j) std::swap(a[piv][j], a[m][j]);
      for (std::size_t j = 0; j < n; ++j) std::swap(a[j][piv], a[j][m]);
    }
    if (x == 0.0) continue;
    for (std::size_t i = m + 1; i < n; ++i) {
      double y = a[i][m - 1];
      if (y == 0.0) continue;
      y /= x;
      a[i][m - 1] = y;
      for (std::size_t j = m; j < n; ++j) a[i][j] -= y * a[m][j];
      for (std::size_t j = 0; j < n; ++j) a[j][m] += y * a[j][i];
    }
  }
  for (std::size_t i = 2; i < n; ++i)
    for (std::size_t j = 0; j + 1 < i; ++j) a[i][j] = 0.0;
}

double sign_of(double mag, double s) { return s >= 0.0 ? std::abs(mag) : -std::abs(mag); }

// Francis double-shift QR on an upper Hessenberg matrix.
std::vector<std::complex<double>> hessenberg_qr(DynMat& a) {
  const int n = static_cast<int>(a.size());
  std::vector<double> wr(n), wi(n);
  double anorm = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(a[i][j]);

  int nn = n - 1;
  double t = 0.0;
  while (nn >= 0) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 1; --l) {
        double s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l][l - 1]) + s == s) {
          a[l][l - 1] = 0.0;
          break;
        }
      }
      double x = a[nn][nn];
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn] = 0.0;
        --nn;
      } else {
        double y = a[nn - 1][nn - 1];
        double w = a[nn][nn - 1] * a[nn - 1][nn];
        if (l == nn - 1) {
          const double p = 0.5 * (y - x);
          const double q = p * p + w;
          double z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + sign_of(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -z;
            wi[nn] = z;
          }
          nn -= 2;
        } else {
          if (its == 200)
            throw Error(ErrorCode::InvalidInput, "eigenvalues_general: QR did not converge");
          if (its > 0 && its % 10 == 0) {
            // Exceptional shift.
            t += x;
            for (int i = 0; i <= nn; ++i) a[i][i] -= x;
            const double s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
          for (; m >= l; --m) {
            z = a[m][m];
            r = x - z;
            double s = y - z;
            p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - r - s;
            r = a[m + 2][m + 1];
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
            const double v =
                std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) + std::abs(a[m + 1][m + 1]));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a[i][i - 2] = 0.0;
            if (i != m + 2) a[i][i - 3] = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a[k][k - 1];
              q = a[k + 1][k - 1];
              r = 0.0;
              if (k != nn - 1) r = a[k + 2][k - 1];
              x = std::abs(p) + std::abs(q) + std::abs(r);
              if (x != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
            if (s == 0.0) continue;
            if (k == m) {
              if (l != m) a[k][k - 1] = -a[k][k - 1];
            } else {
              a[k][k - 1] = -s * x;
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;
            for (int j = k; j <= nn; ++j) {
              p = a[k][j] + q * a[k + 1][j];
              if (k != nn - 1) {
                p += r * a[k + 2][j];
                a[k + 2][j] -= p * z;
              }
              a[k + 1][j] -= p * y;
              a[k][j] -= p * x;
            }
            const int mmin = nn < k + 3 ? nn : k + 3;
            for (int i = l; i <= mmin; ++i) {
              p = x * a[i][k] + y * a[i][k + 1];
              if (k != nn - 1) {
                p += z * a[i][k + 2];
                a[i][k + 2] -= p * r;
              }
              a[i][k + 1] -= p * q;
              a[i][k] -= p;
            }
          }
        }
      }
    } while (l < nn - 1);
  }

  std::vector<std::complex<double>> out(n);
  for (int i = 0; i < n; ++i) out[i] = {wr[i], wi[i]};
  return out;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues_general(DynMat a) {
  const std::size_t n = a.size();
  for (const auto& row : a)
    if (row.size() != n) throw Error(ErrorCode::InvalidInput, "eigenvalues_general: matrix not square");
  if (n == 0) return {};
  if (n == 1) return {{a[0][0], 0.0}};
  balance(a);
  to_hessenberg(a);
  return hessenberg_qr(a);
}

}  // namespace ellipse::numeric
