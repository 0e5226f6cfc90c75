#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "ellipse/numeric.hpp"

namespace ellipse::numeric {

namespace {

void trim_exact(std::vector<double>& c) {
  while (!c.empty() && c.back() == 0.0) c.pop_back();
}

}  // namespace

Poly1::Poly1(std::vector<double> coeffs) : c_(std::move(coeffs)) { trim_exact(c_); }

double Poly1::operator()(double x) const {
  double r = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
  return r;
}

Poly1 Poly1::derivative() const {
  if (c_.size() <= 1) return Poly1{};
  std::vector<double> d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = static_cast<double>(k) * c_[k];
  return Poly1(std::move(d));
}

double Poly1::max_abs_coeff() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

Poly1 Poly1::trimmed(double rel) const {
  const double tol = rel * max_abs_coeff();
  std::vector<double> c = c_;
  while (!c.empty() && std::abs(c.back()) <= tol) c.pop_back();
  return Poly1(std::move(c));
}

Poly1 operator+(const Poly1& p, const Poly1& q) {
  std::vector<double> r(std::max(p.c_.size(), q.c_.size()), 0.0);
  for (std::size_t k = 0; k < p.c_.size(); ++k) r[k] += p.c_[k];
  for (std::size_t k = 0; k < q.c_.size(); ++k) r[k] += q.c_[k];
  return Poly1(std::move(r));
}

Poly1 Poly1::operator-() const {
  std::vector<double> r = c_;
  for (double& v : r) v = -v;
  return Poly1(std::move(r));
}

Poly1 operator-(const Poly1& p, const Poly1& q) { return p + (-q); }

Poly1 operator*(const Poly1& p, const Poly1& q) {
  if (p.is_zero() || q.is_zero()) return Poly1{};
  std::vector<double> r(p.c_.size() + q.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.c_.size(); ++i)
    for (std::size_t j = 0; j < q.c_.size(); ++j) r[i + j] += p.c_[i] * q.c_[j];
  return Poly1(std::move(r));
}

std::vector<RealRoot> real_roots(const Poly1& p, double imag_tol) {
  if (p.is_zero()) throw Error(ErrorCode::InvalidInput, "real_roots: zero polynomial");
  const int n = p.degree();
  if (n > 16) throw Error(ErrorCode::InvalidInput, "real_roots: degree above 16");
  if (n == 0) return {};

  const auto& c = p.coeffs();
  std::vector<double> candidates;
  if (n == 1) {
    candidates.push_back(-c[0] / c[1]);
  } else {
    // Companion matrix of the monic polynomial; already upper Hessenberg.
    // Substitute x = s y with s a power of two near the root magnitude
    // scale, so wildly graded coefficients do not stall the QR iteration.
    double s = 1.0;
    if (c[0] != 0.0) s = std::exp2(std::round(std::log2(std::abs(c[0] / c[n])) / n));
    std::vector<double> sc(c.begin(), c.end());
    for (int k = 0; k <= n; ++k) sc[k] = c[k] * std::pow(s, k);
    DynMat comp(n, std::vector<double>(n, 0.0));
    for (int j = 0; j < n; ++j) comp[0][j] = -sc[n - 1 - j] / sc[n];
    for (int i = 1; i < n; ++i) comp[i][i - 1] = 1.0;
    for (const auto& z : eigenvalues_general(std::move(comp))) {
      const std::complex<double> x = z * s;
      if (std::abs(x.imag()) <= imag_tol * (1.0 + std::abs(x.real())))
        candidates.push_back(x.real());
    }
  }

  // One Newton polish, kept only when it does not increase |p|.
  const Poly1 dp = p.derivative();
  for (double& r : candidates) {
    const double fr = p(r);
    const double dfr = dp(r);
    if (dfr == 0.0 || !std::isfinite(dfr)) continue;
    const double next = r - fr / dfr;
    if (std::isfinite(next) && std::abs(p(next)) <= std::abs(fr)) r = next;
  }

  std::sort(candidates.begin(), candidates.end());
  std::vector<RealRoot> out;
  std::size_t i = 0;
  while (i < candidates.size()) {
    std::size_t j = i + 1;
    double sum = candidates[i];
    while (j < candidates.size() &&
           candidates[j] - candidates[j - 1] <= 1e-5 * (1.0 + std::abs(candidates[j]))) {
      sum += candidates[j];
      ++j;
    }
    const int mult = static_cast<int>(j - i);
    double value = mult == 1 ? candidates[i] : sum / mult;
    out.push_back({value, mult});
    i = j;
  }
  return out;
}

BivarPoly::BivarPoly(int total_degree)
    : deg_(std::max(total_degree, 0)),
      c_(static_cast<std::size_t>((deg_ + 1) * (deg_ + 1)), 0.0) {}

BivarPoly BivarPoly::constant(double c) {
  BivarPoly p(0);
  p.set(0, 0, c);
  return p;
}

BivarPoly BivarPoly::linear(double c0, double c_alpha, double c_beta) {
  BivarPoly p(1);
  p.set(0, 0, c0);
  p.set(1, 0, c_alpha);
  p.set(0, 1, c_beta);
  return p;
}

double BivarPoly::coeff(int i, int j) const {
  if (i < 0 || j < 0 || i + j > deg_) return 0.0;
  return c_[static_cast<std::size_t>(i * (deg_ + 1) + j)];
}

void BivarPoly::set(int i, int j, double v) {
  if (i < 0 || j < 0 || i + j > deg_)
    throw Error(ErrorCode::InvalidInput, "BivarPoly: monomial beyond total degree");
  c_[static_cast<std::size_t>(i * (deg_ + 1) + j)] = v;
}

void BivarPoly::add(int i, int j, double v) { set(i, j, coeff(i, j) + v); }

double BivarPoly::operator()(double alpha, double beta) const {
  // Horner in beta for each alpha power, then Horner in alpha.
  double r = 0.0;
  for (int i = deg_; i >= 0; --i) {
    double row = 0.0;
    for (int j = deg_ - i; j >= 0; --j) row = row * beta + coeff(i, j);
    r = r * alpha + row;
  }
  return r;
}

double BivarPoly::abs_terms(double alpha, double beta) const {
  const double a = std::abs(alpha), b = std::abs(beta);
  double r = 0.0;
  for (int i = deg_; i >= 0; --i) {
    double row = 0.0;
    for (int j = deg_ - i; j >= 0; --j) row = row * b + std::abs(coeff(i, j));
    r = r * a + row;
  }
  return r;
}

BivarPoly BivarPoly::partial(Var v) const {
  BivarPoly d(std::max(deg_ - 1, 0));
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j) {
      const double c = coeff(i, j);
      if (c == 0.0) continue;
      if (v == Var::Alpha && i > 0) d.add(i - 1, j, i * c);
      if (v == Var::Beta && j > 0) d.add(i, j - 1, j * c);
    }
  return d;
}

int BivarPoly::degree_in(Var v) const {
  int best = -1;
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j)
      if (coeff(i, j) != 0.0) best = std::max(best, v == Var::Alpha ? i : j);
  return best;
}

Poly1 BivarPoly::coeff_poly(Var v, int k) const {
  std::vector<double> out(static_cast<std::size_t>(deg_ + 1), 0.0);
  for (int m = 0; m + k <= deg_; ++m)
    out[static_cast<std::size_t>(m)] = v == Var::Alpha ? coeff(k, m) : coeff(m, k);
  return Poly1(std::move(out));
}

Poly1 BivarPoly::substitute(Var v, double value) const {
  std::vector<double> out(static_cast<std::size_t>(deg_ + 1), 0.0);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j) {
      const double c = coeff(i, j);
      if (c == 0.0) continue;
      if (v == Var::Alpha)
        out[static_cast<std::size_t>(j)] += c * std::pow(value, i);
      else
        out[static_cast<std::size_t>(i)] += c * std::pow(value, j);
    }
  return Poly1(std::move(out));
}

double BivarPoly::max_abs_coeff() const {
  double m = 0.0;
  for (double v : c_) m = std::max(m, std::abs(v));
  return m;
}

BivarPoly operator+(const BivarPoly& p, const BivarPoly& q) {
  BivarPoly r(std::max(p.deg_, q.deg_));
  for (int i = 0; i <= r.deg_; ++i)
    for (int j = 0; i + j <= r.deg_; ++j) r.set(i, j, p.coeff(i, j) + q.coeff(i, j));
  return r;
}

BivarPoly operator-(const BivarPoly& p, const BivarPoly& q) { return p + q * -1.0; }

BivarPoly operator*(const BivarPoly& p, const BivarPoly& q) {
  BivarPoly r(p.deg_ + q.deg_);
  for (int i1 = 0; i1 <= p.deg_; ++i1)
    for (int j1 = 0; i1 + j1 <= p.deg_; ++j1) {
      const double a = p.coeff(i1, j1);
      if (a == 0.0) continue;
      for (int i2 = 0; i2 <= q.deg_; ++i2)
        for (int j2 = 0; i2 + j2 <= q.deg_; ++j2) r.add(i1 + i2, j1 + j2, a * q.coeff(i2, j2));
    }
  return r;
}

BivarPoly BivarPoly::operator*(double s) const {
  BivarPoly r = *this;
  for (double& v : r.c_) v *= s;
  return r;
}

Poly1 poly_determinant(const std::vector<std::vector<Poly1>>& m) {
  const std::size_t n = m.size();
  if (n == 0) return Poly1({1.0});
  if (n > 20) throw Error(ErrorCode::InvalidInput, "poly_determinant: matrix too large");
  for (const auto& row : m)
    if (row.size() != n) throw Error(ErrorCode::InvalidInput, "poly_determinant: matrix not square");

  // minors[S] = determinant of rows 0..|S|-1 restricted to column set S,
  // built one row at a time by Laplace expansion along the last row.
  std::unordered_map<std::uint32_t, Poly1> prev{{0u, Poly1({1.0})}};
  for (std::size_t row = 0; row < n; ++row) {
    std::unordered_map<std::uint32_t, Poly1> next;
    for (const auto& [set, minor] : prev) {
      if (minor.is_zero()) continue;
      for (std::size_t col = 0; col < n; ++col) {
        const std::uint32_t bit = 1u << col;
        if (set & bit) continue;
        if (m[row][col].is_zero()) continue;
        // Sign: number of chosen columns greater than col.
        int above = 0;
        for (std::size_t k = col + 1; k < n; ++k)
          if (set & (1u << k)) ++above;
        Poly1 term = minor * m[row][col];
        if (above % 2 == 1) term = -term;
        auto [it, inserted] = next.try_emplace(set | bit, term);
        if (!inserted) it->second = it->second + term;
      }
    }
    prev = std::move(next);
  }
  const std::uint32_t full = n == 32 ? 0xffffffffu : ((1u << n) - 1u);
  auto it = prev.find(full);
  return it == prev.end() ? Poly1{} : it->second;
}

Poly1 resultant_eliminate(const BivarPoly& p, const BivarPoly& q, Var eliminated) {
  const int m = p.degree_in(eliminated);
  const int n = q.degree_in(eliminated);
  if (m <= 0 || n <= 0)
    throw Error(ErrorCode::InvalidInput,
                "resultant_eliminate: input constant in the eliminated variable");

  const std::size_t size = static_cast<std::size_t>(m + n);
  std::vector<std::vector<Poly1>> syl(size, std::vector<Poly1>(size));
  for (int r = 0; r < n; ++r)
    for (int k = 0; k <= m; ++k)
      syl[static_cast<std::size_t>(r)][static_cast<std::size_t>(r + k)] =
          p.coeff_poly(eliminated, m - k);
  for (int r = 0; r < m; ++r)
    for (int k = 0; k <= n; ++k)
      syl[static_cast<std::size_t>(n + r)][static_cast<std::size_t>(r + k)] =
          q.coeff_poly(eliminated, n - k);
  return poly_determinant(syl);
}

}  // namespace ellipse::numeric
