#pragma once

/// @file jet.hpp
/// Truncated multivariate Taylor polynomials ("jets") in up to three
/// variables. Every derivative in the library is computed with this type.
///
/// A jet of order n stores the coefficients c_m = (d^m f)(p) / m! for every
/// multi-index |m| <= n, densely, in graded order:
///
///   1, x, y, z, xx, xy, xz, yy, yz, zz, xxx, ...
///
/// Binary operations produce a jet whose order is the minimum of the operand
/// orders. Plain constants carry the maximal order so they never truncate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace bochner {

/// Raised when a primitive is evaluated outside its domain.
class JetDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

namespace detail {

inline constexpr int kMaxOrder = 4;
inline constexpr int kMaxVars = 3;
inline constexpr int kNumCoeffs = 35;  // C(kMaxOrder + 3, 3)

struct MultiIndexTables {
  std::array<std::array<std::int8_t, 3>, kNumCoeffs> index{};
  std::array<std::int8_t, kNumCoeffs> degree{};
  std::array<std::array<std::array<std::int8_t, kMaxOrder + 1>, kMaxOrder + 1>, kMaxOrder + 1> lookup{};
  std::array<std::array<std::int8_t, kNumCoeffs>, kNumCoeffs> product{};
  std::array<int, kMaxOrder + 2> count{};  // number of coefficients up to order n

  constexpr MultiIndexTables() {
    int k = 0;
    for (int d = 0; d <= kMaxOrder; ++d) {
      count[d] = k;
      for (int a = d; a >= 0; --a) {
        for (int b = d - a; b >= 0; --b) {
          const int c = d - a - b;
          index[k] = {static_cast<std::int8_t>(a), static_cast<std::int8_t>(b), static_cast<std::int8_t>(c)};
          degree[k] = static_cast<std::int8_t>(d);
          lookup[a][b][c] = static_cast<std::int8_t>(k);
          ++k;
        }
      }
    }
    // count[d] currently holds the offset of degree d; shift to cumulative sizes.
    for (int d = 0; d < kMaxOrder; ++d) count[d] = count[d + 1];
    count[kMaxOrder] = k;
    count[kMaxOrder + 1] = k;
    for (int i = 0; i < kNumCoeffs; ++i) {
      for (int j = 0; j < kNumCoeffs; ++j) {
        const int a = index[i][0] + index[j][0];
        const int b = index[i][1] + index[j][1];
        const int c = index[i][2] + index[j][2];
        product[i][j] = (a + b + c <= kMaxOrder) ? lookup[a][b][c] : std::int8_t{-1};
      }
    }
  }
};

inline constexpr MultiIndexTables kTables{};

/// Number of coefficients of a jet of the given order.
constexpr int coeff_count(int order) { return order < 0 ? 0 : kTables.count[order]; }

constexpr double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace detail

class Jet {
 public:
  static constexpr int kMaxOrder = detail::kMaxOrder;
  static constexpr int kMaxVars = detail::kMaxVars;
  static constexpr int kNumCoeffs = detail::kNumCoeffs;
  using MultiIndex = std::array<int, 3>;

  /// Exact constant.
  Jet(double value = 0.0) : order_(kMaxOrder), nvars_(1) { c_[0] = value; }  // NOLINT(google-explicit-constructor)

  static Jet constant(double value, int order, int nvars = 1) {
    Jet j(value);
    j.order_ = check_order(order);
    j.nvars_ = nvars;
    return j;
  }

  /// The coordinate function x_var expanded at `value`.
  static Jet variable(int var, double value, int order, int nvars = kMaxVars) {
    if (var < 0 || var >= kMaxVars) throw std::out_of_range("jet variable index out of range");
    Jet j = constant(value, order, std::max(nvars, var + 1));
    if (order >= 1) j.c_[1 + var] = 1.0;
    return j;
  }

  int order() const { return order_; }
  int nvars() const { return nvars_; }
  double value() const { return c_[0]; }

  /// Raw Taylor coefficient at graded position k.
  double coeff(int k) const { return c_[k]; }
  double& coeff(int k) { return c_[k]; }
  double coeff(const MultiIndex& m) const {
    const int d = m[0] + m[1] + m[2];
    if (d > order_) throw std::out_of_range("multi-index above jet order");
    return c_[detail::kTables.lookup[m[0]][m[1]][m[2]]];
  }

  /// Partial derivative d^m f at the expansion point.
  double partial(const MultiIndex& m) const {
    return coeff(m) * detail::factorial(m[0]) * detail::factorial(m[1]) * detail::factorial(m[2]);
  }
  double d(int i) const {
    MultiIndex m{0, 0, 0};
    m[i] += 1;
    return partial(m);
  }
  double d(int i, int j) const {
    MultiIndex m{0, 0, 0};
    m[i] += 1;
    m[j] += 1;
    return partial(m);
  }
  double d(int i, int j, int k) const {
    MultiIndex m{0, 0, 0};
    m[i] += 1;
    m[j] += 1;
    m[k] += 1;
    return partial(m);
  }

  Jet truncated(int order) const {
    Jet r = *this;
    r.order_ = std::min(order_, check_order(order));
    for (int k = detail::coeff_count(r.order_); k < kNumCoeffs; ++k) r.c_[k] = 0.0;
    return r;
  }

  /// d/dx_var; the result has one order less.
  Jet derivative(int var) const {
    if (order_ < 1) throw std::logic_error("cannot differentiate an order-0 jet");
    Jet r;
    r.order_ = order_ - 1;
    r.nvars_ = nvars_;
    const auto& t = detail::kTables;
    for (int k = 0; k < detail::coeff_count(r.order_); ++k) {
      MultiIndex m{t.index[k][0], t.index[k][1], t.index[k][2]};
      m[var] += 1;
      r.c_[k] = m[var] * c_[t.lookup[m[0]][m[1]][m[2]]];
    }
    return r;
  }

  /// Integral from 0 along x_var; gains one order (capped at kMaxOrder).
  Jet integral(int var) const {
    Jet r;
    r.order_ = std::min(order_ + 1, kMaxOrder);
    r.nvars_ = std::max(nvars_, var + 1);
    r.c_[0] = 0.0;
    const auto& t = detail::kTables;
    for (int k = 1; k < detail::coeff_count(r.order_); ++k) {
      MultiIndex m{t.index[k][0], t.index[k][1], t.index[k][2]};
      if (m[var] == 0) continue;
      const int mv = m[var];
      m[var] -= 1;
      r.c_[k] = c_[t.lookup[m[0]][m[1]][m[2]]] / mv;
    }
    return r;
  }

  /// Restriction to the hyperplane x_var = 0 (drops every term containing x_var).
  Jet restricted(int var) const {
    Jet r = *this;
    const auto& t = detail::kTables;
    for (int k = 1; k < kNumCoeffs; ++k)
      if (t.index[k][var] != 0) r.c_[k] = 0.0;
    return r;
  }

  Jet operator-() const {
    Jet r = *this;
    for (double& x : r.c_) x = -x;
    return r;
  }

  Jet& operator+=(const Jet& o) {
    merge_meta(o);
    for (int k = 0; k < kNumCoeffs; ++k) c_[k] += o.c_[k];
    clear_above_order();
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    merge_meta(o);
    for (int k = 0; k < kNumCoeffs; ++k) c_[k] -= o.c_[k];
    clear_above_order();
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    if (s == 0.0) throw JetDomainError("division by zero");
    for (double& x : c_) x /= s;
    return *this;
  }
  Jet& operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
  }
  Jet& operator/=(const Jet& o) {
    *this = *this / o;
    return *this;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    r.order_ = std::min(a.order_, b.order_);
    r.nvars_ = std::max(a.nvars_, b.nvars_);
    r.c_[0] = 0.0;
    const auto& t = detail::kTables;
    const int na = detail::coeff_count(r.order_);
    for (int i = 0; i < na; ++i) {
      const double ai = a.c_[i];
      if (ai == 0.0) continue;
      const int nb = detail::coeff_count(r.order_ - t.degree[i]);
      for (int j = 0; j < nb; ++j) r.c_[t.product[i][j]] += ai * b.c_[j];
    }
    return r;
  }
  friend Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) { return -a + s; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  friend Jet operator/(double s, const Jet& a) { return reciprocal(a) * s; }

  /// f(a) for a scalar function given by its derivatives f^(k)(a.value()), k = 0..order.
  static Jet compose_univariate(const Jet& a, std::span<const double> derivs) {
    Jet h = a;
    h.c_[0] = 0.0;
    Jet r = constant(derivs[0], a.order_, a.nvars_);
    Jet power = h;
    for (int k = 1; k <= a.order_; ++k) {
      if (k > 1) power = power * h;
      const double w = derivs[k] / detail::factorial(k);
      if (w != 0.0)
        for (int i = 0; i < kNumCoeffs; ++i) r.c_[i] += w * power.c_[i];
    }
    return r;
  }

  static Jet reciprocal(const Jet& a) {
    const double x = a.value();
    if (x == 0.0) throw JetDomainError("division by zero");
    std::array<double, kMaxOrder + 1> d{};
    double p = 1.0 / x;
    for (int k = 0; k <= kMaxOrder; ++k) {
      d[k] = ((k % 2) ? -1.0 : 1.0) * detail::factorial(k) * p;
      p /= x;
    }
    return compose_univariate(a, d);
  }

 private:
  static int check_order(int order) {
    if (order < 0 || order > kMaxOrder) throw std::out_of_range("jet order out of range");
    return order;
  }
  void merge_meta(const Jet& o) {
    order_ = std::min(order_, o.order_);
    nvars_ = std::max(nvars_, o.nvars_);
  }
  void clear_above_order() {
    for (int k = detail::coeff_count(order_); k < kNumCoeffs; ++k) c_[k] = 0.0;
  }

  std::array<double, kNumCoeffs> c_{};
  int order_;
  int nvars_;
};

// ---------------------------------------------------------------------------
// Primitives

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const std::array<double, 5> d{s, c, -s, -c, s};
  return Jet::compose_univariate(a, d);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value()), c = std::cos(a.value());
  const std::array<double, 5> d{c, -s, -c, s, c};
  return Jet::compose_univariate(a, d);
}

inline Jet tan(const Jet& a) {
  if (std::cos(a.value()) == 0.0) throw JetDomainError("tan at a pole");
  return sin(a) / cos(a);
}

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.value());
  const std::array<double, 5> d{e, e, e, e, e};
  return Jet::compose_univariate(a, d);
}

inline Jet log(const Jet& a) {
  const double x = a.value();
  if (!(x > 0.0)) throw JetDomainError("log of a nonpositive value");
  const std::array<double, 5> d{std::log(x), 1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x), -6.0 / (x * x * x * x)};
  return Jet::compose_univariate(a, d);
}

/// a^p for real p; the base must be positive.
inline Jet pow(const Jet& a, double p) {
  const double x = a.value();
  if (!(x > 0.0)) throw JetDomainError("non-integer power of a nonpositive value");
  std::array<double, 5> d{};
  double coef = 1.0;
  for (int k = 0; k <= Jet::kMaxOrder; ++k) {
    d[k] = coef * std::pow(x, p - k);
    coef *= (p - k);
  }
  return Jet::compose_univariate(a, d);
}

/// a^n by repeated squaring; exact for polynomial inputs.
inline Jet pow(const Jet& a, int n) {
  if (n < 0) return Jet::reciprocal(pow(a, -n));
  Jet result = Jet::constant(1.0, a.order(), a.nvars());
  Jet base = a;
  while (n > 0) {
    if (n & 1) result = result * base;
    n >>= 1;
    if (n) base = base * base;
  }
  return result;
}

inline Jet sqrt(const Jet& a) {
  if (!(a.value() > 0.0)) throw JetDomainError("sqrt of a nonpositive value");
  return pow(a, 0.5);
}

inline Jet atan(const Jet& a) {
  const double t = a.value();
  const double q = 1.0 + t * t;
  const std::array<double, 5> d{std::atan(t), 1.0 / q, -2.0 * t / (q * q), (6.0 * t * t - 2.0) / (q * q * q),
                                24.0 * t * (1.0 - t * t) / (q * q * q * q)};
  return Jet::compose_univariate(a, d);
}

/// Branch of atan2 continuous around the expansion point.
inline Jet atan2(const Jet& y, const Jet& x) {
  const double y0 = y.value(), x0 = x.value();
  if (x0 == 0.0 && y0 == 0.0) throw JetDomainError("atan2 at the origin");
  // atan2(y, x) - atan2(y0, x0) = atan(cross / dot) near the base point.
  Jet num = x0 * y - y0 * x;
  Jet den = x0 * x + y0 * y;
  return atan(num / den) + std::atan2(y0, x0);
}

// ---------------------------------------------------------------------------
// Composition and inversion of jet maps

/// outer(inner(t)) where `outer` is expanded at inner(t0).
/// Only the first `outer.nvars()` inner jets are read.
inline Jet compose(const Jet& outer, std::span<const Jet> inner) {
  const int nv = std::min<int>(static_cast<int>(inner.size()), Jet::kMaxVars);
  int order = outer.order();
  int nvars = 1;
  for (int v = 0; v < nv; ++v) {
    order = std::min(order, inner[v].order());
    nvars = std::max(nvars, inner[v].nvars());
  }
  std::array<std::array<Jet, Jet::kMaxOrder + 1>, Jet::kMaxVars> powers;
  for (int v = 0; v < nv; ++v) {
    Jet delta = inner[v].truncated(order);
    delta.coeff(0) = 0.0;
    powers[v][0] = Jet::constant(1.0, order, nvars);
    for (int p = 1; p <= order; ++p) powers[v][p] = (p == 1) ? delta : powers[v][p - 1] * delta;
  }
  const auto& t = detail::kTables;
  Jet result = Jet::constant(0.0, order, nvars);
  for (int k = 0; k < detail::coeff_count(order); ++k) {
    const double ck = outer.coeff(k);
    if (ck == 0.0) continue;
    const int m0 = t.index[k][0], m1 = t.index[k][1], m2 = t.index[k][2];
    if ((m0 && nv < 1) || (m1 && nv < 2) || (m2 && nv < 3)) continue;
    Jet term = Jet::constant(ck, order, nvars);
    if (m0) term = term * powers[0][m0];
    if (m1) term = term * powers[1][m1];
    if (m2) term = term * powers[2][m2];
    result += term;
  }
  return result;
}

/// Inverse of a square jet map t -> y given as three jets in t around t0.
/// Returns jets of t in the variables y around y0 = map(t0).
inline std::array<Jet, 3> invert(const std::array<Jet, 3>& map, const std::array<double, 3>& t0) {
  int order = Jet::kMaxOrder;
  for (const auto& m : map) order = std::min(order, m.order());
  if (order < 1) throw std::logic_error("map inversion needs order >= 1 jets");
  double a[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = map[i].d(j);
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  double scale = 0.0;
  for (auto& row : a)
    for (double x : row) scale = std::max(scale, std::abs(x));
  if (std::abs(det) <= 1e-14 * scale * scale * scale) throw JetDomainError("singular Jacobian in map inversion");
  double inv[3][3];
  inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
  inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
  inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
  inv[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
  inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
  inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
  inv[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
  inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
  inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;

  std::array<Jet, 3> y;
  for (int i = 0; i < 3; ++i) y[i] = Jet::variable(i, map[i].value(), order);
  std::array<Jet, 3> t;
  for (int i = 0; i < 3; ++i) {
    t[i] = Jet::constant(t0[i], order);
    for (int j = 0; j < 3; ++j) t[i] += inv[i][j] * (y[j] - map[j].value());
  }
  // Each sweep fixes one more order of the inverse series.
  for (int sweep = 1; sweep < order; ++sweep) {
    std::array<Jet, 3> residual;
    for (int i = 0; i < 3; ++i) residual[i] = y[i] - compose(map[i], t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) t[i] += inv[i][j] * residual[j];
  }
  return t;
}

}  // namespace bochner
