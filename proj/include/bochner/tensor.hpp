#pragma once

/// @file tensor.hpp
/// Small fixed-dimension tensor algebra over jets: vectors, matrices,
/// Christoffel symbols, covariant and Lie derivatives in a coordinate chart.

#include <array>
#include <cmath>
#include <stdexcept>

#include "bochner/jet.hpp"

namespace bochner {

template <int D>
using VecJ = std::array<Jet, D>;
template <int D>
using MatJ = std::array<std::array<Jet, D>, D>;
/// gamma[k][i][j] = Gamma^k_ij.
template <int D>
using ChristoffelJ = std::array<MatJ<D>, D>;

using Point2 = std::array<double, 2>;
using Point3 = std::array<double, 3>;
using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat3 = std::array<std::array<double, 3>, 3>;

namespace tensor {

template <int D>
VecJ<D> constant_vec(const std::array<double, D>& v) {
  VecJ<D> r;
  for (int i = 0; i < D; ++i) r[i] = Jet(v[i]);
  return r;
}

template <int D>
std::array<double, D> values(const VecJ<D>& v) {
  std::array<double, D> r{};
  for (int i = 0; i < D; ++i) r[i] = v[i].value();
  return r;
}

template <int D>
VecJ<D> add(const VecJ<D>& a, const VecJ<D>& b) {
  VecJ<D> r;
  for (int i = 0; i < D; ++i) r[i] = a[i] + b[i];
  return r;
}

template <int D>
VecJ<D> sub(const VecJ<D>& a, const VecJ<D>& b) {
  VecJ<D> r;
  for (int i = 0; i < D; ++i) r[i] = a[i] - b[i];
  return r;
}

template <int D>
VecJ<D> scale(const Jet& s, const VecJ<D>& a) {
  VecJ<D> r;
  for (int i = 0; i < D; ++i) r[i] = s * a[i];
  return r;
}

/// Directional derivative X(f) = X^i d_i f.
template <int D>
Jet dir(const VecJ<D>& X, const Jet& f) {
  Jet r = X[0] * f.derivative(0);
  for (int i = 1; i < D; ++i) r += X[i] * f.derivative(i);
  return r;
}

template <int D>
VecJ<D> dir(const VecJ<D>& X, const VecJ<D>& Y) {
  VecJ<D> r;
  for (int k = 0; k < D; ++k) r[k] = dir<D>(X, Y[k]);
  return r;
}

template <int D>
Jet inner(const MatJ<D>& g, const VecJ<D>& X, const VecJ<D>& Y) {
  Jet r = Jet(0.0);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) r += g[i][j] * X[i] * Y[j];
  return r;
}

template <int D>
MatJ<D> matmul(const MatJ<D>& a, const MatJ<D>& b) {
  MatJ<D> r;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) {
      r[i][j] = Jet(0.0);
      for (int k = 0; k < D; ++k) r[i][j] += a[i][k] * b[k][j];
    }
  return r;
}

template <int D>
MatJ<D> transpose(const MatJ<D>& a) {
  MatJ<D> r;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) r[i][j] = a[j][i];
  return r;
}

template <int D>
VecJ<D> apply(const MatJ<D>& a, const VecJ<D>& v) {
  VecJ<D> r;
  for (int i = 0; i < D; ++i) {
    r[i] = Jet(0.0);
    for (int j = 0; j < D; ++j) r[i] += a[i][j] * v[j];
  }
  return r;
}

template <int D>
Jet det(const MatJ<D>& m) {
  if constexpr (D == 2) {
    return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  } else {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }
}

/// Inverse by cofactors; throws JetDomainError when singular.
template <int D>
MatJ<D> inverse(const MatJ<D>& m) {
  const Jet d = det<D>(m);
  double scale = 0.0;
  for (const auto& row : m)
    for (const auto& x : row) scale = std::max(scale, std::abs(x.value()));
  if (std::abs(d.value()) <= 1e-14 * std::pow(scale, D)) throw JetDomainError("singular matrix");
  const Jet inv_d = Jet::reciprocal(d);
  MatJ<D> r;
  if constexpr (D == 2) {
    r[0][0] = m[1][1] * inv_d;
    r[0][1] = -m[0][1] * inv_d;
    r[1][0] = -m[1][0] * inv_d;
    r[1][1] = m[0][0] * inv_d;
  } else {
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int i1 = (j + 1) % 3, i2 = (j + 2) % 3, j1 = (i + 1) % 3, j2 = (i + 2) % 3;
        r[i][j] = (m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]) * inv_d;
      }
  }
  return r;
}

/// Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij).
template <int D>
ChristoffelJ<D> christoffel(const MatJ<D>& g) {
  const MatJ<D> ginv = inverse<D>(g);
  std::array<MatJ<D>, D> dg;  // dg[l][i][j] = d_l g_ij
  for (int l = 0; l < D; ++l)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) dg[l][i][j] = g[i][j].derivative(l);
  ChristoffelJ<D> G;
  for (int k = 0; k < D; ++k)
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) {
        Jet s = Jet(0.0);
        for (int l = 0; l < D; ++l) s += ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
        G[k][i][j] = 0.5 * s;
        G[k][j][i] = G[k][i][j];
      }
  return G;
}

/// Covariant derivative nabla_X Y in coordinates.
template <int D>
VecJ<D> cov(const ChristoffelJ<D>& G, const VecJ<D>& X, const VecJ<D>& Y) {
  VecJ<D> r = dir<D>(X, Y);
  for (int k = 0; k < D; ++k)
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) r[k] += G[k][i][j] * X[i] * Y[j];
  return r;
}

/// Coordinate Lie bracket [X, Y] = X(Y) - Y(X).
template <int D>
VecJ<D> lie(const VecJ<D>& X, const VecJ<D>& Y) {
  return sub<D>(dir<D>(X, Y), dir<D>(Y, X));
}

/// Gradient covector d f as a vector through g^{-1}.
template <int D>
VecJ<D> gradient(const MatJ<D>& ginv, const Jet& f) {
  VecJ<D> df;
  for (int i = 0; i < D; ++i) df[i] = f.derivative(i);
  return apply<D>(ginv, df);
}

/// Divergence d_i X^i + Gamma^i_ik X^k.
template <int D>
Jet divergence(const ChristoffelJ<D>& G, const VecJ<D>& X) {
  Jet r = X[0].derivative(0);
  for (int i = 1; i < D; ++i) r += X[i].derivative(i);
  for (int i = 0; i < D; ++i)
    for (int k = 0; k < D; ++k) r += G[i][i][k] * X[k];
  return r;
}

}  // namespace tensor

}  // namespace bochner
