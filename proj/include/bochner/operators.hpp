#pragma once

/// @file operators.hpp
/// Covariant derivatives, div, curl/rot, brackets, Laplacians and the
/// special-field residuals, for ambient fields u (frame components near M)
/// and surface fields v (frame components on M).

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "bochner/geometry.hpp"

namespace bochner {

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

// ---------------------------------------------------------------------------
// Fields

class AmbientField {
 public:
  virtual ~AmbientField() = default;
  /// Frame components u^1, u^2, u^3 as y-jets around p.
  virtual std::array<Jet, 3> components(const SamplePoint& p, int order) const = 0;
};

class SurfaceField {
 public:
  virtual ~SurfaceField() = default;
  /// Frame components v^1, v^2 as z-jets around z.
  virtual std::array<Jet, 2> components(const Point2& z, int order) const = 0;
};

/// u^j given by closed-form expressions of y.
class ClosedFormAmbientField : public AmbientField {
 public:
  explicit ClosedFormAmbientField(SmoothMap u) : u_(std::move(u)) {
    if (u_.domain_dim() != 3 || u_.codomain_dim() != 3) throw std::invalid_argument("ambient field needs 3 components in y");
  }
  std::array<Jet, 3> components(const SamplePoint& p, int order) const override {
    auto v = u_.eval_jet(p.y, order);
    return {v[0], v[1], v[2]};
  }

 private:
  SmoothMap u_;
};

/// Field given by coordinate components U^i d/dy_i, converted to frame components.
class CoordinateAmbientField : public AmbientField {
 public:
  CoordinateAmbientField(std::shared_ptr<const Geometry> geo, SmoothMap U) : geo_(std::move(geo)), U_(std::move(U)) {}
  std::array<Jet, 3> components(const SamplePoint& p, int order) const override {
    const FrameJets F = geo_->jets(p, order);
    auto v = U_.eval_jet(p.y, order);
    return F.to_frame({v[0], v[1], v[2]});
  }

 private:
  std::shared_ptr<const Geometry> geo_;
  SmoothMap U_;
};

/// v^j given by closed-form expressions of z.
class ClosedFormSurfaceField : public SurfaceField {
 public:
  explicit ClosedFormSurfaceField(SmoothMap v) : v_(std::move(v)) {
    if (v_.domain_dim() != 2 || v_.codomain_dim() != 2) throw std::invalid_argument("surface field needs 2 components in z");
  }
  std::array<Jet, 2> components(const Point2& z, int order) const override {
    auto v = v_.eval_jet(z, order);
    return {v[0], v[1]};
  }

 private:
  SmoothMap v_;
};

/// Restriction v^j(z) = u^j(f(z)) of an ambient field.
class RestrictedSurfaceField : public SurfaceField {
 public:
  RestrictedSurfaceField(std::shared_ptr<const Geometry> geo, std::shared_ptr<const AmbientField> u)
      : geo_(std::move(geo)), u_(std::move(u)) {}
  std::array<Jet, 2> components(const Point2& z, int order) const override {
    const auto f = geo_->surface().embed_jets(z, order);
    const auto U = u_->components(geo_->on_surface(z), order);
    return {compose(U[0], f), compose(U[1], f)};
  }

 private:
  std::shared_ptr<const Geometry> geo_;
  std::shared_ptr<const AmbientField> u_;
};

/// A field given in the frame of `from`, re-expressed in the frame of `to` (same surface and metric).
class ReframedField : public AmbientField {
 public:
  ReframedField(std::shared_ptr<const Geometry> from, std::shared_ptr<const AmbientField> u,
                std::shared_ptr<const Geometry> to)
      : from_(std::move(from)), u_(std::move(u)), to_(std::move(to)) {}
  std::array<Jet, 3> components(const SamplePoint& p, int order) const override {
    const FrameJets A = from_->jets(p, order);
    const FrameJets B = to_->jets(p, order);
    const auto U = u_->components(p, order);
    return B.to_frame(A.from_frame(U));
  }

 private:
  std::shared_ptr<const Geometry> from_;
  std::shared_ptr<const AmbientField> u_;
  std::shared_ptr<const Geometry> to_;
};

// ---------------------------------------------------------------------------
// Evaluation contexts

/// Frame jets, frame scalars and field jets at one ambient point.
struct AmbientContext {
  FrameJets F;
  FrameScalarJets s;
  std::array<Jet, 3> U;
  VecJ<3> u;

  AmbientContext(const Geometry& geo, const AmbientField& field, const SamplePoint& p, int order)
      : F(geo.jets(p, order)), s(frame_scalar_jets(F)), U(field.components(p, order)), u(F.from_frame(U)) {}
  AmbientContext(FrameJets frame, std::array<Jet, 3> comps)
      : F(std::move(frame)), s(frame_scalar_jets(F)), U(std::move(comps)), u(F.from_frame(U)) {}
};

/// Surface jets, intrinsic scalars and field jets at one surface point.
struct SurfaceContext {
  SurfaceJets S;
  IntrinsicData I;
  std::array<Jet, 2> V;
  VecJ<2> v;

  SurfaceContext(const Geometry& geo, const SurfaceField& field, const Point2& z, int order)
      : S(geo.surface_jets(z, order)), I(intrinsic_data(S)), V(field.components(z, order)), v(S.from_frame(V)) {}
};

namespace ops {

inline Vec3 values(const std::array<Jet, 3>& a) { return {a[0].value(), a[1].value(), a[2].value()}; }
inline Vec2 values(const std::array<Jet, 2>& a) { return {a[0].value(), a[1].value()}; }

inline double norm(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }
inline Vec3 minus(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec2 minus(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }

// ---- ambient --------------------------------------------------------------

/// nabla_X u in frame components, X given by frame components: X(u^i) + u^j omega_ij(X).
inline std::array<Jet, 3> covariant_derivative(const AmbientContext& c, const std::array<Jet, 3>& X) {
  const VecJ<3> Xc = c.F.from_frame(X);
  std::array<Jet, 3> r;
  for (int i = 0; i < 3; ++i) {
    r[i] = c.F.along(Xc, c.U[i]);
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i] += c.U[j] * X[k] * c.s.omega[i][j][k];
  }
  return r;
}

inline std::array<Jet, 3> covariant_derivative(const AmbientContext& c, int a) {
  std::array<Jet, 3> X{Jet(0.0), Jet(0.0), Jet(0.0)};
  X[a] = Jet(1.0);
  return covariant_derivative(c, X);
}

/// Same quantity through coordinate Christoffel symbols.
inline Vec3 covariant_derivative_coord(const AmbientContext& c, int a) {
  return values(c.F.to_frame(c.F.cov(c.F.b[a], c.u)));
}

/// q + u^3 X3 + gamma3 (u^2 b^1 - u^1 b^2) + rho b^3.
inline Vec3 normal_derivative_split(const AmbientContext& c) {
  const double u1 = c.U[0].value(), u2 = c.U[1].value(), u3 = c.U[2].value();
  const double a1 = c.s.alpha[0].value(), a2 = c.s.alpha[1].value(), g3 = c.s.gamma[2].value();
  const double q1 = c.F.along(2, c.U[0]).value(), q2 = c.F.along(2, c.U[1]).value();
  const double rho = c.F.along(2, c.U[2]).value() - a1 * u1 - a2 * u2;
  return {q1 + u3 * a1 + g3 * u2, q2 + u3 * a2 - g3 * u1, rho};
}

/// Divergence by the frame expansion, as a jet.
inline Jet div_frame(const AmbientContext& c) {
  const auto& s = c.s;
  return -(s.gamma[1] + s.alpha[0]) * c.U[0] + (s.gamma[0] - s.alpha[1]) * c.U[1] - (s.t[0][0] + s.t[1][1]) * c.U[2] +
         c.F.along(0, c.U[0]) + c.F.along(1, c.U[1]) + c.F.along(2, c.U[2]);
}

/// Coordinate divergence d_i u^i + Gamma^i_ik u^k.
inline Jet div_coord(const AmbientContext& c) { return tensor::divergence<3>(c.F.gamma, c.u); }

/// du(b^a, b^c) = b^a(u^c) - b^c(u^a) - u([b^a, b^c]).
inline double du(const AmbientContext& c, int a, int b) {
  const VecJ<3> br = tensor::lie<3>(c.F.b[a], c.F.b[b]);
  return c.F.along(a, c.U[b]).value() - c.F.along(b, c.U[a]).value() - c.F.inner(c.u, br).value();
}

/// curl u in frame components (orientation of the frame).
inline Vec3 curl(const AmbientContext& c) { return {du(c, 1, 2), du(c, 2, 0), du(c, 0, 1)}; }

/// [u, w] = nabla_u w - nabla_w u in frame components.
inline Vec3 bracket(const AmbientContext& u, const AmbientContext& w) {
  auto a = covariant_derivative(w, u.U);
  auto b = covariant_derivative(u, w.U);
  return {a[0].value() - b[0].value(), a[1].value() - b[1].value(), a[2].value() - b[2].value()};
}

/// Coordinate Lie bracket in frame components.
inline Vec3 bracket_coord(const AmbientContext& u, const AmbientContext& w) {
  return values(u.F.to_frame(tensor::lie<3>(u.u, w.u)));
}

/// Delta_B u = sum_i nabla_{b^i} nabla_{b^i} u - nabla_{nabla_{b^i} b^i} u, frame components.
inline Vec3 laplacian_bochner(const AmbientContext& c) {
  VecJ<3> acc{Jet(0.0), Jet(0.0), Jet(0.0)};
  for (int i = 0; i < 3; ++i) {
    const VecJ<3> inner = c.F.cov(c.F.b[i], c.u);
    acc = tensor::add<3>(acc, c.F.cov(c.F.b[i], inner));
    acc = tensor::sub<3>(acc, c.F.cov(c.F.cov(c.F.b[i], c.F.b[i]), c.u));
  }
  return values(c.F.to_frame(acc));
}

/// Ambient Ricci action on u in frame components.
inline Vec3 ricci_action(const FrameData& d, const Vec3& u) {
  Vec3 r{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) r[a] += d.ricci[a][b] * u[b];
  return r;
}

// ---- surface --------------------------------------------------------------

/// nabla_{b_z^a} v in frame components (coordinate route).
inline std::array<Jet, 2> nabla_surface(const SurfaceContext& c, const VecJ<2>& X) {
  return c.S.to_frame(c.S.cov(X, c.v));
}

inline Jet div_surface_frame(const SurfaceContext& c) {
  const double g1 = c.I.omega12[0], g2 = c.I.omega12[1];
  return -g2 * c.V[0] + g1 * c.V[1] + c.S.along(0, c.V[0]) + c.S.along(1, c.V[1]);
}

inline Jet div_surface_coord(const SurfaceContext& c) { return tensor::divergence<2>(c.S.gamma, c.v); }

/// rot v = dv(b_z^1, b_z^2).
inline double rot_surface(const SurfaceContext& c) {
  const VecJ<2> br = tensor::lie<2>(c.S.b[0], c.S.b[1]);
  return c.S.along(0, c.V[1]).value() - c.S.along(1, c.V[0]).value() - c.S.inner(c.v, br).value();
}

/// Intrinsic Bochner Laplacian as frame-component jets.
inline std::array<Jet, 2> laplacian_bochner_surface_jets(const SurfaceContext& c) {
  VecJ<2> acc{Jet(0.0), Jet(0.0)};
  for (int a = 0; a < 2; ++a) {
    acc = tensor::add<2>(acc, c.S.cov(c.S.b[a], c.S.cov(c.S.b[a], c.v)));
    acc = tensor::sub<2>(acc, c.S.cov(c.S.cov(c.S.b[a], c.S.b[a]), c.v));
  }
  return c.S.to_frame(acc);
}

enum class SurfaceLaplacian { Bochner, Hodge, Symmetric };

inline Vec2 laplacian_surface(const SurfaceContext& c, SurfaceLaplacian kind) {
  const Vec2 lb = values(laplacian_bochner_surface_jets(c));
  const Vec2 v = values(c.V);
  const double k = c.I.Omega12;
  switch (kind) {
    case SurfaceLaplacian::Bochner:
      return lb;
    case SurfaceLaplacian::Hodge:
      return {lb[0] - k * v[0], lb[1] - k * v[1]};
    case SurfaceLaplacian::Symmetric: {
      const Jet dv = div_surface_coord(c);
      return {lb[0] + c.S.along(0, dv).value() + k * v[0], lb[1] + c.S.along(1, dv).value() + k * v[1]};
    }
  }
  return lb;
}

/// Generic operator Delta_B v + beta kappa v; |beta| <= 1 is expected but not enforced.
inline Vec2 laplacian_surface(const SurfaceContext& c, double beta) {
  const Vec2 lb = values(laplacian_bochner_surface_jets(c));
  const Vec2 v = values(c.V);
  return {lb[0] + beta * c.I.Omega12 * v[0], lb[1] + beta * c.I.Omega12 * v[1]};
}

/// Deformation tensor Sigma v (b^a, b^c) = g(nabla_a v, b^c) + g(nabla_c v, b^a).
inline Mat2 deformation(const SurfaceContext& c) {
  std::array<Vec2, 2> nv;
  for (int a = 0; a < 2; ++a) nv[a] = values(nabla_surface(c, c.S.b[a]));
  Mat2 r{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) r[a][b] = nv[a][b] + nv[b][a];
  return r;
}

/// -L v + nabla_v v + grad(g(v, v) / 2), frame components.
inline Vec2 steady_ns_residual(const SurfaceContext& c) {
  const Vec2 L = laplacian_surface(c, SurfaceLaplacian::Symmetric);
  const Vec2 conv = values(nabla_surface(c, c.v));
  const Jet e = 0.5 * c.S.inner(c.v, c.v);
  return {-L[0] + conv[0] + c.S.along(0, e).value(), -L[1] + conv[1] + c.S.along(1, e).value()};
}

struct SpecialResiduals {
  double parallel = 0;       // |nabla v|
  double harmonic = 0;       // |Delta_H v|
  double closed_coclosed = 0;  // |dv| + |div v|
  double killing = 0;        // |Sigma v|
};

inline SpecialResiduals special_residuals(const SurfaceContext& c) {
  SpecialResiduals r;
  double p = 0.0;
  for (int a = 0; a < 2; ++a) {
    const Vec2 n = values(nabla_surface(c, c.S.b[a]));
    p += n[0] * n[0] + n[1] * n[1];
  }
  r.parallel = std::sqrt(p);
  r.harmonic = norm(laplacian_surface(c, SurfaceLaplacian::Hodge));
  r.closed_coclosed = std::abs(rot_surface(c)) + std::abs(div_surface_coord(c).value());
  const Mat2 s = deformation(c);
  r.killing = std::sqrt(s[0][0] * s[0][0] + s[0][1] * s[0][1] + s[1][0] * s[1][0] + s[1][1] * s[1][1]);
  return r;
}

}  // namespace ops

}  // namespace bochner
