#pragma once

/// @file decomposition.hpp
/// Tangential and normal parts of the ambient Bochner Laplacian of an
/// extended field on M, the auxiliary tensors they are built from, and the
/// intermediate second-derivative identities as separate residuals.
///
/// Frame-basis conventions: 2-vectors are components on b^1, b^2 (equivalently
/// b_z^1, b_z^2 on M); K = [[0, 1], [-1, 0]] so that K v = (v^2, -v^1);
/// covectors act by the Euclidean pairing in these components.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bochner/extension.hpp"
#include "bochner/operators.hpp"

namespace bochner {

/// Debug switches that flip the sign of one term in B_t or B_n.
enum Mutation : unsigned {
  kMutateNone = 0,
  kMutateNq = 1u << 0,
  kMutateEv = 1u << 1,
  kMutateRhoX3 = 1u << 2,
  kMutateSadjX3v = 1u << 3,
  kMutateKwq = 1u << 4,
};

inline unsigned parse_mutation(const std::string& name) {
  static const std::map<std::string, unsigned> names{
      {"none", kMutateNone},       {"Nq", kMutateNq},         {"Ev", kMutateEv},
      {"rhoX3", kMutateRhoX3},     {"SadjX3v", kMutateSadjX3v}, {"Kwq", kMutateKwq}};
  auto it = names.find(name);
  if (it == names.end()) throw std::invalid_argument("unknown mutation '" + name + "'");
  return it->second;
}

inline const std::vector<std::string>& mutation_names() {
  static const std::vector<std::string> n{"Nq", "Ev", "rhoX3", "SadjX3v", "Kwq"};
  return n;
}

namespace dec {

inline Vec2 add(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 sub(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 mul(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }
inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline Vec2 apply(const Mat2& m, const Vec2& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}
inline double form(const Mat2& m, const Vec2& a, const Vec2& b) { return dot(a, apply(m, b)); }
inline Vec2 Kof(const Vec2& v) { return {v[1], -v[0]}; }
inline Mat2 lin(double a, const Mat2& A, double b, const Mat2& B) {
  Mat2 r{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r[i][j] = a * A[i][j] + b * B[i][j];
  return r;
}
inline const Mat2 kI{{{1.0, 0.0}, {0.0, 1.0}}};
inline const Mat2 kK{{{0.0, 1.0}, {-1.0, 0.0}}};

}  // namespace dec

/// Auxiliary tensors at a point of M.
struct AuxTensors {
  Point2 z{};
  double H = 0, kappa = 0, gamma3 = 0, b3_gamma3 = 0, g_X3_w = 0;
  Mat2 S{}, K{}, S_adj{}, P{}, N{}, Q{}, E0{}, E1{}, E2{}, E{};
  Vec2 w{}, Kw{}, X3{}, ell{}, q{}, v{}, Kv{};
  Vec2 T0{}, T1{}, T2{}, T{}, T_div{}, T_div_c{};
  double rho = 0, sigma = 0, sigma_hat = 0, div_v = 0, rot_v = 0;
  Vec3 d{}, m{};
};

struct Decomposition {
  Vec2 B_t{};
  double B_n = 0;
};

/// Everything evaluated at one point of M for one frame and one extension.
class PointEvaluation {
 public:
  PointEvaluation(const Geometry& geo, const AmbientField& u, const SurfaceField& v, const Point2& z)
      : z_(z),
        order_(std::min(3, geo.max_order())),
        amb_(geo, u, geo.on_surface(z), order_),
        surf_(geo, v, z, std::min(2, order_)),
        fd_(frame_data(amb_.F, amb_.s)) {
    build();
  }

  const AmbientContext& ambient() const { return amb_; }
  const SurfaceContext& surface() const { return surf_; }
  const FrameData& frame() const { return fd_; }
  const AuxTensors& aux() const { return a_; }
  const Vec3& laplacian_u() const { return lap_u_; }
  const Vec2& laplacian_v() const { return lap_v_; }
  double div_u() const { return div_u_; }

  /// Delta_B v + kappa v - 2H S v.
  Vec2 intrinsic_part() const {
    return dec::sub(dec::add(lap_v_, dec::mul(a_.kappa, a_.v)), dec::mul(2 * a_.H, dec::apply(a_.S, a_.v)));
  }

  Decomposition general(unsigned mutation = kMutateNone) const {
    const auto& a = a_;
    auto sg = [&](unsigned m) { return (mutation & m) ? -1.0 : 1.0; };
    Decomposition r;
    Vec2 bt = intrinsic_part();
    bt = dec::add(bt, dec::mul(sg(kMutateEv), dec::apply(a.E, a.v)));
    bt = dec::add(bt, dec::mul(sg(kMutateRhoX3) * 2 * a.rho, a.X3));
    bt = dec::add(bt, {a.d[0], a.d[1]});
    bt = dec::add(bt, dec::mul(sg(kMutateNq), dec::apply(a.N, a.q)));
    r.B_t = bt;
    r.B_n = 2 * a.sigma + 2 * dec::form(a.S, a.w, a.Kv) - dec::form(a.S, a.X3, a.v) + dec::dot(a.T, a.v) + a.d[2] -
            2 * dec::dot(a.X3, a.q) - 2 * a.H * a.rho;
    return r;
  }

  /// Route for divergence-free extensions; `compatible` selects sigma-hat and T_div,c.
  Decomposition divfree(bool compatible = false, unsigned mutation = kMutateNone) const {
    const auto& a = a_;
    auto sg = [&](unsigned m) { return (mutation & m) ? -1.0 : 1.0; };
    Decomposition r;
    Vec2 bt = intrinsic_part();
    bt = dec::add(bt, dec::mul(sg(kMutateEv), dec::apply(a.E, a.v)));
    bt = dec::add(bt, dec::mul(sg(kMutateRhoX3) * -2 * a.div_v, a.X3));
    bt = dec::add(bt, {a.d[0], a.d[1]});
    bt = dec::add(bt, dec::mul(sg(kMutateNq), dec::apply(a.N, a.q)));
    r.B_t = bt;
    const double sig = compatible ? a.sigma_hat : a.sigma;
    const Vec2& Td = compatible ? a.T_div_c : a.T_div;
    r.B_n = 2 * sig + a.gamma3 * (a.Q[1][0] - a.Q[0][1]) + 2 * dec::form(a.S, a.w, a.Kv) +
            sg(kMutateSadjX3v) * dec::form(a.S_adj, a.X3, a.v) + dec::dot(Td, a.v) - a.m[0] - a.m[1] +
            sg(kMutateKwq) * dec::dot(a.Kw, a.q);
    return r;
  }

  /// |Delta_B u - B_t - B_n b^3| in the orthonormal frame.
  double residual(const Decomposition& d) const {
    return std::sqrt(std::pow(lap_u_[0] - d.B_t[0], 2) + std::pow(lap_u_[1] - d.B_t[1], 2) +
                     std::pow(lap_u_[2] - d.B_n, 2));
  }

  /// Left minus right side of each second-derivative identity.
  std::map<std::string, double> lemma_residuals() const {
    const auto& a = a_;
    const auto& F = amb_.F;
    std::map<std::string, double> out;
    // nabla_X u with X = nabla_{b1} b1 + nabla_{b2} b2.
    const VecJ<3> X = tensor::add<3>(F.cov(F.b[0], F.b[0]), F.cov(F.b[1], F.b[1]));
    const Vec3 lhs1 = ops::values(F.to_frame(F.cov(X, amb_.u)));
    const Vec2 nKw = ops::values(ops::nabla_surface(surf_, surf_.S.from_frame({Jet(a.Kw[0]), Jet(a.Kw[1])})));
    const Vec2 t1 = dec::add(nKw, dec::mul(2 * a.H, dec::add(a.q, dec::mul(a.gamma3, a.Kv))));
    const Vec3 rhs1{t1[0], t1[1], 2 * a.H * a.rho + dec::form(a.S, a.Kw, a.v)};
    out["covariant_X"] = ops::norm(ops::minus(lhs1, rhs1));

    VecJ<3> second{Jet(0.0), Jet(0.0), Jet(0.0)};
    for (int i = 0; i < 2; ++i) second = tensor::add<3>(second, F.cov(F.b[i], F.cov(F.b[i], amb_.u)));
    const Vec3 lhs2 = ops::values(F.to_frame(second));
    const Vec2 base = intrinsic_part();
    const Vec2 t2 = dec::add(base, nKw);
    const Vec3 rhs2{t2[0], t2[1],
                    2 * a.sigma + dec::dot(a.T0, a.v) + dec::form(a.S, a.Kw, a.v) + 2 * dec::form(a.S, a.w, a.Kv)};
    out["second_tangential"] = ops::norm(ops::minus(lhs2, rhs2));

    const Vec3 lhs3 = ops::minus(lhs2, lhs1);
    const Vec2 t3 = dec::sub(dec::sub(dec::add(lap_v_, dec::mul(a.kappa, a.v)),
                                      dec::mul(2 * a.H, dec::apply(a.S, a.v))),
                             dec::mul(2 * a.H, dec::add(a.q, dec::mul(a.gamma3, a.Kv))));
    const Vec3 rhs3{t3[0], t3[1],
                    2 * a.sigma + dec::dot(a.T0, a.v) + 2 * dec::form(a.S, a.w, a.Kv) - 2 * a.H * a.rho};
    out["hessian_tangential"] = ops::norm(ops::minus(lhs3, rhs3));

    const VecJ<3> nn = F.cov(F.b[2], F.cov(F.b[2], amb_.u));
    const Vec3 lhs4 = ops::values(F.to_frame(nn));
    const Vec2 X3v{a.X3[0] * a.Q[0][0] + a.X3[1] * a.Q[1][0], a.X3[0] * a.Q[0][1] + a.X3[1] * a.Q[1][1]};
    Vec2 t4 = dec::add({a.d[0] + X3v[0], a.d[1] + X3v[1]}, dec::mul(2 * a.gamma3, dec::Kof(a.q)));
    t4 = dec::add(t4, dec::add(dec::mul(2 * a.rho, a.X3), dec::apply(a.E1, a.v)));
    const Vec3 rhs4{t4[0], t4[1], a.d[2] + dec::dot(a.T2, a.v) - 2 * dec::dot(a.X3, a.q)};
    out["second_normal"] = ops::norm(ops::minus(lhs4, rhs4));

    const Jet rho = F.along(2, amb_.U[2]) - amb_.s.alpha[0] * amb_.U[0] - amb_.s.alpha[1] * amb_.U[1];
    const double b3rho = F.along(2, rho).value();
    out["normal_rho"] = std::abs(b3rho - (a.d[2] - dec::dot(a.T1, a.v) - dec::dot(a.X3, a.q)));

    const VecJ<3> hess = tensor::sub<3>(nn, F.cov(F.cov(F.b[2], F.b[2]), amb_.u));
    const Vec3 lhs6 = ops::values(F.to_frame(hess));
    Vec2 t6 = dec::add({a.d[0], a.d[1]}, dec::mul(2 * a.gamma3, dec::Kof(a.q)));
    t6 = dec::add(t6, dec::add(dec::mul(2 * a.rho, a.X3), dec::apply(a.E2, a.v)));
    const Vec3 rhs6{t6[0], t6[1],
                    a.d[2] + dec::dot(a.T2, a.v) - 2 * dec::dot(a.X3, a.q) - dec::form(a.S, a.X3, a.v)};
    out["hessian_normal"] = ops::norm(ops::minus(lhs6, rhs6));

    const Vec2 nX3 = ops::values(ops::nabla_surface(surf_, surf_.S.from_frame({Jet(a.X3[0]), Jet(a.X3[1])})));
    out["transport_X3"] = ops::norm(dec::add(dec::sub(X3v, nX3), dec::mul(a.g_X3_w, a.Kv)));
    return out;
  }

  /// Residual of the special-case formula pi(Delta_B u) = Delta_B v + kappa v + pi(Hess u(b3, b3) + 2H [u, b3]).
  double summary_formula_residual() const {
    const auto& F = amb_.F;
    const VecJ<3> hess = tensor::sub<3>(F.cov(F.b[2], F.cov(F.b[2], amb_.u)), F.cov(F.cov(F.b[2], F.b[2]), amb_.u));
    const Vec3 h = ops::values(F.to_frame(hess));
    const Vec3 br = bracket_with_normal();
    const Vec2 rhs{lap_v_[0] + a_.kappa * a_.v[0] + h[0] + 2 * a_.H * br[0],
                   lap_v_[1] + a_.kappa * a_.v[1] + h[1] + 2 * a_.H * br[1]};
    return std::hypot(lap_u_[0] - rhs[0], lap_u_[1] - rhs[1]);
  }

  /// [u, b^3] in frame components.
  Vec3 bracket_with_normal() const {
    const AmbientContext n(amb_.F, {Jet(0.0), Jet(0.0), Jet(1.0)});
    return ops::bracket(amb_, n);
  }

 private:
  void build() {
    AuxTensors& a = a_;
    const FrameData& d = fd_;
    const auto& F = amb_.F;
    const auto& U = amb_.U;
    a.z = z_;
    a.H = d.H;
    a.kappa = d.kappa;
    a.gamma3 = d.gamma[2];
    a.b3_gamma3 = d.b3_gamma3;
    const double t12 = 0.5 * (d.t[0][1] + d.t[1][0]);
    a.S = {{{d.t[0][0], t12}, {t12, d.t[1][1]}}};
    a.K = dec::kK;
    a.S_adj = d.S_adj;
    a.P = dec::lin(a.kappa, dec::kI, -2 * a.H, a.S);
    a.N = dec::lin(2 * a.gamma3, dec::kK, -2 * a.H, dec::kI);
    a.w = d.w;
    a.Kw = dec::Kof(a.w);
    a.X3 = d.alpha;
    a.ell = d.ell;
    a.g_X3_w = dec::dot(a.X3, a.w);
    a.v = {U[0].value(), U[1].value()};
    a.Kv = dec::Kof(a.v);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a.Q[i][j] = surf_.S.along(i, surf_.V[j]).value();
    a.q = {F.along(2, U[0]).value(), F.along(2, U[1]).value()};
    a.rho = F.along(2, U[2]).value() - a.X3[0] * U[0].value() - a.X3[1] * U[1].value();
    a.sigma = a.S[0][0] * a.Q[0][0] + a.S[0][1] * (a.Q[0][1] + a.Q[1][0]) + a.S[1][1] * a.Q[1][1];
    a.sigma_hat = (a.S[1][1] - a.S[0][0]) * a.Q[1][1] + a.S[0][1] * (a.Q[1][0] + a.Q[0][1]);
    a.div_v = ops::div_surface_coord(surf_).value();
    a.rot_v = ops::rot_surface(surf_);

    const VecJ<3> n33 = F.cov(F.b[2], F.b[2]);
    for (int j = 0; j < 3; ++j) {
      const Jet b3u = F.along(2, U[j]);
      a.d[j] = F.along(2, b3u).value() - F.along(n33, U[j]).value();
      if (j < 2) a.m[j] = F.along(j, b3u).value() - F.along(F.cov(F.b[j], F.b[2]), U[j]).value();
    }

    const double O13 = d.Omega[0][2][0][1], O23 = d.Omega[1][2][0][1];
    a.T0 = {2 * d.grad_H[0] + O23, 2 * d.grad_H[1] - O13};
    a.T1 = d.T1;
    a.T2 = dec::sub(dec::mul(a.gamma3, {a.X3[1], -a.X3[0]}), a.T1);
    a.T = dec::add(a.T0, a.T2);
    const Vec2 x = dec::add(a.ell, dec::mul(a.gamma3, a.X3));
    a.T_div = dec::add(a.T0, dec::Kof(x));
    a.T_div_c = dec::add(a.T0, dec::Kof(dec::add(x, dec::mul(2 * a.S[0][0], a.w))));

    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) a.E0[i][j] = a.X3[i] * a.X3[j];
    a.E1 = dec::lin(1.0, dec::lin(1.0, a.E0, a.b3_gamma3, dec::kK), -a.gamma3 * a.gamma3, dec::kI);
    a.E2 = dec::lin(1.0, a.E1, -a.g_X3_w, dec::kK);
    a.E = dec::lin(1.0, a.E2, -2 * a.H * a.gamma3, dec::kK);

    lap_u_ = ops::laplacian_bochner(amb_);
    lap_v_ = ops::values(ops::laplacian_bochner_surface_jets(surf_));
    div_u_ = ops::div_coord(amb_).value();
  }

  Point2 z_;
  int order_;
  AmbientContext amb_;
  SurfaceContext surf_;
  FrameData fd_;
  AuxTensors a_;
  Vec3 lap_u_{};
  Vec2 lap_v_{};
  double div_u_ = 0;
};

/// Projection of Delta_B u compared with the intrinsic part, with the extra terms itemized.
struct ProjectedComparison {
  Vec2 projected{}, intrinsic{}, difference{};
  Vec2 Ev{}, rhoX3{}, d{}, Nq{};
};

inline ProjectedComparison projected_comparison(const PointEvaluation& pe) {
  const auto& a = pe.aux();
  ProjectedComparison c;
  c.projected = {pe.laplacian_u()[0], pe.laplacian_u()[1]};
  c.intrinsic = pe.intrinsic_part();
  c.difference = dec::sub(c.projected, c.intrinsic);
  c.Ev = dec::apply(a.E, a.v);
  c.rhoX3 = dec::mul(2 * a.rho, a.X3);
  c.d = {a.d[0], a.d[1]};
  c.Nq = dec::apply(a.N, a.q);
  return c;
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
inline Vec2 symmetric_eigenvalues(const Mat2& m) {
  const double tr = m[0][0] + m[1][1];
  const double off = 0.5 * (m[0][1] + m[1][0]);
  const double disc = std::sqrt(0.25 * (m[0][0] - m[1][1]) * (m[0][0] - m[1][1]) + off * off);
  return {0.5 * tr - disc, 0.5 * tr + disc};
}

}  // namespace bochner
