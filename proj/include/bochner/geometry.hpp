#pragma once

/// @file geometry.hpp
/// Ambient metrics, embedded surfaces, adapted orthonormal frames and the
/// frame scalars built from their connection and curvature forms.
///
/// All ambient work happens in the y-chart. In flat-pullback mode the metric
/// is g0 = Dpsi^T Dpsi; in explicit-metric mode it is given directly.
///
/// Index conventions (0-based in code): omega[i][j][k] = omega_ij(b^k) =
/// g0(nabla_{b^k} b^j, b^i), t_ij = -omega_i3(b^j), alpha_j = omega_j3(b^3),
/// gamma_k = omega_12(b^k).

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bochner/expr.hpp"
#include "bochner/jet.hpp"
#include "bochner/tensor.hpp"

namespace bochner {

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point of the ambient chart with optional tube coordinates (z1, z2, s).
struct SamplePoint {
  Point3 y{};
  std::optional<Point3> tube;
};

// ---------------------------------------------------------------------------

class AmbientSpace {
 public:
  enum class Mode { FlatPullback, ExplicitMetric };

  static AmbientSpace flat(SmoothMap psi) {
    if (psi.domain_dim() != 3 || psi.codomain_dim() != 3) throw std::invalid_argument("psi must map R^3 to R^3");
    AmbientSpace a;
    a.mode_ = Mode::FlatPullback;
    a.map_ = std::move(psi);
    return a;
  }

  /// `g` lists the upper triangle g11 g12 g13 g22 g23 g33 as functions of y.
  static AmbientSpace explicit_metric(SmoothMap g) {
    if (g.domain_dim() != 3 || g.codomain_dim() != 6)
      throw std::invalid_argument("explicit metric needs six components over three variables");
    AmbientSpace a;
    a.mode_ = Mode::ExplicitMetric;
    a.map_ = std::move(g);
    return a;
  }

  Mode mode() const { return mode_; }
  bool is_flat() const { return mode_ == Mode::FlatPullback; }
  const SmoothMap& psi() const {
    if (!is_flat()) throw std::logic_error("psi requested from an explicit-metric ambient");
    return map_;
  }
  const SmoothMap& map() const { return map_; }

  /// Highest metric jet order this ambient can deliver.
  int max_metric_order() const { return is_flat() ? Jet::kMaxOrder - 1 : Jet::kMaxOrder; }

  std::array<Jet, 3> psi_jets(const Point3& y, int order) const {
    auto v = psi().eval_jet(y, order);
    return {v[0], v[1], v[2]};
  }

  /// Metric g0 as y-jets of the requested order.
  MatJ<3> metric(const Point3& y, int order) const {
    if (order > max_metric_order()) throw std::invalid_argument("metric order too high for this ambient");
    MatJ<3> g;
    if (is_flat()) {
      const auto x = psi_jets(y, order + 1);
      MatJ<3> J;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) J[i][j] = x[i].derivative(j);
      const double d = tensor::det<3>(J).value();
      double scale = 0.0;
      for (const auto& row : J)
        for (const auto& e : row) scale = std::max(scale, std::abs(e.value()));
      if (!(std::abs(d) > 1e-12 * scale * scale * scale))
        throw GeometryError("singular Jacobian of psi at " + format(y));
      g = tensor::matmul<3>(tensor::transpose<3>(J), J);
    } else {
      const auto c = map_.eval_jet(y, order);
      const int idx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g[i][j] = c[idx[i][j]];
      const double m1 = g[0][0].value();
      const double m2 = m1 * g[1][1].value() - g[0][1].value() * g[1][0].value();
      const double m3 = tensor::det<3>(g).value();
      if (!(m1 > 0 && m2 > 0 && m3 > 0)) throw GeometryError("explicit metric is not positive definite at " + format(y));
    }
    return g;
  }

  static std::string format(const Point3& y) {
    std::ostringstream os;
    os.precision(10);
    os << "(" << y[0] << ", " << y[1] << ", " << y[2] << ")";
    return os.str();
  }

 private:
  Mode mode_ = Mode::FlatPullback;
  SmoothMap map_;
};

// ---------------------------------------------------------------------------

class Surface {
 public:
  Surface(std::shared_ptr<const AmbientSpace> ambient, SmoothMap f) : ambient_(std::move(ambient)), f_(std::move(f)) {
    if (f_.domain_dim() != 2 || f_.codomain_dim() != 3) throw std::invalid_argument("surface map must send R^2 to R^3");
  }

  const AmbientSpace& ambient() const { return *ambient_; }
  std::shared_ptr<const AmbientSpace> ambient_ptr() const { return ambient_; }
  const SmoothMap& embedding() const { return f_; }

  Point3 embed(const Point2& z) const {
    auto v = f_.eval(z);
    return {v[0], v[1], v[2]};
  }

  /// Jets of f in the two surface variables.
  std::array<Jet, 3> embed_jets(const Point2& z, int order) const {
    auto v = f_.eval_jet(z, order);
    return {v[0], v[1], v[2]};
  }

 private:
  std::shared_ptr<const AmbientSpace> ambient_;
  SmoothMap f_;
};

// ---------------------------------------------------------------------------

class AdaptedFrame {
 public:
  virtual ~AdaptedFrame() = default;
  virtual const std::string& name() const = 0;
  virtual int max_order() const = 0;
  /// Coordinate components of b^1, b^2, b^3 as y-jets around the point.
  virtual std::array<VecJ<3>, 3> vectors(const Surface& surface, const SamplePoint& p, int order) const = 0;
};

/// Frame given by closed-form y-components.
class ClosedFormFrame : public AdaptedFrame {
 public:
  ClosedFormFrame(std::string name, std::array<SmoothMap, 3> b) : name_(std::move(name)), b_(std::move(b)) {
    for (const auto& m : b_)
      if (m.domain_dim() != 3 || m.codomain_dim() != 3) throw std::invalid_argument("frame vectors need 3 components in y");
  }

  const std::string& name() const override { return name_; }
  int max_order() const override { return Jet::kMaxOrder; }

  std::array<VecJ<3>, 3> vectors(const Surface&, const SamplePoint& p, int order) const override {
    std::array<VecJ<3>, 3> out;
    for (int a = 0; a < 3; ++a) {
      auto v = b_[a].eval_jet(p.y, order);
      out[a] = {v[0], v[1], v[2]};
    }
    return out;
  }

  const std::array<SmoothMap, 3>& maps() const { return b_; }

 private:
  std::string name_;
  std::array<SmoothMap, 3> b_;
};

namespace detail {

inline VecJ<3> cross(const VecJ<3>& a, const VecJ<3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Jet dot(const VecJ<3>& a, const VecJ<3>& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline VecJ<3> normalized(const VecJ<3>& a) {
  const Jet inv = 1.0 / sqrt(dot(a, a));
  return tensor::scale<3>(inv, a);
}

/// Offset map F(z, s) = p(z) + s n(z) in the flat x-chart as (z1, z2, s)-jets,
/// together with the unit normal n and the tangents dF/dz.
struct TubeJets {
  VecJ<3> F, n, Fz1, Fz2;
};

inline TubeJets tube_jets(const Surface& surface, const Point2& z, double s, int p_order) {
  const auto fz = surface.embed_jets(z, p_order);
  const Point3 y0{fz[0].value(), fz[1].value(), fz[2].value()};
  const auto x_of_y = surface.ambient().psi_jets(y0, p_order);
  VecJ<3> p;
  for (int i = 0; i < 3; ++i) p[i] = compose(x_of_y[i], fz);
  VecJ<3> dp1, dp2;
  for (int i = 0; i < 3; ++i) {
    dp1[i] = p[i].derivative(0);
    dp2[i] = p[i].derivative(1);
  }
  TubeJets t;
  t.n = normalized(cross(dp1, dp2));
  const Jet sv = Jet::variable(2, s, p_order - 1);
  for (int i = 0; i < 3; ++i) t.F[i] = p[i] + sv * t.n[i];
  for (int i = 0; i < 3; ++i) {
    t.Fz1[i] = t.F[i].derivative(0);
    t.Fz2[i] = t.F[i].derivative(1);
  }
  return t;
}

}  // namespace detail

/// Frame of the normal tube in a flat ambient: b^3 is the unit normal of the
/// surface transported along straight normals, b^1 and b^2 are Gram-Schmidt
/// of the tube tangents. Limited to jet order 2.
class NormalTubeFrame : public AdaptedFrame {
 public:
  NormalTubeFrame(std::string name, Point2 lo, Point2 hi) : name_(std::move(name)), lo_(lo), hi_(hi) {}

  const std::string& name() const override { return name_; }
  int max_order() const override { return Jet::kMaxOrder - 2; }

  /// Tube coordinates (z1, z2, s) of y, refined by Newton from a hint or a coarse search.
  Point3 locate(const Surface& surface, const SamplePoint& p) const {
    const auto xv = surface.ambient().psi().eval(p.y);
    const Point3 x{xv[0], xv[1], xv[2]};
    Point3 t = p.tube ? *p.tube : coarse(surface, x);
    for (int it = 0; it < 60; ++it) {
      const auto tj = detail::tube_jets(surface, {t[0], t[1]}, t[2], 2);
      double J[3][3], r[3];
      for (int i = 0; i < 3; ++i) {
        r[i] = tj.F[i].value() - x[i];
        for (int j = 0; j < 3; ++j) J[i][j] = tj.F[i].d(j);
      }
      const Point3 dt = solve3(J, r);
      for (int i = 0; i < 3; ++i) t[i] -= dt[i];
      if (std::abs(dt[0]) + std::abs(dt[1]) + std::abs(dt[2]) < 1e-15) break;
    }
    return t;
  }

  std::array<VecJ<3>, 3> vectors(const Surface& surface, const SamplePoint& p, int order) const override {
    if (!surface.ambient().is_flat()) throw GeometryError("normal-tube frame requires a flat-pullback ambient");
    if (order > max_order()) throw std::invalid_argument("normal-tube frame supports jet order <= 2");
    const Point3 t = locate(surface, p);
    const int po = order + 2;
    const auto tj = detail::tube_jets(surface, {t[0], t[1]}, t[2], po);
    // Gram-Schmidt on the tube tangents.
    const VecJ<3> e1 = detail::normalized(tj.Fz1);
    const VecJ<3> u2 = tensor::sub<3>(tj.Fz2, tensor::scale<3>(detail::dot(tj.Fz2, e1), e1));
    const VecJ<3> e2 = detail::normalized(u2);
    std::array<VecJ<3>, 3> bx{e1, e2, tj.n};
    // (z, s) as x-jets, then x as y-jets.
    std::array<Jet, 3> Fm{tj.F[0].truncated(order + 1), tj.F[1].truncated(order + 1), tj.F[2].truncated(order + 1)};
    auto zs_of_x = invert(Fm, t);
    const auto x_of_y = surface.ambient().psi_jets(p.y, order + 1);
    std::array<Jet, 3> zs_of_y;
    for (int i = 0; i < 3; ++i) zs_of_y[i] = compose(zs_of_x[i], x_of_y);
    MatJ<3> Dpsi;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Dpsi[i][j] = x_of_y[i].derivative(j);
    const MatJ<3> Dinv = tensor::inverse<3>(Dpsi);
    std::array<VecJ<3>, 3> out;
    for (int a = 0; a < 3; ++a) {
      VecJ<3> bxy;
      for (int i = 0; i < 3; ++i) bxy[i] = compose(bx[a][i], zs_of_y).truncated(order);
      out[a] = tensor::apply<3>(Dinv, bxy);
    }
    return out;
  }

 private:
  static Point3 solve3(const double A[3][3], const double r[3]) {
    const double det = A[0][0] * (A[1][1] * A[2][2] - A[1][2] * A[2][1]) -
                       A[0][1] * (A[1][0] * A[2][2] - A[1][2] * A[2][0]) +
                       A[0][2] * (A[1][0] * A[2][1] - A[1][1] * A[2][0]);
    if (det == 0.0) throw GeometryError("degenerate normal-tube inversion");
    Point3 x{};
    for (int c = 0; c < 3; ++c) {
      double M[3][3];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) M[i][j] = (j == c) ? r[i] : A[i][j];
      x[c] = (M[0][0] * (M[1][1] * M[2][2] - M[1][2] * M[2][1]) - M[0][1] * (M[1][0] * M[2][2] - M[1][2] * M[2][0]) +
              M[0][2] * (M[1][0] * M[2][1] - M[1][1] * M[2][0])) /
             det;
    }
    return x;
  }

  Point3 coarse(const Surface& surface, const Point3& x) const {
    const auto& psi = surface.ambient().psi();
    double best = INFINITY;
    Point3 t{};
    constexpr int n = 24;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) {
        const Point2 z{lo_[0] + (hi_[0] - lo_[0]) * i / n, lo_[1] + (hi_[1] - lo_[1]) * j / n};
        const auto pv = psi.eval(surface.embed(z));
        const double d = std::hypot(pv[0] - x[0], pv[1] - x[1], pv[2] - x[2]);
        if (d < best) {
          best = d;
          t = {z[0], z[1], 0.0};
        }
      }
    const auto tj = detail::tube_jets(surface, {t[0], t[1]}, 0.0, 2);
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += tj.n[i].value() * (x[i] - tj.F[i].value());
    t[2] = s;
    return t;
  }

  std::string name_;
  Point2 lo_, hi_;
};

// ---------------------------------------------------------------------------

/// Metric, Christoffel symbols and frame vectors as y-jets around one point.
struct FrameJets {
  Point3 y{};
  int order = 0;
  MatJ<3> g;
  ChristoffelJ<3> gamma;
  std::array<VecJ<3>, 3> b;

  Jet along(int a, const Jet& f) const { return tensor::dir<3>(b[a], f); }
  Jet along(const VecJ<3>& X, const Jet& f) const { return tensor::dir<3>(X, f); }
  VecJ<3> cov(const VecJ<3>& X, const VecJ<3>& Y) const { return tensor::cov<3>(gamma, X, Y); }
  Jet inner(const VecJ<3>& X, const VecJ<3>& Y) const { return tensor::inner<3>(g, X, Y); }

  /// Sum_j c_j b^j in coordinates.
  VecJ<3> from_frame(const std::array<Jet, 3>& c) const {
    VecJ<3> r;
    for (int i = 0; i < 3; ++i) r[i] = c[0] * b[0][i] + c[1] * b[1][i] + c[2] * b[2][i];
    return r;
  }
  /// Frame components g0(X, b^i).
  std::array<Jet, 3> to_frame(const VecJ<3>& X) const { return {inner(X, b[0]), inner(X, b[1]), inner(X, b[2])}; }

  /// omega_ij(b^k) as jets of order - 1.
  std::array<std::array<std::array<Jet, 3>, 3>, 3> connection() const {
    std::array<std::array<std::array<Jet, 3>, 3>, 3> w;
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) {
        const VecJ<3> D = cov(b[k], b[j]);
        for (int i = 0; i < 3; ++i) w[i][j][k] = inner(D, b[i]);
      }
    return w;
  }
};

/// Intrinsic data of the surface in the z-chart around one point.
struct SurfaceJets {
  Point2 z{};
  int order = 0;
  std::array<Jet, 3> f;     // embedding, one order higher than the rest
  std::array<VecJ<3>, 2> df;  // df/dz_a in y-coordinates
  MatJ<2> g;
  ChristoffelJ<2> gamma;
  std::array<VecJ<2>, 2> b;  // b_z^1, b_z^2 in z-coordinates

  Jet along(int a, const Jet& h) const { return tensor::dir<2>(b[a], h); }
  VecJ<2> cov(const VecJ<2>& X, const VecJ<2>& Y) const { return tensor::cov<2>(gamma, X, Y); }
  Jet inner(const VecJ<2>& X, const VecJ<2>& Y) const { return tensor::inner<2>(g, X, Y); }
  VecJ<2> from_frame(const std::array<Jet, 2>& c) const {
    return {c[0] * b[0][0] + c[1] * b[1][0], c[0] * b[0][1] + c[1] * b[1][1]};
  }
  std::array<Jet, 2> to_frame(const VecJ<2>& X) const { return {inner(X, b[0]), inner(X, b[1])}; }
};

/// Per-point frame scalars (values only).
struct FrameData {
  Point3 y{};
  double omega[3][3][3]{};  // omega_ij(b^k)
  Mat2 t{};                 // -omega_i3(b^j)
  Mat2 t_gauss{};           // g0(nabla_{b^i} b^j, b^3)
  double kappa = 0, H = 0;
  std::array<double, 2> alpha{}, w{}, ell{}, T1{}, grad_H{};
  std::array<double, 3> gamma{};
  double b3_gamma3 = 0;
  Mat2 S_adj{}, P{}, K{{{0.0, 1.0}, {-1.0, 0.0}}};
  double Omega[3][3][3][3]{};  // Omega_ij(b^a, b^b)
  Mat3 ricci{};
  double structure_residual = 0;  // max |d theta^i + omega_ik ^ theta^k| on frame pairs
  std::array<double, 2> t_der{};  // companion derivative identities of t_ij
  int orientation = 1;
};

/// Intrinsic surface scalars (values only).
struct IntrinsicData {
  Point2 z{};
  std::array<double, 2> omega12{};  // omega^z_12(b_z^k)
  double Omega12 = 0;               // Omega^z_12(b_z^1, b_z^2)
  std::array<double, 2> bracket{};  // [b_z^1, b_z^2] in frame components
};

// ---------------------------------------------------------------------------

/// A surface together with one adapted frame.
class Geometry {
 public:
  Geometry(std::shared_ptr<const Surface> surface, std::shared_ptr<const AdaptedFrame> frame)
      : surface_(std::move(surface)), frame_(std::move(frame)) {}

  const Surface& surface() const { return *surface_; }
  const AmbientSpace& ambient() const { return surface_->ambient(); }
  const AdaptedFrame& frame() const { return *frame_; }
  std::shared_ptr<const Surface> surface_ptr() const { return surface_; }
  std::shared_ptr<const AdaptedFrame> frame_ptr() const { return frame_; }

  int max_order() const { return std::min(frame_->max_order(), surface_->ambient().max_metric_order()); }

  SamplePoint on_surface(const Point2& z) const { return SamplePoint{surface_->embed(z), Point3{z[0], z[1], 0.0}}; }

  FrameJets jets(const SamplePoint& p, int order) const {
    if (order > max_order())
      throw std::invalid_argument("frame '" + frame_->name() + "' supports jet order <= " + std::to_string(max_order()));
    FrameJets F;
    F.y = p.y;
    F.order = order;
    F.g = ambient().metric(p.y, order);
    if (order >= 1) F.gamma = tensor::christoffel<3>(F.g);
    F.b = frame_->vectors(*surface_, p, order);
    return F;
  }

  /// Surface metric, Christoffel symbols and restricted frame in the z-chart.
  SurfaceJets surface_jets(const Point2& z, int order) const {
    SurfaceJets S;
    S.z = z;
    S.order = order;
    S.f = surface_->embed_jets(z, order + 1);
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 3; ++i) S.df[a][i] = S.f[i].derivative(a);
    const FrameJets F = jets(on_surface(z), order);
    MatJ<3> g0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) g0[i][j] = compose(F.g[i][j], S.f);
    std::array<VecJ<3>, 2> by;
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 3; ++i) by[a][i] = compose(F.b[a][i], S.f);
    for (int a = 0; a < 2; ++a)
      for (int c = 0; c < 2; ++c) S.g[a][c] = tensor::inner<3>(g0, S.df[a], S.df[c]);
    const double det = tensor::det<2>(S.g).value();
    if (!(det > 1e-14)) throw GeometryError("surface embedding is degenerate at z");
    const MatJ<2> ginv = tensor::inverse<2>(S.g);
    if (order >= 1) S.gamma = tensor::christoffel<2>(S.g);
    for (int a = 0; a < 2; ++a) {
      VecJ<2> rhs{tensor::inner<3>(g0, S.df[0], by[a]), tensor::inner<3>(g0, S.df[1], by[a])};
      S.b[a] = tensor::apply<2>(ginv, rhs);
    }
    return S;
  }

  /// Checks orthonormality and adaptedness at surface points; throws with the Gram matrix.
  void validate(const std::vector<Point2>& zs, double tol = 1e-10) const {
    for (const auto& z : zs) {
      const SamplePoint p = on_surface(z);
      const FrameJets F = jets(p, 0);
      Mat3 gram{};
      double dev = 0.0;
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) {
          gram[a][c] = F.inner(F.b[a], F.b[c]).value();
          dev = std::max(dev, std::abs(gram[a][c] - (a == c ? 1.0 : 0.0)));
        }
      if (dev > tol) {
        std::ostringstream os;
        os.precision(12);
        os << "frame '" << frame_->name() << "' is not orthonormal at z = (" << z[0] << ", " << z[1] << "); Gram = [";
        for (int a = 0; a < 3; ++a) os << (a ? "; " : "") << gram[a][0] << " " << gram[a][1] << " " << gram[a][2];
        os << "]";
        throw GeometryError(os.str());
      }
      const auto fj = surface_->embed_jets(z, 1);
      for (int c = 0; c < 2; ++c) {
        VecJ<3> t{Jet(fj[0].d(c)), Jet(fj[1].d(c)), Jet(fj[2].d(c))};
        const double tn = std::sqrt(F.inner(t, t).value());
        const double nb = std::abs(F.inner(t, F.b[2]).value()) / tn;
        if (nb > tol) {
          std::ostringstream os;
          os << "frame '" << frame_->name() << "': b3 is not normal to the surface at z = (" << z[0] << ", " << z[1]
             << "), deviation " << nb;
          throw GeometryError(os.str());
        }
      }
    }
  }

 private:
  std::shared_ptr<const Surface> surface_;
  std::shared_ptr<const AdaptedFrame> frame_;
};

// ---------------------------------------------------------------------------

/// Derived jets used by several modules: t_ij, H, alpha_j, gamma_k as y-jets.
struct FrameScalarJets {
  std::array<std::array<std::array<Jet, 3>, 3>, 3> omega;
  std::array<std::array<Jet, 2>, 2> t;
  Jet H;
  std::array<Jet, 2> alpha;
  std::array<Jet, 3> gamma;
};

inline FrameScalarJets frame_scalar_jets(const FrameJets& F) {
  FrameScalarJets s;
  s.omega = F.connection();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) s.t[i][j] = -s.omega[i][2][j];
  s.H = 0.5 * (s.t[0][0] + s.t[1][1]);
  for (int j = 0; j < 2; ++j) s.alpha[j] = s.omega[j][2][2];
  for (int k = 0; k < 3; ++k) s.gamma[k] = s.omega[0][1][k];
  return s;
}

/// All frame scalars at the point of F; needs jets of order >= 2.
inline FrameData frame_data(const FrameJets& F, const FrameScalarJets& s) {
  if (F.order < 2) throw std::invalid_argument("frame data needs order >= 2 jets");
  FrameData d;
  d.y = F.y;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) d.omega[i][j][k] = s.omega[i][j][k].value();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      d.t[i][j] = s.t[i][j].value();
      d.t_gauss[i][j] = F.inner(F.cov(F.b[i], F.b[j]), F.b[2]).value();
    }
  d.kappa = d.t[0][0] * d.t[1][1] - d.t[0][1] * d.t[1][0];
  d.H = 0.5 * (d.t[0][0] + d.t[1][1]);
  for (int j = 0; j < 2; ++j) {
    d.alpha[j] = s.alpha[j].value();
    d.w[j] = s.gamma[j].value();
    d.ell[j] = F.along(2, s.gamma[j]).value();
    d.T1[j] = F.along(2, s.alpha[j]).value();
    d.grad_H[j] = F.along(j, s.H).value();
  }
  for (int k = 0; k < 3; ++k) d.gamma[k] = s.gamma[k].value();
  d.b3_gamma3 = F.along(2, s.gamma[2]).value();
  const double t11 = d.t[0][0], t12 = 0.5 * (d.t[0][1] + d.t[1][0]), t22 = d.t[1][1];
  d.S_adj = {{{t22, -t12}, {-t12, t11}}};
  d.P = {{{d.kappa - 2 * d.H * t11, -2 * d.H * t12}, {-2 * d.H * t12, d.kappa - 2 * d.H * t22}}};

  // Curvature forms: d omega via frame derivatives and the coordinate bracket.
  std::array<std::array<VecJ<3>, 3>, 3> br;
  std::array<std::array<std::array<double, 3>, 3>, 3> brc{};  // frame components of [b^a, b^b]
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) {
      br[a][c] = tensor::lie<3>(F.b[a], F.b[c]);
      for (int k = 0; k < 3; ++k) brc[a][c][k] = F.inner(br[a][c], F.b[k]).value();
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 3; ++a)
        for (int c = 0; c < 3; ++c) {
          double v = F.along(a, s.omega[i][j][c]).value() - F.along(c, s.omega[i][j][a]).value();
          for (int k = 0; k < 3; ++k) v -= brc[a][c][k] * d.omega[i][j][k];
          for (int k = 0; k < 3; ++k)
            v += d.omega[i][k][a] * d.omega[k][j][c] - d.omega[i][k][c] * d.omega[k][j][a];
          d.Omega[i][j][a][c] = v;
        }
  for (int a = 0; a < 3; ++a)
    for (int c = 0; c < 3; ++c) {
      double r = 0.0;
      for (int k = 0; k < 3; ++k) r += d.Omega[k][c][k][a];
      d.ricci[a][c] = r;
    }
  // d theta^i(b^a, b^c) + (omega_ik ^ theta^k)(b^a, b^c).
  double sr = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c)
        sr = std::max(sr, std::abs(-brc[a][c][i] + d.omega[i][c][a] - d.omega[i][a][c]));
  d.structure_residual = sr;

  const double g1 = d.gamma[0], g2 = d.gamma[1];
  const double b1t12 = F.along(0, s.t[0][1]).value(), b2t11 = F.along(1, s.t[0][0]).value();
  const double b2t12 = F.along(1, s.t[0][1]).value(), b1t22 = F.along(0, s.t[1][1]).value();
  d.t_der[0] = b1t12 - b2t11 + d.Omega[0][2][0][1] - (t11 - t22) * g1 - 2 * t12 * g2;
  d.t_der[1] = b2t12 - b1t22 - d.Omega[1][2][0][1] + 2 * t12 * g1 - (t11 - t22) * g2;

  MatJ<3> B;
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i) B[i][a] = F.b[a][i];
  d.orientation = tensor::det<3>(B).value() > 0 ? 1 : -1;
  return d;
}

inline FrameData frame_data(const FrameJets& F) { return frame_data(F, frame_scalar_jets(F)); }

/// Frame data at a point with the default jet order.
inline FrameData frame_data(const Geometry& geo, const SamplePoint& p) {
  return frame_data(geo.jets(p, std::min(3, geo.max_order())));
}

inline IntrinsicData intrinsic_data(const SurfaceJets& S) {
  if (S.order < 2) throw std::invalid_argument("intrinsic data needs order >= 2 jets");
  IntrinsicData d;
  d.z = S.z;
  std::array<Jet, 2> w12;
  for (int k = 0; k < 2; ++k) {
    w12[k] = S.inner(S.cov(S.b[k], S.b[1]), S.b[0]);
    d.omega12[k] = w12[k].value();
  }
  const VecJ<2> br = tensor::lie<2>(S.b[0], S.b[1]);
  for (int k = 0; k < 2; ++k) d.bracket[k] = S.inner(br, S.b[k]).value();
  d.Omega12 = S.along(0, w12[1]).value() - S.along(1, w12[0]).value() - d.bracket[0] * d.omega12[0] -
              d.bracket[1] * d.omega12[1];
  return d;
}

/// Second fundamental form from the embedding: g0(d_a d_b f + Gamma(d_a f, d_b f), b^3),
/// expressed on b_z^1, b_z^2.
inline Mat2 second_fundamental_form_embedding(const Geometry& geo, const Point2& z) {
  const SurfaceJets S = geo.surface_jets(z, 1);
  const FrameJets F = geo.jets(geo.on_surface(z), 1);
  const Point3 n{F.b[2][0].value(), F.b[2][1].value(), F.b[2][2].value()};
  double Sab[2][2];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      double acc[3];
      for (int k = 0; k < 3; ++k) {
        acc[k] = S.f[k].d(a, b);
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j) acc[k] += F.gamma[k][i][j].value() * S.df[a][i].value() * S.df[b][j].value();
      }
      double r = 0.0;
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) r += F.g[k][l].value() * acc[k] * n[l];
      Sab[a][b] = r;
    }
  Mat2 t{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) t[i][j] += S.b[i][a].value() * S.b[j][b].value() * Sab[a][b];
  return t;
}

/// Orientation of the frame relative to the x-chart (flat) or y-chart (explicit).
inline int frame_orientation(const Geometry& geo, const FrameData& d) {
  if (!geo.ambient().is_flat()) return d.orientation;
  const auto x = geo.ambient().psi_jets(d.y, 1);
  MatJ<3> J;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) J[i][j] = Jet(x[i].d(j));
  return tensor::det<3>(J).value() > 0 ? d.orientation : -d.orientation;
}

}  // namespace bochner
