#pragma once

/// @file extension.hpp
/// Normal charts and extensions of surface fields into a tube around M.
///
/// The chart Phi(z, s) is the flow of b^3 started on f(z). Extended field
/// components U^j(z, s) solve first-order systems along the same curves.
/// State X = (Phi^1, Phi^2, Phi^3, U^1, U^2, U^3) is carried as jets in z;
/// the s-direction is recovered by Picard iteration of dX/ds = G(X) in
/// (z, s)-jets, and the result is pushed to y-jets by inverting Phi.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "bochner/geometry.hpp"
#include "bochner/operators.hpp"

namespace bochner {

class ExtensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The chart stops being an embedding (or leaves the ambient domain) at (z, s).
class FoldOverError : public GeometryError {
 public:
  FoldOverError(Point2 z, double s, const std::string& what)
      : GeometryError(message(z, s, what)), z_(z), s_(s) {}
  Point2 z() const { return z_; }
  double s() const { return s_; }

 private:
  static std::string message(Point2 z, double s, const std::string& what) {
    std::ostringstream os;
    os.precision(6);
    os << "fold-over of the normal chart at z = (" << z[0] << ", " << z[1] << "), s = " << s << ": " << what;
    return os.str();
  }
  Point2 z_;
  double s_;
};

enum class ExtensionKind { ClosedForm, ChartClosedForm, Compatible, DivergenceFree, CurlNormal };

inline const char* to_string(ExtensionKind k) {
  switch (k) {
    case ExtensionKind::ClosedForm:
      return "closed-form";
    case ExtensionKind::ChartClosedForm:
      return "chart-closed-form";
    case ExtensionKind::Compatible:
      return "compatible";
    case ExtensionKind::DivergenceFree:
      return "divergence-free";
    case ExtensionKind::CurlNormal:
      return "curl-normal";
  }
  return "?";
}

struct IntegratorOptions {
  double abs_tol = 1e-11;
  double rel_tol = 1e-11;
};

using FlowState = std::array<Jet, 6>;

/// One sample of a stored normal curve: values of X and of dX/ds.
struct CurveSample {
  double s = 0;
  std::array<double, 6> x{};
  std::array<double, 6> dx{};
};

/// Normal derivatives of U^j at one (z, s).
struct NormalDerivatives {
  std::array<double, 3> u{}, du{}, d2u{};
};

namespace extension_detail {

/// Right-hand side of the characteristic system and the machinery around it.
class Flow {
 public:
  struct Spec {
    ExtensionKind kind = ExtensionKind::ChartClosedForm;
    bool divfree = false;              // curl-normal: third component by the divergence-free rule
    std::optional<SmoothMap> tangential;  // rate of U^1, U^2 along normals, as functions of y
  };

  Flow(std::shared_ptr<const Geometry> geo, Spec spec, std::shared_ptr<const SurfaceField> base,
       IntegratorOptions opt)
      : geo_(std::move(geo)), spec_(std::move(spec)), base_(std::move(base)), opt_(opt) {
    frame_order_ = std::min(3, geo_->max_order());
  }

  const Geometry& geometry() const { return *geo_; }
  const Spec& spec() const { return spec_; }
  bool chart_only() const {
    return spec_.kind == ExtensionKind::ChartClosedForm || spec_.kind == ExtensionKind::ClosedForm;
  }
  int frame_order() const { return frame_order_; }

  /// dX/ds at the state X; `tube` is the (z, s) the state belongs to.
  FlowState rate(const FlowState& X, const Point3& tube) const {
    const Point3 y0{X[0].value(), X[1].value(), X[2].value()};
    const SamplePoint p{y0, tube};
    const int K = frame_order_;
    const FrameJets F = geo_->jets(p, K);
    const std::array<Jet, 3> Phi{X[0], X[1], X[2]};
    auto comp = [&](const Jet& j) { return compose(j, Phi); };
    FlowState G;
    for (int i = 0; i < 3; ++i) G[i] = comp(F.b[2][i]);
    if (chart_only()) {
      for (int j = 3; j < 6; ++j) G[j] = Jet(0.0);
      return G;
    }
    const FrameScalarJets s = frame_scalar_jets(F);
    const Jet &U1 = X[3], &U2 = X[4], &U3 = X[5];
    if (spec_.kind == ExtensionKind::CurlNormal) {
      const Jet t11 = comp(s.t[0][0]), t12 = comp(s.t[0][1]), t22 = comp(s.t[1][1]), g3 = comp(s.gamma[2]);
      G[3] = t11 * U1 + t12 * U2 - g3 * U2;
      G[4] = t12 * U1 + t22 * U2 + g3 * U1;
    } else if (spec_.tangential) {
      const auto r = spec_.tangential->eval_jet(y0, K);
      G[3] = comp(r[0]);
      G[4] = comp(r[1]);
    } else {
      G[3] = Jet(0.0);
      G[4] = Jet(0.0);
    }
    const Jet a1 = comp(s.alpha[0]), a2 = comp(s.alpha[1]);
    const bool divfree = spec_.kind == ExtensionKind::DivergenceFree ||
                         (spec_.kind == ExtensionKind::CurlNormal && spec_.divfree);
    if (!divfree) {
      G[5] = a1 * U1 + a2 * U2;
      return G;
    }
    const Jet g1 = comp(s.gamma[0]), g2 = comp(s.gamma[1]);
    const Jet tr = comp(s.t[0][0] + s.t[1][1]);
    // b^k(U^k) through the chart: d/dz from the jets, d/ds from G.
    MatJ<3> D;
    for (int i = 0; i < 3; ++i) {
      D[i][0] = X[i].derivative(0);
      D[i][1] = X[i].derivative(1);
      D[i][2] = G[i];
    }
    const MatJ<3> Dinv = tensor::inverse<3>(D);
    Jet tangential_div = Jet(0.0);
    for (int k = 0; k < 2; ++k) {
      VecJ<3> bk;
      for (int i = 0; i < 3; ++i) bk[i] = comp(F.b[k][i]);
      const VecJ<3> c = tensor::apply<3>(Dinv, bk);
      const Jet& Uk = X[3 + k];
      tangential_div += c[0] * Uk.derivative(0) + c[1] * Uk.derivative(1) + c[2] * G[3 + k];
    }
    G[5] = tr * U3 + (g2 + a1) * U1 - (g1 - a2) * U2 - tangential_div;
    return G;
  }

  /// Exact state on M as z-jets of the given order.
  FlowState initial(const Point2& z, int order) const {
    FlowState X;
    const auto f = geo_->surface().embed_jets(z, order);
    for (int i = 0; i < 3; ++i) X[i] = f[i];
    if (chart_only()) {
      for (int j = 3; j < 6; ++j) X[j] = Jet::constant(0.0, order, 2);
    } else {
      const auto v = base_->components(z, order);
      X[3] = v[0];
      X[4] = v[1];
      X[5] = Jet::constant(0.0, order, 2);
    }
    return X;
  }

  /// Picard lift of z-jets at s to (z, s)-jets.
  FlowState lift(const FlowState& X0, const Point3& tube) const {
    FlowState X = X0;
    int order = 0;
    for (const auto& x : X0) order = std::max(order, x.order());
    for (int it = 0; it <= order + 1; ++it) {
      const FlowState G = rate(X, tube);
      for (int c = 0; c < 6; ++c) X[c] = X0[c] + G[c].integral(2);
    }
    return X;
  }

  /// Per-component orders that the transported z-jets can carry.
  std::array<int, 6> transport_orders(const Point2& z, int order) const {
    std::array<int, 6> o;
    o.fill(order);
    FlowState X = initial(z, order);
    for (int it = 0; it < 8; ++it) {
      const FlowState G = rate(X, {z[0], z[1], 0.0});
      bool changed = false;
      for (int c = 0; c < 6; ++c)
        if (G[c].order() < o[c]) {
          o[c] = G[c].order();
          X[c] = X[c].truncated(o[c]);
          changed = true;
        }
      if (!changed) break;
    }
    return o;
  }

  /// Integrates z-jets of order `order` from s = 0 to each of `times` (sorted away from 0).
  /// The observer sees the state after each requested time.
  void transport(const Point2& z, const std::vector<double>& times, int order,
                 const std::function<void(double, const FlowState&)>& observer) const {
    const auto o = transport_orders(z, order);
    const FlowState X0 = initial(z, order);
    std::vector<double> x;
    for (int c = 0; c < 6; ++c)
      for (int k = 0; k < detail::coeff_count(o[c]); ++k) x.push_back(X0[c].coeff(k));
    auto unpack = [&](const std::vector<double>& v) {
      FlowState X;
      std::size_t n = 0;
      for (int c = 0; c < 6; ++c) {
        X[c] = Jet::constant(0.0, o[c], 2);
        for (int k = 0; k < detail::coeff_count(o[c]); ++k) X[c].coeff(k) = v[n++];
      }
      return X;
    };
    auto rhs = [&](const std::vector<double>& v, std::vector<double>& dv, double s) {
      const FlowState G = rate(unpack(v), {z[0], z[1], s});
      std::size_t n = 0;
      for (int c = 0; c < 6; ++c)
        for (int k = 0; k < detail::coeff_count(o[c]); ++k) dv[n++] = G[c].coeff(k);
    };
    namespace odeint = boost::numeric::odeint;
    using Stepper = odeint::runge_kutta_fehlberg78<std::vector<double>>;
    auto stepper = odeint::make_controlled<Stepper>(opt_.abs_tol, opt_.rel_tol);
    double t = 0.0;
    for (double target : times) {
      if (target != t) {
        const double dt = (target - t) / 4.0;
        try {
          odeint::integrate_adaptive(stepper, rhs, x, t, target, dt);
        } catch (const odeint::step_adjustment_error& e) {
          throw ExtensionError(std::string("ODE step failure: ") + e.what());
        }
        t = target;
      }
      observer(t, unpack(x));
    }
  }

  /// z-jets of the state at (z, s).
  FlowState state_at(const Point2& z, double s, int order) const {
    if (s == 0.0) return initial(z, order);
    FlowState out;
    transport(z, {s}, order, [&](double, const FlowState& X) { out = X; });
    return out;
  }

 private:
  std::shared_ptr<const Geometry> geo_;
  Spec spec_;
  std::shared_ptr<const SurfaceField> base_;
  IntegratorOptions opt_;
  int frame_order_ = 3;
};

}  // namespace extension_detail

// ---------------------------------------------------------------------------

/// Flow of b^3 from the surface: Phi(z, s).
class NormalChart {
 public:
  /// Jet order of the transported z-jets away from M.
  static constexpr int kTransportOrder = 2;

  NormalChart(std::shared_ptr<const Geometry> geo, double s_max, IntegratorOptions opt = {})
      : flow_(std::move(geo), {}, nullptr, opt), s_max_(s_max) {}

  const Geometry& geometry() const { return flow_.geometry(); }
  double s_max() const { return s_max_; }

  Point3 point(const Point2& z, double s) const {
    const auto X = flow_.state_at(z, s, 1);
    return {X[0].value(), X[1].value(), X[2].value()};
  }

  /// Phi as (z1, z2, s)-jets around (z, s).
  std::array<Jet, 3> jets(const Point2& z, double s) const {
    const Point3 tube{z[0], z[1], s};
    const auto X = flow_.lift(flow_.state_at(z, s, s == 0.0 ? Jet::kMaxOrder : kTransportOrder), tube);
    return {X[0], X[1], X[2]};
  }

  /// Checks that the chart is an embedding on [-s_max, s_max] over the given z;
  /// throws FoldOverError at the first failure.
  void check(const std::vector<Point2>& zs, int samples = 50, double ratio_floor = 1e-3) const {
    const auto& geo = flow_.geometry();
    for (const auto& z : zs) {
      double vol0 = 0.0;
      auto volume = [&](double s, const FlowState& X) {
        const Point3 y{X[0].value(), X[1].value(), X[2].value()};
        const FrameJets F = geo.jets(SamplePoint{y, Point3{z[0], z[1], s}}, 0);
        MatJ<3> D;
        for (int i = 0; i < 3; ++i) {
          D[i][0] = Jet(X[i].d(0));
          D[i][1] = Jet(X[i].d(1));
          D[i][2] = Jet(F.b[2][i].value());
        }
        const double g = tensor::det<3>(F.g).value();
        if (!(g > 0)) throw GeometryError("metric degenerates");
        return tensor::det<3>(D).value() * std::sqrt(g);
      };
      vol0 = volume(0.0, flow_.initial(z, 1));
      for (double sign : {1.0, -1.0}) {
        std::vector<double> times;
        for (int k = 1; k <= samples; ++k) times.push_back(sign * s_max_ * k / samples);
        double last_s = 0.0;
        try {
          flow_.transport(z, times, 1, [&](double s, const FlowState& X) {
            last_s = s;
            const double r = volume(s, X) / vol0;
            if (!(r > ratio_floor)) {
              std::ostringstream os;
              os << "volume ratio " << r << " below " << ratio_floor;
              throw FoldOverError(z, s, os.str());
            }
          });
        } catch (const FoldOverError&) {
          throw;
        } catch (const std::exception& e) {
          throw FoldOverError(z, last_s, e.what());
        }
      }
    }
  }

  /// Largest |g0(dPhi/ds, dPhi/ds) - 1| at the given (z, s).
  double unit_speed_deviation(const Point2& z, double s) const {
    const auto X = flow_.state_at(z, s, 1);
    const Point3 y{X[0].value(), X[1].value(), X[2].value()};
    const FrameJets F = flow_.geometry().jets(SamplePoint{y, Point3{z[0], z[1], s}}, 0);
    return std::abs(F.inner(F.b[2], F.b[2]).value() - 1.0);
  }

 private:
  extension_detail::Flow flow_;
  double s_max_;
};

// ---------------------------------------------------------------------------

/// Extension u of a surface field v into the tube.
class ExtendedField : public AmbientField {
 public:
  using Spec = extension_detail::Flow::Spec;

  /// u^j given as functions of y.
  static std::shared_ptr<ExtendedField> closed_form(std::shared_ptr<const Geometry> geo, SmoothMap u,
                                                    double s_max = 0.1) {
    if (u.domain_dim() != 3 || u.codomain_dim() != 3) throw std::invalid_argument("closed-form extension needs u(y) with 3 components");
    auto e = std::shared_ptr<ExtendedField>(new ExtendedField(geo, Spec{ExtensionKind::ClosedForm, false, std::nullopt}, nullptr, s_max, {}));
    e->y_map_ = std::move(u);
    e->base_ = std::make_shared<RestrictedSurfaceField>(geo, e->self_view());
    return e;
  }

  /// U^j given as functions of the chart coordinates (z1, z2, s).
  static std::shared_ptr<ExtendedField> chart_closed_form(std::shared_ptr<const Geometry> geo, SmoothMap U,
                                                          double s_max = 0.1, IntegratorOptions opt = {}) {
    if (U.domain_dim() != 3 || U.codomain_dim() != 3) throw std::invalid_argument("chart extension needs U(z1, z2, s) with 3 components");
    auto e = std::shared_ptr<ExtendedField>(
        new ExtendedField(geo, Spec{ExtensionKind::ChartClosedForm, false, std::nullopt}, nullptr, s_max, opt));
    e->chart_map_ = std::move(U);
    e->base_ = std::make_shared<RestrictedSurfaceField>(geo, e->self_view());
    return e;
  }

  /// U = v + s A + s^2 B, U^3 = s C + s^2 D with seeded random trigonometric A, B, C, D.
  static std::shared_ptr<ExtendedField> random_chart(std::shared_ptr<const Geometry> geo, const SmoothMap& v,
                                                     std::uint64_t seed, double s_max = 0.1,
                                                     IntegratorOptions opt = {}) {
    return chart_closed_form(std::move(geo),
                             SmoothMap::parse(random_chart_sources(v, seed), {"z1", "z2", "s"}, v.bindings()), s_max,
                             opt);
  }

  static std::vector<std::string> random_chart_sources(const SmoothMap& v, std::uint64_t seed) {
    if (v.domain_dim() != 2 || v.codomain_dim() != 2) throw std::invalid_argument("surface field needs 2 components in z");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    auto num = [&]() {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.6f", c(rng));
      return std::string(buf);
    };
    auto term = [&]() {
      return "(" + num() + ")*sin((" + num() + ")*z1 + (" + num() + ")) + (" + num() + ")*cos((" + num() + ")*z2 + (" +
             num() + "))";
    };
    std::vector<std::string> out;
    for (int j = 0; j < 2; ++j)
      out.push_back("(" + v.component(j).to_string() + ") + s*(" + term() + ") + s^2*(" + term() + ")");
    out.push_back("s*(" + term() + ") + s^2*(" + term() + ")");
    return out;
  }

  static std::shared_ptr<ExtendedField> compatible(std::shared_ptr<const Geometry> geo,
                                                   std::shared_ptr<const SurfaceField> v,
                                                   std::optional<SmoothMap> tangential = std::nullopt,
                                                   double s_max = 0.1, IntegratorOptions opt = {}) {
    return make(std::move(geo), Spec{ExtensionKind::Compatible, false, std::move(tangential)}, std::move(v), s_max, opt);
  }

  static std::shared_ptr<ExtendedField> divergence_free(std::shared_ptr<const Geometry> geo,
                                                        std::shared_ptr<const SurfaceField> v,
                                                        std::optional<SmoothMap> tangential = std::nullopt,
                                                        double s_max = 0.1, IntegratorOptions opt = {}) {
    return make(std::move(geo), Spec{ExtensionKind::DivergenceFree, false, std::move(tangential)}, std::move(v), s_max,
                opt);
  }

  static std::shared_ptr<ExtendedField> curl_normal(std::shared_ptr<const Geometry> geo,
                                                    std::shared_ptr<const SurfaceField> v, bool divfree,
                                                    double s_max = 0.1, IntegratorOptions opt = {}) {
    return make(std::move(geo), Spec{ExtensionKind::CurlNormal, divfree, std::nullopt}, std::move(v), s_max, opt);
  }

  ExtensionKind kind() const { return flow_.spec().kind; }
  bool divfree_rule() const {
    return kind() == ExtensionKind::DivergenceFree || (kind() == ExtensionKind::CurlNormal && flow_.spec().divfree);
  }
  double s_max() const { return s_max_; }
  const Geometry& geometry() const { return *geo_; }
  std::shared_ptr<const SurfaceField> base() const { return base_; }

  /// Highest y-jet order available at a point with the given normal coordinate.
  int available_order(double s) const {
    if (kind() == ExtensionKind::ClosedForm) return Jet::kMaxOrder;
    return s == 0.0 ? 3 : NormalChart::kTransportOrder;
  }

  SamplePoint at(const Point2& z, double s) const {
    if (kind() == ExtensionKind::ClosedForm && s == 0.0) return geo_->on_surface(z);
    const auto X = flow_.state_at(z, s, 1);
    return SamplePoint{{X[0].value(), X[1].value(), X[2].value()}, Point3{z[0], z[1], s}};
  }

  std::array<Jet, 3> components(const SamplePoint& p, int order) const override {
    if (kind() == ExtensionKind::ClosedForm) {
      auto v = y_map_->eval_jet(p.y, order);
      return {v[0], v[1], v[2]};
    }
    if (!p.tube) throw ExtensionError("extension queries need the tube coordinates (z1, z2, s) of the point");
    const Point3 tube = *p.tube;
    if (std::abs(tube[2]) > s_max_ * (1 + 1e-12)) throw ExtensionError("query outside the tube |s| <= s_max");
    const auto L = lifted(tube);
    const double dev = std::hypot(L[0].value() - p.y[0], L[1].value() - p.y[1], L[2].value() - p.y[2]);
    if (dev > 1e-8 * (1.0 + std::hypot(p.y[0], p.y[1], p.y[2])))
      throw ExtensionError("sample point does not lie at its tube coordinates");
    const std::array<Jet, 3> Phi{L[0], L[1], L[2]};
    const auto zs = invert(Phi, tube);
    std::array<Jet, 3> U;
    if (kind() == ExtensionKind::ChartClosedForm) {
      auto c = chart_map_->eval_jet(tube, Jet::kMaxOrder);
      U = {c[0], c[1], c[2]};
    } else {
      U = {L[3], L[4], L[5]};
    }
    std::array<Jet, 3> out;
    for (int j = 0; j < 3; ++j) {
      out[j] = compose(U[j], zs);
      if (out[j].order() < order)
        throw ExtensionError("extension jets are available to order " + std::to_string(out[j].order()) + " here");
      out[j] = out[j].truncated(order);
    }
    return out;
  }

  /// U, dU/ds and d^2U/ds^2 at (z, s) from the transported jets.
  NormalDerivatives normal_derivatives(const Point2& z, double s) const {
    const Point3 tube{z[0], z[1], s};
    const auto L = lifted(tube);
    const auto G = flow_.chart_only() ? L : flow_.rate(L, tube);
    NormalDerivatives n;
    for (int j = 0; j < 3; ++j) {
      if (kind() == ExtensionKind::ChartClosedForm) {
        const Jet c = chart_map_->eval_component_jet(j, tube, 2);
        n.u[j] = c.value();
        n.du[j] = c.d(2);
        n.d2u[j] = c.d(2, 2);
      } else if (kind() == ExtensionKind::ClosedForm) {
        throw ExtensionError("normal derivatives of a y-closed-form field are taken in y");
      } else {
        n.u[j] = L[3 + j].value();
        n.du[j] = G[3 + j].value();
        n.d2u[j] = G[3 + j].d(2);
      }
    }
    return n;
  }

  /// Stored normal curve through z sampled at the given s values (sorted away from 0).
  std::vector<CurveSample> curve(const Point2& z, const std::vector<double>& times) const {
    if (kind() == ExtensionKind::ClosedForm) throw ExtensionError("closed-form fields have no stored curves");
    std::vector<CurveSample> out;
    flow_.transport(z, times, 1, [&](double s, const FlowState& X) {
      CurveSample c;
      c.s = s;
      const auto G = flow_.rate(X, {z[0], z[1], s});
      for (int k = 0; k < 6; ++k) {
        c.x[k] = X[k].value();
        c.dx[k] = G[k].value();
      }
      if (kind() == ExtensionKind::ChartClosedForm) {
        const Point3 t{z[0], z[1], s};
        const auto u = chart_map_->eval(t);
        for (int j = 0; j < 3; ++j) c.x[3 + j] = u[j];
      }
      out.push_back(c);
    });
    return out;
  }

 private:
  ExtendedField(std::shared_ptr<const Geometry> geo, Spec spec, std::shared_ptr<const SurfaceField> v, double s_max,
                IntegratorOptions opt)
      : geo_(geo), flow_(geo, std::move(spec), v, opt), base_(std::move(v)), s_max_(s_max) {}

  static std::shared_ptr<ExtendedField> make(std::shared_ptr<const Geometry> geo, Spec spec,
                                             std::shared_ptr<const SurfaceField> v, double s_max,
                                             IntegratorOptions opt) {
    if (!v) throw std::invalid_argument("extension needs a surface field");
    return std::shared_ptr<ExtendedField>(new ExtendedField(std::move(geo), std::move(spec), std::move(v), s_max, opt));
  }

  /// Non-owning handle used by the restriction of chart/closed-form fields.
  std::shared_ptr<const AmbientField> self_view() const {
    return std::shared_ptr<const AmbientField>(std::shared_ptr<const AmbientField>{}, this);
  }

  FlowState lifted(const Point3& tube) const {
    const Point2 z{tube[0], tube[1]};
    const double s = tube[2];
    const int order = s == 0.0 ? Jet::kMaxOrder : NormalChart::kTransportOrder;
    return flow_.lift(flow_.state_at(z, s, order), tube);
  }

  std::shared_ptr<const Geometry> geo_;
  extension_detail::Flow flow_;
  std::shared_ptr<const SurfaceField> base_;
  double s_max_;
  std::optional<SmoothMap> y_map_, chart_map_;
};

}  // namespace bochner
