#pragma once

/// @file catalog.hpp
/// Built-in surfaces with their frames, reference fields and printed
/// closed-form values.

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bochner/decomposition.hpp"
#include "bochner/geometry.hpp"

namespace bochner {

class CatalogError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A closed-form value as a function of y, attached to one frame (empty: any frame).
struct ClosedForm {
  std::string quantity;
  std::string frame;
  SmoothMap expr;
  double tol = 1e-8;
};

struct CatalogEntry {
  std::string name;
  Bindings params;
  std::shared_ptr<const AmbientSpace> ambient;
  std::shared_ptr<const Surface> surface;
  std::vector<std::string> frame_names;
  std::map<std::string, std::shared_ptr<const AdaptedFrame>> frames;
  std::map<std::string, SmoothMap> fields;  // surface fields in frame components, functions of z
  std::vector<ClosedForm> closed_forms;
  Point2 z_lo{-1.0, 0.4}, z_hi{1.0, std::numbers::pi - 0.4};
  double s_max = 0.1;

  const std::string& default_frame() const { return frame_names.front(); }

  std::shared_ptr<const Geometry> geometry(const std::string& frame = "") const {
    const std::string f = frame.empty() ? default_frame() : frame;
    auto it = frames.find(f);
    if (it == frames.end()) {
      std::string known;
      for (const auto& n : frame_names) known += (known.empty() ? "" : ", ") + n;
      throw CatalogError("surface '" + name + "' has no frame '" + f + "' (available: " + known + ")");
    }
    return std::make_shared<Geometry>(surface, it->second);
  }

  std::shared_ptr<const SurfaceField> field(const std::string& n) const {
    auto it = fields.find(n);
    if (it == fields.end()) throw CatalogError("surface '" + name + "' has no reference field '" + n + "'");
    return std::make_shared<ClosedFormSurfaceField>(it->second);
  }

  std::vector<std::string> closed_form_quantities(const std::string& frame) const {
    std::vector<std::string> out;
    for (const auto& c : closed_forms)
      if (c.frame.empty() || c.frame == frame) out.push_back(c.quantity);
    return out;
  }
};

namespace catalog_detail {

inline const std::vector<std::string> kY{"y1", "y2", "y3"};
inline const std::vector<std::string> kZ{"z1", "z2"};

inline SmoothMap y_map(std::vector<std::string> src, const Bindings& b) { return SmoothMap::parse(src, kY, b); }
inline SmoothMap z_map(std::vector<std::string> src, const Bindings& b) { return SmoothMap::parse(src, kZ, b); }

inline std::shared_ptr<const AdaptedFrame> closed_frame(const std::string& name, const std::vector<std::string>& b1,
                                                        const std::vector<std::string>& b2,
                                                        const std::vector<std::string>& b3, const Bindings& p) {
  return std::make_shared<ClosedFormFrame>(name, std::array<SmoothMap, 3>{y_map(b1, p), y_map(b2, p), y_map(b3, p)});
}

inline double param(const Bindings& given, const std::string& key, double def) {
  auto it = given.find(key);
  return it == given.end() ? def : it->second;
}

inline void check_keys(const std::string& name, const Bindings& given, const std::vector<std::string>& allowed) {
  for (const auto& [k, v] : given) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw CatalogError("surface '" + name + "' has no parameter '" + k + "'");
    if (!std::isfinite(v)) throw CatalogError("parameter '" + k + "' must be finite");
  }
}

inline CatalogEntry ellipsoid(const std::string& name, double a) {
  if (!(a > 0)) throw CatalogError("parameter a must be positive");
  const Bindings p{{"a", a}};
  CatalogEntry e;
  e.name = name;
  e.params = p;
  e.ambient = std::make_shared<AmbientSpace>(
      AmbientSpace::flat(y_map({"a*y3*cos(y1)*sin(y2)", "a*y3*sin(y1)*sin(y2)", "y3*cos(y2)"}, p)));
  e.surface = std::make_shared<Surface>(e.ambient, z_map({"z1", "z2", "1"}, p));
  const std::string lam = "sqrt(a^2*cos(y2)^2 + sin(y2)^2)";
  const std::string lamh = "sqrt(a^2*sin(y2)^2 + cos(y2)^2)";
  e.frames["coordinate"] = closed_frame("coordinate", {"1/(a*y3*sin(y2))", "0", "0"}, {"0", "1/(y3*" + lam + ")", "0"},
                                        {"0", "(1 - a^2)*sin(2*y2)/(2*a*y3*" + lam + ")", lam + "/a"}, p);
  const std::string mu0 = "((y3 - 1)^2*" + lamh + "^2 + a^2*y3^2*sin(y2)^2)";
  const std::string mu1 = "((y3 - 1)^2 + y3^2*" + lam + "^2*sin(y2)^2)";
  const std::string r01 = "sqrt(" + mu0 + "*" + mu1 + ")";
  e.frames["tilted"] = closed_frame(
      "tilted", {"1/sqrt(" + mu0 + ")", "0", "(y3 - 1)/sqrt(" + mu0 + ")"},
      {"(1 - a^2)*(y3 - 1)*sin(2*y2)/(2*a*" + r01 + ")", "sqrt(" + mu0 + ")/(a*y3*sqrt(" + mu1 + "))",
       "(1 - a^2)*(y3 - 1)^2*sin(2*y2)/(2*a*" + r01 + ")"},
      {"-(y3 - 1)/(a*y3*sin(y2)*sqrt(" + mu1 + "))", "(1 - a^2)*sin(2*y2)*sin(y2)/(2*a*sqrt(" + mu1 + "))",
       "y3*" + lam + "^2*sin(y2)/(a*sqrt(" + mu1 + "))"},
      p);
  e.frame_names = {"coordinate", "tilted"};

  const std::string lz = "sqrt(a^2*cos(z2)^2 + sin(z2)^2)";
  e.fields["divfree-example"] = z_map({"a*z1/" + lz, "-z2/sin(z2)"}, p);
  e.fields["rotation"] = z_map({"a*sin(z2)", "0"}, p);

  auto cf = [&](const std::string& q, const std::string& frame, const std::string& src, double tol) {
    e.closed_forms.push_back({q, frame, y_map({src}, p), tol});
  };
  const std::string L = "(" + lam + ")";
  cf("kappa", "", "1/" + L + "^4", 1e-8);
  cf("2H", "", "-1/(a*" + L + ") - a/" + L + "^3", 1e-8);
  cf("t11", "coordinate", "-1/(a*y3*" + L + ")", 1e-8);
  cf("t22", "coordinate", "-a/(y3*" + L + "^3)", 1e-8);
  cf("omega13_b1", "coordinate", "1/(a*y3*" + L + ")", 1e-8);
  cf("omega23_b2", "coordinate", "a/(y3*" + L + "^3)", 1e-8);
  cf("omega12_b1", "coordinate", "cos(y2)/(y3*" + L + "*sin(y2))", 1e-8);
  cf("omega23_b3", "coordinate", "(1 - a^2)*sin(2*y2)/(2*y3*" + L + "^3)", 1e-8);
  cf("gamma3", "coordinate", "0", 1e-8);
  cf("g_X3_w", "coordinate", "0", 1e-8);
  cf("E11", "coordinate", "0", 1e-6);
  cf("E12", "coordinate", "0", 1e-6);
  cf("E21", "coordinate", "0", 1e-6);
  cf("E22", "coordinate", "(1 - a^2)^2*sin(2*y2)^2/(4*" + L + "^6)", 1e-6);
  cf("gamma3", "tilted", "(1 - a^2)*cos(y2)/a^2", 1e-8);
  cf("g_X3_w", "tilted", "-cos(y2)/(a*" + L + "*sin(y2)^2)", 1e-8);
  cf("E11", "tilted", "(" + L + "^4 - (1 + a^2)*" + L + "^2 + 2*a^2)/(a^4*sin(y2)^2)", 1e-6);
  cf("E12", "tilted", "(a^2 - 1)*cos(y2)*(3*" + L + "^2 - a^2)/(a^3*" + L + ")", 1e-6);
  cf("E21", "tilted", "(a^2 - 1)*cos(y2)*(2*a^2 + " + L + "^2*a^2 - 3*" + L + "^4)/(a^3*" + L + "^3)", 1e-6);
  cf("E22", "tilted", "(" + L + "^2 - 1)*((1 - a^2)*" + L + "^6 - a^4*" + L + "^2 + a^6)/(a^4*" + L + "^6)", 1e-6);
  return e;
}

inline std::shared_ptr<const AdaptedFrame> standard_frame() {
  return closed_frame("standard", {"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}, {});
}

}  // namespace catalog_detail

/// Names accepted by catalog_get.
inline const std::vector<std::string>& catalog_names() {
  static const std::vector<std::string> n{"ellipsoid", "paper-ellipsoid", "unit-sphere", "flat-plane",
                                          "graph-surface", "torus", "sphere-cap-s3"};
  return n;
}

/// Catalog entry by name. String parameters (graph-surface "h") go in `expr_params`.
inline CatalogEntry catalog_get(const std::string& name, const Bindings& params = {},
                                const std::map<std::string, std::string>& expr_params = {}) {
  using namespace catalog_detail;
  if (name == "ellipsoid" || name == "paper-ellipsoid") {
    check_keys(name, params, {"a"});
    return ellipsoid(name, param(params, "a", 2.0));
  }
  if (name == "unit-sphere") {
    check_keys(name, params, {});
    return ellipsoid(name, 1.0);
  }
  if (name == "flat-plane") {
    check_keys(name, params, {});
    CatalogEntry e;
    e.name = name;
    e.ambient = std::make_shared<AmbientSpace>(AmbientSpace::flat(y_map({"y1", "y2", "y3"}, {})));
    e.surface = std::make_shared<Surface>(e.ambient, z_map({"z1", "z2", "0"}, {}));
    e.frames["standard"] = standard_frame();
    e.frames["normal-tube"] = std::make_shared<NormalTubeFrame>("normal-tube", e.z_lo, e.z_hi);
    e.frame_names = {"standard", "normal-tube"};
    e.fields["divfree-example"] = z_map({"sin(z2)", "cos(z1)"}, {});
    e.fields["rotation"] = z_map({"-z2", "z1"}, {});
    for (const std::string q : {"kappa", "2H", "gamma3", "g_X3_w", "E11", "E12", "E21", "E22"})
      e.closed_forms.push_back({q, "", y_map({"0"}, {}), 1e-12});
    return e;
  }
  if (name == "graph-surface") {
    check_keys(name, params, {});
    for (const auto& [k, v] : expr_params)
      if (k != "h") throw CatalogError("surface '" + name + "' has no parameter '" + k + "'");
    const std::string h = expr_params.count("h") ? expr_params.at("h") : "0.3*sin(z1)*cos(z2)";
    CatalogEntry e;
    e.name = name;
    e.ambient = std::make_shared<AmbientSpace>(AmbientSpace::flat(y_map({"y1", "y2", "y3"}, {})));
    e.surface = std::make_shared<Surface>(e.ambient, z_map({"z1", "z2", h}, {}));
    e.frames["normal-tube"] = std::make_shared<NormalTubeFrame>("normal-tube", e.z_lo, e.z_hi);
    e.frame_names = {"normal-tube"};
    e.fields["divfree-example"] = z_map({"sin(z2)", "cos(z1)"}, {});
    return e;
  }
  if (name == "torus") {
    check_keys(name, params, {"R", "r"});
    const double R = param(params, "R", 2.0), r = param(params, "r", 0.5);
    if (!(r > 0 && R > r)) throw CatalogError("torus needs R > r > 0");
    const Bindings p{{"R", R}, {"r", r}};
    CatalogEntry e;
    e.name = name;
    e.params = p;
    e.ambient = std::make_shared<AmbientSpace>(AmbientSpace::flat(y_map({"y1", "y2", "y3"}, {})));
    e.surface =
        std::make_shared<Surface>(e.ambient, z_map({"(R + r*cos(z2))*cos(z1)", "(R + r*cos(z2))*sin(z1)", "r*sin(z2)"}, p));
    const std::string rho = "sqrt(y1^2 + y2^2)";
    const std::string dd = "sqrt((" + rho + " - R)^2 + y3^2)";
    e.frames["toroidal"] = closed_frame(
        "toroidal", {"-y2/" + rho, "y1/" + rho, "0"},
        {"-y3*y1/(" + rho + "*" + dd + ")", "-y3*y2/(" + rho + "*" + dd + ")", "(" + rho + " - R)/" + dd},
        {"(" + rho + " - R)*y1/(" + rho + "*" + dd + ")", "(" + rho + " - R)*y2/(" + rho + "*" + dd + ")",
         "y3/" + dd},
        p);
    e.frames["normal-tube"] = std::make_shared<NormalTubeFrame>("normal-tube", Point2{-1.0, -2.0}, Point2{1.0, 2.0});
    e.frame_names = {"toroidal", "normal-tube"};
    e.z_lo = {-1.0, -2.0};
    e.z_hi = {1.0, 2.0};
    e.fields["rotation"] = z_map({"R + r*cos(z2)", "0"}, p);
    e.closed_forms.push_back({"kappa", "", y_map({"(sqrt(y1^2 + y2^2) - R)/(r^2*sqrt(y1^2 + y2^2))"}, p), 1e-8});
    return e;
  }
  if (name == "sphere-cap-s3") {
    check_keys(name, params, {"c"});
    const double c = param(params, "c", 1.0);
    if (!(c > 0.2 && c < std::numbers::pi - 0.2)) throw CatalogError("sphere-cap-s3 needs 0.2 < c < pi - 0.2");
    const Bindings p{{"c", c}};
    CatalogEntry e;
    e.name = name;
    e.params = p;
    e.ambient = std::make_shared<AmbientSpace>(
        AmbientSpace::explicit_metric(y_map({"1", "0", "0", "sin(y1)^2", "0", "sin(y1)^2*sin(y2)^2"}, p)));
    e.surface = std::make_shared<Surface>(e.ambient, z_map({"c", "z2", "z1"}, p));
    e.frames["coordinate"] =
        closed_frame("coordinate", {"0", "0", "1/(sin(y1)*sin(y2))"}, {"0", "1/sin(y1)", "0"}, {"1", "0", "0"}, p);
    e.frame_names = {"coordinate"};
    e.fields["rotation"] = z_map({"sin(c)*sin(z2)", "0"}, p);
    // Distance sphere of radius c in the unit 3-sphere.
    e.closed_forms.push_back({"kappa", "", y_map({"cos(c)^2/sin(c)^2"}, p), 1e-8});
    return e;
  }
  throw CatalogError("unknown surface '" + name + "'");
}

/// Printed and computed value of one closed-form quantity at z.
struct ClosedFormCheck {
  std::string quantity;
  double printed = 0, computed = 0, deviation = 0, tol = 0;
};

/// Value of a named quantity computed by the geometry and decomposition routes.
inline double computed_quantity(const Geometry& geo, const std::string& q, const Point2& z) {
  const FrameData d = frame_data(geo, geo.on_surface(z));
  if (q == "kappa") return d.kappa;
  if (q == "2H") return 2 * d.H;
  if (q == "t11") return d.t[0][0];
  if (q == "t22") return d.t[1][1];
  if (q == "omega13_b1") return d.omega[0][2][0];
  if (q == "omega23_b2") return d.omega[1][2][1];
  if (q == "omega12_b1") return d.omega[0][1][0];
  if (q == "omega23_b3") return d.omega[1][2][2];
  if (q == "gamma3") return d.gamma[2];
  if (q == "g_X3_w") return d.alpha[0] * d.w[0] + d.alpha[1] * d.w[1];
  if (q.size() == 3 && q[0] == 'E' && (q[1] == '1' || q[1] == '2') && (q[2] == '1' || q[2] == '2')) {
    const ClosedFormSurfaceField zero(SmoothMap::parse({"0", "0"}, {"z1", "z2"}));
    const ClosedFormAmbientField u0(SmoothMap::parse({"0", "0", "0"}, {"y1", "y2", "y3"}));
    const PointEvaluation pe(geo, u0, zero, z);
    return pe.aux().E[q[1] - '1'][q[2] - '1'];
  }
  throw CatalogError("no computed route for quantity '" + q + "'");
}

inline ClosedFormCheck closed_form_check(const CatalogEntry& e, const std::string& frame, const std::string& q,
                                         const Point2& z) {
  const std::string f = frame.empty() ? e.default_frame() : frame;
  for (const auto& c : e.closed_forms) {
    if (c.quantity != q || !(c.frame.empty() || c.frame == f)) continue;
    const auto geo = e.geometry(f);
    ClosedFormCheck r;
    r.quantity = q;
    r.tol = c.tol;
    r.printed = c.expr.eval(geo->surface().embed(z))[0];
    r.computed = computed_quantity(*geo, q, z);
    r.deviation = std::abs(r.printed - r.computed);
    return r;
  }
  throw CatalogError("quantity '" + q + "' has no closed form for surface '" + e.name + "' with frame '" + f + "'");
}

}  // namespace bochner
