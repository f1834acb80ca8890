#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bochner/catalog.hpp"
#include "bochner/extension.hpp"

using namespace bochner;

namespace {

const std::vector<std::string> kY{"y1", "y2", "y3"};
const std::vector<std::string> kZ{"z1", "z2"};

std::shared_ptr<const SurfaceField> z_field(const std::vector<std::string>& src) {
  return std::make_shared<ClosedFormSurfaceField>(SmoothMap::parse(src, kZ));
}

const std::vector<std::string> kRandomV{"0.4*sin(z1) + cos(z2)", "0.3*z1*z2 - 0.2"};

std::vector<Point2> random_z(std::uint64_t seed, int n, Point2 lo, Point2 hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> out;
  for (int i = 0; i < n; ++i) out.push_back({lo[0] + u(rng) * (hi[0] - lo[0]), lo[1] + u(rng) * (hi[1] - lo[1])});
  return out;
}

double lambda(double a, double y2) { return std::sqrt(a * a * std::cos(y2) * std::cos(y2) + std::sin(y2) * std::sin(y2)); }

}  // namespace

// ---- normal chart --------------------------------------------------------------

TEST(NormalChartTest, FlatPlaneIsIdentity) {
  const auto e = catalog_get("flat-plane");
  const NormalChart chart(e.geometry("standard"), 0.1);
  const Point3 y = chart.point({0.2, 0.3}, 0.07);
  EXPECT_NEAR(y[0], 0.2, 1e-14);
  EXPECT_NEAR(y[1], 0.3, 1e-14);
  EXPECT_NEAR(y[2], 0.07, 1e-14);
  const auto J = chart.jets({0.2, 0.3}, 0.07);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(J[i].d(k), i == k ? 1.0 : 0.0, 1e-12);
}

TEST(NormalChartTest, UnitSphereNormalsAreRadialLines) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 1.0}});
  const auto geo = e.geometry("coordinate");
  const NormalChart chart(geo, 0.1);
  for (const auto& z : random_z(1, 10, e.z_lo, e.z_hi)) {
    for (double s : {-0.09, 0.04, 0.1}) {
      const Point3 y = chart.point(z, s);
      const auto x = e.ambient->psi().eval(y);
      const double r = 1.0 + s;
      EXPECT_NEAR(x[0], r * std::cos(z[0]) * std::sin(z[1]), 1e-10);
      EXPECT_NEAR(x[1], r * std::sin(z[0]) * std::sin(z[1]), 1e-10);
      EXPECT_NEAR(x[2], r * std::cos(z[1]), 1e-10);
    }
  }
}

TEST(NormalChartTest, FoldOverDetected) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 1.0}});
  const auto geo = e.geometry("coordinate");
  EXPECT_THROW(NormalChart(geo, 2.0).check({{0.1, 1.0}}), FoldOverError);
  EXPECT_NO_THROW(NormalChart(geo, 0.5).check({{0.1, 1.0}}));
  try {
    NormalChart(geo, 2.0).check({{0.1, 1.0}});
  } catch (const FoldOverError& err) {
    EXPECT_NE(std::string(err.what()).find("0.1"), std::string::npos);
  }
}

TEST(NormalChartTest, UnitSpeed) {
  for (const auto& [name, frame] : std::vector<std::pair<std::string, std::string>>{
           {"paper-ellipsoid", "tilted"}, {"graph-surface", "normal-tube"}, {"torus", "toroidal"}}) {
    const auto e = catalog_get(name, name == "paper-ellipsoid" ? Bindings{{"a", 2.0}} : Bindings{});
    const NormalChart chart(e.geometry(frame), e.s_max);
    for (const auto& z : random_z(2, 10, e.z_lo, e.z_hi))
      for (double s : {-0.08, 0.0, 0.05}) EXPECT_LE(chart.unit_speed_deviation(z, s), 1e-9) << name;
  }
}

// ---- compatible ----------------------------------------------------------------

TEST(Compatible, FlatPlaneHasZeroNormalComponent) {
  const auto e = catalog_get("flat-plane");
  const auto geo = e.geometry("standard");
  const auto u = ExtendedField::compatible(geo, e.field("divfree-example"));
  for (const auto& z : random_z(3, 10, e.z_lo, e.z_hi))
    for (double s : {-0.05, 0.0, 0.05}) EXPECT_EQ(u->components(u->at(z, s), 0)[2].value(), 0.0);
}

TEST(Compatible, DivergenceAndRhoOnSurface) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  for (const std::string f : {"coordinate", "tilted"}) {
    const auto geo = e.geometry(f);
    const auto v = e.field("divfree-example");
    const auto u = ExtendedField::compatible(geo, v);
    for (const auto& z : random_z(4, 15, e.z_lo, e.z_hi)) {
      const AmbientContext c(*geo, *u, u->at(z, 0.0), 1);
      const SurfaceContext sc(*geo, *v, z, 2);
      EXPECT_NEAR(ops::div_frame(c).value(), ops::div_surface_coord(sc).value(), 1e-8) << f;
      const Vec3 split = ops::normal_derivative_split(c);
      EXPECT_NEAR(split[2], 0.0, 1e-9) << f;  // rho, and the normal part of nabla_{b^3} u
    }
  }
}

TEST(Compatible, TransportedJetsSolveThePde) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("tilted");
  const auto u = ExtendedField::compatible(geo, z_field(kRandomV));
  for (const auto& z : random_z(5, 10, e.z_lo, e.z_hi)) {
    const AmbientContext c(*geo, *u, u->at(z, 0.03), 1);
    const double r = c.F.along(2, c.U[2]).value() - c.s.alpha[0].value() * c.U[0].value() -
                     c.s.alpha[1].value() * c.U[1].value();
    EXPECT_NEAR(r, 0.0, 1e-8);
  }
}

// ---- divergence-free -----------------------------------------------------------

TEST(DivergenceFree, FlatPlaneConstantRule) {
  const auto e = catalog_get("flat-plane");
  const auto geo = e.geometry("standard");
  const auto u = ExtendedField::divergence_free(geo, e.field("divfree-example"));
  for (const auto& z : random_z(6, 10, e.z_lo, e.z_hi))
    for (double s : {-0.05, 0.05}) {
      const AmbientContext c(*geo, *u, u->at(z, s), 1);
      EXPECT_NEAR(c.U[2].value(), 0.0, 1e-12);
      EXPECT_NEAR(ops::div_coord(c).value(), 0.0, 1e-12);
    }
}

TEST(DivergenceFree, DivergenceVanishesInTube) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  for (const std::string f : {"coordinate", "tilted"}) {
    const auto geo = e.geometry(f);
    const auto v = z_field(kRandomV);
    const auto u = ExtendedField::divergence_free(geo, v);
    for (const auto& z : random_z(7, 10, e.z_lo, e.z_hi)) {
      for (double s : {-0.05, 0.05}) {
        const AmbientContext c(*geo, *u, u->at(z, s), 1);
        EXPECT_LE(std::abs(ops::div_coord(c).value()), 1e-7) << f;
      }
      // On M, rho = -div(v).
      const AmbientContext c0(*geo, *u, u->at(z, 0.0), 1);
      const SurfaceContext sc(*geo, *v, z, 2);
      EXPECT_NEAR(ops::normal_derivative_split(c0)[2], -ops::div_surface_coord(sc).value(), 1e-8) << f;
    }
  }
}

TEST(DivergenceFree, SecondNormalDerivativeMatchesCurves) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("tilted");
  const auto u = ExtendedField::divergence_free(geo, z_field(kRandomV));
  const double h = 1e-3;
  for (const auto& z : random_z(8, 5, e.z_lo, e.z_hi)) {
    for (double s : {0.0, 0.04}) {
      const auto n = u->normal_derivatives(z, s);
      const auto C = u->curve(z, {s - h, s, s + h});
      ASSERT_EQ(C.size(), 3u);
      const double fd2 = (C[2].x[5] - 2 * C[1].x[5] + C[0].x[5]) / (h * h);
      const double fd1 = (C[2].dx[5] - C[0].dx[5]) / (2 * h);
      EXPECT_NEAR(n.d2u[2], fd2, 1e-5);
      EXPECT_NEAR(n.d2u[2], fd1, 1e-5);
      EXPECT_NEAR(n.du[2], C[1].dx[5], 1e-10);
    }
  }
}

TEST(DivergenceFree, WorkedOdeOnEllipsoid) {
  // u^1 = a y1/lambda, u^2 = -y2/sin(y2), u^3 = 0: on M the divergence-free equation for u^3 reads
  // b^3(u^3) + (a^2 + lambda^2)/(a lambda^3 y3) u^3 = (a^2 - 1) cos(y2) y2/lambda^3.
  for (double a : {0.5, 2.0}) {
    const auto e = catalog_get("paper-ellipsoid", {{"a", a}});
    const auto geo = e.geometry("coordinate");
    const ClosedFormAmbientField u(SmoothMap::parse(
        {"a*y1/sqrt(a^2*cos(y2)^2 + sin(y2)^2)", "-y2/sin(y2)", "0"}, kY, {{"a", a}}));
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ur(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      const Point3 y{-1 + 2 * ur(rng), 0.4 + 2.3 * ur(rng), 0.92 + 0.16 * ur(rng)};
      const AmbientContext c(*geo, u, SamplePoint{y, std::nullopt}, 1);
      const double L = lambda(a, y[1]);
      const double forcing = -ops::div_frame(c).value();
      // Volume density a^2 y3^2 sin(y2) gives the forcing below; on M (y3 = 1) it is the display above.
      EXPECT_NEAR(forcing, (a * a - 1) * std::cos(y[1]) * y[1] / (y[2] * std::pow(L, 3)), 1e-8);
      const double trace = c.s.t[0][0].value() + c.s.t[1][1].value();
      EXPECT_NEAR(-trace, (a * a + L * L) / (a * std::pow(L, 3) * y[2]), 1e-8);
      EXPECT_NEAR(c.F.b[2][1].value(), (1 - a * a) * std::sin(2 * y[1]) / (2 * a * y[2] * L), 1e-12);
      EXPECT_NEAR(c.F.b[2][2].value(), L / a, 1e-12);
    }
    for (const auto& z : random_z(9, 10, e.z_lo, e.z_hi)) {
      const AmbientContext c(*geo, u, geo->on_surface(z), 1);
      const double L = lambda(a, z[1]);
      EXPECT_NEAR(-ops::div_frame(c).value(), (a * a - 1) * std::cos(z[1]) * z[1] / std::pow(L, 3), 1e-9);
    }
  }
}

TEST(DivergenceFree, ToleranceHalvingIsStable) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("tilted");
  const double tol = 1e-9;
  const auto coarse = ExtendedField::divergence_free(geo, z_field(kRandomV), std::nullopt, 0.1, {tol, tol});
  const auto fine = ExtendedField::divergence_free(geo, z_field(kRandomV), std::nullopt, 0.1, {tol / 2, tol / 2});
  for (const auto& z : random_z(10, 5, e.z_lo, e.z_hi)) {
    const double a = coarse->normal_derivatives(z, 0.1).u[2], b = fine->normal_derivatives(z, 0.1).u[2];
    EXPECT_LT(std::abs(a - b), 10 * tol);
  }
}

// ---- curl-normal ---------------------------------------------------------------

TEST(CurlNormal, FlatPlaneConstantAlongNormals) {
  const auto e = catalog_get("flat-plane");
  const auto geo = e.geometry("standard");
  const auto v = e.field("divfree-example");
  const auto u = ExtendedField::curl_normal(geo, v, false);
  for (const auto& z : random_z(11, 10, e.z_lo, e.z_hi)) {
    const auto V = v->components(z, 0);
    for (double s : {-0.05, 0.05}) {
      const auto U = u->components(u->at(z, s), 0);
      EXPECT_NEAR(U[0].value(), V[0].value(), 1e-12);
      EXPECT_NEAR(U[1].value(), V[1].value(), 1e-12);
      EXPECT_NEAR(U[2].value(), 0.0, 1e-12);
    }
    const AmbientContext c(*geo, *u, u->at(z, 0.0), 1);
    const SurfaceContext sc(*geo, *v, z, 2);
    const Vec3 w = ops::curl(c);
    EXPECT_NEAR(w[0], 0.0, 1e-12);
    EXPECT_NEAR(w[1], 0.0, 1e-12);
    EXPECT_NEAR(w[2], ops::rot_surface(sc), 1e-12);
  }
}

TEST(CurlNormal, DecoupledSystemForCoordinateFrame) {
  const double a = 2.0;
  const auto e = catalog_get("paper-ellipsoid", {{"a", a}});
  const auto geo = e.geometry("coordinate");
  const auto u = ExtendedField::curl_normal(geo, z_field(kRandomV), false);
  for (const auto& z : random_z(12, 5, e.z_lo, e.z_hi)) {
    for (const auto& c : u->curve(z, {-0.08, -0.02, 0.03, 0.09})) {
      const double y2 = c.x[1], y3 = c.x[2], L = lambda(a, y2);
      EXPECT_NEAR(c.dx[3], -c.x[3] / (a * y3 * L), 1e-9);
      EXPECT_NEAR(c.dx[4], -a * c.x[4] / (y3 * std::pow(L, 3)), 1e-9);
    }
  }
}

TEST(CurlNormal, CurlIsNormalOnSurface) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  for (const std::string f : {"coordinate", "tilted"}) {
    const auto geo = e.geometry(f);
    const auto v = z_field(kRandomV);
    for (bool divfree : {false, true}) {
      const auto u = ExtendedField::curl_normal(geo, v, divfree);
      for (const auto& z : random_z(13, 10, e.z_lo, e.z_hi)) {
        const AmbientContext c(*geo, *u, u->at(z, 0.0), 1);
        const SurfaceContext sc(*geo, *v, z, 2);
        const Vec3 w = ops::curl(c);
        EXPECT_LE(std::abs(w[0]), 1e-7) << f;
        EXPECT_LE(std::abs(w[1]), 1e-7) << f;
        EXPECT_NEAR(w[2], ops::rot_surface(sc), 1e-7) << f;
        const double div_u = ops::div_coord(c).value(), div_v = ops::div_surface_coord(sc).value();
        if (divfree)
          EXPECT_NEAR(div_u, 0.0, 1e-7);
        else
          EXPECT_NEAR(div_u, div_v, 1e-8);
      }
    }
  }
}

// ---- field jets ---------------------------------------------------------------

TEST(FieldJets, RestrictionIdentity) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("tilted");
  const auto v = z_field(kRandomV);
  const SmoothMap vm = SmoothMap::parse(kRandomV, kZ);
  std::vector<std::shared_ptr<ExtendedField>> all{
      ExtendedField::compatible(geo, v), ExtendedField::divergence_free(geo, v),
      ExtendedField::curl_normal(geo, v, false), ExtendedField::curl_normal(geo, v, true),
      ExtendedField::random_chart(geo, vm, 5)};
  for (const auto& u : all)
    for (const auto& z : random_z(14, 10, e.z_lo, e.z_hi)) {
      const auto U = u->components(u->at(z, 0.0), 0);
      const auto V = v->components(z, 0);
      EXPECT_NEAR(U[0].value(), V[0].value(), 1e-10) << to_string(u->kind());
      EXPECT_NEAR(U[1].value(), V[1].value(), 1e-10) << to_string(u->kind());
      EXPECT_NEAR(U[2].value(), 0.0, 1e-10) << to_string(u->kind());
    }
}

TEST(FieldJets, ClosedFormUsesExpressionJets) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("coordinate");
  const SmoothMap m = SmoothMap::parse({"sin(y1)*y3", "y2^2", "(y3 - 1)*cos(y2)"}, kY);
  const auto u = ExtendedField::closed_form(geo, m);
  const SamplePoint p{{0.2, 1.1, 1.04}, std::nullopt};
  const auto U = u->components(p, 3);
  const auto ref = m.eval_jet(p.y, 3);
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 3; ++k) {
      EXPECT_NEAR(U[j].d(k), ref[j].d(k), 1e-12);
      EXPECT_NEAR(U[j].d(k, 2), ref[j].d(k, 2), 1e-12);
    }
}

TEST(FieldJets, AvailableOrders) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto u = ExtendedField::compatible(e.geometry("tilted"), e.field("divfree-example"));
  EXPECT_EQ(u->available_order(0.0), 3);
  EXPECT_EQ(u->available_order(0.05), 2);
  EXPECT_NO_THROW(u->components(u->at({0.1, 1.0}, 0.05), 2));
  EXPECT_THROW(u->components(u->at({0.1, 1.0}, 0.05), 3), ExtensionError);
}

TEST(FieldJets, OutOfTubeQueriesRejected) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("tilted");
  const auto u = ExtendedField::compatible(geo, e.field("divfree-example"), std::nullopt, 0.05);
  const SamplePoint inside = u->at({0.1, 1.0}, 0.05);
  EXPECT_NO_THROW(u->components(inside, 1));
  EXPECT_THROW(u->components(SamplePoint{inside.y, Point3{0.1, 1.0, 0.2}}, 1), ExtensionError);
  EXPECT_THROW(u->components(SamplePoint{inside.y, std::nullopt}, 1), ExtensionError);
  EXPECT_THROW(u->components(SamplePoint{inside.y, Point3{0.1, 1.0, 0.04}}, 1), ExtensionError);
}
