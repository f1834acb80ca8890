#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bochner/catalog.hpp"
#include "oracle.hpp"

using namespace bochner;

namespace {

constexpr double kPi = std::numbers::pi;
const std::vector<std::string> kY{"y1", "y2", "y3"};

double lambda(double a, double y2) { return std::sqrt(a * a * std::cos(y2) * std::cos(y2) + std::sin(y2) * std::sin(y2)); }

std::vector<Point2> random_z(std::uint64_t seed, int n, Point2 lo, Point2 hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point2> out;
  for (int i = 0; i < n; ++i) out.push_back({lo[0] + u(rng) * (hi[0] - lo[0]), lo[1] + u(rng) * (hi[1] - lo[1])});
  return out;
}

double gram_deviation(const Geometry& geo, const SamplePoint& p) {
  const FrameJets F = geo.jets(p, 0);
  double dev = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) dev = std::max(dev, std::abs(F.inner(F.b[a], F.b[b]).value() - (a == b ? 1.0 : 0.0)));
  return dev;
}

struct Case {
  std::string surface;
  Bindings params;
  std::string frame;
};

const std::vector<Case> kFrames{{"paper-ellipsoid", {{"a", 2.0}}, "coordinate"},
                                {"paper-ellipsoid", {{"a", 2.0}}, "tilted"},
                                {"paper-ellipsoid", {{"a", 0.5}}, "tilted"},
                                {"torus", {}, "toroidal"},
                                {"torus", {}, "normal-tube"},
                                {"graph-surface", {}, "normal-tube"},
                                {"sphere-cap-s3", {}, "coordinate"}};

}  // namespace

// ---- metric ----------------------------------------------------------------

TEST(Metric, IdentityPullbackIsEuclidean) {
  const auto amb = AmbientSpace::flat(SmoothMap::parse({"y1", "y2", "y3"}, kY));
  const auto g = amb.metric({0.3, -1.2, 2.0}, 2);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      EXPECT_EQ(g[i][j].value(), i == j ? 1.0 : 0.0);
      for (int k = 0; k < 3; ++k) EXPECT_EQ(g[i][j].d(k), 0.0);
    }
}

TEST(Metric, SphericalPullbackMatchesJacobianProduct) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 1.0}});
  const Point3 y{0.4, 1.1, 1.3};
  const auto g = e.ambient->metric(y, 2);
  const double s = std::sin(y[1]);
  EXPECT_NEAR(g[0][0].value(), y[2] * y[2] * s * s, 1e-14);
  EXPECT_NEAR(g[1][1].value(), y[2] * y[2], 1e-14);
  EXPECT_NEAR(g[2][2].value(), 1.0, 1e-14);
  EXPECT_NEAR(g[0][1].value(), 0.0, 1e-14);
  EXPECT_NEAR(g[0][2].value(), 0.0, 1e-14);
  EXPECT_NEAR(g[1][2].value(), 0.0, 1e-14);
  // d/dy2 and d/dy3 of g11 against finite differences of the closed form.
  const oracle::Fn g11 = [](const std::vector<double>& p) { return p[2] * p[2] * std::pow(std::sin(p[1]), 2); };
  const std::vector<double> p{y[0], y[1], y[2]};
  EXPECT_NEAR(g[0][0].d(1), oracle::partial(g11, p, {0, 1, 0}), 1e-8);
  EXPECT_NEAR(g[0][0].d(1, 2), oracle::partial(g11, p, {0, 1, 1}), 1e-6);
}

TEST(Metric, ConstantExplicitMetricReturnedVerbatim) {
  const auto amb = AmbientSpace::explicit_metric(SmoothMap::parse({"2", "0.5", "0", "3", "0.1", "1.5"}, kY));
  const auto g = amb.metric({0.1, 0.2, 0.3}, 2);
  EXPECT_EQ(g[0][0].value(), 2.0);
  EXPECT_EQ(g[0][1].value(), 0.5);
  EXPECT_EQ(g[1][0].value(), 0.5);
  EXPECT_EQ(g[1][2].value(), 0.1);
  EXPECT_EQ(g[2][2].value(), 1.5);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(g[0][1].d(k), 0.0);
}

TEST(Metric, SingularAndIndefiniteRejected) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  EXPECT_THROW(e.ambient->metric({0.3, 1.0, 0.0}, 1), GeometryError);
  const auto bad = AmbientSpace::explicit_metric(SmoothMap::parse({"1", "0", "0", "-1", "0", "1"}, kY));
  EXPECT_THROW(bad.metric({0.0, 0.0, 0.0}, 1), GeometryError);
}

// ---- frames ----------------------------------------------------------------

TEST(Frame, FlatPlaneStandardFrame) {
  const auto e = catalog_get("flat-plane");
  const auto geo = e.geometry("standard");
  const FrameJets F = geo->jets(geo->on_surface({0.2, -0.4}), 1);
  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < 3; ++i) EXPECT_EQ(F.b[a][i].value(), a == i ? 1.0 : 0.0);
}

TEST(Frame, CoordinateFrameOrthonormalAtPoint) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("coordinate");
  EXPECT_LT(gram_deviation(*geo, SamplePoint{{0.3, 1.0, 1.0}, std::nullopt}), 1e-12);
}

TEST(Frame, TiltedEqualsCoordinateOnSurface) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto k = e.geometry("coordinate"), t = e.geometry("tilted");
  for (const auto& z : random_z(1, 30, e.z_lo, e.z_hi)) {
    const auto p = k->on_surface(z);
    const FrameJets A = k->jets(p, 0), B = t->jets(p, 0);
    for (int a = 0; a < 3; ++a)
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(A.b[a][i].value(), B.b[a][i].value(), 1e-10);
  }
  // Off the surface the frames differ.
  const SamplePoint off{{0.3, 1.0, 1.05}, std::nullopt};
  EXPECT_GT(std::abs(k->jets(off, 0).b[0][2].value() - t->jets(off, 0).b[0][2].value()), 1e-3);
}

TEST(Frame, OrthonormalityOnRandomPoints) {
  for (const auto& c : kFrames) {
    const auto e = catalog_get(c.surface, c.params);
    const auto geo = e.geometry(c.frame);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> us(-e.s_max, e.s_max);
    for (const auto& z : random_z(2, 200, e.z_lo, e.z_hi)) {
      const double s = us(rng);
      const Point3 y = geo->surface().embed(z);
      const FrameJets F = geo->jets(geo->on_surface(z), 0);
      const SamplePoint p{{y[0] + s * F.b[2][0].value(), y[1] + s * F.b[2][1].value(), y[2] + s * F.b[2][2].value()},
                          Point3{z[0], z[1], s}};
      EXPECT_LT(gram_deviation(*geo, geo->on_surface(z)), 1e-10) << c.surface << "/" << c.frame;
      EXPECT_LT(gram_deviation(*geo, p), 1e-10) << c.surface << "/" << c.frame;
    }
  }
}

TEST(Frame, ValidationReportsGram) {
  const auto e = catalog_get("flat-plane");
  const auto bad = std::make_shared<ClosedFormFrame>(
      "skew", std::array<SmoothMap, 3>{SmoothMap::parse({"1", "0.2", "0"}, kY), SmoothMap::parse({"0", "1", "0"}, kY),
                                       SmoothMap::parse({"0", "0", "1"}, kY)});
  const Geometry geo(e.surface, bad);
  try {
    geo.validate({{0.0, 0.0}});
    FAIL() << "expected GeometryError";
  } catch (const GeometryError& err) {
    EXPECT_NE(std::string(err.what()).find("Gram"), std::string::npos);
  }
  const auto tilted_normal = std::make_shared<ClosedFormFrame>(
      "tilted-normal", std::array<SmoothMap, 3>{SmoothMap::parse({"0", "1", "0"}, kY),
                                                SmoothMap::parse({"0.6", "0", "0.8"}, kY),
                                                SmoothMap::parse({"0.8", "0", "-0.6"}, kY)});
  EXPECT_THROW(Geometry(e.surface, tilted_normal).validate({{0.0, 0.0}}), GeometryError);
  EXPECT_NO_THROW(e.geometry("standard")->validate({{0.0, 0.0}, {0.5, 0.5}}));
}

TEST(Frame, NormalTubeMatchesStraightNormals) {
  const auto e = catalog_get("graph-surface");
  const auto geo = e.geometry("normal-tube");
  const std::string h = "0.3*sin(z1)*cos(z2)";
  for (const auto& z : random_z(3, 10, e.z_lo, e.z_hi)) {
    const double hx = 0.3 * std::cos(z[0]) * std::cos(z[1]), hy = -0.3 * std::sin(z[0]) * std::sin(z[1]);
    const double nn = std::sqrt(1 + hx * hx + hy * hy);
    const Point3 n{-hx / nn, -hy / nn, 1 / nn};
    const Point3 y = geo->surface().embed(z);
    for (double s : {0.0, 0.07}) {
      const SamplePoint p{{y[0] + s * n[0], y[1] + s * n[1], y[2] + s * n[2]}, Point3{z[0], z[1], s}};
      const FrameJets F = geo->jets(p, 1);
      const double sign = F.b[2][2].value() > 0 ? 1.0 : -1.0;
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(sign * F.b[2][i].value(), n[i], 1e-10);
      // b^3 is constant along its own straight normal line.
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(F.along(2, F.b[2][i]).value(), 0.0, 1e-9);
    }
  }
  const auto flat = catalog_get("flat-plane");
  const auto tube = flat.geometry("normal-tube");
  const FrameJets F = tube->jets(tube->on_surface({0.3, 0.2}), 2);
  EXPECT_NEAR(std::abs(F.b[2][2].value()), 1.0, 1e-14);
  EXPECT_THROW(tube->jets(tube->on_surface({0.3, 0.2}), 3), std::invalid_argument);
}

TEST(Frame, OrientationIsReported) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  for (const std::string f : {"coordinate", "tilted"}) {
    const auto geo = e.geometry(f);
    const FrameData d = frame_data(*geo, geo->on_surface({0.2, 1.0}));
    const int o = frame_orientation(*geo, d);
    EXPECT_TRUE(o == 1 || o == -1);
  }
}

// ---- connection forms ---------------------------------------------------------

TEST(Connection, FlatConstantFrameVanishes) {
  const auto e = catalog_get("flat-plane");
  const auto geo = e.geometry("standard");
  const FrameData d = frame_data(*geo, geo->on_surface({0.4, -0.3}));
  for (const auto& a : d.omega)
    for (const auto& b : a)
      for (double x : b) EXPECT_EQ(x, 0.0);
}

TEST(Connection, CoordinateFrameClosedForms) {
  const double a = 2.0;
  const auto e = catalog_get("paper-ellipsoid", {{"a", a}});
  const auto geo = e.geometry("coordinate");
  const FrameData d = frame_data(*geo, SamplePoint{{0.3, 1.0, 1.0}, std::nullopt});
  const double L = std::sqrt(4 * std::cos(1.0) * std::cos(1.0) + std::sin(1.0) * std::sin(1.0));
  EXPECT_NEAR(d.omega[0][2][0], 1.0 / (a * L), 1e-9);
  EXPECT_NEAR(d.omega[1][2][1], a / std::pow(L, 3), 1e-9);
  EXPECT_NEAR(d.omega[0][1][0], std::cos(1.0) / (L * std::sin(1.0)), 1e-9);
  const FrameData eq = frame_data(*geo, SamplePoint{{0.3, kPi / 2, 1.0}, std::nullopt});
  EXPECT_NEAR(eq.omega[0][1][0], 0.0, 1e-12);
}

TEST(Connection, Antisymmetric) {
  for (const auto& c : kFrames) {
    const auto e = catalog_get(c.surface, c.params);
    const auto geo = e.geometry(c.frame);
    for (const auto& z : random_z(4, 5, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          for (int k = 0; k < 3; ++k) EXPECT_NEAR(d.omega[i][j][k], -d.omega[j][i][k], 1e-12);
    }
  }
}

// ---- second fundamental form and curvature ---------------------------------------

TEST(Curvature, FlatPlaneIsFlat) {
  const auto e = catalog_get("flat-plane");
  for (const std::string f : {"standard", "normal-tube"}) {
    const auto geo = e.geometry(f);
    const FrameData d = frame_data(*geo, geo->on_surface({0.1, 0.7}));
    EXPECT_NEAR(d.kappa, 0.0, 1e-14);
    EXPECT_NEAR(d.H, 0.0, 1e-14);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        EXPECT_NEAR(d.t[i][j], 0.0, 1e-14);
        EXPECT_NEAR(d.P[i][j], 0.0, 1e-14);
      }
  }
}

TEST(Curvature, UnitSphereHasUnitGaussCurvature) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 1.0}});
  for (const std::string f : {"coordinate", "tilted"}) {
    const auto geo = e.geometry(f);
    for (const auto& z : random_z(5, 20, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      EXPECT_NEAR(d.kappa, 1.0, 1e-9);
      EXPECT_NEAR(std::abs(2 * d.H), 2.0, 1e-9);
    }
  }
}

TEST(Curvature, EllipsoidClosedFormsAtPoint) {
  const double a = 2.0;
  const auto e = catalog_get("paper-ellipsoid", {{"a", a}});
  const auto geo = e.geometry("coordinate");
  const Point2 z{0.5, 1.0};
  const FrameData d = frame_data(*geo, geo->on_surface(z));
  const double L = lambda(a, 1.0);
  EXPECT_NEAR(d.kappa, 1 / std::pow(L, 4), 1e-9);
  EXPECT_NEAR(d.kappa, 0.28421, 5e-6);
  EXPECT_NEAR(2 * d.H, -1 / (a * L) - a / std::pow(L, 3), 1e-9);
  EXPECT_NEAR(2 * d.H, -1.143570, 5e-6);
  EXPECT_NEAR(d.kappa, d.t[0][0] * d.t[1][1] - d.t[0][1] * d.t[0][1], 1e-14);
}

TEST(Curvature, SecondFundamentalFormRoutesAgree) {
  for (const auto& c : kFrames) {
    const auto e = catalog_get(c.surface, c.params);
    const auto geo = e.geometry(c.frame);
    for (const auto& z : random_z(6, 25, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      const Mat2 emb = second_fundamental_form_embedding(*geo, z);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          EXPECT_NEAR(d.t[i][j], d.t_gauss[i][j], 1e-9) << c.surface << "/" << c.frame;
          EXPECT_NEAR(d.t[i][j], emb[i][j], 1e-8) << c.surface << "/" << c.frame;
        }
      EXPECT_NEAR(d.omega[0][2][1], d.omega[1][2][0], 1e-9) << c.surface << "/" << c.frame;
    }
  }
}

TEST(Curvature, StructureWeingartenAndDerivativeIdentities) {
  for (const auto& c : kFrames) {
    const auto e = catalog_get(c.surface, c.params);
    const auto geo = e.geometry(c.frame);
    for (const auto& z : random_z(7, 25, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      EXPECT_LT(d.structure_residual, 1e-8) << c.surface << "/" << c.frame;
      EXPECT_LT(std::abs(d.t_der[0]), 1e-7) << c.surface << "/" << c.frame;
      EXPECT_LT(std::abs(d.t_der[1]), 1e-7) << c.surface << "/" << c.frame;
      // Weingarten: nabla_{b^j} b^3 = -sum_i t_ji b^i on M.
      const FrameJets F = geo->jets(geo->on_surface(z), 1);
      for (int j = 0; j < 2; ++j) {
        const auto Db3 = F.to_frame(F.cov(F.b[j], F.b[2]));
        for (int i = 0; i < 2; ++i) EXPECT_NEAR(Db3[i].value(), -d.t[j][i], 1e-9);
        EXPECT_NEAR(Db3[2].value(), 0.0, 1e-9);
      }
    }
  }
}

TEST(Curvature, FlatAmbientCurvatureFormsVanish) {
  for (const auto& c : kFrames) {
    const auto e = catalog_get(c.surface, c.params);
    if (!e.ambient->is_flat()) continue;
    const auto geo = e.geometry(c.frame);
    for (const auto& z : random_z(8, 10, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      for (const auto& a : d.Omega)
        for (const auto& b : a)
          for (const auto& cc : b)
            for (double x : cc) EXPECT_LT(std::abs(x), 1e-8);
    }
  }
}

TEST(Curvature, IntrinsicCurvatureEqualsGauss) {
  for (const auto& c : kFrames) {
    const auto e = catalog_get(c.surface, c.params);
    const auto geo = e.geometry(c.frame);
    for (const auto& z : random_z(9, 10, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      const IntrinsicData I = intrinsic_data(geo->surface_jets(z, 2));
      EXPECT_NEAR(I.Omega12, d.kappa + d.Omega[0][1][0][1], 1e-8) << c.surface << "/" << c.frame;
    }
  }
}

TEST(Curvature, RoundThreeSphereHasConstantSectionalCurvature) {
  const auto e = catalog_get("sphere-cap-s3", {{"c", 1.0}});
  const auto geo = e.geometry();
  for (const auto& z : random_z(10, 10, e.z_lo, e.z_hi)) {
    const FrameData d = frame_data(*geo, geo->on_surface(z));
    // Omega_ij = theta^i ^ theta^j.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) {
            const double want = (i == a && j == b ? 1.0 : 0.0) - (i == b && j == a ? 1.0 : 0.0);
            EXPECT_NEAR(d.Omega[i][j][a][b], want, 1e-8);
          }
    EXPECT_NEAR(d.kappa, std::pow(std::cos(1.0) / std::sin(1.0), 2), 1e-9);
    EXPECT_NEAR(d.ricci[0][0], 2.0, 1e-8);
  }
}

// ---- frame scalars -------------------------------------------------------------

TEST(FrameScalars, CoordinateFrameSpecialValues) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  const auto geo = e.geometry("coordinate");
  for (const auto& z : random_z(11, 20, e.z_lo, e.z_hi)) {
    const FrameData d = frame_data(*geo, geo->on_surface(z));
    EXPECT_NEAR(d.gamma[2], 0.0, 1e-10);
    EXPECT_NEAR(d.alpha[0] * d.w[0] + d.alpha[1] * d.w[1], 0.0, 1e-10);
  }
}

TEST(FrameScalars, TiltedGamma3) {
  const double a = 2.0;
  const auto e = catalog_get("paper-ellipsoid", {{"a", a}});
  const auto geo = e.geometry("tilted");
  const FrameData d = frame_data(*geo, geo->on_surface({0.3, 1.0}));
  EXPECT_NEAR(d.gamma[2], -3 * std::cos(1.0) / 4, 1e-9);
  EXPECT_NEAR(d.gamma[2], (1 - a * a) * std::cos(1.0) / (a * a), 1e-9);
}

TEST(FrameScalars, WEqualsSurfaceBracket) {
  for (const auto& c : kFrames) {
    const auto e = catalog_get(c.surface, c.params);
    const auto geo = e.geometry(c.frame);
    for (const auto& z : random_z(12, 10, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      const IntrinsicData I = intrinsic_data(geo->surface_jets(z, 2));
      EXPECT_NEAR(d.w[0], I.bracket[0], 1e-9) << c.surface << "/" << c.frame;
      EXPECT_NEAR(d.w[1], I.bracket[1], 1e-9) << c.surface << "/" << c.frame;
      EXPECT_NEAR(d.w[0], I.omega12[0], 1e-9);
      EXPECT_NEAR(d.w[1], I.omega12[1], 1e-9);
    }
  }
}

TEST(FrameScalars, DerivedMatrices) {
  const auto e = catalog_get("paper-ellipsoid", {{"a", 2.0}});
  for (const std::string f : {"coordinate", "tilted"}) {
    const auto geo = e.geometry(f);
    for (const auto& z : random_z(13, 10, e.z_lo, e.z_hi)) {
      const FrameData d = frame_data(*geo, geo->on_surface(z));
      const double t12 = d.t[0][1];
      EXPECT_NEAR(d.S_adj[0][0], d.t[1][1], 1e-15);
      EXPECT_NEAR(d.S_adj[0][1], -t12, 1e-15);
      EXPECT_NEAR(d.P[0][0], d.kappa - 2 * d.H * d.t[0][0], 1e-15);
      EXPECT_NEAR(d.P[0][1], -2 * d.H * t12, 1e-15);
      EXPECT_EQ(d.K[0][1], 1.0);
      EXPECT_EQ(d.K[1][0], -1.0);
      EXPECT_NEAR(d.alpha[0], d.omega[0][2][2], 1e-15);
      EXPECT_NEAR(d.alpha[1], d.omega[1][2][2], 1e-15);
    }
  }
}
