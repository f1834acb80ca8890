#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "bochner/expr.hpp"
#include "oracle.hpp"

using bochner::Expr;
using bochner::ParseError;
using bochner::SmoothMap;

namespace {

const std::vector<std::string> kY{"y1", "y2", "y3"};

// Random expression text over y1..y3 whose value stays finite near the origin box.
std::string random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_real_distribution<double> num(0.1, 3.0);
  if (depth == 0) {
    const int k = pick(rng) % 4;
    if (k == 3) return std::to_string(num(rng));
    return kY[k];
  }
  const std::string a = random_tree(rng, depth - 1);
  const std::string b = random_tree(rng, depth - 1);
  switch (pick(rng)) {
    case 0:
      return a + " + " + b;
    case 1:
      return a + " - " + b;
    case 2:
      return "(" + a + ")*(" + b + ")";
    case 3:
      return "(" + a + ")/(2 + (" + b + ")^2)";
    case 4:
      return "sin(" + a + ")";
    case 5:
      return "cos(" + a + ")*" + b;
    case 6:
      return "exp(-(" + a + ")^2)";
    case 7:
      return "sqrt(1 + (" + a + ")^2)";
    case 8:
      return "atan2(" + a + ", 3 + cos(" + b + "))";
    default:
      return "-(" + a + ")^3";
  }
}

}  // namespace

TEST(Expr, ParsesPaperMapComponent) {
  Expr e = Expr::parse("a*y3*cos(y1)*sin(y2)", kY, {"a"});
  const std::vector<double> p{0.3, 1.0, 1.0};
  const std::vector<double> a{2.0};
  EXPECT_NEAR(e.eval(p, a), 2.0 * std::cos(0.3) * std::sin(1.0), 1e-15);
  auto syms = e.free_symbols();
  EXPECT_EQ(syms, (std::set<std::string>{"a", "y1", "y2", "y3"}));
}

TEST(Expr, SyntaxErrorAtEndOfInput) {
  try {
    Expr::parse("y1 + ", kY);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.position(), 5u);
    EXPECT_NE(std::string(e.what()).find("end of input"), std::string::npos);
    EXPECT_FALSE(e.expected().empty());
  }
}

TEST(Expr, UnknownIdentifier) {
  try {
    Expr::parse("y4", kY);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("y4"), std::string::npos);
    EXPECT_EQ(e.position(), 0u);
  }
}

TEST(Expr, ArityAndFunctionErrors) {
  EXPECT_THROW(Expr::parse("atan2(y1)", kY), ParseError);
  EXPECT_THROW(Expr::parse("sin(y1, y2)", kY), ParseError);
  EXPECT_THROW(Expr::parse("foo(y1)", kY), ParseError);
  EXPECT_THROW(Expr::parse("(y1 + y2", kY), ParseError);
  EXPECT_THROW(Expr::parse("y1 y2", kY), ParseError);
  EXPECT_THROW(Expr::parse("y1 * # 2", kY), ParseError);
}

TEST(Expr, PrecedenceAndAssociativity) {
  const std::vector<double> p{2.0, 3.0, 0.5};
  EXPECT_DOUBLE_EQ(Expr::parse("y1 + y2 * y3", kY).eval(p), 3.5);
  EXPECT_DOUBLE_EQ(Expr::parse("y1 ^ y2 ^ 2", kY).eval(p), 512.0);
  EXPECT_DOUBLE_EQ(Expr::parse("-y1^2", kY).eval(p), -4.0);
  EXPECT_DOUBLE_EQ(Expr::parse("y2 - y1 - y3", kY).eval(p), 0.5);
  EXPECT_DOUBLE_EQ(Expr::parse("y2 / y1 / y3", kY).eval(p), 3.0);
  EXPECT_DOUBLE_EQ(Expr::parse("1.5e1 + .5 + 2E-1", kY).eval(p), 15.7);
  EXPECT_DOUBLE_EQ(Expr::parse("pi", kY).eval(p), std::numbers::pi);
}

TEST(Expr, JetOfSquare) {
  Expr e = Expr::parse("x^2", {"x"});
  const std::vector<double> p{2.0};
  auto j = e.eval_jet(p, 2);
  EXPECT_DOUBLE_EQ(j.value(), 4.0);
  EXPECT_DOUBLE_EQ(j.d(0), 4.0);
  EXPECT_DOUBLE_EQ(j.d(0, 0), 2.0);
}

TEST(Expr, JetOfSine) {
  auto j = Expr::parse("sin(x)", {"x"}).eval_jet(std::vector<double>{0.0}, 3);
  EXPECT_DOUBLE_EQ(j.coeff({1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(j.coeff({2, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(j.coeff({3, 0, 0}), -1.0 / 6.0);
}

TEST(Expr, SecondDerivativeAgainstFiniteDifferences) {
  Expr e = Expr::parse("a*y3*cos(y1)*sin(y2)", kY, {"a"});
  const std::vector<double> p{0.3, 1.0, 1.0};
  const std::vector<double> a{2.0};
  auto j = e.eval_jet(p, 3, a);
  oracle::Fn f = [&](const std::vector<double>& x) { return e.eval(x, a); };
  // Rounding in the h = 1e-4 second difference is about eps / h^2.
  const double fd = oracle::partial(f, p, {2, 0, 0}, 1e-4);
  EXPECT_NEAR(j.d(0, 0), fd, 1e-6);
  EXPECT_NEAR(j.d(0, 0), -j.value(), 1e-14);
}

TEST(Expr, DomainErrorNamesSubtree) {
  Expr e = Expr::parse("y1 + log(y2 - 3)", kY);
  const std::vector<double> p{0.0, 1.0, 0.0};
  try {
    e.eval(p);
    FAIL() << "expected a domain error";
  } catch (const bochner::EvalError& err) {
    EXPECT_NE(err.subtree().find("log"), std::string::npos);
  }
  EXPECT_THROW(Expr::parse("1/(y1 - y1)", kY).eval(p), bochner::EvalError);
  EXPECT_THROW(Expr::parse("y2^0.5", kY).eval(std::vector<double>{0, -1, 0}), bochner::EvalError);
  EXPECT_THROW(Expr::parse("log(y1)", kY).eval_jet(p, 2), bochner::EvalError);
  EXPECT_NO_THROW(Expr::parse("y1^2", kY).eval(std::vector<double>{-2, 0, 0}));
}

TEST(Expr, PrintParseRoundTrip) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int n = 0; n < 300; ++n) {
    const std::string src = random_tree(rng, 1 + n % 6);
    Expr e = Expr::parse(src, kY);
    Expr back = Expr::parse(e.to_string(), kY);
    EXPECT_EQ(back.to_string(), e.to_string());
    for (int k = 0; k < 3; ++k) {
      const std::vector<double> p{u(rng), u(rng), u(rng)};
      double a = 0, b = 0;
      bool fa = false, fb = false;
      try {
        a = e.eval(p);
      } catch (const bochner::EvalError&) {
        fa = true;
      }
      try {
        b = back.eval(p);
      } catch (const bochner::EvalError&) {
        fb = true;
      }
      ASSERT_EQ(fa, fb) << src;
      if (!fa && std::isfinite(a)) {
        EXPECT_EQ(a, b) << src;
      }
    }
  }
}

TEST(Expr, RandomTreesJetsMatchFiniteDifferences) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  int checked = 0;
  for (int n = 0; n < 200; ++n) {
    Expr e = Expr::parse(random_tree(rng, 3), kY);
    const std::vector<double> p{u(rng), u(rng), u(rng)};
    oracle::Fn f = [&](const std::vector<double>& x) { return e.eval(x); };
    bochner::Jet j;
    try {
      j = e.eval_jet(p, 2);
    } catch (const bochner::EvalError&) {
      continue;
    }
    for (std::vector<int> m : {std::vector<int>{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {0, 0, 2}}) {
      const double want = oracle::partial(f, p, m, 1e-3);
      EXPECT_LE(oracle::rel_err(j.partial({m[0], m[1], m[2]}), want), 1e-7) << e.to_string();
    }
    ++checked;
  }
  EXPECT_GT(checked, 150);
}

TEST(SmoothMap, IdentityJacobian) {
  SmoothMap id = SmoothMap::parse({"y1", "y2", "y3"}, kY);
  const std::vector<double> p{0.2, -0.4, 1.3};
  auto jets = id.eval_jet(p, 1);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(jets[i].d(j), i == j ? 1.0 : 0.0);
}

TEST(SmoothMap, EllipsoidMapAtUnitParameter) {
  SmoothMap psi = SmoothMap::parse({"a*y3*cos(y1)*sin(y2)", "a*y3*sin(y1)*sin(y2)", "y3*cos(y2)"}, kY, {{"a", 1.0}});
  auto v = psi.eval(std::vector<double>{0.0, std::numbers::pi / 2, 1.0});
  EXPECT_NEAR(v[0], 1.0, 1e-15);
  EXPECT_NEAR(v[1], 0.0, 1e-15);
  EXPECT_NEAR(v[2], 0.0, 1e-15);
  auto v2 = psi.eval(std::vector<double>{std::numbers::pi / 2, std::numbers::pi / 2, 1.0});
  EXPECT_NEAR(v2[1], 1.0, 1e-15);
}

TEST(SmoothMap, SurfaceEmbeddingJacobian) {
  SmoothMap f = SmoothMap::parse({"z1", "z2", "1"}, {"z1", "z2"});
  auto jets = f.eval_jet(std::vector<double>{0.3, 1.2}, 2);
  ASSERT_EQ(f.codomain_dim(), 3);
  EXPECT_DOUBLE_EQ(jets[0].value(), 0.3);
  EXPECT_DOUBLE_EQ(jets[1].value(), 1.2);
  EXPECT_DOUBLE_EQ(jets[2].value(), 1.0);
  const double want[3][2] = {{1, 0}, {0, 1}, {0, 0}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(jets[i].d(j), want[i][j]);
}

TEST(SmoothMap, JetValueMatchesScalar) {
  SmoothMap m = SmoothMap::parse({"exp(y1)*y2", "atan2(y2, y3)"}, kY);
  const std::vector<double> p{0.1, 0.5, -0.7};
  auto s = m.eval(p);
  auto j = m.eval_jet(p, 0);
  for (int i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(j[i].value(), s[i]);
}
