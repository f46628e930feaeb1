#include <doctest.h>

#include <cmath>
#include <random>

#include "ttriple/symcore.hpp"
#include "test_support.hpp"

using namespace ttriple;

TEST_CASE("parse builds the grammar's tree") {
  Expr e = parse("0.5*(v^2 - x^2)");
  Expr expected = Expr(0.5) * (pow(Expr::variable("v"), Expr(2.0)) - pow(Expr::variable("x"), Expr(2.0)));
  CHECK(e == expected);

  Expr f = parse("sin(x)*exp(-x)");
  CHECK(evaluate(f, {{"x", 0.0}}) == 0.0);

  CHECK(parse("2^3^2") == pow(Expr(2.0), pow(Expr(3.0), Expr(2.0))));
  // Unary minus binds tighter than '^' in this grammar.
  CHECK(evaluate(parse("-x^2"), {{"x", 3.0}}) == 9.0);
  CHECK(evaluate(parse("-(x^2)"), {{"x", 3.0}}) == -9.0);
  CHECK(evaluate(parse("2*pi"), {}) == doctest::Approx(6.283185307179586));
  CHECK(evaluate(parse("1.5e-3 + 2E2"), {}) == doctest::Approx(200.0015));
}

TEST_CASE("parse errors carry byte offsets") {
  try {
    parse("x +");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.offset() == 3);
  }
  try {
    parse("foo(x)");
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.offset() == 0);
    CHECK(std::string(err.what()).find("unknown function") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("(x"), ParseError);
  CHECK_THROWS_AS(parse("x y"), ParseError);
  CHECK_THROWS_AS(parse("sin"), ParseError);
  CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("print-parse-print is a fixed point") {
  for (const char* src : {"0.5*(v^2 - x^2)", "-x^2", "-(x^2)", "a - (b - c)", "a/(b/c)", "a/b/c",
                          "x^-2", "2^3^2", "(a + b)^2", "sin(x)*exp(-x)", "-2*x + 3", "x*(-y)",
                          "--x", "1e-05*x", "a - -b", "(-x)^y"}) {
    const std::string once = to_string(parse(src));
    CHECK_MESSAGE(to_string(parse(once)) == once, src);
    CHECK_MESSAGE(parse(once) == parse(src), src);
  }
}

TEST_CASE("diff applies the power rule and agrees with finite differences") {
  CHECK(to_string(diff(parse("0.5*v^2"), "v")) == "v");
  CHECK(to_string(diff(parse("0.5*(v^2 - x^2)"), "x")) == "-x");
  CHECK(diff(parse("3 + pi"), "x") == Expr(0.0));
  CHECK(diff(parse("y^2"), "x") == Expr(0.0));

  Expr e = parse("sin(x)*y");
  Expr d = diff(e, "x");
  const double got = evaluate(d, {{"x", 0.3}, {"y", 2.0}});
  CHECK(got == doctest::Approx(2.0 * std::cos(0.3)).epsilon(1e-14));
  const double fd = test::central_difference(
      [&](double x) { return evaluate(e, {{"x", x}, {"y", 2.0}}); }, 0.3, 1e-5);
  CHECK(std::abs(got - fd) <= 1e-6 * std::max(1.0, std::abs(got)));
}

TEST_CASE("evaluate reports unassigned variables and domain errors") {
  CHECK(evaluate(parse("x^2+1"), {{"x", 2.0}}) == 5.0);
  try {
    evaluate(parse("1/x"), {{"x", 0.0}});
    FAIL("expected division by zero");
  } catch (const EvalError& err) {
    CHECK(err.kind() == EvalError::Kind::division_by_zero);
    CHECK(err.subexpression() == "1/x");
  }
  try {
    evaluate(parse("2 + log(x)"), {{"x", -1.0}});
    FAIL("expected domain error");
  } catch (const EvalError& err) {
    CHECK(err.kind() == EvalError::Kind::domain);
    CHECK(err.subexpression() == "log(x)");
  }
  CHECK_THROWS_AS(evaluate(parse("x + y"), {{"x", 1.0}}), EvalError);
  CHECK_THROWS_AS(evaluate(parse("x^0.5"), {{"x", -4.0}}), EvalError);
  CHECK(evaluate(parse("x^3"), {{"x", -2.0}}) == -8.0);
  CHECK_THROWS_AS(evaluate(parse("sqrt(x)"), {{"x", -1.0}}), EvalError);
}

TEST_CASE("simplify identities") {
  CHECK(to_string(simplify(parse("x + 0"))) == "x");
  CHECK(to_string(simplify(parse("2*x + 3*x"))) == "5*x");
  CHECK(to_string(simplify(parse("1*x*1"))) == "x");
  CHECK(to_string(simplify(parse("x - x"))) == "0");
  CHECK(to_string(simplify(parse("(v1 - v2)^2"))) == "v1^2 - 2*v1*v2 + v2^2");
  CHECK(to_string(simplify(parse("2*3 + sin(0)"))) == "6");
  // Conservative: no cancellation across a possible singularity.
  CHECK(to_string(simplify(parse("x*(1/x)"))) == "x*(1/x)");
  CHECK(to_string(simplify(parse("x/x"))) == "x/x");
  CHECK(to_string(simplify(parse("log(-1)"))) == "log(-1)");
}

TEST_CASE("simplify respects the variable table order") {
  VarTable vars;
  vars.add("qddot", VarRole::second_jet);
  vars.add("q", VarRole::fiber);
  CHECK(to_string(simplify(parse("q + qddot"), &vars)) == "qddot + q");
  CHECK(to_string(simplify(parse("q + qddot"))) == "q + qddot");
  CHECK(format_equation(parse("-q - qddot"), &vars) == "qddot + q = 0");
}

TEST_CASE("compiled evaluation matches tree evaluation bit for bit") {
  std::mt19937_64 rng(7);
  const std::vector<std::string> slots{"x", "y", "z"};
  for (int i = 0; i < 200; ++i) {
    Expr e = test::random_expr(rng, slots, 4);
    CompiledExpr c(e, slots);
    auto pt = test::random_point(rng, slots);
    std::vector<double> vals{pt["x"], pt["y"], pt["z"]};
    double a = 0, b = 0;
    bool ea = false, eb = false;
    try { a = evaluate(e, pt); } catch (const EvalError&) { ea = true; }
    try { b = c(vals); } catch (const EvalError&) { eb = true; }
    REQUIRE(ea == eb);
    if (!ea && !std::isnan(a)) CHECK(a == b);
  }
}

TEST_CASE("property: simplify preserves value and is idempotent") {
  std::mt19937_64 rng(20240611);
  const std::vector<std::string> vars{"x", "y", "z"};
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Expr e = test::random_expr(rng, vars, 4);
    Expr s = simplify(e);
    CHECK_MESSAGE(simplify(s) == s, to_string(e), " -> ", to_string(s), " -> ", to_string(simplify(s)));
    auto pt = test::random_point(rng, vars);
    double ve = 0, vs = 0;
    try {
      ve = evaluate(e, pt);
      vs = evaluate(s, pt);
    } catch (const EvalError&) {
      continue;  // outside the expression's domain
    }
    if (!std::isfinite(ve)) continue;
    ++checked;
    CHECK_MESSAGE(std::abs(vs - ve) <= 1e-12 * (1.0 + std::abs(ve)), to_string(e), " -> ", to_string(s));
  }
  CHECK(checked > 700);
}

TEST_CASE("property: diff is linear and mixed partials commute") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> vars{"x", "y", "z"};
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    Expr e1 = test::random_expr(rng, vars, 3);
    Expr e2 = test::random_expr(rng, vars, 3);
    const double a = coef(rng), b = coef(rng);
    auto pt = test::random_point(rng, vars);
    try {
      const double lhs = evaluate(diff(Expr(a) * e1 + Expr(b) * e2, "x"), pt);
      const double rhs = a * evaluate(diff(e1, "x"), pt) + b * evaluate(diff(e2, "x"), pt);
      const double uv = evaluate(diff(diff(e1, "x"), "y"), pt);
      const double vu = evaluate(diff(diff(e1, "y"), "x"), pt);
      if (!std::isfinite(lhs) || !std::isfinite(uv)) continue;
      ++checked;
      CHECK(std::abs(lhs - rhs) <= 1e-9 * (1.0 + std::abs(rhs)));
      CHECK(std::abs(uv - vu) <= 1e-9 * (1.0 + std::abs(uv)));
    } catch (const EvalError&) {
    }
  }
  CHECK(checked > 150);
}

TEST_CASE("diff agrees with central differences at random points") {
  std::mt19937_64 rng(5);
  const std::vector<std::string> vars{"x", "y"};
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    Expr e = test::random_expr(rng, vars, 3);
    auto pt = test::random_point(rng, vars);
    try {
      const double d = evaluate(diff(e, "x"), pt);
      const double x0 = pt["x"];
      const double h = 1e-5 * std::max(1.0, std::abs(x0));
      auto f = [&](double x) {
        auto q = pt;
        q["x"] = x;
        return evaluate(e, q);
      };
      const double fd1 = test::central_difference(f, x0, h);
      const double fd2 = test::central_difference(f, x0, h / 2);
      const double fd = (4.0 * fd2 - fd1) / 3.0;
      if (!std::isfinite(d) || std::abs(d) > 1e6) continue;
      // Near a pole the stencil's own truncation error dominates.
      if (std::abs(fd1 - fd2) > 1e-4 * std::max(1.0, std::abs(d))) continue;
      ++checked;
      CHECK_MESSAGE(std::abs(d - fd) <= 1e-6 * std::max(1.0, std::abs(d)), to_string(e));
    } catch (const EvalError&) {
    }
  }
  CHECK(checked > 150);
}

TEST_CASE("substitute, rename and free variables") {
  Expr e = parse("x*y + sin(x)");
  CHECK(free_variables(e) == std::vector<std::string>{"x", "y"});
  CHECK(to_string(rename(e, {{"x", "t"}})) == "t*y + sin(t)");
  CHECK(to_string(substitute(e, {{"y", Expr(2.0)}})) == "x*2 + sin(x)");
  CHECK(contains_variable(e, "y"));
  CHECK_FALSE(contains_variable(e, "z"));
}

TEST_CASE("latex printing") {
  VarTable vars;
  vars.add("y_d1d1", VarRole::second_jet, "y_{11}");
  vars.add("y_d2d2", VarRole::second_jet, "y_{22}");
  CHECK(format_equation_latex(parse("-y_d1d1 - y_d2d2"), &vars) == "y_{11} + y_{22} = 0");
  CHECK(to_latex(parse("a/b")) == "\\frac{a}{b}");
}
