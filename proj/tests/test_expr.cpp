#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ergoline/expr.hpp"

using ergoline::EvalDomainError;
using ergoline::Expr;
using ergoline::ParseError;

TEST_CASE("parse and evaluate the spec examples") {
  CHECK(Expr::parse("x").eval(7.0) == doctest::Approx(7.0));
  CHECK(Expr::parse("-3*(x+1)^-0.5").eval(0.0) == doctest::Approx(-3.0));
  CHECK(Expr::parse("exp(0)*x + 1").eval(0.0) == doctest::Approx(1.0));
  CHECK(Expr::parse("(x+1)^0.5").eval(3.0) == doctest::Approx(2.0));
  CHECK(Expr::parse("x^2 - x").eval(1.5) == doctest::Approx(0.75));
}

TEST_CASE("precedence and associativity") {
  // ^ binds tighter than unary minus: -x^2 = -(x^2)
  CHECK(Expr::parse("-x^2").eval(2.0) == doctest::Approx(-4.0));
  // right-associative power
  CHECK(Expr::parse("2^3^2").eval(0.0) == doctest::Approx(512.0));
  // exponent is a unary production
  CHECK(Expr::parse("x^-0.5").eval(4.0) == doctest::Approx(0.5));
  CHECK(Expr::parse("2*x+1").eval(3.0) == doctest::Approx(7.0));
  CHECK(Expr::parse("2*(x+1)").eval(3.0) == doctest::Approx(8.0));
  CHECK(Expr::parse("--x").eval(5.0) == doctest::Approx(5.0));
  CHECK(Expr::parse("6/2/3").eval(0.0) == doctest::Approx(1.0));
  CHECK(Expr::parse("1 - 2 - 3").eval(0.0) == doctest::Approx(-4.0));
}

TEST_CASE("domain errors are structured, not NaN") {
  CHECK_THROWS_AS(Expr::parse("1/x").eval(0.0), EvalDomainError);
  CHECK_THROWS_AS(Expr::parse("log(x-2)").eval(1.0), EvalDomainError);
  CHECK_THROWS_AS(Expr::parse("sqrt(x-1)").eval(0.0), EvalDomainError);
  // fractional power of a negative base
  CHECK_THROWS_AS(Expr::parse("(x-2)^0.5").eval(0.0), EvalDomainError);
  // integer power of a negative base is fine
  CHECK(Expr::parse("(x-2)^2").eval(0.0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(Expr::parse("x^-1").eval(0.0), EvalDomainError);
  CHECK_THROWS_AS(Expr::parse("exp(x)").eval(1000.0), EvalDomainError);
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_AS(Expr::parse(""), ParseError);
  try {
    Expr::parse("1+");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
  try {
    Expr::parse("(x");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
  }
  try {
    Expr::parse("2*foo(x)");
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 2);
    CHECK(std::string(e.what()).find("foo") != std::string::npos);
  }
  CHECK_THROWS_AS(Expr::parse("y"), ParseError);
  CHECK_THROWS_AS(Expr::parse("1 + 2 )"), ParseError);
}

TEST_CASE("finite differences: spec values at the default step") {
  const Expr sq = Expr::parse("x^2");
  CHECK(std::abs(deriv(sq, 3.0, 1) - 6.0) < 1e-7);
  CHECK(std::abs(deriv(sq, 3.0, 2) - 2.0) < 1e-7);
  const Expr ex = Expr::parse("exp(x)");
  CHECK(std::abs(deriv(ex, 1.0, 1) - std::exp(1.0)) < 1e-7);
}

TEST_CASE("finite differences: step preconditions") {
  const Expr sq = Expr::parse("x^2");
  CHECK_THROWS_AS(deriv(sq, 1e-4, 1), std::invalid_argument);
  CHECK_THROWS_AS(deriv(sq, 1.0, 1, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(deriv(sq, 1.0, 3, 0.01), std::invalid_argument);
  CHECK_NOTHROW(deriv(sq, 1.0, 1, 0.01));
}

TEST_CASE("cubic polynomials are differentiated exactly") {
  std::mt19937_64 gen(42);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_real_distribution<double> at(0.5, 20.0);
  auto full = [](double v) {
    char buf[40];
    snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (int rep = 0; rep < 200; ++rep) {
    const double a = coef(gen), b = coef(gen), c = coef(gen), d = coef(gen);
    const std::string src = "(" + full(a) + ")*x^3 + (" + full(b) +
                            ")*x^2 + (" + full(c) + ")*x + (" + full(d) + ")";
    const Expr e = Expr::parse(src);
    const double x = at(gen);
    const double step = 0.05 * std::max(1.0, x);
    const double d1 = 3 * a * x * x + 2 * b * x + c;
    const double d2 = 6 * a * x + 2 * b;
    const double scale1 = std::max(1.0, std::abs(d1));
    const double scale2 = std::max(1.0, std::abs(d2));
    CHECK(std::abs(deriv(e, x, 1, step) - d1) / scale1 < 1e-9);
    CHECK(std::abs(deriv(e, x, 2, step) - d2) / scale2 < 1e-9);
  }
}

namespace {

// random expression trees for the round-trip property
struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}

  int pick(int n) { return static_cast<int>(rng() % n); }

  std::string atom(int depth) {
    switch (pick(3)) {
      case 0:
        return "x";
      case 1: {
        std::uniform_real_distribution<double> lit(0.0, 10.0);
        char buf[32];
        snprintf(buf, sizeof(buf), "%.3f", lit(rng));
        return buf;
      }
      default: {
        if (depth >= 6) return "x";
        const char* fns[4] = {"exp", "log", "sqrt", "abs"};
        return std::string(fns[pick(4)]) + "(" + build(depth + 1) + ")";
      }
    }
  }

  std::string build(int depth) {
    if (depth >= 6) return atom(depth);
    switch (pick(6)) {
      case 0:
        return build(depth + 2) + " + " + build(depth + 2);
      case 1:
        return build(depth + 2) + " - " + build(depth + 2);
      case 2:
        return build(depth + 2) + "*" + build(depth + 2);
      case 3:
        return build(depth + 2) + "/" + build(depth + 2);
      case 4:
        return "-" + atom(depth + 1);
      default:
        return "(" + build(depth + 2) + ")^" + atom(depth + 1);
    }
  }
};

}  // namespace

TEST_CASE("serialize-parse round trip is the identity on trees") {
  Gen gen(20240811);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::string src = gen.build(0);
    Expr e1;
    try {
      e1 = Expr::parse(src);
    } catch (const ParseError&) {
      continue;  // generator can produce over-deep nests; skip
    }
    const std::string s = e1.str();
    const Expr e2 = Expr::parse(s);
    CHECK_MESSAGE(e1.identical(e2), "round trip failed for: ", src,
                  " -> ", s);
    CHECK(e2.str() == s);
  }
}

TEST_CASE("compiled and tree evaluation agree bit for bit") {
  Gen gen(7);
  std::mt19937_64 xs(3);
  std::uniform_real_distribution<double> xdist(0.0, 50.0);
  int checked = 0;
  for (int rep = 0; rep < 500; ++rep) {
    const std::string src = gen.build(0);
    Expr e;
    try {
      e = Expr::parse(src);
    } catch (const ParseError&) {
      continue;
    }
    for (int k = 0; k < 5; ++k) {
      const double x = xdist(xs);
      double tree = 0.0;
      bool ok = true;
      try {
        tree = e.eval(x);
      } catch (const EvalDomainError&) {
        ok = false;
      }
      const double compiled = e.eval_raw(x);
      if (ok) {
        CHECK_MESSAGE(
            (tree == compiled ||
             (std::isnan(tree) && std::isnan(compiled))),
            "mismatch for ", src, " at x=", x);
        ++checked;
      }
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("is_constant and empty flags") {
  CHECK(Expr::parse("1+2*3").is_constant());
  CHECK(!Expr::parse("1+x").is_constant());
  CHECK(Expr().empty());
}
