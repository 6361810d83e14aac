#include <cmath>
#include <random>

#include "doctest.h"
#include "nambu/expr.hpp"

using namespace nambu;

namespace {

double rand_unit(std::mt19937_64& gen) {
  return -1.0 + 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Central finite difference, the independent oracle for diff().
Complex fd_partial(const Expr& e, const std::string& var, Binding b,
                   double h = 1e-6) {
  Binding hi = b, lo = b;
  hi[var] += h;
  lo[var] -= h;
  return (evaluate(e, hi) - evaluate(e, lo)) / (2.0 * h);
}

}  // namespace

TEST_CASE("parsing basics and precedence") {
  Binding b{{"q1", 2.0}, {"p1", 3.0}};
  CHECK(evaluate(parse("q1 + p1*q1"), b) == Complex{8.0, 0.0});
  CHECK(evaluate(parse("2*q1^2"), b) == Complex{8.0, 0.0});       // ^ over *
  CHECK(evaluate(parse("-q1^2"), b) == Complex{-4.0, 0.0});       // ^ over -
  CHECK(evaluate(parse("q1^-2"), b) == Complex{0.25, 0.0});
  CHECK(evaluate(parse("6/q1/p1"), b) == Complex{1.0, 0.0});      // left assoc
  CHECK(evaluate(parse("q1 - p1 + 1"), b) == Complex{0.0, 0.0});
  CHECK(evaluate(parse("(q1 + p1)^2"), b) == Complex{25.0, 0.0});
  CHECK(evaluate(parse("sqrt(q1^2)"), b) == Complex{2.0, 0.0});
}

TEST_CASE("imaginary unit") {
  Binding empty;
  CHECK(evaluate(parse("i*i"), empty) == Complex{-1.0, 0.0});
  CHECK(evaluate(parse("2 + 3*i"), empty) == Complex{2.0, 3.0});
  CHECK(evaluate(parse("sqrt(0 - 4)"), empty) == Complex{0.0, 2.0});
  CHECK_THROWS_AS(Expr::variable("i"), std::invalid_argument);
}

TEST_CASE("constant folding at construction") {
  CHECK(parse("2*3 + 1").is_constant(Complex{7.0, 0.0}));
  CHECK(parse("q1*0").is_constant(Complex{0.0, 0.0}));
  CHECK(parse("q1 + 0").kind() == Expr::Kind::Variable);
  CHECK(parse("1*q1").kind() == Expr::Kind::Variable);
  // pow-of-pow collapses so the single-exponent grammar can reparse it
  Expr e = Expr::pow(Expr::pow(Expr::variable("x"), 2), 3);
  CHECK(to_string(e) == "x^6");
}

TEST_CASE("parse errors carry location") {
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("q1 +"), ParseError);
  CHECK_THROWS_AS(parse("q1 $ 2"), ParseError);
  CHECK_THROWS_AS(parse("x^y"), ParseError);  // exponent must be an integer
  CHECK_THROWS_AS(parse("sqrt 4"), ParseError);
  try {
    parse("q1 + \n q2 * $");
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
    CHECK(e.column > 1);
  }
}

TEST_CASE("evaluate errors") {
  Binding b{{"x", 1.0}};
  CHECK_THROWS_AS(evaluate(parse("x + y"), b), EvalError);
  CHECK_THROWS_AS(evaluate(parse("1/(x - 1)"), b), EvalError);
  CHECK_THROWS_AS(evaluate(parse("(x - 1)^-1"), b), EvalError);
}

TEST_CASE("print/parse round trip") {
  std::vector<std::string> sources{
      "q1^2 + 2*q1*p1 - p1^2",
      "-2*(alpha1 + 8*omega^2*q1)*q2*p2 - p1*(2*p2^2 - 4*omega^2*q2^2 + "
      "4*alpha2/q2^2)",
      "sqrt(2*k/(p1^2/2 + k*k1))*(q1 - 2*i*p1)",
      "q1^-3 + 1/(q1*q2)",
      "-(a + b)*(a - b)",
  };
  std::mt19937_64 gen(7);
  for (const auto& src : sources) {
    Expr e = parse(src);
    Expr round = parse(to_string(e));
    CHECK(structurally_equal(e, round));
    for (int t = 0; t < 5; ++t) {
      Binding b;
      for (const auto& v : free_variables(e)) b[v] = 1.5 + rand_unit(gen);
      Complex a = evaluate(e, b), c = evaluate(round, b);
      CHECK(approx_equal(a, c, 1e-12, 1e-14));
    }
  }
}

TEST_CASE("derivatives match finite differences") {
  std::vector<std::string> sources{
      "q1^3*p1 - 2*q1*p1^2 + 5",
      "q1/(q2^2) + q2/(q1 + 3)",
      "sqrt(q1^2 + q2^2 + 4)",
      "(q1 + i*q2)^3",
      "sqrt(2/(q1^2 + 1))*(q2 - 2*i*q1)",
  };
  std::mt19937_64 gen(11);
  for (const auto& src : sources) {
    Expr e = parse(src);
    for (const auto& v : free_variables(e)) {
      Expr d = diff(e, v);
      for (int t = 0; t < 5; ++t) {
        Binding b;
        for (const auto& w : free_variables(e)) b[w] = 1.0 + rand_unit(gen);
        CHECK(approx_equal(evaluate(d, b), fd_partial(e, v, b), 1e-5, 1e-6));
      }
    }
  }
}

TEST_CASE("mixed partials commute") {
  Expr e = parse("q1^2*q2^3 + sqrt(q1^2 + q2^2 + 2)/q2");
  Expr dxy = diff(diff(e, "q1"), "q2");
  Expr dyx = diff(diff(e, "q2"), "q1");
  std::mt19937_64 gen(13);
  for (int t = 0; t < 10; ++t) {
    Binding b{{"q1", 1.0 + rand_unit(gen)}, {"q2", 1.5 + rand_unit(gen)}};
    CHECK(approx_equal(evaluate(dxy, b), evaluate(dyx, b), 1e-10, 1e-12));
  }
}

TEST_CASE("free variables") {
  auto vars = free_variables(parse("q1*p2 + sqrt(k)*i"));
  CHECK(vars == std::set<std::string>{"q1", "p2", "k"});
}

TEST_CASE("diff of constants and unrelated variables") {
  CHECK(diff(parse("3 + i"), "x").is_constant(Complex{0.0, 0.0}));
  CHECK(diff(parse("q1^2"), "q2").is_constant(Complex{0.0, 0.0}));
}
