#include "doctest.h"
#include "nambu/constraints.hpp"
#include "nambu/poly.hpp"
#include "nambu/systems.hpp"

using namespace nambu;

TEST_CASE("index selection complement and sign") {
  IndexSelection sel = IndexSelection::make({1, 2, 4}, 5);
  CHECK(sel.complement == std::vector<int>{3, 5});
  CHECK(sel.sign == -1);  // parity of (1,2,4,3,5)

  IndexSelection id = IndexSelection::make({1, 2, 3}, 5);
  CHECK(id.sign == 1);

  IndexSelection rep = IndexSelection::make({1, 2, 2}, 5);
  CHECK(rep.sign == 0);

  CHECK_THROWS_AS(IndexSelection::make({0, 1, 2}, 5), std::out_of_range);
  CHECK_THROWS_AS(IndexSelection::make({1, 2, 6}, 5), std::out_of_range);
}

TEST_CASE("oscillator normalization constants in closed form") {
  MotionSystem ho = builtin("harmonic-oscillator");
  const ConstraintSet& cs = ho.constraint_set();

  struct Case { std::vector<int> sel; std::string expected; };
  for (const auto& c : {Case{{1, 2, 4}, "-C5"},
                        Case{{1, 2, 3}, "0"},
                        Case{{3, 4, 5}, "2*C3"},
                        Case{{1, 4, 5}, "-2*(C2 - C3)"}}) {
    IndexSelection sel = IndexSelection::make(c.sel, 5);
    NormalizationConstant nc = make_normalization_constant(ho.family, cs, sel);
    Expr expected = parse(c.expected);
    for (const auto& pt : sample(ho, 1, 5)) {
      Complex want = evaluate(expected, pt.constants);
      CHECK(approx_equal(nc.value_at(pt.constants), want));
      CHECK(approx_equal(
          normalization_constant(ho.family, cs, sel, pt.constants), want));
    }
  }
}

TEST_CASE("verify_final over every selection of the small systems") {
  for (const char* name : {"harmonic-oscillator", "smorodinsky-winternitz"}) {
    MotionSystem sys = builtin(name);
    const ConstraintSet& cs = sys.constraint_set();
    int m = static_cast<int>(sys.family.size());
    auto pts = sample(sys, 2, 5);
    Observable f("f", Expr::variable("q1"));
    f.prepare(sys.phase_space.coordinates);
    // every ascending 3-subset of the family
    for (int a = 1; a <= m; ++a)
      for (int b = a + 1; b <= m; ++b)
        for (int c = b + 1; c <= m; ++c) {
          IndexSelection sel = IndexSelection::make({a, b, c}, m);
          for (const auto& pt : pts)
            CHECK(verify_final(sys.family, cs, sel, f, pt.phase,
                               sys.phase_space) < 1e-7);
        }
  }
}

TEST_CASE("permuting a selection leaves the identity intact") {
  MotionSystem ho = builtin("harmonic-oscillator");
  const ConstraintSet& cs = ho.constraint_set();
  Observable f("f", Expr::variable("p2"));
  f.prepare(ho.phase_space.coordinates);
  auto pts = sample(ho, 3, 5);
  for (const auto& perm : {std::vector<int>{1, 2, 4}, {2, 1, 4}, {4, 2, 1},
                           {2, 4, 1}}) {
    IndexSelection sel = IndexSelection::make(perm, 5);
    for (const auto& pt : pts)
      CHECK(verify_final(ho.family, cs, sel, f, pt.phase, ho.phase_space) <
            1e-9);
  }
  // ... and the machinery signs of odd/even rearrangements are opposite
  CHECK(IndexSelection::make({1, 2, 4}, 5).sign ==
        -IndexSelection::make({2, 1, 4}, 5).sign);
}

TEST_CASE("homogeneous system vanishes") {
  MotionSystem ho = builtin("harmonic-oscillator");
  const ConstraintSet& cs = ho.constraint_set();
  auto pts = sample(ho, 4, 5);
  for (int arbitrary = 1; arbitrary <= 5; ++arbitrary) {
    std::vector<int> arb{arbitrary};
    for (const auto& pt : pts)
      CHECK(homogeneous_residual(ho.family, cs, arb, pt.phase,
                                 ho.phase_space) < 1e-9);
  }

  MotionSystem ext = builtin("harmonic-oscillator", "extended-6");
  const ConstraintSet& ecs = ext.constraint_set();
  for (const auto& pt : sample(ext, 4, 5))
    CHECK(homogeneous_residual(ext.family, ecs, std::vector<int>{}, pt.phase,
                               ext.phase_space) < 1e-9);

  CHECK_THROWS_AS(homogeneous_residual(ho.family, cs, std::vector<int>{1, 2},
                                       pts.front().phase, ho.phase_space),
                  std::invalid_argument);
}

TEST_CASE("corollary on the Kepler family") {
  MotionSystem kc = builtin("kepler-coulomb");
  const ConstraintSet& cs = kc.constraint_set();
  for (const auto& pt : sample(kc, 5, 5))
    CHECK(verify_corollary(kc.family, cs, std::vector<int>{2, 3, 4, 5},
                           pt.phase, kc.phase_space) < 1e-9);
  // the selection may not contain the Hamiltonian
  CHECK_THROWS_AS(verify_corollary(kc.family, cs, std::vector<int>{1, 2, 3, 4},
                                   sample(kc, 5, 1).front().phase,
                                   kc.phase_space),
                  std::invalid_argument);
}

TEST_CASE("reconstruction from known partials") {
  // F = x^2*y + y^3 up to gauge
  std::map<std::string, Expr> partials{{"x", parse("2*x*y")},
                                       {"y", parse("x^2 + 3*y^2")}};
  Binding gauge{{"x", 0.0}, {"y", 0.0}};
  Expr f = reconstruct_constraint(partials, gauge);
  Polynomial got = Polynomial::from_expr(f);
  Polynomial want = Polynomial::from_expr(parse("x^2*y + y^3"));
  CHECK(got.max_coefficient_difference(want) < 1e-12);
}

TEST_CASE("gauge point fixes the additive constant") {
  std::map<std::string, Expr> partials{{"x", parse("2*x")}};
  Binding gauge{{"x", 2.0}};
  Expr f = reconstruct_constraint(partials, gauge);  // x^2 - 4
  Binding at{{"x", 2.0}};
  CHECK(approx_equal(evaluate(f, at), Complex{0.0, 0.0}));
  Binding at3{{"x", 3.0}};
  CHECK(approx_equal(evaluate(f, at3), Complex{5.0, 0.0}));
}

TEST_CASE("incompatible partials are rejected with the offending pair") {
  std::map<std::string, Expr> partials{{"x", parse("y")}, {"y", parse("-x")}};
  Binding gauge{{"x", 0.0}, {"y", 0.0}};
  try {
    reconstruct_constraint(partials, gauge);
    CHECK(false);
  } catch (const IncompatibilityError& e) {
    CHECK(e.u == "x");
    CHECK(e.v == "y");
  }
}

TEST_CASE("non-polynomial table entries are rejected") {
  std::map<std::string, Expr> partials{{"x", parse("sqrt(x)")}};
  Binding gauge{{"x", 0.0}};
  CHECK_THROWS_AS(reconstruct_constraint(partials, gauge),
                  NonPolynomialError);
}

TEST_CASE("constraint jacobian shape check") {
  MotionSystem ho = builtin("harmonic-oscillator");
  const ConstraintSet& cs = ho.constraint_set();
  auto names = ho.family.member_names();
  Binding c = sample(ho, 6, 1).front().constants;
  std::vector<int> rows{1, 2}, cols{3};
  CHECK_THROWS_AS(constraint_jacobian(cs, rows, cols, names, c),
                  std::invalid_argument);
}
