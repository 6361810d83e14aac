#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nambu/systems.hpp"

using namespace nambu;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("catalog shape") {
  struct Row { const char* name; int n; std::size_t m; std::size_t s; };
  for (const Row& r : {Row{"harmonic-oscillator", 2, 5, 2},
                       Row{"smorodinsky-winternitz", 2, 4, 1},
                       Row{"kepler-coulomb", 3, 7, 2},
                       Row{"winternitz-3", 3, 6, 1},
                       Row{"sphere-4", 4, 11, 4}}) {
    MotionSystem sys = builtin(r.name);
    CHECK(sys.phase_space.dof == r.n);
    CHECK(sys.family.size() == r.m);
    CHECK(sys.constraint_sets.front().size() == r.s);
    CHECK(sys.family.hamiltonian_index == 0);
  }
  CHECK_THROWS_AS(builtin("nope"), SystemFormatError);
  CHECK_THROWS_AS(builtin("harmonic-oscillator", "nope"), SystemFormatError);
  CHECK_THROWS_AS(builtin("sphere-4", "extended-6"), SystemFormatError);
}

TEST_CASE("every family member is a constant of motion") {
  for (const char* name : kBuiltinNames) {
    MotionSystem sys = builtin(name);
    CAPTURE(name);
    for (const auto& pt : sample(sys, 7, 3))
      for (const auto& c : sys.family.members)
        CHECK(std::abs(poisson(c, sys.family.hamiltonian, pt.phase,
                               sys.phase_space)) < 1e-9);
  }
}

TEST_CASE("constraints vanish on shipped data") {
  for (const char* name : kBuiltinNames) {
    MotionSystem sys = builtin(name);
    CAPTURE(name);
    for (const auto& pt : sample(sys, 8, 3))
      for (const auto& cs : sys.constraint_sets)
        for (const auto& f : cs.functionals)
          CHECK(scaled_residual(evaluate(f.body(), pt.constants),
                                Complex{0.0, 0.0}) < 1e-9);
  }
}

TEST_CASE("parameter overrides propagate") {
  MotionSystem ho = builtin("harmonic-oscillator", "", {{"k", 2.0}});
  CHECK(ho.parameters.at("k") == 2.0);
  Binding phase{{"q1", 1.0}, {"p1", 0.0}, {"q2", 0.0}, {"p2", 0.0}};
  Binding c = constants_at(ho, phase);
  CHECK(c.at("C2") == Complex{1.0, 0.0});  // k*q1^2/2 with k=2
  CHECK_THROWS_AS(builtin("harmonic-oscillator", "", {{"zeta", 1.0}}),
                  SystemFormatError);
}

TEST_CASE("sampling is deterministic and guarded") {
  MotionSystem sw = builtin("smorodinsky-winternitz");
  auto a = sample(sw, 42, 20);
  auto b = sample(sw, 42, 20);
  REQUIRE(a.size() == 20);
  for (std::size_t j = 0; j < a.size(); ++j)
    CHECK(a[j].phase == b[j].phase);
  auto c = sample(sw, 43, 20);
  CHECK(a.front().phase != c.front().phase);
  for (const auto& pt : a)
    for (const auto& g : sw.guards)
      CHECK(std::abs(evaluate(g.expression, pt.phase)) >= g.min_abs);

  MotionSystem w3 = builtin("winternitz-3");
  for (const auto& pt : sample(w3, 42, 10))
    for (int j = 1; j <= 3; ++j) {
      Complex q = pt.phase.at(w3.phase_space.q(j));
      CHECK(std::abs(q) >= 0.1);
      CHECK(q.real() >= 0.3);  // the shipped box keeps q_i positive
      CHECK(q.real() <= 2.0);
    }
}

TEST_CASE("impossible guards exhaust the sampler") {
  MotionSystem sys = load_system(R"(
    system "tight"
    dof 2
    hamiltonian = C1
    constant C1 = p1^2/2 + p2^2/2
    constant C2 = p1
    constraintset "default"
    constraint F = C1 - C1
    guard q1 - q1 >= 0.5
  )");
  CHECK_THROWS_AS(sample(sys, 1, 1), SamplingError);
}

TEST_CASE("system files round trip") {
  for (const char* name : kBuiltinNames) {
    MotionSystem sys = builtin(name);
    CAPTURE(name);
    MotionSystem back = load_system(to_system_file(sys));
    CHECK(back.name == sys.name);
    CHECK(back.phase_space.dof == sys.phase_space.dof);
    CHECK(back.parameters == sys.parameters);
    CHECK(back.family.member_names() == sys.family.member_names());
    CHECK(back.family.hamiltonian_index == sys.family.hamiltonian_index);
    REQUIRE(back.constraint_sets.size() == sys.constraint_sets.size());
    CHECK(back.guards.size() == sys.guards.size());
    // identical numeric behavior at identical points
    auto pts = sample(sys, 11, 3);
    auto pts2 = sample(back, 11, 3);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      CHECK(pts[j].phase == pts2[j].phase);
      for (const auto& [k, v] : pts[j].constants)
        CHECK(approx_equal(v, pts2[j].constants.at(k), 1e-12, 1e-12));
    }
  }
}

TEST_CASE("committed system files match the builders") {
  for (const char* name : kBuiltinNames) {
    CAPTURE(name);
    std::string path = std::string(DATA_DIR) + "/systems/" + name + ".sys";
    CHECK(read_file(path) == to_system_file(builtin(name)));
  }
}

TEST_CASE("loader error reporting") {
  auto load = [](const std::string& text) { return load_system(text); };

  CHECK_THROWS_WITH_AS(load("dof 2\nhamiltonian = q1\nconstraint F = C1"),
                       doctest::Contains("missing 'system'"),
                       SystemFormatError);
  CHECK_THROWS_WITH_AS(
      load("system \"x\"\nhamiltonian = q1\nconstraint F = C1"),
      doctest::Contains("missing 'dof'"), SystemFormatError);
  CHECK_THROWS_WITH_AS(
      load("system \"x\"\ndof 2\nconstant C1 = q1\n"
           "constraintset \"d\"\nconstraint F = C1"),
      doctest::Contains("missing 'hamiltonian'"), SystemFormatError);
  CHECK_THROWS_WITH_AS(
      load("system \"x\"\ndof 2\nbogus 1"),
      doctest::Contains("line 3: unknown keyword 'bogus'"), SystemFormatError);
  // constraints live in C-space, never on phase coordinates
  CHECK_THROWS_WITH_AS(
      load("system \"x\"\ndof 2\nhamiltonian = C1\nconstant C1 = p1^2\n"
           "constant C2 = p2\nconstraintset \"d\"\nconstraint F = C1 - q1"),
      doctest::Contains("phase coordinate"), SystemFormatError);
  CHECK_THROWS_WITH_AS(
      load("system \"x\"\ndof 2\nhamiltonian = C1\nconstant C1 = p1^2\n"
           "constant C2 = zeta*p2\nconstraintset \"d\"\nconstraint F = C1"),
      doctest::Contains("undeclared symbol 'zeta'"), SystemFormatError);
  CHECK_THROWS_WITH_AS(
      load("system \"x\"\ndof 2\nconstant C1 = q1^"),
      doctest::Contains("line 3"), SystemFormatError);
  CHECK_THROWS_WITH_AS(
      load("system \"x\"\ndof 2\nhamiltonian = C9\nconstant C1 = p1^2\n"
           "constant C2 = p2\nconstraintset \"d\"\nconstraint F = C1"),
      doctest::Contains("unknown constant 'C9'"), SystemFormatError);
}

TEST_CASE("hamiltonian outside the family is allowed") {
  MotionSystem sys = load_system(R"(
    system "external-h"
    dof 2
    hamiltonian = p1^2/2 + p2^2/2 + q1^2/2 + q2^2/2
    constant C2 = p1^2/2 + q1^2/2
    constant C3 = p2^2/2 + q2^2/2
    constraintset "default"
    constraint F = C2 - C2
  )");
  CHECK(!sys.family.hamiltonian_index.has_value());
  CHECK(sys.family.size() == 2);
}

TEST_CASE("constraint set lookup") {
  MotionSystem s4 = builtin("sphere-4");
  CHECK(s4.constraint_set().label == "standard");
  CHECK(s4.constraint_set("primed").label == "primed");
  CHECK_THROWS_AS(s4.constraint_set("bogus"), SystemFormatError);
}
