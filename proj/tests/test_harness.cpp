#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nambu/harness.hpp"
#include "nambu/poly.hpp"

using namespace nambu;

namespace {

RunConfig quick_cfg() {
  RunConfig cfg;
  cfg.samples = 10;
  return cfg;
}

bool has_check(const VerificationReport& r, const std::string& name) {
  return std::any_of(r.checks.begin(), r.checks.end(),
                     [&](const CheckResult& c) { return c.name == name; });
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("oscillator suite passes and registers the tabulated brackets") {
  VerificationReport r = run_suite("harmonic-oscillator", quick_cfg());
  CHECK(r.all_pass());
  CHECK(has_check(r, "harmonic-oscillator/final/default/(C1,C2,C4)"));
  CHECK(has_check(r, "harmonic-oscillator/final/default/(C3,C4,C5)"));
  CHECK(has_check(r, "harmonic-oscillator/pb-table/{C4,C5}"));
  CHECK(has_check(r, "harmonic-oscillator:no-hamiltonian/final/default/"
                     "(C3,C4,C5)"));
  CHECK(has_check(r, "harmonic-oscillator:extended-6/dependent-vanishing/"
                     "(C2,C3,C6)"));
  // report is sorted by name
  for (std::size_t j = 1; j < r.checks.size(); ++j)
    CHECK(r.checks[j - 1].name < r.checks[j].name);
}

TEST_CASE("sphere suite covers the zero-value bracket and both sets") {
  RunConfig cfg = quick_cfg();
  VerificationReport r = run_suite("sphere-4", cfg);
  CHECK(r.all_pass());
  CHECK(has_check(r, "sphere-4/final/standard/(H,L12,L13,L14,L23,L24,L34)"));
  CHECK(has_check(r, "sphere-4/final/primed/(H,L12,L13,L14,L23,L24,L34)"));

  cfg.constraint_set = "primed";
  VerificationReport pr = run_suite("sphere-4", cfg);
  CHECK(pr.all_pass());
  CHECK(!has_check(pr, "sphere-4/final/standard/(H,P1,P2,P3,P4,L12,L13)"));
  CHECK(has_check(pr, "sphere-4/final/primed/(H,P1,P2,P3,P4,L12,L13)"));
}

TEST_CASE("structural suite") {
  VerificationReport r = run_suite("structural", quick_cfg());
  CHECK(r.all_pass());
  CHECK(has_check(r, "structural/fi-n3"));
  CHECK(has_check(r, "structural/decomposition/n3"));
}

TEST_CASE("reports are byte-stable and seed-sensitive") {
  RunConfig cfg = quick_cfg();
  VerificationReport a = run_suite("smorodinsky-winternitz", cfg);
  VerificationReport b = run_suite("smorodinsky-winternitz", cfg);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_text() == b.to_text());
  cfg.seed = 43;
  VerificationReport c = run_suite("smorodinsky-winternitz", cfg);
  CHECK(a.to_json() != c.to_json());
  // text and JSON carry the same residuals
  for (const auto& chk : a.checks) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", chk.max_residual);
    (void)buf;
    CHECK(a.to_text().find(chk.name) != std::string::npos);
    CHECK(a.to_json().find(chk.name) != std::string::npos);
  }
}

TEST_CASE("unknown selector throws") {
  CHECK_THROWS_AS(run_suite("not-a-system", quick_cfg()), SystemFormatError);
}

TEST_CASE("file-based systems run the generic machinery checks") {
  MotionSystem ho = builtin("harmonic-oscillator");
  std::string path = "roundtrip-test.sys";
  {
    std::ofstream out(path);
    out << to_system_file(ho);
  }
  VerificationReport r = run_suite(path, quick_cfg());
  std::remove(path.c_str());
  CHECK(r.all_pass());
  CHECK(has_check(r, "harmonic-oscillator/homogeneous/default/(C3)"));
}

TEST_CASE("eval_bracket trivial and registered cases") {
  MotionSystem ho = builtin("harmonic-oscillator");
  Binding pt = sample(ho, 42, 1).front().phase;

  auto unit = eval_bracket(ho, {"q1", "p1", "q2", "p2"}, pt);
  CHECK(unit.value == Complex{1.0, 0.0});
  CHECK(!unit.prediction.has_value());

  auto zero = eval_bracket(ho, {"f:q1", "C1", "C2", "C3"}, pt);
  CHECK(std::abs(zero.value) < 1e-10);
  REQUIRE(zero.prediction.has_value());
  CHECK(std::abs(*zero.prediction) < 1e-10);

  auto reg = eval_bracket(ho, {"f:p2", "C1", "C2", "C4"}, pt);
  REQUIRE(reg.residual.has_value());
  CHECK(*reg.residual < 1e-9);

  CHECK_THROWS_AS(eval_bracket(ho, {"q1", "p1"}, pt), std::invalid_argument);
  CHECK_THROWS_AS(eval_bracket(ho, {"q1", "p1", "q2", "bogus"}, pt),
                  std::invalid_argument);
  CHECK_THROWS_AS(eval_bracket(ho, {"f:zz", "C1", "C2", "C3"}, pt),
                  std::invalid_argument);
}

TEST_CASE("shipped tables reconstruct the shipped constraints") {
  MotionSystem sw = builtin("smorodinsky-winternitz");
  auto sw_out = reconstruct_from_table(sw, shipped_table(sw.name));
  REQUIRE(sw_out.max_partial_difference.has_value());
  CHECK(*sw_out.max_partial_difference < 1e-12);
  CHECK(sw_out.reference == "F");

  MotionSystem ho = builtin("harmonic-oscillator");
  auto ho_out = reconstruct_from_table(ho, shipped_table(ho.name));
  REQUIRE(ho_out.max_partial_difference.has_value());
  CHECK(*ho_out.max_partial_difference < 1e-12);
  // the oscillator table integrates to F2 exactly (its gauge term is 0)
  Polynomial got = Polynomial::from_expr(ho_out.reconstructed);
  Polynomial want = Polynomial::from_expr(parse("2*C2*C3 - k*C4^2/2 - C5^2/2"));
  CHECK(got.max_coefficient_difference(want) < 1e-12);
}

TEST_CASE("shipped tables match the committed data files") {
  CHECK(read_file(std::string(DATA_DIR) + "/tables/harmonic-oscillator.pb") ==
        shipped_table("harmonic-oscillator"));
  CHECK(read_file(std::string(DATA_DIR) +
                  "/tables/smorodinsky-winternitz.pb") ==
        shipped_table("smorodinsky-winternitz"));
}

TEST_CASE("bracket table parsing") {
  auto t = parse_bracket_table("# comment\nC2 = 2*C3\n\nC4 = -k*C4\n");
  CHECK(t.size() == 2);
  CHECK(t.contains("C2"));
  CHECK_THROWS_AS(parse_bracket_table(""), SystemFormatError);
  CHECK_THROWS_AS(parse_bracket_table("C2 is 2*C3"), SystemFormatError);
  CHECK_THROWS_AS(parse_bracket_table("C2 = 2*"), SystemFormatError);
}

TEST_CASE("random polynomials are deterministic in the generator") {
  std::vector<std::string> vars{"x", "y"};
  std::mt19937_64 a(5), b(5);
  Expr ea = random_polynomial(a, vars, 2, 4);
  Expr eb = random_polynomial(b, vars, 2, 4);
  CHECK(structurally_equal(ea, eb));
}
