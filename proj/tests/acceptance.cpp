// Acceptance gate: one pass/fail line per criterion, driven by the full
// verification suite at the default seed/tolerances (>= 100 guarded random
// points per check, seed-deterministic). Exit status 0 iff all pass.

#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "nambu/harness.hpp"

using nambu::CheckResult;
using nambu::VerificationReport;

namespace {

struct Criterion {
  std::string title;
  std::function<bool(const CheckResult&)> matches;
};

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

int main() {
  nambu::RunConfig cfg;  // seed 42, 100 samples, rtol 1e-8, atol 1e-10
  VerificationReport report = nambu::run_suite("all", cfg);

  std::vector<Criterion> criteria{
      {"1. harmonic oscillator: PB table, four 4-brackets, Hamiltonian-free "
       "and extended families",
       [](const CheckResult& c) {
         return starts_with(c.name, "harmonic-oscillator");
       }},
      {"2. Smorodinsky-Winternitz: PB/gradient relations and both 4-brackets",
       [](const CheckResult& c) {
         return starts_with(c.name, "smorodinsky-winternitz");
       }},
      {"3. Kepler-Coulomb: constraints, three 6-brackets, decomposed "
       "4-bracket",
       [](const CheckResult& c) {
         return starts_with(c.name, "kepler-coulomb");
       }},
      {"4. Winternitz n=3: complex T-algebra and both 6-brackets",
       [](const CheckResult& c) {
         return starts_with(c.name, "winternitz-3");
       }},
      {"5. sphere n=4: three 8-brackets, cyclic identities, primed "
       "constraint set",
       [](const CheckResult& c) { return starts_with(c.name, "sphere-4"); }},
      {"6. structural: homogeneous system, antisymmetry, Leibniz, "
       "fundamental identity, decomposition",
       [](const CheckResult& c) {
         return starts_with(c.name, "structural/") ||
                c.kind == nambu::CheckKind::Homogeneous;
       }},
      {"7. reconstruction: shipped tables integrate back, corrupt table "
       "rejected",
       [](const CheckResult& c) {
         return c.kind == nambu::CheckKind::Reconstruction;
       }},
  };

  bool all_ok = true;
  for (const auto& crit : criteria) {
    int total = 0, passed = 0;
    double worst = 0.0;
    for (const auto& c : report.checks) {
      if (!crit.matches(c)) continue;
      ++total;
      if (c.pass) ++passed;
      if (c.max_residual > worst) worst = c.max_residual;
    }
    bool ok = total > 0 && passed == total;
    all_ok = all_ok && ok;
    std::printf("%s  %s (%d/%d checks, max residual %.3e)\n",
                ok ? "PASS" : "FAIL", crit.title.c_str(), passed, total,
                worst);
  }

  int covered = 0;
  for (const auto& c : report.checks)
    if (!c.pass) {
      std::printf("  failing: %s (%s)\n", c.name.c_str(), c.note.c_str());
    } else {
      ++covered;
    }
  std::printf("%s: %d/%zu suite checks passed, seed=%llu samples=%d\n",
              all_ok ? "ACCEPTED" : "REJECTED", covered,
              report.checks.size(),
              static_cast<unsigned long long>(report.meta.seed),
              report.meta.samples);
  return all_ok ? 0 : 1;
}
