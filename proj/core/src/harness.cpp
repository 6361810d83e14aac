#include "nambu/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "nambu/poly.hpp"

namespace nambu {

std::string_view check_kind_label(CheckKind kind) {
  switch (kind) {
    case CheckKind::Conservation: return "conservation";
    case CheckKind::ConstraintZero: return "constraint-zero";
    case CheckKind::PbTable: return "pb-table";
    case CheckKind::Final: return "final";
    case CheckKind::Corollary: return "corollary";
    case CheckKind::Homogeneous: return "homogeneous";
    case CheckKind::Decomposition: return "decomposition";
    case CheckKind::DependentVanishing: return "dependent-vanishing";
    case CheckKind::FiN3: return "fi-n3";
    case CheckKind::Reconstruction: return "reconstruction";
  }
  return "?";
}

namespace {

constexpr const char* kSwTable =
    "# Poisson brackets of C4 with the family, as dF/dC partials\n"
    "C2 = -48*C2^2 + 64*C1*C2 - 4*alpha1*C3 + 64*omega^2*alpha2 - 16*C1^2\n"
    "C3 = 4*alpha1*C1 - 4*alpha1*C2 + 8*omega^2*C3\n"
    "C4 = C4\n";

constexpr const char* kHoTable =
    "C2 = 2*C3\n"
    "C3 = 2*C2\n"
    "C4 = -k*C4\n"
    "C5 = -C5\n";

// Same as kHoTable except d/dC2 no longer matches d/dC3 cross-derivatives.
constexpr const char* kCorruptTable =
    "C2 = 2*C3\n"
    "C3 = 3*C2\n"
    "C4 = -k*C4\n"
    "C5 = -C5\n";

struct Registry {
  const RunConfig& cfg;
  std::vector<CheckResult>& out;

  // Runs fn once per sample point; records the max residual.
  void residual_check(std::string name, CheckKind kind, std::string provenance,
                      double tol, const std::vector<SamplePoint>& points,
                      const std::function<double(const SamplePoint&)>& fn) {
    CheckResult r;
    r.name = std::move(name);
    r.kind = kind;
    r.provenance = std::move(provenance);
    r.tolerance = tol;
    r.samples = static_cast<int>(points.size());
    try {
      for (const auto& pt : points)
        r.max_residual = std::max(r.max_residual, fn(pt));
      r.pass = r.max_residual <= tol;
    } catch (const std::exception& e) {
      r.pass = false;
      r.max_residual = std::numeric_limits<double>::infinity();
      r.note = e.what();
    }
    out.push_back(std::move(r));
  }

  void direct_check(std::string name, CheckKind kind, std::string provenance,
                    double tol, int samples,
                    const std::function<double()>& fn) {
    CheckResult r;
    r.name = std::move(name);
    r.kind = kind;
    r.provenance = std::move(provenance);
    r.tolerance = tol;
    r.samples = samples;
    try {
      r.max_residual = fn();
      r.pass = r.max_residual <= tol;
    } catch (const std::exception& e) {
      r.pass = false;
      r.max_residual = std::numeric_limits<double>::infinity();
      r.note = e.what();
    }
    out.push_back(std::move(r));
  }
};

std::string tuple_label(const ConstantFamily& fam, std::span<const int> sel) {
  std::string s = "(";
  for (std::size_t j = 0; j < sel.size(); ++j) {
    if (j) s += ",";
    s += fam.members[static_cast<std::size_t>(sel[j] - 1)].name();
  }
  return s + ")";
}

std::vector<Observable> coordinate_probes(const MotionSystem& sys) {
  std::vector<Observable> fs;
  for (const auto& c : sys.phase_space.coordinates) {
    fs.emplace_back(c, Expr::variable(c));
    fs.back().prepare(sys.phase_space.coordinates);
  }
  return fs;
}

struct FinalSpec {
  std::vector<int> selection;
  std::string expected;  // over C-symbols and parameters
  std::string provenance = "PAPER";
  double rtol_override = 0.0;  // 0 = use cfg.rtol
};

// Registers conservation and constraint-zero checks common to all systems.
void add_common_checks(const MotionSystem& sys,
                       const std::vector<SamplePoint>& pts, Registry& reg,
                       std::string_view set_filter) {
  for (std::size_t j = 0; j < sys.family.size(); ++j) {
    if (sys.family.hamiltonian_index && *sys.family.hamiltonian_index == j)
      continue;  // {H,H} is identically zero, nothing to verify
    const Observable& c = sys.family.members[j];
    reg.residual_check(
        sys.name + "/conservation/" + c.name(), CheckKind::Conservation,
        "TRIVIAL", reg.cfg.rtol, pts, [&sys, &c](const SamplePoint& pt) {
          return scaled_residual(
              poisson(c, sys.family.hamiltonian, pt.phase, sys.phase_space),
              Complex{0.0, 0.0});
        });
  }
  for (const auto& cs : sys.constraint_sets) {
    if (!set_filter.empty() && cs.label != set_filter) continue;
    for (const auto& f : cs.functionals)
      reg.residual_check(
          sys.name + "/constraint-zero/" + cs.label + "/" + f.name(),
          CheckKind::ConstraintZero, "PAPER", reg.cfg.rtol, pts,
          [&f](const SamplePoint& pt) {
            return scaled_residual(evaluate(f.body(), pt.constants),
                                   Complex{0.0, 0.0});
          });
  }
}

void add_pb_checks(const MotionSystem& sys,
                   const std::vector<SamplePoint>& pts, Registry& reg,
                   const std::vector<std::tuple<std::string, std::string,
                                                std::string>>& table) {
  for (const auto& [a, b, expected] : table) {
    int ia = sys.family.index_of(a), ib = sys.family.index_of(b);
    const Observable& ca = sys.family.members[static_cast<std::size_t>(ia - 1)];
    const Observable& cb = sys.family.members[static_cast<std::size_t>(ib - 1)];
    Expr exp_expr = parse(expected);
    reg.residual_check(
        sys.name + "/pb-table/{" + a + "," + b + "}", CheckKind::PbTable,
        "PAPER", reg.cfg.rtol, pts,
        [&sys, &ca, &cb, exp_expr](const SamplePoint& pt) {
          return scaled_residual(poisson(ca, cb, pt.phase, sys.phase_space),
                                 evaluate(exp_expr, pt.constants));
        });
  }
}

void add_final_checks(const MotionSystem& sys, const ConstraintSet& cs,
                      const std::vector<SamplePoint>& pts, Registry& reg,
                      const std::vector<FinalSpec>& specs) {
  auto probes = std::make_shared<std::vector<Observable>>(
      coordinate_probes(sys));
  for (const auto& spec : specs) {
    IndexSelection sel = IndexSelection::make(
        spec.selection, static_cast<int>(sys.family.size()));
    Expr expected = parse(spec.expected);
    double tol = spec.rtol_override > 0 ? spec.rtol_override : reg.cfg.rtol;
    std::string name = sys.name + "/final/" + cs.label + "/" +
                       tuple_label(sys.family, sel.selection);
    reg.residual_check(
        name, CheckKind::Final, spec.provenance, tol, pts,
        [&sys, &cs, sel, expected, probes](const SamplePoint& pt) {
          Complex norm = normalization_constant(sys.family, cs, sel,
                                                pt.constants);
          Complex exp_val = evaluate(expected, pt.constants);
          // Machinery must agree with the tabulated closed form...
          double worst = scaled_residual(norm, exp_val);
          // ...and the bracket identity must hold for every probe f.
          std::vector<Observable> args;
          args.reserve(sel.selection.size() + 1);
          for (const auto& f : *probes) {
            args.clear();
            args.push_back(f);
            for (int j : sel.selection)
              args.push_back(
                  sys.family.members[static_cast<std::size_t>(j - 1)]);
            Complex lhs = nambu_bracket(args, pt.phase, sys.phase_space);
            Complex fdot =
                poisson(f, sys.family.hamiltonian, pt.phase, sys.phase_space);
            worst = std::max(worst, scaled_residual(lhs, exp_val * fdot));
          }
          return worst;
        });
  }
}

void add_corollary_check(const MotionSystem& sys, const ConstraintSet& cs,
                         const std::vector<SamplePoint>& pts, Registry& reg,
                         std::vector<int> sel2, std::string provenance,
                         double tol = 0.0) {
  if (tol <= 0) tol = reg.cfg.rtol;
  std::string name = sys.name + "/corollary/" + cs.label + "/" +
                     tuple_label(sys.family, sel2);
  reg.residual_check(name, CheckKind::Corollary, std::move(provenance), tol,
                     pts, [&sys, &cs, sel2](const SamplePoint& pt) {
                       return verify_corollary(sys.family, cs, sel2, pt.phase,
                                               sys.phase_space);
                     });
}

void add_homogeneous_checks(const MotionSystem& sys, const ConstraintSet& cs,
                            const std::vector<SamplePoint>& pts,
                            Registry& reg) {
  int m = static_cast<int>(sys.family.size());
  int arb = 2 * sys.phase_space.dof - 1 - static_cast<int>(cs.size());
  if (arb < 0) return;  // more constraints than bracket slots: not applicable
  // Enumerate every ascending arbitrary-index tuple; one check per tuple.
  std::vector<int> tuple(static_cast<std::size_t>(arb));
  auto rec = [&](auto&& self, int depth, int next) -> void {
    if (depth == arb) {
      std::vector<int> chosen = tuple;
      std::string label = chosen.empty() ? std::string("()")
                                         : tuple_label(sys.family, chosen);
      reg.residual_check(
          sys.name + "/homogeneous/" + cs.label + "/" + label,
          CheckKind::Homogeneous, "PAPER", reg.cfg.rtol, pts,
          [&sys, &cs, chosen](const SamplePoint& pt) {
            return homogeneous_residual(sys.family, cs, chosen, pt.phase,
                                        sys.phase_space);
          });
      return;
    }
    for (int j = next; j <= m; ++j) {
      tuple[static_cast<std::size_t>(depth)] = j;
      self(self, depth + 1, j + 1);
    }
  };
  rec(rec, 0, 1);
}

void add_reconstruction_checks(const MotionSystem& sys, Registry& reg) {
  reg.direct_check(
      sys.name + "/reconstruction/shipped-table", CheckKind::Reconstruction,
      "PAPER", 1e-12, 0, [&sys]() {
        auto outcome = reconstruct_from_table(sys, shipped_table(sys.name));
        if (!outcome.max_partial_difference)
          throw std::runtime_error("no reference functional shipped");
        return *outcome.max_partial_difference;
      });
  if (sys.name == "harmonic-oscillator")
    reg.direct_check(
        sys.name + "/reconstruction/incompatible-rejected",
        CheckKind::Reconstruction, "TRIVIAL", 0.0, 0, [&sys]() {
          try {
            reconstruct_from_table(sys, kCorruptTable);
          } catch (const IncompatibilityError&) {
            return 0.0;  // rejection is the expected outcome
          }
          throw std::runtime_error(
              "closedness-violating table was not rejected");
        });
}

// --------------------------------------------------------------------------
// per-system registration

void register_harmonic_oscillator(const RunConfig& cfg, Registry& reg) {
  auto run_family = [&](const MotionSystem& sys,
                        const std::vector<FinalSpec>& finals,
                        bool with_extras) {
    auto pts = sample(sys, cfg.seed, cfg.samples);
    add_common_checks(sys, pts, reg, cfg.constraint_set);
    const ConstraintSet& cs = sys.constraint_set(cfg.constraint_set);
    add_final_checks(sys, cs, pts, reg, finals);
    add_homogeneous_checks(sys, cs, pts, reg);
    if (with_extras) {
      add_pb_checks(sys, pts, reg,
                    {{"C2", "C3", "0"},
                     {"C2", "C4", "-C5"},
                     {"C3", "C4", "C5"},
                     {"C2", "C5", "k*C4"},
                     {"C3", "C5", "-k*C4"},
                     {"C4", "C5", "-2*(C2 - C3)"}});
      add_corollary_check(sys, cs, pts, reg, {2, 4}, "DERIVED");
      add_corollary_check(sys, cs, pts, reg, {4, 5}, "DERIVED");
      add_corollary_check(sys, cs, pts, reg, {3, 5}, "DERIVED");
      add_reconstruction_checks(sys, reg);
    }
  };

  std::vector<FinalSpec> base_finals{
      {{1, 2, 4}, "-C5"},
      {{1, 2, 3}, "0"},
      {{3, 4, 5}, "2*C3"},
      {{1, 4, 5}, "-2*(C2 - C3)"},
  };

  MotionSystem ho = builtin("harmonic-oscillator", "", cfg.params);
  run_family(ho, base_finals, true);

  MotionSystem ext6 = builtin("harmonic-oscillator", "extended-6", cfg.params);
  run_family(ext6, base_finals, false);
  {
    auto pts = sample(ext6, cfg.seed, cfg.samples);
    auto probes = std::make_shared<std::vector<Observable>>(
        coordinate_probes(ext6));
    reg.residual_check(
        ext6.name + "/dependent-vanishing/(C2,C3,C6)",
        CheckKind::DependentVanishing, "DERIVED", cfg.rtol, pts,
        [&ext6, probes](const SamplePoint& pt) {
          double worst = 0.0;
          for (const auto& f : *probes) {
            std::vector<Observable> args{f, ext6.family.members[1],
                                         ext6.family.members[2],
                                         ext6.family.members[5]};
            worst = std::max(
                worst, scaled_residual(
                           nambu_bracket(args, pt.phase, ext6.phase_space),
                           Complex{0.0, 0.0}));
          }
          return worst;
        });
  }

  MotionSystem ext7 = builtin("harmonic-oscillator", "extended-7", cfg.params);
  run_family(ext7, base_finals, false);

  MotionSystem noh =
      builtin("harmonic-oscillator", "no-hamiltonian", cfg.params);
  // Family is (C2,C3,C4,C5); the full family's (C3,C4,C5) bracket is
  // selection (2,3,4) here.
  {
    auto pts = sample(noh, cfg.seed, cfg.samples);
    add_common_checks(noh, pts, reg, cfg.constraint_set);
    add_final_checks(noh, noh.constraint_set(cfg.constraint_set), pts, reg,
                     {{{2, 3, 4}, "2*C3"}});
  }
}

void register_smorodinsky_winternitz(const RunConfig& cfg, Registry& reg) {
  MotionSystem sys = builtin("smorodinsky-winternitz", "", cfg.params);
  auto pts = sample(sys, cfg.seed, cfg.samples);
  add_common_checks(sys, pts, reg, cfg.constraint_set);
  add_pb_checks(
      sys, pts, reg,
      {{"C2", "C3", "C4"},
       {"C2", "C4", "4*alpha1*C2 - 8*omega^2*C3 - 4*alpha1*C1"},
       {"C3", "C4",
        "-48*C2^2 + 64*C1*C2 - 4*alpha1*C3 + 64*omega^2*alpha2 - 16*C1^2"}});
  const ConstraintSet& cs = sys.constraint_set(cfg.constraint_set);
  // The bracket table is (up to sign) the gradient of the constraint:
  // {C2,C3} = dF/dC4, {C2,C4} = -dF/dC3, {C3,C4} = dF/dC2.
  {
    const Observable& F = cs.functionals.front();
    struct Row { int a, b; const char* sym; double sign; };
    for (const Row& row : {Row{2, 3, "C4", 1.0}, Row{2, 4, "C3", -1.0},
                           Row{3, 4, "C2", 1.0}}) {
      const Observable& ca =
          sys.family.members[static_cast<std::size_t>(row.a - 1)];
      const Observable& cb =
          sys.family.members[static_cast<std::size_t>(row.b - 1)];
      Expr grad = F.partial(row.sym);
      reg.residual_check(
          sys.name + "/pb-table/gradient/{" + ca.name() + "," + cb.name() +
              "}",
          CheckKind::PbTable, "PAPER", cfg.rtol, pts,
          [&sys, &ca, &cb, grad, sign = row.sign](const SamplePoint& pt) {
            return scaled_residual(
                poisson(ca, cb, pt.phase, sys.phase_space),
                sign * evaluate(grad, pt.constants));
          });
    }
  }
  add_final_checks(
      sys, cs, pts, reg,
      {{{1, 2, 4}, "4*alpha1*C2 - 8*omega^2*C3 - 4*alpha1*C1"},
       {{2, 3, 4}, "-(4*alpha1*C3 + 32*C2^2 - 32*C1*C2)"}});
  add_corollary_check(sys, cs, pts, reg, {2, 3}, "DERIVED");
  add_corollary_check(sys, cs, pts, reg, {2, 4}, "DERIVED");
  add_corollary_check(sys, cs, pts, reg, {3, 4}, "DERIVED");
  add_reconstruction_checks(sys, reg);
}

void register_kepler_coulomb(const RunConfig& cfg, Registry& reg) {
  MotionSystem sys = builtin("kepler-coulomb", "", cfg.params);
  auto pts = sample(sys, cfg.seed, cfg.samples);
  add_common_checks(sys, pts, reg, cfg.constraint_set);
  add_pb_checks(sys, pts, reg,
                {{"L1", "L2", "L3"},
                 {"L2", "L3", "L1"},
                 {"L3", "L1", "L2"},
                 {"A1", "A2", "-2*H*L3"},
                 {"A2", "A3", "-2*H*L1"},
                 {"A3", "A1", "-2*H*L2"},
                 {"L1", "A1", "0"},
                 {"L2", "A2", "0"},
                 {"L3", "A3", "0"},
                 {"L1", "A2", "A3"},
                 {"L1", "A3", "-A2"},
                 {"L2", "A3", "A1"},
                 {"L2", "A1", "-A3"},
                 {"L3", "A1", "A2"},
                 {"L3", "A2", "-A1"}});
  const ConstraintSet& cs = sys.constraint_set(cfg.constraint_set);
  add_final_checks(sys, cs, pts, reg,
                   {{{1, 2, 3, 4, 5}, "A2*L3 - A3*L2"},
                    {{2, 3, 4, 5, 6}, "L3*(L1^2 + L2^2 + L3^2)"},
                    {{1, 2, 3, 6, 7}, "-(A1*A3 + 2*H*L1*L3)"}});
  add_corollary_check(sys, cs, pts, reg, {2, 3, 4, 5}, "PAPER");
  {
    Expr expected = parse("A2*L3 - A3*L2");
    reg.residual_check(
        sys.name + "/decomposition/(L1,L2,L3,A1)", CheckKind::Decomposition,
        "PAPER", cfg.rtol, pts, [&sys, expected](const SamplePoint& pt) {
          std::vector<Observable> args{
              sys.family.members[1], sys.family.members[2],
              sys.family.members[3], sys.family.members[4]};
          return scaled_residual(
              decomposed_bracket(args, pt.phase, sys.phase_space),
              evaluate(expected, pt.constants));
        });
  }
}

void register_winternitz_3(const RunConfig& cfg, Registry& reg) {
  MotionSystem sys = builtin("winternitz-3", "", cfg.params);
  auto pts = sample(sys, cfg.seed, cfg.samples);
  add_common_checks(sys, pts, reg, cfg.constraint_set);
  add_pb_checks(sys, pts, reg,
                {{"T11", "T12", "i*T12"},
                 {"T11", "T13", "i*T13"},
                 {"T22", "T12", "-i*T12"},
                 {"T33", "T13", "-i*T13"},
                 {"T11", "T22", "0"},
                 {"T11", "T33", "0"},
                 {"T22", "T33", "0"},
                 {"T22", "T13", "0"},
                 {"T33", "T12", "0"},
                 {"T12", "T13", "0"}});
  const ConstraintSet& cs = sys.constraint_set(cfg.constraint_set);
  add_final_checks(sys, cs, pts, reg,
                   {{{1, 2, 3, 5, 6}, "T12*T13", "PAPER", 1e-7},
                    {{2, 3, 4, 5, 6}, "T12*T13/(2*k)", "PAPER", 1e-7}});
}

void register_sphere_4(const RunConfig& cfg, Registry& reg) {
  MotionSystem sys = builtin("sphere-4", "", cfg.params);
  auto pts = sample(sys, cfg.seed, cfg.samples);
  add_common_checks(sys, pts, reg, cfg.constraint_set);

  // Cyclic identities the worked 8-bracket relies on. The first and
  // last coincide with constraints F3 and F2; the middle two do not appear
  // as constraints and are checked here.
  for (const auto& [label, src] :
       std::vector<std::pair<std::string, std::string>>{
           {"L[12P3]", "L12*P3 - L13*P2 + L23*P1"},
           {"L[12P4]", "L12*P4 - L14*P2 + L24*P1"},
           {"L[13P4]", "L13*P4 - L14*P3 + L34*P1"},
           {"L[12L34]", "L12*L34 + L14*L23 - L13*L24"}}) {
    Expr e = parse(src);
    reg.residual_check(sys.name + "/identity/" + label,
                       CheckKind::ConstraintZero, "PAPER", cfg.rtol, pts,
                       [e](const SamplePoint& pt) {
                         return scaled_residual(evaluate(e, pt.constants),
                                                Complex{0.0, 0.0});
                       });
  }

  std::vector<FinalSpec> finals{
      {{1, 6, 7, 8, 9, 10, 11}, "0"},
      {{1, 2, 3, 4, 5, 6, 7},
       "L12*P2*P4 + L13*P3*P4 - L14*(P1^2 + P2^2 + P3^2)"},
      {{2, 3, 4, 5, 6, 7, 10}, "-P1*P2"},
  };
  for (const auto& cs : sys.constraint_sets) {
    if (!cfg.constraint_set.empty() && cs.label != cfg.constraint_set)
      continue;
    add_final_checks(sys, cs, pts, reg, finals);
  }
}

void register_structural(const RunConfig& cfg, Registry& reg) {
  const int sets = 10;
  const int pts_per_set = (cfg.samples + sets - 1) / sets;

  auto random_points = [](std::mt19937_64& gen,
                          std::span<const std::string> vars, int count) {
    std::vector<Binding> pts;
    for (int j = 0; j < count; ++j) {
      Binding b;
      for (const auto& v : vars)
        b[v] = -1.0 + 2.0 * static_cast<double>(gen() >> 11) * 0x1.0p-53;
      pts.push_back(std::move(b));
    }
    return pts;
  };

  // decomposed_bracket == Jacobian bracket for 2n arguments.
  for (int n : {2, 3}) {
    reg.direct_check(
        "structural/decomposition/n" + std::to_string(n),
        CheckKind::Decomposition, "DERIVED", cfg.rtol, sets * pts_per_set,
        [&, n]() {
          PhaseSpace ps = PhaseSpace::canonical(n);
          std::mt19937_64 gen(cfg.seed + static_cast<std::uint64_t>(n));
          double worst = 0.0;
          for (int s = 0; s < sets; ++s) {
            std::vector<Observable> fs;
            for (int j = 0; j < 2 * n; ++j) {
              fs.emplace_back("f" + std::to_string(j),
                              random_polynomial(gen, ps.coordinates, 2, 4));
              fs.back().prepare(ps.coordinates);
            }
            for (const auto& b :
                 random_points(gen, ps.coordinates, pts_per_set))
              worst = std::max(
                  worst, scaled_residual(decomposed_bracket(fs, b, ps),
                                         nambu_bracket(fs, b, ps)));
          }
          return worst;
        });
  }

  // Antisymmetry and the Leibniz rule of the Jacobian bracket, n = 2.
  reg.direct_check(
      "structural/antisymmetry/n2", CheckKind::Decomposition, "TRIVIAL",
      cfg.rtol, sets * pts_per_set, [&]() {
        PhaseSpace ps = PhaseSpace::canonical(2);
        std::mt19937_64 gen(cfg.seed + 101);
        double worst = 0.0;
        for (int s = 0; s < sets; ++s) {
          std::vector<Observable> fs;
          for (int j = 0; j < 4; ++j) {
            fs.emplace_back("f" + std::to_string(j),
                            random_polynomial(gen, ps.coordinates, 2, 4));
            fs.back().prepare(ps.coordinates);
          }
          std::vector<Observable> swapped{fs[1], fs[0], fs[2], fs[3]};
          for (const auto& b : random_points(gen, ps.coordinates, pts_per_set))
            worst = std::max(
                worst, scaled_residual(nambu_bracket(fs, b, ps),
                                       -nambu_bracket(swapped, b, ps)));
        }
        return worst;
      });

  reg.direct_check(
      "structural/leibniz/n2", CheckKind::Decomposition, "TRIVIAL", cfg.rtol,
      sets * pts_per_set, [&]() {
        PhaseSpace ps = PhaseSpace::canonical(2);
        std::mt19937_64 gen(cfg.seed + 202);
        double worst = 0.0;
        for (int s = 0; s < sets; ++s) {
          std::vector<Expr> bodies;
          for (int j = 0; j < 5; ++j)
            bodies.push_back(random_polynomial(gen, ps.coordinates, 2, 4));
          auto make = [&](const Expr& e) {
            Observable o("g", e);
            o.prepare(ps.coordinates);
            return o;
          };
          Observable fg = make(bodies[0] * bodies[1]);
          Observable f = make(bodies[0]), g = make(bodies[1]);
          std::vector<Observable> rest{make(bodies[2]), make(bodies[3]),
                                       make(bodies[4])};
          auto with = [&](const Observable& head) {
            std::vector<Observable> args{head};
            args.insert(args.end(), rest.begin(), rest.end());
            return args;
          };
          auto prod = with(fg);
          auto lf = with(f);
          auto lg = with(g);
          for (const auto& b :
               random_points(gen, ps.coordinates, pts_per_set)) {
            Complex lhs = nambu_bracket(prod, b, ps);
            Complex rhs = evaluate(bodies[0], b) * nambu_bracket(lg, b, ps) +
                          evaluate(bodies[1], b) * nambu_bracket(lf, b, ps);
            worst = std::max(worst, scaled_residual(lhs, rhs));
          }
        }
        return worst;
      });

  // Fundamental identity for the 3-ary Jacobian bracket on (x1,x2,x3).
  reg.direct_check(
      "structural/fi-n3", CheckKind::FiN3, "PAPER", 1e-7, sets * pts_per_set,
      [&]() {
        std::vector<std::string> vars{"x1", "x2", "x3"};
        auto nb3 = [&](const Expr& a, const Expr& b, const Expr& c) {
          std::vector<std::vector<Expr>> d(3, std::vector<Expr>(3));
          const Expr* rows[3] = {&a, &b, &c};
          for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 3; ++col)
              d[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] =
                  diff(*rows[r], vars[static_cast<std::size_t>(col)]);
          return d[0][0] * (d[1][1] * d[2][2] - d[1][2] * d[2][1]) -
                 d[0][1] * (d[1][0] * d[2][2] - d[1][2] * d[2][0]) +
                 d[0][2] * (d[1][0] * d[2][1] - d[1][1] * d[2][0]);
        };
        std::mt19937_64 gen(cfg.seed + 303);
        double worst = 0.0;
        for (int s = 0; s < sets; ++s) {
          std::vector<Expr> f;
          for (int j = 0; j < 5; ++j)
            f.push_back(random_polynomial(gen, vars, 3, 3));
          Expr inner = nb3(f[2], f[3], f[4]);
          Expr lhs = nb3(f[0], f[1], inner);
          Expr rhs = nb3(nb3(f[0], f[1], f[2]), f[3], f[4]) +
                     nb3(f[2], nb3(f[0], f[1], f[3]), f[4]) +
                     nb3(f[2], f[3], nb3(f[0], f[1], f[4]));
          for (const auto& b : random_points(gen, vars, pts_per_set))
            worst = std::max(
                worst, scaled_residual(evaluate(lhs, b), evaluate(rhs, b)));
        }
        return worst;
      });
}

}  // namespace

// --------------------------------------------------------------------------

Expr random_polynomial(std::mt19937_64& gen,
                       std::span<const std::string> vars, int degree,
                       int terms) {
  auto unit = [&gen]() {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
  };
  std::vector<Expr> sum;
  for (int t = 0; t < terms; ++t) {
    std::vector<Expr> factors{Expr::constant(-1.0 + 2.0 * unit())};
    int d = static_cast<int>(gen() % static_cast<std::uint64_t>(degree + 1));
    for (int j = 0; j < d; ++j)
      factors.push_back(Expr::variable(
          vars[static_cast<std::size_t>(gen() % vars.size())]));
    sum.push_back(Expr::mul(std::move(factors)));
  }
  return Expr::add(std::move(sum));
}

bool VerificationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.pass; });
}

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return "inf";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

std::string VerificationReport::to_text() const {
  std::ostringstream out;
  out << "selector=" << meta.selector << " seed=" << meta.seed
      << " samples=" << meta.samples << " rtol=" << fmt(meta.rtol)
      << " atol=" << fmt(meta.atol);
  if (!meta.constraint_set.empty())
    out << " constraint-set=" << meta.constraint_set;
  for (const auto& [k, v] : meta.params) out << " " << k << "=" << fmt(v);
  out << "\n";
  int passed = 0;
  for (const auto& c : checks) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << c.name
        << "  kind=" << check_kind_label(c.kind) << " samples=" << c.samples
        << " max_residual=" << fmt(c.max_residual)
        << " tolerance=" << fmt(c.tolerance) << " [" << c.provenance << "]";
    if (!c.note.empty()) out << " note=" << c.note;
    out << "\n";
    if (c.pass) ++passed;
  }
  out << passed << "/" << checks.size() << " checks passed\n";
  return out.str();
}

std::string VerificationReport::to_json() const {
  nlohmann::json j;
  j["meta"] = {{"selector", meta.selector},
               {"seed", meta.seed},
               {"samples", meta.samples},
               {"rtol", meta.rtol},
               {"atol", meta.atol},
               {"constraint_set", meta.constraint_set},
               {"params", meta.params}};
  j["checks"] = nlohmann::json::array();
  for (const auto& c : checks) {
    nlohmann::json e = {{"name", c.name},
                        {"kind", std::string(check_kind_label(c.kind))},
                        {"samples", c.samples},
                        {"max_residual",
                         std::isinf(c.max_residual) ? nlohmann::json("inf")
                                                    : nlohmann::json(c.max_residual)},
                        {"tolerance", c.tolerance},
                        {"pass", c.pass},
                        {"provenance", c.provenance}};
    if (!c.note.empty()) e["note"] = c.note;
    j["checks"].push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

namespace {

// File-based systems get the machinery-only checks: no tabulated values
// is known about them, but conservation, constraint residuals and the
// homogeneous system are always applicable.
void register_generic(const MotionSystem& sys, const RunConfig& cfg,
                      Registry& reg) {
  auto pts = sample(sys, cfg.seed, cfg.samples);
  add_common_checks(sys, pts, reg, cfg.constraint_set);
  for (const auto& cs : sys.constraint_sets) {
    if (!cfg.constraint_set.empty() && cs.label != cfg.constraint_set)
      continue;
    add_homogeneous_checks(sys, cs, pts, reg);
  }
}

std::map<std::string, double> known_params(const MotionSystem& probe,
                                           const std::map<std::string, double>& params) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : params)
    if (probe.parameters.contains(k)) out[k] = v;
  return out;
}

void register_system(const std::string& name, const RunConfig& cfg,
                     Registry& reg, bool strict_params) {
  RunConfig local = cfg;
  if (!strict_params)
    local.params = known_params(builtin(name), cfg.params);
  Registry local_reg{local, reg.out};
  if (name == "harmonic-oscillator")
    register_harmonic_oscillator(local, local_reg);
  else if (name == "smorodinsky-winternitz")
    register_smorodinsky_winternitz(local, local_reg);
  else if (name == "kepler-coulomb")
    register_kepler_coulomb(local, local_reg);
  else if (name == "winternitz-3")
    register_winternitz_3(local, local_reg);
  else if (name == "sphere-4")
    register_sphere_4(local, local_reg);
  else
    throw SystemFormatError("unknown system '" + name + "'");
}

}  // namespace

VerificationReport run_suite(const std::string& selector,
                             const RunConfig& cfg) {
  VerificationReport report;
  report.meta = {selector,  cfg.seed,           cfg.samples, cfg.rtol,
                 cfg.atol,  cfg.constraint_set, cfg.params};
  Registry reg{cfg, report.checks};

  bool catalog = std::any_of(std::begin(kBuiltinNames), std::end(kBuiltinNames),
                             [&](const char* n) { return selector == n; });
  if (selector == "all") {
    for (const char* name : kBuiltinNames)
      register_system(name, cfg, reg, false);
    register_structural(cfg, reg);
  } else if (selector == "structural") {
    register_structural(cfg, reg);
  } else if (catalog) {
    register_system(selector, cfg, reg, true);
  } else if (std::filesystem::exists(selector)) {
    std::ifstream in(selector);
    std::stringstream buf;
    buf << in.rdbuf();
    MotionSystem sys = load_system(buf.str(), cfg.params);
    register_generic(sys, cfg, reg);
  } else {
    throw SystemFormatError("unknown system or file '" + selector + "'");
  }

  std::sort(report.checks.begin(), report.checks.end(),
            [](const CheckResult& a, const CheckResult& b) {
              return a.name < b.name;
            });
  return report;
}

VerificationReport run_suite(const MotionSystem& sys, const RunConfig& cfg) {
  VerificationReport report;
  report.meta = {sys.name,  cfg.seed,           cfg.samples, cfg.rtol,
                 cfg.atol,  cfg.constraint_set, cfg.params};
  Registry reg{cfg, report.checks};
  register_generic(sys, cfg, reg);
  std::sort(report.checks.begin(), report.checks.end(),
            [](const CheckResult& a, const CheckResult& b) {
              return a.name < b.name;
            });
  return report;
}

BracketEvaluation eval_bracket(const MotionSystem& sys,
                               const std::vector<std::string>& args,
                               const Binding& phase_point,
                               std::string_view constraint_set) {
  const std::size_t arity = sys.phase_space.coordinates.size();
  if (args.size() != arity)
    throw std::invalid_argument("expected " + std::to_string(arity) +
                                " arguments, got " +
                                std::to_string(args.size()));
  std::vector<Observable> obs;
  std::vector<int> member_indices;
  int probe_pos = -1;
  for (std::size_t j = 0; j < args.size(); ++j) {
    const std::string& a = args[j];
    if (a.starts_with("f:")) {
      std::string coord = a.substr(2);
      if (std::find(sys.phase_space.coordinates.begin(),
                    sys.phase_space.coordinates.end(),
                    coord) == sys.phase_space.coordinates.end())
        throw std::invalid_argument("unknown coordinate '" + coord + "'");
      obs.emplace_back(a, Expr::variable(coord));
      probe_pos = static_cast<int>(j);
    } else if (int idx = sys.family.index_of(a); idx > 0) {
      obs.push_back(sys.family.members[static_cast<std::size_t>(idx - 1)]);
      member_indices.push_back(idx);
    } else if (std::find(sys.phase_space.coordinates.begin(),
                         sys.phase_space.coordinates.end(),
                         a) != sys.phase_space.coordinates.end()) {
      obs.emplace_back(a, Expr::variable(a));
    } else {
      throw std::invalid_argument("unknown argument '" + a + "'");
    }
    obs.back().prepare(sys.phase_space.coordinates);
  }

  Binding b;
  for (const auto& [k, v] : sys.parameters) b[k] = v;
  for (const auto& [k, v] : phase_point) b[k] = v;

  BracketEvaluation result;
  result.value = nambu_bracket(obs, b, sys.phase_space);

  if (probe_pos == 0 && member_indices.size() == arity - 1) {
    const ConstraintSet& cs = sys.constraint_set(constraint_set);
    IndexSelection sel = IndexSelection::make(
        member_indices, static_cast<int>(sys.family.size()));
    Binding c_values = family_values(sys.family, b);
    Complex norm = normalization_constant(sys.family, cs, sel, c_values);
    Complex fdot =
        poisson(obs.front(), sys.family.hamiltonian, b, sys.phase_space);
    result.prediction = norm * fdot;
    result.residual = scaled_residual(result.value, *result.prediction);
  }
  return result;
}

std::map<std::string, Expr> parse_bracket_table(std::string_view contents) {
  std::map<std::string, Expr> table;
  std::istringstream in{std::string(contents)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    auto begin = raw.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    auto eq = raw.find('=');
    if (eq == std::string::npos || eq <= begin)
      throw SystemFormatError("table line " + std::to_string(lineno) +
                              ": expected '<C-symbol> = <expr>'");
    auto name_end = raw.find_last_not_of(" \t", eq - 1);
    std::string name = raw.substr(begin, name_end - begin + 1);
    try {
      table.emplace(name, parse(raw.substr(eq + 1)));
    } catch (const ParseError& e) {
      throw SystemFormatError("table line " + std::to_string(lineno) + ": " +
                              e.what());
    }
  }
  if (table.empty()) throw SystemFormatError("empty bracket table");
  return table;
}

ReconstructionOutcome reconstruct_from_table(const MotionSystem& sys,
                                             std::string_view table_contents) {
  auto table = parse_bracket_table(table_contents);
  Binding gauge;
  for (const auto& m : sys.family.members) gauge[m.name()] = Complex{0.0, 0.0};

  ReconstructionOutcome outcome;
  outcome.reconstructed = reconstruct_constraint(table, gauge);

  if (sys.reconstruction_reference) {
    const Expr* ref = nullptr;
    for (const auto& cs : sys.constraint_sets)
      for (const auto& f : cs.functionals)
        if (f.name() == *sys.reconstruction_reference) ref = &f.body();
    if (ref) {
      outcome.reference = *sys.reconstruction_reference;
      Polynomial recon = Polynomial::from_expr(outcome.reconstructed);
      double worst = 0.0;
      for (const auto& [sym, unused] : table) {
        Polynomial a = Polynomial::from_expr(diff(*ref, sym));
        Polynomial b = recon.differentiated(sym);
        worst = std::max(worst, a.max_coefficient_difference(b));
      }
      outcome.max_partial_difference = worst;
    }
  }
  return outcome;
}

std::string_view shipped_table(std::string_view system_name) {
  if (system_name == "smorodinsky-winternitz") return kSwTable;
  if (system_name == "harmonic-oscillator") return kHoTable;
  throw SystemFormatError("no shipped bracket table for '" +
                          std::string(system_name) + "'");
}

}  // namespace nambu
