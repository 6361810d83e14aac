#include "nambu/systems.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

namespace nambu {

namespace {

std::string join(const std::vector<std::string>& parts,
                 const std::string& sep) {
  std::string out;
  for (std::size_t j = 0; j < parts.size(); ++j) {
    if (j) out += sep;
    out += parts[j];
  }
  return out;
}

Observable obs(std::string name, const std::string& src) {
  return Observable(std::move(name), parse(src));
}

void apply_overrides(MotionSystem& sys,
                     const std::map<std::string, double>& overrides) {
  for (const auto& [name, value] : overrides) {
    auto it = sys.parameters.find(name);
    if (it == sys.parameters.end())
      throw SystemFormatError("unknown parameter '" + name + "' for system '" +
                              sys.name + "'");
    it->second = value;
  }
}

void finalize(MotionSystem& sys) {
  if (sys.family.members.size() < 2)
    throw SystemFormatError("system '" + sys.name + "' needs constants");
  std::vector<std::string> names = sys.family.member_names();
  for (auto& m : sys.family.members) m.prepare(sys.phase_space.coordinates);
  sys.family.hamiltonian.prepare(sys.phase_space.coordinates);
  for (auto& cs : sys.constraint_sets) cs.prepare(names);

  std::set<std::string> coord_set(sys.phase_space.coordinates.begin(),
                                  sys.phase_space.coordinates.end());
  std::set<std::string> allowed = coord_set;
  for (const auto& [p, v] : sys.parameters) allowed.insert(p);
  for (const auto& m : sys.family.members)
    for (const auto& v : free_variables(m.body()))
      if (!allowed.contains(v))
        throw SystemFormatError("constant " + m.name() +
                                " uses undeclared symbol '" + v + "'");
  std::set<std::string> c_allowed(names.begin(), names.end());
  for (const auto& [p, v] : sys.parameters) c_allowed.insert(p);
  for (const auto& cs : sys.constraint_sets)
    for (const auto& f : cs.functionals)
      for (const auto& v : free_variables(f.body())) {
        if (coord_set.contains(v))
          throw SystemFormatError("constraint " + f.name() +
                                  " references phase coordinate '" + v + "'");
        if (!c_allowed.contains(v))
          throw SystemFormatError("constraint " + f.name() +
                                  " uses undeclared symbol '" + v + "'");
      }
}

// --------------------------------------------------------------------------
// catalog

MotionSystem make_harmonic_oscillator(std::string_view variant) {
  MotionSystem sys;
  sys.name = "harmonic-oscillator";
  sys.phase_space = PhaseSpace::canonical(2);
  sys.parameters = {{"k", 1.0}};

  const std::string c1 = "(p1^2 + p2^2)/2 + k*(q1^2 + q2^2)/2";
  std::vector<Observable> members{
      obs("C1", c1),
      obs("C2", "p1^2/2 + k*q1^2/2"),
      obs("C3", "p2^2/2 + k*q2^2/2"),
      obs("C4", "q1*p2 - q2*p1"),
      obs("C5", "p1*p2 + k*q1*q2"),
  };
  std::vector<Observable> functionals{
      obs("F1", "C1 - C2 - C3"),
      obs("F2", "2*C2*C3 - k*C4^2/2 - C5^2/2"),
  };

  if (variant == "no-hamiltonian") {
    sys.name += ":no-hamiltonian";
    sys.family.hamiltonian = Observable("H", parse(c1));
    sys.family.members.assign(members.begin() + 1, members.end());
    sys.family.hamiltonian_index.reset();
    sys.constraint_sets.push_back(
        {"default", {obs("F", "-(2*C2*C3 - k*C4^2/2 - C5^2/2)")}});
    finalize(sys);
    return sys;
  }

  if (variant == "extended-6" || variant == "extended-7") {
    members.push_back(obs("C6", "p1^2/2 + k*q1^2/2 - p2^2/2 - k*q2^2/2"));
    functionals.push_back(obs("F3", "C6 - C2 + C3"));
    sys.name += ":extended-6";
  }
  if (variant == "extended-7") {
    members.push_back(obs("C7", "(q1*p2 - q2*p1)*(p1*p2 + k*q1*q2)"));
    functionals.push_back(obs("F4", "C7 - C4*C5"));
    sys.name = "harmonic-oscillator:extended-7";
  } else if (!variant.empty() && variant != "extended-6") {
    throw SystemFormatError("unknown harmonic-oscillator variant '" +
                            std::string(variant) + "'");
  }

  sys.family.members = std::move(members);
  sys.family.hamiltonian = Observable("C1", parse(c1));
  sys.family.hamiltonian_index = 0;
  sys.constraint_sets.push_back({"default", std::move(functionals)});
  sys.reconstruction_reference = "F2";
  finalize(sys);
  return sys;
}

MotionSystem make_smorodinsky_winternitz() {
  MotionSystem sys;
  sys.name = "smorodinsky-winternitz";
  sys.phase_space = PhaseSpace::canonical(2);
  sys.parameters = {{"omega", 1.0}, {"alpha1", 1.0}, {"alpha2", 1.0}};
  sys.family.members = {
      obs("C1",
          "(p1^2 + p2^2)/2 + omega^2*(4*q1^2 + q2^2) + alpha1*q1 + "
          "alpha2/q2^2"),
      obs("C2", "p1^2/2 + alpha1*q1 + 4*omega^2*q1^2"),
      obs("C3",
          "2*p2*(q1*p2 - q2*p1) - 4*omega^2*q1*q2^2 + 4*alpha2*q1/q2^2 - "
          "alpha1*q2^2"),
      obs("C4",
          "-2*(alpha1 + 8*omega^2*q1)*q2*p2 - p1*(2*p2^2 - 4*omega^2*q2^2 + "
          "4*alpha2/q2^2)"),
  };
  sys.family.hamiltonian = sys.family.members.front();
  sys.family.hamiltonian_index = 0;
  sys.constraint_sets.push_back(
      {"default",
       {obs("F",
            "C4^2/2 - 4*alpha1*C2*C3 + 4*omega^2*C3^2 + 4*alpha1*C1*C3 - "
            "16*C2^3 + 32*C1*C2^2 + 64*omega^2*alpha2*C2 - 16*C1^2*C2 + "
            "4*alpha1^2*alpha2")}});
  sys.guards.push_back({parse("q2"), 0.1});
  sys.reconstruction_reference = "F";
  finalize(sys);
  return sys;
}

MotionSystem make_kepler_coulomb() {
  MotionSystem sys;
  sys.name = "kepler-coulomb";
  sys.phase_space = PhaseSpace::canonical(3);
  sys.parameters = {{"alpha", 1.0}};
  const std::string r = "sqrt(q1^2 + q2^2 + q3^2)";
  const std::string l1 = "(q2*p3 - q3*p2)";
  const std::string l2 = "(q3*p1 - q1*p3)";
  const std::string l3 = "(q1*p2 - q2*p1)";
  sys.family.members = {
      obs("H", "(p1^2 + p2^2 + p3^2)/2 - alpha/" + r),
      obs("L1", l1),
      obs("L2", l2),
      obs("L3", l3),
      obs("A1", "p2*" + l3 + " - p3*" + l2 + " - alpha*q1/" + r),
      obs("A2", "p3*" + l1 + " - p1*" + l3 + " - alpha*q2/" + r),
      obs("A3", "p1*" + l2 + " - p2*" + l1 + " - alpha*q3/" + r),
  };
  sys.family.hamiltonian = sys.family.members.front();
  sys.family.hamiltonian_index = 0;
  sys.constraint_sets.push_back(
      {"default",
       {obs("F1", "A1*L1 + A2*L2 + A3*L3"),
        obs("F2",
            "alpha^2/2 + H*(L1^2 + L2^2 + L3^2) - (A1^2 + A2^2 + A3^2)/2")}});
  sys.guards.push_back({parse("q1^2 + q2^2 + q3^2"), 0.1});
  finalize(sys);
  return sys;
}

MotionSystem make_winternitz_3() {
  MotionSystem sys;
  sys.name = "winternitz-3";
  sys.phase_space = PhaseSpace::canonical(3);
  sys.parameters = {{"k", 1.0}, {"k1", 1.0}, {"k2", 1.0}, {"k3", 1.0}};

  auto hi = [](int j) {
    std::string s = std::to_string(j);
    return "(p" + s + "^2 + k^2*q" + s + "^2 + k" + s + "^2/q" + s + "^2)/2";
  };
  // Raising combination; T_ij pairs its conjugate with a plain one.
  auto amp = [](int j, bool conj) {
    std::string s = std::to_string(j);
    std::string phase = (conj ? std::string("-") : std::string("+")) +
                        " 2*i*k*q" + s + "*p" + s;
    return "(p" + s + "^2 + k" + s + "^2/q" + s + "^2 - k^2*q" + s + "^2 " +
           phase + ")/(4*k)";
  };
  auto envelope = [&](int j) {
    std::string s = std::to_string(j);
    return "sqrt(2*k/(" + hi(j) + " + k*k" + s + "))";
  };
  auto t_diag = [&](int j) {
    std::string s = std::to_string(j);
    return "(" + hi(j) + " - k*k" + s + ")/(2*k)";
  };
  auto t_off = [&](int a, int b) {
    return envelope(a) + "*" + envelope(b) + "*(" + amp(a, true) + ")*(" +
           amp(b, false) + ")";
  };

  std::string h = hi(1) + " + " + hi(2) + " + " + hi(3);
  sys.family.members = {
      obs("H", h),
      obs("T11", t_diag(1)),
      obs("T22", t_diag(2)),
      obs("T33", t_diag(3)),
      obs("T12", t_off(1, 2)),
      obs("T13", t_off(1, 3)),
  };
  sys.family.hamiltonian = sys.family.members.front();
  sys.family.hamiltonian_index = 0;
  sys.constraint_sets.push_back(
      {"default",
       {obs("F",
            "T12*T13*(-H/(2*k) + T11 + T22 + T33 + (k1 + k2 + k3)/2)")}});
  for (int j = 1; j <= 3; ++j) {
    std::string s = std::to_string(j);
    sys.guards.push_back({parse("q" + s), 0.1});
    sys.guards.push_back({parse(hi(j) + " + k*k" + s), 0.1});
    sys.boxes["q" + s] = {0.3, 2.0};
  }
  finalize(sys);
  return sys;
}

MotionSystem make_sphere_4() {
  MotionSystem sys;
  sys.name = "sphere-4";
  sys.phase_space = PhaseSpace::canonical(4);

  const std::string radial = "sqrt(1 - (q1^2 + q2^2 + q3^2 + q4^2))";
  auto P = [&](int a) { return radial + "*p" + std::to_string(a); };
  auto L = [](int a, int b) {
    std::string sa = std::to_string(a), sb = std::to_string(b);
    return "(q" + sa + "*p" + sb + " - q" + sb + "*p" + sa + ")";
  };

  std::vector<std::string> psq, lsq;
  for (int a = 1; a <= 4; ++a) psq.push_back("(" + P(a) + ")^2");
  for (int a = 1; a <= 4; ++a)
    for (int b = a + 1; b <= 4; ++b) lsq.push_back(L(a, b) + "^2");
  std::string h = "(" + join(psq, " + ") + ")/2 + (" + join(lsq, " + ") + ")/2";

  sys.family.members = {obs("H", h)};
  for (int a = 1; a <= 4; ++a)
    sys.family.members.push_back(obs("P" + std::to_string(a), P(a)));
  for (int a = 1; a <= 4; ++a)
    for (int b = a + 1; b <= 4; ++b)
      sys.family.members.push_back(
          obs("L" + std::to_string(a) + std::to_string(b), L(a, b)));
  sys.family.hamiltonian = sys.family.members.front();
  sys.family.hamiltonian_index = 0;

  sys.constraint_sets.push_back(
      {"standard",
       {obs("F1",
            "H - (P1^2 + P2^2 + P3^2 + P4^2)/2 - (L12^2 + L13^2 + L14^2 + "
            "L23^2 + L24^2 + L34^2)/2"),
        obs("F2", "L12*L34 + L14*L23 - L13*L24"),
        obs("F3", "L12*P3 - L13*P2 + L23*P1"),
        obs("F4", "P4 - L14*P3/L13 + L34*P1/L13")}});
  sys.constraint_sets.push_back(
      {"primed",
       {obs("F1p",
            "H - (P1^2 + P2^2 + P3^2 + P4^2)/2 - (L12^2 + L13^2 + L14^2 + "
            "L23^2 + L24^2 + L34^2)/2"),
        obs("F2p", "L14*P2*P3 - L13*P2*P4 - L24*P1*P3 + L23*P1*P4"),
        // F4p before F3p: the row order fixes the orientation of the
        // constraint Jacobian, and this order matches the standard set's.
        obs("F4p", "P3*P4*L12/P2 - P3*L14 + P1*L34 + P1*P4*L23/P2"),
        obs("F3p", "L23/P3 - L24/P4 + L34*P2/(P3*P4)")}});

  sys.guards.push_back({parse("1 - (q1^2 + q2^2 + q3^2 + q4^2)"), 0.1});
  sys.guards.push_back({parse(L(1, 3)), 0.1});
  for (int a = 2; a <= 4; ++a) sys.guards.push_back({parse(P(a)), 0.1});
  for (int a = 1; a <= 4; ++a)
    sys.boxes["q" + std::to_string(a)] = {-0.45, 0.45};
  finalize(sys);
  return sys;
}

}  // namespace

const ConstraintSet& MotionSystem::constraint_set(std::string_view label) const {
  if (label.empty()) return constraint_sets.front();
  for (const auto& cs : constraint_sets)
    if (cs.label == label) return cs;
  throw SystemFormatError("system '" + name + "' has no constraint set '" +
                          std::string(label) + "'");
}

SamplingBox MotionSystem::box(const std::string& coordinate) const {
  auto it = boxes.find(coordinate);
  return it == boxes.end() ? SamplingBox{} : it->second;
}

MotionSystem builtin(std::string_view name, std::string_view variant,
                     const std::map<std::string, double>& param_overrides) {
  MotionSystem sys;
  if (name == "harmonic-oscillator") {
    sys = make_harmonic_oscillator(variant);
  } else {
    if (!variant.empty())
      throw SystemFormatError("system '" + std::string(name) +
                              "' has no variants");
    if (name == "smorodinsky-winternitz")
      sys = make_smorodinsky_winternitz();
    else if (name == "kepler-coulomb")
      sys = make_kepler_coulomb();
    else if (name == "winternitz-3")
      sys = make_winternitz_3();
    else if (name == "sphere-4")
      sys = make_sphere_4();
    else
      throw SystemFormatError("unknown system '" + std::string(name) + "'");
  }
  apply_overrides(sys, param_overrides);
  return sys;
}

// --------------------------------------------------------------------------
// sampling

namespace {

double uniform_unit(std::mt19937_64& gen) {
  // Fixed mapping instead of std::uniform_real_distribution so streams are
  // identical across standard library implementations.
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

Binding parameter_binding(const MotionSystem& sys) {
  Binding b;
  for (const auto& [name, value] : sys.parameters) b[name] = value;
  return b;
}

}  // namespace

std::vector<SamplePoint> sample(const MotionSystem& sys, std::uint64_t seed,
                                int count) {
  if (count < 1) throw std::invalid_argument("sample count must be >= 1");
  std::mt19937_64 gen(seed);
  Binding params = parameter_binding(sys);
  std::vector<SamplePoint> points;
  points.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) {
    bool accepted = false;
    for (int attempt = 0; attempt < 10000 && !accepted; ++attempt) {
      Binding b = params;
      for (const auto& coord : sys.phase_space.coordinates) {
        SamplingBox box = sys.box(coord);
        b[coord] = box.lo + (box.hi - box.lo) * uniform_unit(gen);
      }
      accepted = true;
      for (const auto& g : sys.guards) {
        if (std::abs(evaluate(g.expression, b)) < g.min_abs) {
          accepted = false;
          break;
        }
      }
      if (accepted) {
        SamplePoint pt;
        pt.phase = std::move(b);
        pt.constants = family_values(sys.family, pt.phase);
        points.push_back(std::move(pt));
      }
    }
    if (!accepted)
      throw SamplingError("sampling exhausted after 10000 rejections for '" +
                          sys.name + "' (guards too tight)");
  }
  return points;
}

Binding constants_at(const MotionSystem& sys, const Binding& phase_point) {
  Binding b = parameter_binding(sys);
  for (const auto& [name, value] : phase_point) b[name] = value;
  return family_values(sys.family, b);
}

// --------------------------------------------------------------------------
// text format

namespace {

std::string strip(std::string line) {
  auto hash = line.find('#');
  if (hash != std::string::npos) line.erase(hash);
  auto begin = line.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  auto end = line.find_last_not_of(" \t\r");
  return line.substr(begin, end - begin + 1);
}

std::string quoted(const std::string& rest, int lineno) {
  auto first = rest.find('"');
  auto last = rest.rfind('"');
  if (first == std::string::npos || last <= first)
    throw SystemFormatError("line " + std::to_string(lineno) +
                            ": expected a quoted name");
  return rest.substr(first + 1, last - first - 1);
}

std::pair<std::string, std::string> split_assignment(const std::string& rest,
                                                     int lineno) {
  auto eq = rest.find('=');
  if (eq == std::string::npos)
    throw SystemFormatError("line " + std::to_string(lineno) +
                            ": expected '='");
  auto name = strip(rest.substr(0, eq));
  auto value = strip(rest.substr(eq + 1));
  if (name.empty() || value.empty())
    throw SystemFormatError("line " + std::to_string(lineno) +
                            ": malformed assignment");
  return {name, value};
}

Expr parse_at(const std::string& src, int lineno) {
  try {
    return parse(src);
  } catch (const ParseError& e) {
    throw SystemFormatError("line " + std::to_string(lineno) + ": " +
                            e.what());
  }
}

}  // namespace

MotionSystem load_system(std::string_view contents,
                         const std::map<std::string, double>& param_overrides) {
  MotionSystem sys;
  std::optional<Expr> hamiltonian;
  int hamiltonian_line = 0;
  int dof = 0;

  std::istringstream in{std::string(contents)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = strip(raw);
    if (line.empty()) continue;
    auto space = line.find_first_of(" \t");
    std::string keyword = line.substr(0, space);
    std::string rest =
        space == std::string::npos ? std::string() : strip(line.substr(space));

    if (keyword == "system") {
      sys.name = quoted(rest, lineno);
    } else if (keyword == "dof") {
      dof = std::stoi(rest);
      sys.phase_space = PhaseSpace::canonical(dof);
    } else if (keyword == "param") {
      auto [name, value] = split_assignment(rest, lineno);
      sys.parameters[name] = std::stod(value);
    } else if (keyword == "hamiltonian") {
      auto eq = rest.find('=');
      if (eq == std::string::npos)
        throw SystemFormatError("line " + std::to_string(lineno) +
                                ": expected 'hamiltonian = <expr>'");
      hamiltonian = parse_at(strip(rest.substr(eq + 1)), lineno);
      hamiltonian_line = lineno;
    } else if (keyword == "constant") {
      auto [name, value] = split_assignment(rest, lineno);
      sys.family.members.emplace_back(name, parse_at(value, lineno));
    } else if (keyword == "constraintset") {
      sys.constraint_sets.push_back({quoted(rest, lineno), {}});
    } else if (keyword == "constraint") {
      auto [name, value] = split_assignment(rest, lineno);
      if (sys.constraint_sets.empty())
        sys.constraint_sets.push_back({"default", {}});
      sys.constraint_sets.back().functionals.emplace_back(
          name, parse_at(value, lineno));
    } else if (keyword == "guard") {
      auto ge = rest.find(">=");
      if (ge == std::string::npos)
        throw SystemFormatError("line " + std::to_string(lineno) +
                                ": expected 'guard <expr> >= <bound>'");
      Guard g{parse_at(strip(rest.substr(0, ge)), lineno),
              std::stod(strip(rest.substr(ge + 2)))};
      sys.guards.push_back(std::move(g));
    } else if (keyword == "box") {
      std::istringstream f(rest);
      std::string coord;
      double lo = 0, hi = 0;
      if (!(f >> coord >> lo >> hi))
        throw SystemFormatError("line " + std::to_string(lineno) +
                                ": expected 'box <coordinate> <lo> <hi>'");
      sys.boxes[coord] = {lo, hi};
    } else {
      throw SystemFormatError("line " + std::to_string(lineno) +
                              ": unknown keyword '" + keyword + "'");
    }
  }

  if (dof == 0) throw SystemFormatError("missing 'dof'");
  if (sys.name.empty()) throw SystemFormatError("missing 'system' name");
  if (!hamiltonian) throw SystemFormatError("missing 'hamiltonian'");
  if (sys.constraint_sets.empty())
    throw SystemFormatError("missing constraints");

  // A hamiltonian written as a bare constant name designates that member.
  if (hamiltonian->kind() == Expr::Kind::Variable) {
    int idx = sys.family.index_of(hamiltonian->variable_name());
    if (idx < 0)
      throw SystemFormatError("line " + std::to_string(hamiltonian_line) +
                              ": hamiltonian references unknown constant '" +
                              hamiltonian->variable_name() + "'");
    sys.family.hamiltonian_index = static_cast<std::size_t>(idx - 1);
    sys.family.hamiltonian =
        sys.family.members[static_cast<std::size_t>(idx - 1)];
  } else {
    sys.family.hamiltonian = Observable("H", *hamiltonian);
    sys.family.hamiltonian_index.reset();
    for (std::size_t j = 0; j < sys.family.members.size(); ++j)
      if (structurally_equal(sys.family.members[j].body(), *hamiltonian)) {
        sys.family.hamiltonian_index = j;
        sys.family.hamiltonian = sys.family.members[j];
        break;
      }
  }

  finalize(sys);
  apply_overrides(sys, param_overrides);
  return sys;
}

std::string to_system_file(const MotionSystem& sys) {
  std::ostringstream out;
  out << "system \"" << sys.name << "\"\n";
  out << "dof " << sys.phase_space.dof << "\n";
  char buf[64];
  for (const auto& [name, value] : sys.parameters) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    out << "param " << name << " = " << std::string_view(buf, p) << "\n";
  }
  if (sys.family.hamiltonian_index)
    out << "hamiltonian = "
        << sys.family.members[*sys.family.hamiltonian_index].name() << "\n";
  else
    out << "hamiltonian = " << to_string(sys.family.hamiltonian.body()) << "\n";
  for (const auto& m : sys.family.members)
    out << "constant " << m.name() << " = " << to_string(m.body()) << "\n";
  for (const auto& cs : sys.constraint_sets) {
    out << "constraintset \"" << cs.label << "\"\n";
    for (const auto& f : cs.functionals)
      out << "constraint " << f.name() << " = " << to_string(f.body()) << "\n";
  }
  for (const auto& g : sys.guards) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), g.min_abs);
    out << "guard " << to_string(g.expression) << " >= "
        << std::string_view(buf, p) << "\n";
  }
  for (const auto& [coord, box] : sys.boxes) {
    auto [p1, e1] = std::to_chars(buf, buf + sizeof(buf), box.lo);
    out << "box " << coord << " " << std::string_view(buf, p1);
    auto [p2, e2] = std::to_chars(buf, buf + sizeof(buf), box.hi);
    out << " " << std::string_view(buf, p2) << "\n";
  }
  return out.str();
}

}  // namespace nambu
