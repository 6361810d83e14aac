#include "nambu/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nambu/poly.hpp"

namespace nambu {

std::vector<std::string> ConstantFamily::member_names() const {
  std::vector<std::string> names;
  names.reserve(members.size());
  for (const auto& m : members) names.push_back(m.name());
  return names;
}

int ConstantFamily::index_of(std::string_view name) const {
  for (std::size_t j = 0; j < members.size(); ++j)
    if (members[j].name() == name) return static_cast<int>(j) + 1;
  return -1;
}

void ConstraintSet::prepare(std::span<const std::string> c_names) {
  for (auto& f : functionals) f.prepare(c_names);
}

IndexSelection IndexSelection::make(std::vector<int> indices, int family_size) {
  IndexSelection sel;
  sel.selection = std::move(indices);
  std::vector<bool> used(static_cast<std::size_t>(family_size) + 1, false);
  for (int j : sel.selection) {
    if (j < 1 || j > family_size)
      throw std::out_of_range("selection index out of range");
    used[static_cast<std::size_t>(j)] = true;
  }
  for (int j = 1; j <= family_size; ++j)
    if (!used[static_cast<std::size_t>(j)]) sel.complement.push_back(j);
  std::vector<int> concat = sel.selection;
  concat.insert(concat.end(), sel.complement.begin(), sel.complement.end());
  sel.sign = permutation_sign(concat);
  return sel;
}

Complex constraint_jacobian(const ConstraintSet& cs, std::span<const int> rows,
                            std::span<const int> cols,
                            std::span<const std::string> c_names,
                            const Binding& c_values) {
  if (rows.size() != cols.size())
    throw std::invalid_argument("constraint Jacobian needs |rows| == |cols|");
  int k = static_cast<int>(rows.size());
  std::vector<Complex> m(static_cast<std::size_t>(k) * k);
  for (int r = 0; r < k; ++r) {
    const Observable& F =
        cs.functionals[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)] - 1)];
    for (int c = 0; c < k; ++c) {
      const std::string& sym =
          c_names[static_cast<std::size_t>(cols[static_cast<std::size_t>(c)] - 1)];
      m[static_cast<std::size_t>(r) * k + c] = evaluate(F.partial(sym), c_values);
    }
  }
  return determinant(m, k);
}

namespace {

std::vector<int> all_rows(const ConstraintSet& cs) {
  std::vector<int> rows(cs.size());
  std::iota(rows.begin(), rows.end(), 1);
  return rows;
}

// Symbolic determinant by cofactor expansion; s stays small (<= 4 in the
// shipped catalog).
Expr symbolic_det(const std::vector<std::vector<Expr>>& m) {
  std::size_t k = m.size();
  if (k == 0) return Expr::constant(1.0);
  if (k == 1) return m[0][0];
  std::vector<Expr> terms;
  for (std::size_t r = 0; r < k; ++r) {
    std::vector<std::vector<Expr>> minor;
    minor.reserve(k - 1);
    for (std::size_t rr = 0; rr < k; ++rr) {
      if (rr == r) continue;
      std::vector<Expr> row(m[rr].begin() + 1, m[rr].end());
      minor.push_back(std::move(row));
    }
    Expr cof = m[r][0] * symbolic_det(minor);
    terms.push_back(r % 2 ? Expr::neg(cof) : cof);
  }
  return Expr::add(std::move(terms));
}

}  // namespace

NormalizationConstant make_normalization_constant(const ConstantFamily& fam,
                                                  const ConstraintSet& cs,
                                                  const IndexSelection& sel) {
  auto names = fam.member_names();
  std::size_t s = cs.size();
  if (sel.complement.size() != s)
    throw std::invalid_argument(
        "selection complement size must equal the number of constraints");
  std::vector<std::vector<Expr>> m(s, std::vector<Expr>(s, Expr()));
  for (std::size_t r = 0; r < s; ++r)
    for (std::size_t c = 0; c < s; ++c)
      m[r][c] = cs.functionals[r].partial(
          names[static_cast<std::size_t>(sel.complement[c] - 1)]);
  Expr det = symbolic_det(m);
  NormalizationConstant nc;
  nc.sign = sel.sign;
  nc.selection = sel;
  nc.closed_form = sel.sign < 0 ? Expr::neg(det) : det;
  if (sel.sign == 0) nc.closed_form = Expr::constant(0.0);
  return nc;
}

Complex normalization_constant(const ConstantFamily& fam,
                               const ConstraintSet& cs,
                               const IndexSelection& sel,
                               const Binding& c_values) {
  if (sel.sign == 0) return Complex{0.0, 0.0};
  auto names = fam.member_names();
  auto rows = all_rows(cs);
  Complex j = constraint_jacobian(cs, rows, sel.complement, names, c_values);
  return static_cast<double>(sel.sign) * j;
}

Binding family_values(const ConstantFamily& fam, const Binding& phase_point) {
  Binding out = phase_point;  // parameters ride along
  for (const auto& m : fam.members)
    out[m.name()] = evaluate(m.body(), phase_point);
  return out;
}

double scaled_residual(Complex lhs, Complex rhs) {
  return std::abs(lhs - rhs) /
         std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

double verify_final(const ConstantFamily& fam, const ConstraintSet& cs,
                    const IndexSelection& sel, const Observable& f,
                    const Binding& phase_point, const PhaseSpace& ps) {
  std::vector<Observable> args{f};
  for (int j : sel.selection)
    args.push_back(fam.members[static_cast<std::size_t>(j - 1)]);
  Complex lhs = nambu_bracket(args, phase_point, ps);
  Binding c_values = family_values(fam, phase_point);
  Complex norm = normalization_constant(fam, cs, sel, c_values);
  Complex fdot = poisson(f, fam.hamiltonian, phase_point, ps);
  return scaled_residual(lhs, norm * fdot);
}

double homogeneous_residual(const ConstantFamily& fam, const ConstraintSet& cs,
                            std::span<const int> arbitrary,
                            const Binding& phase_point, const PhaseSpace& ps) {
  int m = static_cast<int>(fam.size());
  std::size_t s = cs.size();
  if (arbitrary.size() + s != ps.coordinates.size() - 1)
    throw std::invalid_argument(
        "arbitrary index count must be 2n-1 minus the constraint count");
  Binding c_values = family_values(fam, phase_point);
  auto names = fam.member_names();
  auto rows = all_rows(cs);

  // Walk ascending s-subsets of (1..m); tuples overlapping the arbitrary
  // set drop out through the Levi-Civita sign.
  std::vector<int> tuple(s);
  Complex sum{0.0, 0.0};
  auto rec = [&](auto&& self, std::size_t depth, int next) -> void {
    if (depth == s) {
      std::vector<int> full(tuple.begin(), tuple.end());
      full.insert(full.end(), arbitrary.begin(), arbitrary.end());
      IndexSelection sel = IndexSelection::make(full, m);
      if (sel.sign == 0) return;
      Complex minor = constraint_jacobian(cs, rows, tuple, names, c_values);
      if (minor == Complex{0.0, 0.0}) return;
      sum += minor * normalization_constant(fam, cs, sel, c_values);
      return;
    }
    for (int j = next; j <= m; ++j) {
      tuple[depth] = j;
      self(self, depth + 1, j + 1);
    }
  };
  rec(rec, 0, 1);
  return std::abs(sum);
}

double verify_corollary(const ConstantFamily& fam, const ConstraintSet& cs,
                        std::span<const int> sel2, const Binding& phase_point,
                        const PhaseSpace& ps) {
  if (!fam.hamiltonian_index)
    throw std::invalid_argument(
        "the corollary needs the Hamiltonian inside the family");
  int k = static_cast<int>(*fam.hamiltonian_index) + 1;
  std::vector<const Observable*> args;
  args.reserve(sel2.size());
  for (int j : sel2) {
    if (j == k)
      throw std::invalid_argument(
          "the corollary selection must exclude the Hamiltonian");
    args.push_back(&fam.members[static_cast<std::size_t>(j - 1)]);
  }
  Complex lhs = decomposed_bracket(
      std::span<const Observable* const>(args), phase_point, ps);

  std::vector<int> full{k};
  full.insert(full.end(), sel2.begin(), sel2.end());
  IndexSelection sel = IndexSelection::make(full, static_cast<int>(fam.size()));
  Binding c_values = family_values(fam, phase_point);
  Complex rhs = normalization_constant(fam, cs, sel, c_values);
  return scaled_residual(lhs, rhs);
}

IncompatibilityError::IncompatibilityError(std::string u_, std::string v_)
    : std::runtime_error("incompatible partial derivatives: d/d" + v_ +
                         " of the " + u_ + " partial differs from d/d" + u_ +
                         " of the " + v_ + " partial"),
      u(std::move(u_)),
      v(std::move(v_)) {}

Expr reconstruct_constraint(const std::map<std::string, Expr>& partials,
                            const Binding& gauge_point) {
  std::map<std::string, Polynomial> expanded;
  for (const auto& [sym, e] : partials)
    expanded.emplace(sym, Polynomial::from_expr(e));

  for (auto it = expanded.begin(); it != expanded.end(); ++it)
    for (auto jt = std::next(it); jt != expanded.end(); ++jt) {
      Polynomial mixed_uv = it->second.differentiated(jt->first);
      Polynomial mixed_vu = jt->second.differentiated(it->first);
      if (!mixed_uv.near(mixed_vu, 1e-9))
        throw IncompatibilityError(it->first, jt->first);
    }

  Polynomial f;
  for (const auto& [sym, p] : expanded)
    f = f + (p - f.differentiated(sym)).integrated(sym);

  // Closedness makes the construction exact; keep a safety net anyway.
  for (const auto& [sym, p] : expanded)
    if (!f.differentiated(sym).near(p, 1e-9))
      throw IncompatibilityError(sym, sym);

  Complex c = f.evaluate_at(gauge_point);
  if (c != Complex{0.0, 0.0})
    f = f - Polynomial::from_expr(Expr::constant(c));
  return f.to_expr();
}

}  // namespace nambu
