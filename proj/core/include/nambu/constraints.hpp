#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nambu/brackets.hpp"
#include "nambu/expr.hpp"

namespace nambu {

/// Ordered constants of motion C1..Cm plus the system Hamiltonian.
/// The Hamiltonian may or may not be a family member (the family order is
/// what every Levi-Civita sign refers to); f-dot is always {f, H}_P with
/// the system Hamiltonian.
struct ConstantFamily {
  std::vector<Observable> members;
  Observable hamiltonian;
  std::optional<std::size_t> hamiltonian_index;  // 0-based into members

  std::size_t size() const { return members.size(); }
  std::vector<std::string> member_names() const;
  int index_of(std::string_view name) const;  // 1-based, -1 when absent
};

/// Constraint functionals F1..Fs as expressions over the C-symbols
/// (the member names of the family), never over phase coordinates.
struct ConstraintSet {
  std::string label;
  std::vector<Observable> functionals;

  std::size_t size() const { return functionals.size(); }
  /// Precompute dF/dC for every C-symbol.
  void prepare(std::span<const std::string> c_names);
};

/// A tuple of family indices (1-based) selecting a Nambu bracket, its
/// ascending complement, and the Levi-Civita sign of (selection,
/// complement) as a permutation of (1..m).
struct IndexSelection {
  std::vector<int> selection;   // order preserved as given
  std::vector<int> complement;  // ascending
  int sign = 0;                 // 0 iff the tuple repeats an index

  static IndexSelection make(std::vector<int> indices, int family_size);
};

/// Eq-level primitive: det [ dF_row / dC_col ] at the given C-values.
/// rows index into cs.functionals, cols into c_names; both 1-based.
Complex constraint_jacobian(const ConstraintSet& cs, std::span<const int> rows,
                            std::span<const int> cols,
                            std::span<const std::string> c_names,
                            const Binding& c_values);

/// Closed form of a normalization constant: the signed symbolic Jacobian
/// of the constraint functionals over the selection's complement.
struct NormalizationConstant {
  Expr closed_form;  // over C-symbols, sign included
  int sign = 0;
  IndexSelection selection;

  Complex value_at(const Binding& c_values) const {
    return evaluate(closed_form, c_values);
  }
};

NormalizationConstant make_normalization_constant(const ConstantFamily& fam,
                                                  const ConstraintSet& cs,
                                                  const IndexSelection& sel);

/// Numeric normalization constant at a phase point: sign times the
/// constraint Jacobian over the complement, evaluated through the chain
/// C_i(x) -> dF/dC.  c_values must contain the C-symbols (and parameters).
Complex normalization_constant(const ConstantFamily& fam,
                               const ConstraintSet& cs,
                               const IndexSelection& sel,
                               const Binding& c_values);

/// Map member name -> value at the phase point; parameters present in the
/// phase binding are carried through so constraint expressions can use them.
Binding family_values(const ConstantFamily& fam, const Binding& phase_point);

/// Scale-aware residual |lhs - rhs| / max(1, |lhs|, |rhs|).
double scaled_residual(Complex lhs, Complex rhs);

/// | {f, C_sel} - C * {f,H}_P | as a scale-aware residual: does the
/// selected Nambu bracket reproduce the equation of motion for f.
double verify_final(const ConstantFamily& fam, const ConstraintSet& cs,
                    const IndexSelection& sel, const Observable& f,
                    const Binding& phase_point, const PhaseSpace& ps);

/// Residual of the linear homogeneous system: the sum over ascending
/// s-tuples of (s x s minor of dF/dC) times the normalization constant of
/// (tuple, arbitrary). Expected 0.
double homogeneous_residual(const ConstantFamily& fam, const ConstraintSet& cs,
                            std::span<const int> arbitrary,
                            const Binding& phase_point, const PhaseSpace& ps);

/// Bracket-of-constants corollary: the decomposed (2n-2)-bracket of the
/// selected members equals the signed constraint Jacobian over the
/// complement that excludes the Hamiltonian. Returns the scale-aware
/// residual.
double verify_corollary(const ConstantFamily& fam, const ConstraintSet& cs,
                        std::span<const int> sel2, const Binding& phase_point,
                        const PhaseSpace& ps);

struct IncompatibilityError : std::runtime_error {
  IncompatibilityError(std::string u, std::string v);
  std::string u;
  std::string v;
};

/// Rebuilds a constraint functional from its known polynomial partial
/// derivatives, fixing the additive constant so F(gauge_point) = 0.
/// Throws IncompatibilityError when mixed partials disagree.
Expr reconstruct_constraint(const std::map<std::string, Expr>& partials,
                            const Binding& gauge_point);

}  // namespace nambu
