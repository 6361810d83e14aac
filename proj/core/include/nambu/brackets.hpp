#pragma once

#include <span>
#include <string>
#include <vector>

#include "nambu/expr.hpp"

namespace nambu {

/// 2n-dimensional phase space with Darboux coordinates in canonical
/// interleaved order q1,p1,...,qn,pn.
struct PhaseSpace {
  int dof = 0;
  std::vector<std::string> coordinates;

  static PhaseSpace canonical(int n);
  const std::string& q(int j) const { return coordinates[2 * (j - 1)]; }
  const std::string& p(int j) const { return coordinates[2 * (j - 1) + 1]; }
};

/// Named phase-space function. Partial derivatives can be precomputed once
/// (prepare) and are then read-only; partial() falls back to a fresh diff
/// for variables outside the cache.
class Observable {
public:
  Observable() = default;  // constant-zero placeholder
  Observable(std::string name, Expr body);

  const std::string& name() const { return name_; }
  const Expr& body() const { return body_; }

  void prepare(std::span<const std::string> vars);
  Expr partial(const std::string& var) const;

private:
  std::string name_;
  Expr body_;
  std::map<std::string, Expr, std::less<>> partials_;
};

/// 0 on a repeated entry, otherwise the parity of the permutation relative
/// to ascending order.
int permutation_sign(std::span<const int> perm);

/// Determinant of a k*k row-major complex matrix by partial-pivoted
/// elimination. Destroys its input.
Complex determinant(std::vector<Complex>& a, int k);

/// det [ d f_r / d var_c ] evaluated at b. Requires |fs| == |vars|.
Complex jacobian_value(std::span<const Observable> fs,
                       std::span<const std::string> vars, const Binding& b);

/// Canonical Poisson bracket sum_j (dq_j f dp_j g - dp_j f dq_j g) at b.
Complex poisson(const Observable& f, const Observable& g, const Binding& b,
                const PhaseSpace& ps);

/// Canonical Nambu bracket: the Jacobian of 2n functions with respect to
/// all 2n phase coordinates.
Complex nambu_bracket(std::span<const Observable> fs, const Binding& b,
                      const PhaseSpace& ps);

/// Even-order bracket defined by the recursive cyclic Poisson-bracket
/// expansion; coincides with nambu_bracket when given 2n arguments.
Complex decomposed_bracket(std::span<const Observable> fs, const Binding& b,
                           const PhaseSpace& ps);
Complex decomposed_bracket(std::span<const Observable* const> fs,
                           const Binding& b, const PhaseSpace& ps);

}  // namespace nambu
