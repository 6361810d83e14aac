#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "nambu/expr.hpp"

namespace nambu {

struct NonPolynomialError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Expanded multivariate polynomial with complex coefficients, used by the
/// constraint-reconstruction path. Terms are keyed by monomial
/// (variable -> positive exponent), so comparison is order-independent.
class Polynomial {
public:
  using Monomial = std::map<std::string, int>;
  using Terms = std::map<Monomial, Complex>;

  Polynomial() = default;

  /// Expands an Expr; throws NonPolynomialError on sqrt, negative powers
  /// or division by a non-constant.
  static Polynomial from_expr(const Expr& e);

  Polynomial operator+(const Polynomial& o) const;
  Polynomial operator-(const Polynomial& o) const;
  Polynomial operator*(const Polynomial& o) const;

  Polynomial differentiated(const std::string& var) const;
  Polynomial integrated(const std::string& var) const;

  Complex evaluate_at(const Binding& b) const;
  bool depends_on(const std::string& var) const;
  bool is_zero(double tol = 0.0) const;
  double max_coefficient_difference(const Polynomial& o) const;
  bool near(const Polynomial& o, double tol = 1e-9) const {
    return max_coefficient_difference(o) <= tol;
  }

  Expr to_expr() const;
  const Terms& terms() const { return terms_; }

private:
  void add_term(Monomial m, Complex c);
  Terms terms_;
};

}  // namespace nambu
