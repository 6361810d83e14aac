#pragma once

#include <complex>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nambu {

using Complex = std::complex<double>;

/// Variable name -> value map used for evaluation. Phase coordinates and
/// parameters live in the same table.
using Binding = std::map<std::string, Complex, std::less<>>;

namespace detail {
struct Node;
}

/// Immutable expression tree over named real variables, complex constants
/// and arithmetic/sqrt nodes. Copies are cheap (shared subtrees).
///
/// Construction folds constants, drops additive zeros / multiplicative ones
/// and flattens nested add/mul chains; nothing beyond that is canonicalized.
class Expr {
public:
  enum class Kind { Constant, Variable, Add, Mul, Pow, Div, Neg, Sqrt };

  /// Constant zero.
  Expr();

  static Expr constant(Complex value);
  static Expr constant(double value) { return constant(Complex{value, 0.0}); }
  static Expr imaginary_unit() { return constant(Complex{0.0, 1.0}); }
  /// Throws std::invalid_argument for the reserved name "i" or an empty name.
  static Expr variable(std::string name);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  static Expr pow(Expr base, int exponent);
  static Expr div(Expr numerator, Expr denominator);
  static Expr neg(Expr child);
  static Expr sqrt(Expr child);

  Kind kind() const;
  Complex constant_value() const;         // Constant only
  const std::string& variable_name() const;  // Variable only
  const std::vector<Expr>& children() const;
  int exponent() const;                   // Pow only

  bool is_constant() const { return kind() == Kind::Constant; }
  bool is_constant(Complex v) const {
    return is_constant() && constant_value() == v;
  }

  std::string str() const;

private:
  explicit Expr(std::shared_ptr<const detail::Node> node);
  std::shared_ptr<const detail::Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line, std::size_t column);
  std::size_t line;
  std::size_t column;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses a single expression. Precedence ^ > unary- > * / > + -.
/// The identifier `i` is the imaginary unit; `sqrt` is a function keyword.
Expr parse(std::string_view source);

/// Exact partial derivative with respect to `var`. No simplification
/// guarantee beyond what the Expr constructors do.
Expr diff(const Expr& e, std::string_view var);

/// Throws EvalError on an unbound variable or an exact-zero divisor.
/// sqrt of a negative real yields the principal complex root.
Complex evaluate(const Expr& e, const Binding& binding);

std::set<std::string> free_variables(const Expr& e);

/// Reparseable rendering; parse(to_string(e)) evaluates equal to e.
std::string to_string(const Expr& e);

/// Tree equality up to child order as constructed (no algebraic reasoning).
bool structurally_equal(const Expr& a, const Expr& b);

/// |a-b| <= atol + rtol*max(|a|,|b|), the comparison used throughout.
bool approx_equal(Complex a, Complex b, double rtol = 1e-8,
                  double atol = 1e-10);

}  // namespace nambu
