#include "nambu/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <utility>

namespace nambu {

namespace detail {
struct Node {
  Expr::Kind kind;
  Complex value{};
  std::string name;
  std::vector<Expr> kids;
  int exponent = 0;
};
}  // namespace detail

using detail::Node;

namespace {

std::shared_ptr<const Node> make_node(Node n) {
  return std::make_shared<const Node>(std::move(n));
}

Complex int_pow(Complex base, int k) {
  if (k < 0) return 1.0 / int_pow(base, -k);
  Complex r{1.0, 0.0};
  Complex b = base;
  for (unsigned e = static_cast<unsigned>(k); e; e >>= 1) {
    if (e & 1u) r *= b;
    b *= b;
  }
  return r;
}

Complex int_pow_checked(Complex base, int k) {
  if (k < 0 && base == Complex{0.0, 0.0})
    throw EvalError("division by zero (negative power of zero)");
  return int_pow(base, k);
}

}  // namespace

Expr::Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(Complex value) {
  return Expr(make_node({Kind::Constant, value, {}, {}, 0}));
}

Expr Expr::variable(std::string name) {
  if (name.empty()) throw std::invalid_argument("empty variable name");
  if (name == "i")
    throw std::invalid_argument(
        "'i' is reserved for the imaginary unit and cannot name a variable");
  Node n;
  n.kind = Kind::Variable;
  n.name = std::move(name);
  return Expr(make_node(std::move(n)));
}

Expr Expr::add(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  Complex acc{0.0, 0.0};
  // Flatten nested adds and fold constants.
  auto absorb = [&](auto&& self, const Expr& t) -> void {
    if (t.kind() == Kind::Add) {
      for (const auto& k : t.children()) self(self, k);
    } else if (t.kind() == Kind::Constant) {
      acc += t.constant_value();
    } else {
      flat.push_back(t);
    }
  };
  for (const auto& t : terms) absorb(absorb, t);
  if (acc != Complex{0.0, 0.0}) flat.push_back(constant(acc));
  if (flat.empty()) return constant(0.0);
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = Kind::Add;
  n.kids = std::move(flat);
  return Expr(make_node(std::move(n)));
}

Expr Expr::mul(std::vector<Expr> factors) {
  std::vector<Expr> flat;
  Complex acc{1.0, 0.0};
  auto absorb = [&](auto&& self, const Expr& t) -> void {
    if (t.kind() == Kind::Mul) {
      for (const auto& k : t.children()) self(self, k);
    } else if (t.kind() == Kind::Constant) {
      acc *= t.constant_value();
    } else {
      flat.push_back(t);
    }
  };
  for (const auto& t : factors) absorb(absorb, t);
  if (acc == Complex{0.0, 0.0}) return constant(0.0);
  if (acc != Complex{1.0, 0.0}) flat.insert(flat.begin(), constant(acc));
  if (flat.empty()) return constant(1.0);
  if (flat.size() == 1) return flat.front();
  Node n;
  n.kind = Kind::Mul;
  n.kids = std::move(flat);
  return Expr(make_node(std::move(n)));
}

Expr Expr::pow(Expr base, int exponent) {
  if (exponent == 0) return constant(1.0);
  if (exponent == 1) return base;
  if (base.kind() == Kind::Pow)
    return pow(base.children().front(), base.exponent() * exponent);
  if (base.is_constant()) {
    Complex v = base.constant_value();
    if (v != Complex{0.0, 0.0} || exponent > 0)
      return constant(int_pow(v, exponent));
  }
  Node n;
  n.kind = Kind::Pow;
  n.kids = {std::move(base)};
  n.exponent = exponent;
  return Expr(make_node(std::move(n)));
}

Expr Expr::div(Expr numerator, Expr denominator) {
  if (denominator.is_constant(Complex{1.0, 0.0})) return numerator;
  if (numerator.is_constant(Complex{0.0, 0.0}) &&
      !denominator.is_constant(Complex{0.0, 0.0}))
    return constant(0.0);
  if (numerator.is_constant() && denominator.is_constant() &&
      denominator.constant_value() != Complex{0.0, 0.0})
    return constant(numerator.constant_value() / denominator.constant_value());
  Node n;
  n.kind = Kind::Div;
  n.kids = {std::move(numerator), std::move(denominator)};
  return Expr(make_node(std::move(n)));
}

Expr Expr::neg(Expr child) {
  if (child.is_constant()) return constant(-child.constant_value());
  if (child.kind() == Kind::Neg) return child.children().front();
  Node n;
  n.kind = Kind::Neg;
  n.kids = {std::move(child)};
  return Expr(make_node(std::move(n)));
}

Expr Expr::sqrt(Expr child) {
  if (child.is_constant()) return constant(std::sqrt(child.constant_value()));
  Node n;
  n.kind = Kind::Sqrt;
  n.kids = {std::move(child)};
  return Expr(make_node(std::move(n)));
}

Expr::Kind Expr::kind() const { return node_->kind; }
Complex Expr::constant_value() const { return node_->value; }
const std::string& Expr::variable_name() const { return node_->name; }
const std::vector<Expr>& Expr::children() const { return node_->kids; }
int Expr::exponent() const { return node_->exponent; }
std::string Expr::str() const { return to_string(*this); }

Expr operator+(const Expr& a, const Expr& b) { return Expr::add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) {
  return Expr::add({a, Expr::neg(b)});
}
Expr operator*(const Expr& a, const Expr& b) { return Expr::mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::div(a, b); }
Expr operator-(const Expr& a) { return Expr::neg(a); }

// ---------------------------------------------------------------------------
// evaluation

Complex evaluate(const Expr& e, const Binding& binding) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return e.constant_value();
    case Expr::Kind::Variable: {
      auto it = binding.find(e.variable_name());
      if (it == binding.end())
        throw EvalError("unbound variable '" + e.variable_name() + "'");
      return it->second;
    }
    case Expr::Kind::Add: {
      Complex s{0.0, 0.0};
      for (const auto& k : e.children()) s += evaluate(k, binding);
      return s;
    }
    case Expr::Kind::Mul: {
      Complex p{1.0, 0.0};
      for (const auto& k : e.children()) p *= evaluate(k, binding);
      return p;
    }
    case Expr::Kind::Pow:
      return int_pow_checked(evaluate(e.children().front(), binding),
                             e.exponent());
    case Expr::Kind::Div: {
      Complex d = evaluate(e.children()[1], binding);
      if (d == Complex{0.0, 0.0}) throw EvalError("division by zero");
      return evaluate(e.children()[0], binding) / d;
    }
    case Expr::Kind::Neg:
      return -evaluate(e.children().front(), binding);
    case Expr::Kind::Sqrt:
      return std::sqrt(evaluate(e.children().front(), binding));
  }
  throw EvalError("corrupt expression node");
}

// ---------------------------------------------------------------------------
// differentiation

Expr diff(const Expr& e, std::string_view var) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return Expr::constant(0.0);
    case Expr::Kind::Variable:
      return Expr::constant(e.variable_name() == var ? 1.0 : 0.0);
    case Expr::Kind::Add: {
      std::vector<Expr> terms;
      terms.reserve(e.children().size());
      for (const auto& k : e.children()) terms.push_back(diff(k, var));
      return Expr::add(std::move(terms));
    }
    case Expr::Kind::Mul: {
      const auto& kids = e.children();
      std::vector<Expr> terms;
      for (std::size_t j = 0; j < kids.size(); ++j) {
        std::vector<Expr> factors;
        factors.reserve(kids.size());
        for (std::size_t r = 0; r < kids.size(); ++r)
          factors.push_back(r == j ? diff(kids[r], var) : kids[r]);
        terms.push_back(Expr::mul(std::move(factors)));
      }
      return Expr::add(std::move(terms));
    }
    case Expr::Kind::Pow: {
      const Expr& base = e.children().front();
      int k = e.exponent();
      return Expr::mul({Expr::constant(static_cast<double>(k)),
                        Expr::pow(base, k - 1), diff(base, var)});
    }
    case Expr::Kind::Div: {
      const Expr& u = e.children()[0];
      const Expr& v = e.children()[1];
      return Expr::div(diff(u, var) * v - u * diff(v, var), Expr::pow(v, 2));
    }
    case Expr::Kind::Neg:
      return Expr::neg(diff(e.children().front(), var));
    case Expr::Kind::Sqrt: {
      const Expr& u = e.children().front();
      return Expr::div(diff(u, var),
                       Expr::constant(2.0) * Expr::sqrt(u));
    }
  }
  throw std::logic_error("corrupt expression node");
}

// ---------------------------------------------------------------------------
// free variables

namespace {
void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.kind() == Expr::Kind::Variable) {
    out.insert(e.variable_name());
    return;
  }
  for (const auto& k : e.children()) collect_vars(k, out);
}
}  // namespace

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> out;
  collect_vars(e, out);
  return out;
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string fmt_double(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, p);
}

// Renders a constant; wrapped in parens when it is not a plain
// nonnegative real (so it stays one factor/base when reparsed).
std::string fmt_constant(Complex v, bool atom_context) {
  std::string s;
  bool compound = false;
  if (v.imag() == 0.0) {
    s = fmt_double(v.real());
    compound = v.real() < 0.0;
  } else if (v.real() == 0.0) {
    if (v.imag() == 1.0)
      s = "i";
    else
      s = fmt_double(v.imag()) + "*i", compound = true;
  } else {
    double im = v.imag();
    s = fmt_double(v.real()) + (im < 0.0 ? " - " : " + ") +
        fmt_double(std::abs(im)) + "*i";
    compound = true;
  }
  if (compound && atom_context) return "(" + s + ")";
  return s;
}

// prec levels: 0 add, 1 mul/div, 2 unary-, 3 pow-base/atom
std::string print(const Expr& e, int parent_prec) {
  switch (e.kind()) {
    case Expr::Kind::Constant:
      return fmt_constant(e.constant_value(), parent_prec >= 1);
    case Expr::Kind::Variable:
      return e.variable_name();
    case Expr::Kind::Add: {
      std::string s;
      for (std::size_t j = 0; j < e.children().size(); ++j) {
        const Expr& k = e.children()[j];
        if (j == 0) {
          s += print(k, 1);
        } else if (k.kind() == Expr::Kind::Neg) {
          s += " - " + print(k.children().front(), 2);
        } else {
          s += " + " + print(k, 1);
        }
      }
      if (parent_prec >= 1) return "(" + s + ")";
      return s;
    }
    case Expr::Kind::Mul: {
      std::string s;
      for (std::size_t j = 0; j < e.children().size(); ++j) {
        if (j) s += "*";
        s += print(e.children()[j], 2);
      }
      if (parent_prec >= 2) return "(" + s + ")";
      return s;
    }
    case Expr::Kind::Div: {
      std::string s =
          print(e.children()[0], 2) + "/" + print(e.children()[1], 3);
      if (parent_prec >= 2) return "(" + s + ")";
      return s;
    }
    case Expr::Kind::Pow: {
      std::string s = print(e.children().front(), 3) + "^" +
                      std::to_string(e.exponent());
      // '^' binds tightest; never needs extra parens below pow level.
      return s;
    }
    case Expr::Kind::Neg: {
      std::string s = "-" + print(e.children().front(), 2);
      if (parent_prec >= 2) return "(" + s + ")";
      return s;
    }
    case Expr::Kind::Sqrt:
      return "sqrt(" + print(e.children().front(), 0) + ")";
  }
  return {};
}

}  // namespace

std::string to_string(const Expr& e) { return print(e, 0); }

// ---------------------------------------------------------------------------
// structural equality

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Expr::Kind::Constant:
      return a.constant_value() == b.constant_value();
    case Expr::Kind::Variable:
      return a.variable_name() == b.variable_name();
    case Expr::Kind::Pow:
      if (a.exponent() != b.exponent()) return false;
      [[fallthrough]];
    default: {
      if (a.children().size() != b.children().size()) return false;
      for (std::size_t j = 0; j < a.children().size(); ++j)
        if (!structurally_equal(a.children()[j], b.children()[j]))
          return false;
      return true;
    }
  }
}

bool approx_equal(Complex a, Complex b, double rtol, double atol) {
  return std::abs(a - b) <=
         atol + rtol * std::max(std::abs(a), std::abs(b));
}

// ---------------------------------------------------------------------------
// parsing

ParseError::ParseError(const std::string& what, std::size_t line,
                       std::size_t column)
    : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ")"),
      line(line),
      column(column) {}

namespace {

struct Token {
  enum class Type { Number, Ident, Op, End };
  Type type = Type::End;
  std::string text;
  double number = 0.0;
  bool is_integer = false;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.column = col_;
    if (pos_ >= src_.size()) return t;
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      bool integer = true;
      while (pos_ < src_.size() &&
             std::isdigit(static_cast<unsigned char>(src_[pos_])))
        advance();
      if (pos_ < src_.size() && src_[pos_] == '.') {
        integer = false;
        advance();
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          advance();
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        std::size_t mark = pos_;
        integer = false;
        advance();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-'))
          advance();
        if (pos_ < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
          while (pos_ < src_.size() &&
                 std::isdigit(static_cast<unsigned char>(src_[pos_])))
            advance();
        } else {
          pos_ = mark;  // 'e' belongs to a following identifier
          integer = true;
        }
      }
      t.type = Token::Type::Number;
      t.text = std::string(src_.substr(start, pos_ - start));
      t.is_integer = integer;
      auto res = std::from_chars(t.text.data(), t.text.data() + t.text.size(),
                                 t.number);
      if (res.ec != std::errc{})
        throw ParseError("malformed number '" + t.text + "'", t.line,
                         t.column);
      return t;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
              src_[pos_] == '_'))
        advance();
      t.type = Token::Type::Ident;
      t.text = std::string(src_.substr(start, pos_ - start));
      return t;
    }
    if (std::string_view("+-*/^()").find(c) != std::string_view::npos) {
      t.type = Token::Type::Op;
      t.text = std::string(1, c);
      advance();
      return t;
    }
    throw ParseError(std::string("unknown token '") + c + "'", line_, col_);
  }

private:
  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }
  void advance() {
    ++pos_;
    ++col_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t col_ = 1;
};

class Parser {
public:
  explicit Parser(std::string_view src) : lexer_(src) { shift(); }

  Expr run() {
    if (cur_.type == Token::Type::End)
      throw ParseError("empty input", cur_.line, cur_.column);
    Expr e = expr();
    if (cur_.type != Token::Type::End)
      throw ParseError("unexpected token '" + cur_.text + "'", cur_.line,
                       cur_.column);
    return e;
  }

private:
  void shift() { cur_ = lexer_.next(); }

  bool at_op(char c) const {
    return cur_.type == Token::Type::Op && cur_.text[0] == c;
  }

  void expect_op(char c, const char* what) {
    if (!at_op(c)) throw ParseError(what, cur_.line, cur_.column);
    shift();
  }

  Expr expr() {
    Expr e = term();
    while (at_op('+') || at_op('-')) {
      bool plus = at_op('+');
      shift();
      Expr rhs = term();
      e = plus ? e + rhs : e - rhs;
    }
    return e;
  }

  Expr term() {
    Expr e = unary();
    while (at_op('*') || at_op('/')) {
      bool times = at_op('*');
      shift();
      Expr rhs = unary();
      e = times ? e * rhs : e / rhs;
    }
    return e;
  }

  Expr unary() {
    if (at_op('-')) {
      shift();
      return Expr::neg(unary());
    }
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (at_op('^')) {
      shift();
      int sign = 1;
      if (at_op('-')) {
        shift();
        sign = -1;
      }
      if (cur_.type != Token::Type::Number || !cur_.is_integer)
        throw ParseError("integer exponent expected after '^'", cur_.line,
                         cur_.column);
      long exp = std::lround(cur_.number);
      shift();
      return Expr::pow(std::move(base), static_cast<int>(sign * exp));
    }
    return base;
  }

  Expr atom() {
    if (cur_.type == Token::Type::Number) {
      Expr e = Expr::constant(cur_.number);
      shift();
      return e;
    }
    if (cur_.type == Token::Type::Ident) {
      std::string name = cur_.text;
      if (name == "i") {
        shift();
        return Expr::imaginary_unit();
      }
      if (name == "sqrt") {
        shift();
        expect_op('(', "expected '(' after sqrt");
        Expr inner = expr();
        expect_op(')', "expected ')'");
        return Expr::sqrt(std::move(inner));
      }
      shift();
      return Expr::variable(std::move(name));
    }
    if (at_op('(')) {
      shift();
      Expr inner = expr();
      expect_op(')', "expected ')'");
      return inner;
    }
    throw ParseError(cur_.type == Token::Type::End
                         ? std::string("unexpected end of input")
                         : "syntax error at '" + cur_.text + "'",
                     cur_.line, cur_.column);
  }

  Lexer lexer_;
  Token cur_;
};

}  // namespace

Expr parse(std::string_view source) { return Parser(source).run(); }

}  // namespace nambu
