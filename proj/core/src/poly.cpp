#include "nambu/poly.hpp"

#include <cmath>

namespace nambu {

void Polynomial::add_term(Monomial m, Complex c) {
  if (c == Complex{0.0, 0.0}) return;
  auto [it, inserted] = terms_.emplace(std::move(m), c);
  if (!inserted) {
    it->second += c;
    if (it->second == Complex{0.0, 0.0}) terms_.erase(it);
  }
}

Polynomial Polynomial::from_expr(const Expr& e) {
  Polynomial p;
  switch (e.kind()) {
    case Expr::Kind::Constant:
      p.add_term({}, e.constant_value());
      return p;
    case Expr::Kind::Variable:
      p.add_term({{e.variable_name(), 1}}, Complex{1.0, 0.0});
      return p;
    case Expr::Kind::Add:
      for (const auto& k : e.children()) p = p + from_expr(k);
      return p;
    case Expr::Kind::Mul: {
      p.add_term({}, Complex{1.0, 0.0});
      for (const auto& k : e.children()) p = p * from_expr(k);
      return p;
    }
    case Expr::Kind::Pow: {
      if (e.exponent() < 0)
        throw NonPolynomialError("negative power is not polynomial");
      Polynomial base = from_expr(e.children().front());
      p.add_term({}, Complex{1.0, 0.0});
      for (int j = 0; j < e.exponent(); ++j) p = p * base;
      return p;
    }
    case Expr::Kind::Div: {
      Polynomial den = from_expr(e.children()[1]);
      if (den.terms_.size() != 1 || !den.terms_.begin()->first.empty())
        throw NonPolynomialError("division by a non-constant is not polynomial");
      Complex d = den.terms_.begin()->second;
      Polynomial num = from_expr(e.children()[0]);
      for (auto& [m, c] : num.terms_) c /= d;
      return num;
    }
    case Expr::Kind::Neg: {
      Polynomial inner = from_expr(e.children().front());
      for (auto& [m, c] : inner.terms_) c = -c;
      return inner;
    }
    case Expr::Kind::Sqrt:
      throw NonPolynomialError("sqrt is not polynomial");
  }
  return p;
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, c);
  return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
  Polynomial r = *this;
  for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
  return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
  Polynomial r;
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : o.terms_) {
      Monomial m = ma;
      for (const auto& [v, ex] : mb) m[v] += ex;
      r.add_term(std::move(m), ca * cb);
    }
  return r;
}

Polynomial Polynomial::differentiated(const std::string& var) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) {
    auto it = m.find(var);
    if (it == m.end()) continue;
    Monomial dm = m;
    int ex = it->second;
    if (ex == 1)
      dm.erase(var);
    else
      dm[var] = ex - 1;
    r.add_term(std::move(dm), c * static_cast<double>(ex));
  }
  return r;
}

Polynomial Polynomial::integrated(const std::string& var) const {
  Polynomial r;
  for (const auto& [m, c] : terms_) {
    Monomial im = m;
    int ex = im.contains(var) ? im[var] : 0;
    im[var] = ex + 1;
    r.add_term(std::move(im), c / static_cast<double>(ex + 1));
  }
  return r;
}

Complex Polynomial::evaluate_at(const Binding& b) const {
  Complex total{0.0, 0.0};
  for (const auto& [m, c] : terms_) {
    Complex t = c;
    for (const auto& [v, ex] : m) {
      auto it = b.find(v);
      Complex val = it == b.end() ? Complex{0.0, 0.0} : it->second;
      for (int j = 0; j < ex; ++j) t *= val;
    }
    total += t;
  }
  return total;
}

bool Polynomial::depends_on(const std::string& var) const {
  for (const auto& [m, c] : terms_)
    if (m.contains(var)) return true;
  return false;
}

bool Polynomial::is_zero(double tol) const {
  for (const auto& [m, c] : terms_)
    if (std::abs(c) > tol) return false;
  return true;
}

double Polynomial::max_coefficient_difference(const Polynomial& o) const {
  double worst = 0.0;
  for (const auto& [m, c] : terms_) {
    auto it = o.terms_.find(m);
    Complex other = it == o.terms_.end() ? Complex{0.0, 0.0} : it->second;
    worst = std::max(worst, std::abs(c - other));
  }
  for (const auto& [m, c] : o.terms_)
    if (!terms_.contains(m)) worst = std::max(worst, std::abs(c));
  return worst;
}

Expr Polynomial::to_expr() const {
  std::vector<Expr> terms;
  for (const auto& [m, c] : terms_) {
    std::vector<Expr> factors{Expr::constant(c)};
    for (const auto& [v, ex] : m)
      factors.push_back(Expr::pow(Expr::variable(v), ex));
    terms.push_back(Expr::mul(std::move(factors)));
  }
  return Expr::add(std::move(terms));
}

}  // namespace nambu
