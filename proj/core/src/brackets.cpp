#include "nambu/brackets.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace nambu {

PhaseSpace PhaseSpace::canonical(int n) {
  if (n < 1) throw std::invalid_argument("phase space needs n >= 1");
  PhaseSpace ps;
  ps.dof = n;
  ps.coordinates.reserve(2 * static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    ps.coordinates.push_back("q" + std::to_string(j));
    ps.coordinates.push_back("p" + std::to_string(j));
  }
  return ps;
}

Observable::Observable(std::string name, Expr body)
    : name_(std::move(name)), body_(std::move(body)) {}

void Observable::prepare(std::span<const std::string> vars) {
  for (const auto& v : vars)
    if (!partials_.contains(v)) partials_.emplace(v, diff(body_, v));
}

Expr Observable::partial(const std::string& var) const {
  auto it = partials_.find(var);
  if (it != partials_.end()) return it->second;
  return diff(body_, var);
}

int permutation_sign(std::span<const int> perm) {
  std::set<int> seen;
  for (int v : perm)
    if (!seen.insert(v).second) return 0;
  int inversions = 0;
  for (std::size_t a = 0; a < perm.size(); ++a)
    for (std::size_t b = a + 1; b < perm.size(); ++b)
      if (perm[a] > perm[b]) ++inversions;
  return inversions % 2 ? -1 : 1;
}

Complex determinant(std::vector<Complex>& a, int k) {
  if (k == 0) return Complex{1.0, 0.0};
  Complex det{1.0, 0.0};
  for (int col = 0; col < k; ++col) {
    int pivot = col;
    double best = std::abs(a[static_cast<std::size_t>(col) * k + col]);
    for (int r = col + 1; r < k; ++r) {
      double mag = std::abs(a[static_cast<std::size_t>(r) * k + col]);
      if (mag > best) {
        best = mag;
        pivot = r;
      }
    }
    if (best == 0.0) return Complex{0.0, 0.0};
    if (pivot != col) {
      for (int c = 0; c < k; ++c)
        std::swap(a[static_cast<std::size_t>(pivot) * k + c],
                  a[static_cast<std::size_t>(col) * k + c]);
      det = -det;
    }
    Complex d = a[static_cast<std::size_t>(col) * k + col];
    det *= d;
    for (int r = col + 1; r < k; ++r) {
      Complex factor = a[static_cast<std::size_t>(r) * k + col] / d;
      if (factor == Complex{0.0, 0.0}) continue;
      for (int c = col; c < k; ++c)
        a[static_cast<std::size_t>(r) * k + c] -=
            factor * a[static_cast<std::size_t>(col) * k + c];
    }
  }
  return det;
}

Complex jacobian_value(std::span<const Observable> fs,
                       std::span<const std::string> vars, const Binding& b) {
  if (fs.size() != vars.size())
    throw std::invalid_argument("jacobian needs as many functions as variables");
  int k = static_cast<int>(fs.size());
  std::vector<Complex> m(static_cast<std::size_t>(k) * k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c)
      m[static_cast<std::size_t>(r) * k + c] =
          evaluate(fs[static_cast<std::size_t>(r)].partial(
                       vars[static_cast<std::size_t>(c)]),
                   b);
  return determinant(m, k);
}

Complex poisson(const Observable& f, const Observable& g, const Binding& b,
                const PhaseSpace& ps) {
  Complex sum{0.0, 0.0};
  for (int j = 1; j <= ps.dof; ++j) {
    sum += evaluate(f.partial(ps.q(j)), b) * evaluate(g.partial(ps.p(j)), b) -
           evaluate(f.partial(ps.p(j)), b) * evaluate(g.partial(ps.q(j)), b);
  }
  return sum;
}

Complex nambu_bracket(std::span<const Observable> fs, const Binding& b,
                      const PhaseSpace& ps) {
  if (fs.size() != ps.coordinates.size())
    throw std::invalid_argument("nambu bracket needs exactly 2n arguments");
  return jacobian_value(fs, ps.coordinates, b);
}

namespace {

Complex decomposed_rec(std::vector<const Observable*>& fs, const Binding& b,
                       const PhaseSpace& ps) {
  if (fs.size() == 2) return poisson(*fs[0], *fs[1], b, ps);
  const Observable* head = fs[0];
  std::vector<const Observable*> tail(fs.begin() + 1, fs.end());
  Complex total{0.0, 0.0};
  std::size_t t = tail.size();
  for (std::size_t shift = 0; shift < t; ++shift) {
    Complex head_pb = poisson(*head, *tail[shift], b, ps);
    if (head_pb != Complex{0.0, 0.0}) {
      std::vector<const Observable*> rest;
      rest.reserve(t - 1);
      for (std::size_t j = 1; j < t; ++j) rest.push_back(tail[(shift + j) % t]);
      total += head_pb * decomposed_rec(rest, b, ps);
    }
  }
  return total;
}

}  // namespace

Complex decomposed_bracket(std::span<const Observable* const> fs,
                           const Binding& b, const PhaseSpace& ps) {
  if (fs.size() < 2 || fs.size() % 2 != 0)
    throw std::invalid_argument(
        "decomposed bracket needs an even number (>= 2) of arguments");
  std::vector<const Observable*> work(fs.begin(), fs.end());
  return decomposed_rec(work, b, ps);
}

Complex decomposed_bracket(std::span<const Observable> fs, const Binding& b,
                           const PhaseSpace& ps) {
  std::vector<const Observable*> ptrs;
  ptrs.reserve(fs.size());
  for (const auto& f : fs) ptrs.push_back(&f);
  return decomposed_bracket(std::span<const Observable* const>(ptrs), b, ps);
}

}  // namespace nambu
