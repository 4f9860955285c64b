#pragma once

// Sparse multivariate polynomials and polynomial maps with degree truncation.
// Used for formal-series identities (composition, inversion, ODE residuals).

#include "flowtree/field.hpp"

#include <map>
#include <optional>
#include <vector>

namespace flowtree {

template <Scalar S>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::size_t dimension) : dimension_(dimension) {}

  static Polynomial constant(std::size_t dimension, const S& c) {
    Polynomial p(dimension);
    p.add(Monomial::zero(dimension), c);
    return p;
  }
  static Polynomial variable(std::size_t dimension, int index) {
    Polynomial p(dimension);
    p.add(Monomial::unit(dimension, index), from_int<S>(1));
    return p;
  }

  std::size_t dimension() const { return dimension_; }
  const std::map<Monomial, S>& coefficients() const { return coeffs_; }
  bool is_zero() const { return coeffs_.empty(); }

  S coefficient(const Monomial& m) const {
    auto it = coeffs_.find(m);
    return it == coeffs_.end() ? S(0) : it->second;
  }

  int degree() const {
    int d = -1;
    for (const auto& [m, c] : coeffs_) d = std::max(d, m.degree());
    return d;
  }

  void add(const Monomial& m, const S& c) {
    auto it = coeffs_.find(m);
    if (it == coeffs_.end()) {
      if (!(c == S(0))) coeffs_.emplace(m, c);
      return;
    }
    it->second = it->second + c;
    if (it->second == S(0)) coeffs_.erase(it);
  }

  Polynomial truncated(int max_degree) const {
    Polynomial out(dimension_);
    for (const auto& [m, c] : coeffs_) {
      if (m.degree() <= max_degree) out.coeffs_.emplace(m, c);
    }
    return out;
  }

  /// Terms of total degree exactly `degree`.
  Polynomial homogeneous(int degree) const {
    Polynomial out(dimension_);
    for (const auto& [m, c] : coeffs_) {
      if (m.degree() == degree) out.coeffs_.emplace(m, c);
    }
    return out;
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [m, c] : o.coeffs_) add(m, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [m, c] : o.coeffs_) add(m, -c);
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }

  Polynomial scaled(const S& f) const {
    Polynomial out(dimension_);
    for (const auto& [m, c] : coeffs_) out.add(m, c * f);
    return out;
  }

  /// Product, optionally dropping every term above max_degree.
  Polynomial multiply(const Polynomial& o, std::optional<int> max_degree = std::nullopt) const {
    Polynomial out(dimension_);
    for (const auto& [ma, ca] : coeffs_) {
      for (const auto& [mb, cb] : o.coeffs_) {
        if (max_degree && ma.degree() + mb.degree() > *max_degree) continue;
        out.add(ma * mb, ca * cb);
      }
    }
    return out;
  }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) { return a.multiply(b); }

  Polynomial derivative(int index) const {
    Polynomial out(dimension_);
    for (const auto& [m, c] : coeffs_) {
      int e = m[static_cast<std::size_t>(index)];
      if (e == 0) continue;
      std::vector<int> ex = m.exponents();
      ex[static_cast<std::size_t>(index)] -= 1;
      out.add(Monomial(std::move(ex)), c * from_int<S>(e));
    }
    return out;
  }

  S operator()(std::span<const S> point) const {
    S sum(0);
    for (const auto& [m, c] : coeffs_) sum = sum + c * eval_monomial(m, point);
    return sum;
  }

  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.coeffs_ == b.coeffs_; }

 private:
  std::size_t dimension_ = 0;
  std::map<Monomial, S> coeffs_;
};

template <Scalar S>
using PolyMap = std::vector<Polynomial<S>>;

template <Scalar S>
PolyMap<S> identity_map(std::size_t dimension) {
  PolyMap<S> out;
  for (std::size_t i = 0; i < dimension; ++i) out.push_back(Polynomial<S>::variable(dimension, static_cast<int>(i)));
  return out;
}

template <Scalar S>
PolyMap<S> to_poly_map(const PolynomialVectorField<S>& field) {
  PolyMap<S> out(field.dimension(), Polynomial<S>(field.dimension()));
  for (const auto& t : field.terms()) out[static_cast<std::size_t>(t.target)].add(t.monomial, t.coeff);
  return out;
}

template <Scalar S>
PolynomialVectorField<S> to_field(const PolyMap<S>& map) {
  std::vector<PolyTerm<S>> terms;
  std::size_t d = map.empty() ? 0 : map.front().dimension();
  for (std::size_t i = 0; i < map.size(); ++i) {
    for (const auto& [m, c] : map[i].coefficients()) terms.push_back({static_cast<int>(i), m, c});
  }
  return {d, std::move(terms)};
}

template <Scalar S>
PolyMap<S> truncate_map(const PolyMap<S>& map, int max_degree) {
  PolyMap<S> out;
  for (const auto& p : map) out.push_back(p.truncated(max_degree));
  return out;
}

/// g(f(x)) truncated at max_degree. Requires f without constant term.
template <Scalar S>
PolyMap<S> compose(const PolyMap<S>& g, const PolyMap<S>& f, int max_degree) {
  const std::size_t d = f.size();
  // powers[j][e] = f_j^e truncated
  std::vector<std::vector<Polynomial<S>>> powers(d);
  for (std::size_t j = 0; j < d; ++j) {
    powers[j].push_back(Polynomial<S>::constant(d, from_int<S>(1)));
  }
  auto power_of = [&](std::size_t j, int e) -> const Polynomial<S>& {
    while (static_cast<int>(powers[j].size()) <= e) {
      powers[j].push_back(powers[j].back().multiply(f[j], max_degree));
    }
    return powers[j][static_cast<std::size_t>(e)];
  };
  PolyMap<S> out;
  for (const auto& gi : g) {
    Polynomial<S> acc(d);
    for (const auto& [m, c] : gi.coefficients()) {
      Polynomial<S> term = Polynomial<S>::constant(d, c);
      for (std::size_t j = 0; j < d && !term.is_zero(); ++j) {
        if (m[j] != 0) term = term.multiply(power_of(j, m[j]), max_degree);
      }
      acc += term;
    }
    out.push_back(std::move(acc));
  }
  return out;
}

/// (V . grad) U as a field: component j is sum_i V^i d_i U^j.
template <Scalar S>
PolynomialVectorField<S> directional_derivative(const PolynomialVectorField<S>& u, const PolynomialVectorField<S>& v) {
  PolynomialVectorField<S>::check_same_dimension(u, v);
  const auto pu = to_poly_map(u);
  const auto pv = to_poly_map(v);
  PolyMap<S> out(u.dimension(), Polynomial<S>(u.dimension()));
  for (std::size_t j = 0; j < u.dimension(); ++j) {
    for (std::size_t i = 0; i < u.dimension(); ++i) out[j] += pv[i] * pu[j].derivative(static_cast<int>(i));
  }
  return to_field(out);
}

}  // namespace flowtree
