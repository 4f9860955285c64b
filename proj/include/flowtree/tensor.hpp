#pragma once

// Explicit-index (1,s)-tensors for contraction experiments and the Lie
// algebra structure on polynomial vector fields.

#include "flowtree/field.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace flowtree {

/// Sparse (1,s)-tensor. Keys are {output, in_1, ..., in_s}.
template <Scalar S>
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t dimension, int arity) : dimension_(dimension), arity_(arity) {}

  /// Symmetrized tensor of a single term.
  static Tensor from_term(const PolyTerm<S>& term) {
    Tensor t(term.monomial.dimension(), term.degree());
    t.add_term(term);
    return t;
  }

  /// Symmetrized tensor of the degree-s component of a field.
  static Tensor from_component(const PolynomialVectorField<S>& field, int arity) {
    Tensor t(field.dimension(), arity);
    for (const auto& term : field.terms()) {
      if (term.degree() == arity) t.add_term(term);
    }
    return t;
  }

  static Tensor identity(std::size_t dimension) {
    Tensor t(dimension, 1);
    for (std::size_t i = 0; i < dimension; ++i) t.add({static_cast<int>(i), static_cast<int>(i)}, from_int<S>(1));
    return t;
  }

  std::size_t dimension() const { return dimension_; }
  int arity() const { return arity_; }
  const std::map<std::vector<int>, S>& entries() const { return entries_; }

  void add(const std::vector<int>& key, const S& c) {
    if (key.size() != static_cast<std::size_t>(arity_) + 1) throw std::invalid_argument("Tensor: bad key size");
    auto it = entries_.find(key);
    if (it == entries_.end()) {
      if (!(c == S(0))) entries_.emplace(key, c);
      return;
    }
    it->second = it->second + c;
    if (it->second == S(0)) entries_.erase(it);
  }

  /// T(x, ..., x).
  std::vector<S> full_contraction(std::span<const S> x) const {
    std::vector<S> out(dimension_, S(0));
    for (const auto& [key, c] : entries_) {
      S prod = c;
      for (std::size_t k = 1; k < key.size(); ++k) prod = prod * x[static_cast<std::size_t>(key[k])];
      auto& slot = out[static_cast<std::size_t>(key[0])];
      slot = slot + prod;
    }
    return out;
  }

  /// Polynomial field obtained by contracting every lower slot with x.
  PolynomialVectorField<S> to_field() const {
    std::vector<PolyTerm<S>> terms;
    for (const auto& [key, c] : entries_) {
      std::vector<int> lower(key.begin() + 1, key.end());
      terms.push_back({key[0], Monomial::from_indices(dimension_, lower), c});
    }
    return {dimension_, std::move(terms)};
  }

  friend Tensor operator+(Tensor a, const Tensor& b) {
    if (a.dimension_ != b.dimension_ || a.arity_ != b.arity_) throw std::invalid_argument("Tensor: shape mismatch");
    for (const auto& [k, c] : b.entries_) a.add(k, c);
    return a;
  }

 private:
  void add_term(const PolyTerm<S>& term) {
    std::vector<int> idx = term.monomial.indices();
    std::vector<std::vector<int>> orders;
    do {
      orders.push_back(idx);
    } while (std::next_permutation(idx.begin(), idx.end()));
    S w = term.coeff / from_int<S>(static_cast<long long>(orders.size()));
    for (const auto& o : orders) {
      std::vector<int> key{term.target};
      key.insert(key.end(), o.begin(), o.end());
      add(key, w);
    }
  }

  std::size_t dimension_ = 0;
  int arity_ = 0;
  std::map<std::vector<int>, S> entries_;
};

/// Glues inner's output index into lower slot `slot` of outer. The result
/// has arity s_outer + s_inner - 1, with inner's slots in place of `slot`.
template <Scalar S>
Tensor<S> contract_at(const Tensor<S>& outer, int slot, const Tensor<S>& inner) {
  if (slot < 0 || slot >= outer.arity()) throw std::out_of_range("contract_at: slot out of range");
  if (outer.dimension() != inner.dimension()) throw std::invalid_argument("contract_at: dimension mismatch");
  Tensor<S> out(outer.dimension(), outer.arity() + inner.arity() - 1);
  const auto pos = static_cast<std::size_t>(slot) + 1;
  for (const auto& [ko, co] : outer.entries()) {
    for (const auto& [ki, ci] : inner.entries()) {
      if (ki[0] != ko[pos]) continue;
      std::vector<int> key(ko.begin(), ko.begin() + static_cast<std::ptrdiff_t>(pos));
      key.insert(key.end(), ki.begin() + 1, ki.end());
      key.insert(key.end(), ko.begin() + static_cast<std::ptrdiff_t>(pos) + 1, ko.end());
      out.add(key, co * ci);
    }
  }
  return out;
}

/// U * V: V contracted into each lower slot of U, summed over slots and
/// over homogeneous components.
template <Scalar S>
PolynomialVectorField<S> star_product(const PolynomialVectorField<S>& u, const PolynomialVectorField<S>& v) {
  PolynomialVectorField<S>::check_same_dimension(u, v);
  PolynomialVectorField<S> out(u.dimension());
  for (int a : u.degrees()) {
    if (a == 0) continue;
    const auto tu = Tensor<S>::from_component(u, a);
    for (int b : v.degrees()) {
      const auto tv = Tensor<S>::from_component(v, b);
      for (int k = 0; k < a; ++k) out = out + contract_at(tu, k, tv).to_field();
    }
  }
  return out;
}

/// [U, V] = U*V - V*U. For linear fields U = Az, V = Bz this is (AB - BA)z.
template <Scalar S>
PolynomialVectorField<S> bracket(const PolynomialVectorField<S>& u, const PolynomialVectorField<S>& v) {
  return star_product(u, v) - star_product(v, u);
}

}  // namespace flowtree
