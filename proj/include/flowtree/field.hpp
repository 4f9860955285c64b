#pragma once

// Polynomial vector fields stored as sparse monomial term lists.
//
// A term (target i, monomial x^e, coeff c) stands for the symmetric (1,s)
// tensor whose full contraction with (x,...,x) reproduces c*x^e in
// component i exactly once.

#include "flowtree/scalar.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtree {

class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<int> exponents) : exponents_(std::move(exponents)) {
    for (int e : exponents_) {
      if (e < 0) throw std::invalid_argument("Monomial: negative exponent");
    }
  }

  static Monomial zero(std::size_t dimension) { return Monomial(std::vector<int>(dimension, 0)); }
  static Monomial unit(std::size_t dimension, int index) {
    std::vector<int> e(dimension, 0);
    e.at(static_cast<std::size_t>(index)) = 1;
    return Monomial(std::move(e));
  }
  /// Builds the monomial from a slot index list, e.g. {0,0,1} -> x^2 y.
  static Monomial from_indices(std::size_t dimension, std::span<const int> indices) {
    std::vector<int> e(dimension, 0);
    for (int i : indices) e.at(static_cast<std::size_t>(i)) += 1;
    return Monomial(std::move(e));
  }

  std::size_t dimension() const { return exponents_.size(); }
  int degree() const { return std::accumulate(exponents_.begin(), exponents_.end(), 0); }
  int operator[](std::size_t k) const { return exponents_[k]; }
  const std::vector<int>& exponents() const { return exponents_; }

  /// Sorted slot indices: x^2 y -> {0,0,1}.
  std::vector<int> indices() const {
    std::vector<int> out;
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
      out.insert(out.end(), static_cast<std::size_t>(exponents_[k]), static_cast<int>(k));
    }
    return out;
  }

  Monomial operator*(const Monomial& o) const {
    if (o.dimension() != dimension()) throw std::invalid_argument("Monomial: dimension mismatch");
    std::vector<int> e(exponents_);
    for (std::size_t k = 0; k < e.size(); ++k) e[k] += o.exponents_[k];
    return Monomial(std::move(e));
  }

  auto operator<=>(const Monomial&) const = default;

 private:
  std::vector<int> exponents_;
};

template <Scalar S>
S power(const S& base, int e) {
  S result = from_int<S>(1);
  for (int k = 0; k < e; ++k) result = result * base;
  return result;
}

template <Scalar S>
S eval_monomial(const Monomial& m, std::span<const S> point) {
  S result = from_int<S>(1);
  for (std::size_t k = 0; k < m.dimension(); ++k) {
    if (m[k] != 0) result = result * power(point[k], m[k]);
  }
  return result;
}

inline std::string coordinate_name(int index, std::size_t dimension) {
  if (dimension <= 3) return std::string(1, "xyz"[index]);
  return "x" + std::to_string(index);
}

inline std::string monomial_label(const Monomial& m) {
  std::string out;
  for (int i : m.indices()) out += coordinate_name(i, m.dimension());
  return out.empty() ? "1" : out;
}

/// All monomials of total degree s in d variables, lexicographically descending
/// in the exponent vector (x^2, xy, y^2 for d=2, s=2).
inline std::vector<Monomial> monomials_of_degree(std::size_t d, int s) {
  std::vector<Monomial> out;
  std::vector<int> e(d, 0);
  auto rec = [&](auto&& self, std::size_t k, int left) -> void {
    if (k + 1 == d) {
      e[k] = left;
      out.emplace_back(e);
      return;
    }
    for (int v = left; v >= 0; --v) {
      e[k] = v;
      self(self, k + 1, left - v);
    }
  };
  if (d == 0) return out;
  rec(rec, 0, s);
  return out;
}

template <Scalar S>
struct PolyTerm {
  int target = 0;
  Monomial monomial;
  S coeff{};

  int degree() const { return monomial.degree(); }
};

/// "y->xx" style label of a term's index structure (coefficient omitted).
template <Scalar S>
std::string term_label(const PolyTerm<S>& t) {
  return coordinate_name(t.target, t.monomial.dimension()) + "->" + monomial_label(t.monomial);
}

/// Number of distinct slot orderings of a monomial: s! / prod(e_k!).
inline long long orderings_count(const Monomial& m) {
  long long n = 1;
  int placed = 0;
  for (int e : m.exponents()) {
    for (int k = 1; k <= e; ++k) {
      ++placed;
      n = n * placed / k;
    }
  }
  return n;
}

template <Scalar S>
class PolynomialVectorField {
 public:
  PolynomialVectorField() = default;
  explicit PolynomialVectorField(std::size_t dimension) : dimension_(dimension) {}

  /// Validates and canonicalizes: duplicates merged, zeros dropped, terms
  /// sorted by (degree, target, exponents descending).
  PolynomialVectorField(std::size_t dimension, std::vector<PolyTerm<S>> terms) : dimension_(dimension) {
    std::map<std::pair<int, Monomial>, S> merged;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const auto& t = terms[k];
      if (t.target < 0 || static_cast<std::size_t>(t.target) >= dimension) {
        throw std::invalid_argument("term " + std::to_string(k) + ": target out of range");
      }
      if (t.monomial.dimension() != dimension) {
        throw std::invalid_argument("term " + std::to_string(k) + ": exponents length " +
                                    std::to_string(t.monomial.dimension()) + " != dimension " +
                                    std::to_string(dimension));
      }
      if (!scalar_traits<S>::is_finite(t.coeff)) {
        throw std::invalid_argument("term " + std::to_string(k) + ": non-finite coefficient");
      }
      auto key = std::make_pair(t.target, t.monomial);
      auto it = merged.find(key);
      if (it == merged.end()) {
        merged.emplace(key, t.coeff);
      } else {
        it->second = it->second + t.coeff;
      }
    }
    for (auto& [key, c] : merged) {
      if (c == S(0)) continue;
      terms_.push_back({key.first, key.second, c});
    }
    std::sort(terms_.begin(), terms_.end(), [](const PolyTerm<S>& a, const PolyTerm<S>& b) {
      if (a.degree() != b.degree()) return a.degree() < b.degree();
      if (a.target != b.target) return a.target < b.target;
      return a.monomial > b.monomial;
    });
  }

  std::size_t dimension() const { return dimension_; }
  const std::vector<PolyTerm<S>>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  /// Distinct degrees present, ascending.
  std::vector<int> degrees() const {
    std::vector<int> out;
    for (const auto& t : terms_) {
      if (out.empty() || out.back() != t.degree()) out.push_back(t.degree());
    }
    return out;
  }

  int max_degree() const { return terms_.empty() ? 0 : terms_.back().degree(); }

  bool is_homogeneous() const { return degrees().size() <= 1; }

  PolynomialVectorField component(int degree) const {
    return filtered([degree](const PolyTerm<S>& t) { return t.degree() == degree; });
  }
  PolynomialVectorField nonlinear_part() const {
    return filtered([](const PolyTerm<S>& t) { return t.degree() >= 2; });
  }
  PolynomialVectorField linear_part() const { return component(1); }

  /// Dense matrix of the degree-1 component, row = target.
  std::vector<std::vector<S>> linear_matrix() const {
    std::vector<std::vector<S>> a(dimension_, std::vector<S>(dimension_, S(0)));
    for (const auto& t : terms_) {
      if (t.degree() != 1) continue;
      a[static_cast<std::size_t>(t.target)][static_cast<std::size_t>(t.monomial.indices()[0])] = t.coeff;
    }
    return a;
  }

  PolynomialVectorField scaled(const S& factor) const {
    std::vector<PolyTerm<S>> out = terms_;
    for (auto& t : out) t.coeff = t.coeff * factor;
    return {dimension_, std::move(out)};
  }

  friend PolynomialVectorField operator+(const PolynomialVectorField& a, const PolynomialVectorField& b) {
    check_same_dimension(a, b);
    std::vector<PolyTerm<S>> all = a.terms_;
    all.insert(all.end(), b.terms_.begin(), b.terms_.end());
    return {a.dimension_, std::move(all)};
  }
  friend PolynomialVectorField operator-(const PolynomialVectorField& a, const PolynomialVectorField& b) {
    return a + b.scaled(from_int<S>(-1));
  }
  friend bool operator==(const PolynomialVectorField& a, const PolynomialVectorField& b) {
    if (a.dimension_ != b.dimension_ || a.terms_.size() != b.terms_.size()) return false;
    for (std::size_t k = 0; k < a.terms_.size(); ++k) {
      const auto& x = a.terms_[k];
      const auto& y = b.terms_[k];
      if (x.target != y.target || x.monomial != y.monomial || !(x.coeff == y.coeff)) return false;
    }
    return true;
  }

  static void check_same_dimension(const PolynomialVectorField& a, const PolynomialVectorField& b) {
    if (a.dimension_ != b.dimension_) throw std::invalid_argument("vector fields: dimension mismatch");
  }

 private:
  template <class Pred>
  PolynomialVectorField filtered(Pred pred) const {
    PolynomialVectorField out(dimension_);
    for (const auto& t : terms_) {
      if (pred(t)) out.terms_.push_back(t);
    }
    return out;
  }

  std::size_t dimension_ = 0;
  std::vector<PolyTerm<S>> terms_;
};

template <Scalar S>
std::vector<S> evaluate(const PolynomialVectorField<S>& field, std::span<const S> point) {
  if (point.size() != field.dimension()) throw std::invalid_argument("evaluate: dimension mismatch");
  std::vector<S> out(field.dimension(), S(0));
  for (const auto& t : field.terms()) {
    auto& slot = out[static_cast<std::size_t>(t.target)];
    slot = slot + t.coeff * eval_monomial(t.monomial, point);
  }
  return out;
}

template <Scalar S>
std::vector<S> evaluate(const PolynomialVectorField<S>& field, const std::vector<S>& point) {
  return evaluate(field, std::span<const S>(point));
}

/// Converts the coefficients of a field to another scalar type.
template <Scalar T, Scalar S, class F>
PolynomialVectorField<T> convert_field(const PolynomialVectorField<S>& field, F&& convert) {
  std::vector<PolyTerm<T>> out;
  for (const auto& t : field.terms()) out.push_back({t.target, t.monomial, convert(t.coeff)});
  return {field.dimension(), std::move(out)};
}

/// Homogeneous component of degree s viewed as a symmetric multilinear map.
/// Each term contributes coeff/P to each of its P distinct slot orderings.
template <Scalar S>
class SymmetricForm {
 public:
  SymmetricForm() = default;
  SymmetricForm(const PolynomialVectorField<S>& field, int arity) : dimension_(field.dimension()), arity_(arity) {
    for (const auto& t : field.terms()) {
      if (t.degree() != arity) continue;
      Entry e;
      e.target = t.target;
      std::vector<int> idx = t.monomial.indices();
      do {
        e.orderings.push_back(idx);
      } while (std::next_permutation(idx.begin(), idx.end()));
      e.weight = t.coeff / from_int<S>(static_cast<long long>(e.orderings.size()));
      entries_.push_back(std::move(e));
    }
  }

  int arity() const { return arity_; }
  bool empty() const { return entries_.empty(); }

  std::vector<S> operator()(std::span<const std::vector<S>* const> args) const {
    if (args.size() != static_cast<std::size_t>(arity_)) throw std::invalid_argument("SymmetricForm: arity mismatch");
    std::vector<S> out(dimension_, S(0));
    for (const auto& e : entries_) {
      S sum(0);
      for (const auto& ord : e.orderings) {
        S prod = from_int<S>(1);
        for (std::size_t k = 0; k < ord.size(); ++k) prod = prod * (*args[k])[static_cast<std::size_t>(ord[k])];
        sum = sum + prod;
      }
      auto& slot = out[static_cast<std::size_t>(e.target)];
      slot = slot + e.weight * sum;
    }
    return out;
  }

 private:
  struct Entry {
    int target = 0;
    std::vector<std::vector<int>> orderings;
    S weight{};
  };
  std::size_t dimension_ = 0;
  int arity_ = 0;
  std::vector<Entry> entries_;
};

/// Frobenius norm of the symmetrized coefficient array; dominates the
/// induced Euclidean operator norm of every homogeneous component.
template <Scalar S>
double operator_norm_upper(const PolynomialVectorField<S>& field) {
  double sum = 0.0;
  for (const auto& t : field.terms()) {
    double m = magnitude(t.coeff);
    sum += m * m / static_cast<double>(orderings_count(t.monomial));
  }
  return std::sqrt(sum);
}

}  // namespace flowtree
