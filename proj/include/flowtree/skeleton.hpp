#pragma once

// Skeleton diagrams: every vertex is one monomial term of the field, every
// edge carries a coordinate index. Used by the linearization and resonance
// code, where the eigenvalues on the edges matter.

#include "flowtree/diagram.hpp"

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtree {

struct SkeletonVertex {
  int term = -1;           // index into the field's term list
  int target = 0;          // output (root-side) coordinate
  std::vector<int> slots;  // coordinate index of each lower edge, planar order

  int arity() const { return static_cast<int>(slots.size()); }
  friend auto operator<=>(const SkeletonVertex&, const SkeletonVertex&) = default;
};

class SkeletonDiagram {
 public:
  SkeletonDiagram() = default;

  /// `vertices` are in the preorder of `shape`. Every internal edge must join
  /// a parent slot index to the child's target.
  SkeletonDiagram(Diagram shape, std::vector<SkeletonVertex> vertices, std::size_t dimension)
      : shape_(std::move(shape)), vertices_(std::move(vertices)), dimension_(dimension) {
    if (vertices_.size() != shape_.order()) throw std::invalid_argument("SkeletonDiagram: vertex count mismatch");
    for (std::size_t v = 0; v < vertices_.size(); ++v) {
      const auto& sv = vertices_[v];
      const int iv = static_cast<int>(v);
      if (sv.arity() != shape_.arity(iv)) throw std::invalid_argument("SkeletonDiagram: arity mismatch at vertex " + std::to_string(v));
      if (sv.target < 0 || static_cast<std::size_t>(sv.target) >= dimension_) {
        throw std::invalid_argument("SkeletonDiagram: target out of range");
      }
      const auto& kids = shape_.children(iv);
      for (std::size_t k = 0; k < kids.size(); ++k) {
        if (sv.slots[k] < 0 || static_cast<std::size_t>(sv.slots[k]) >= dimension_) {
          throw std::invalid_argument("SkeletonDiagram: slot index out of range");
        }
        if (kids[k] != Diagram::kOpen && vertices_[static_cast<std::size_t>(kids[k])].target != sv.slots[k]) {
          throw std::invalid_argument("SkeletonDiagram: index mismatch on edge into vertex " + std::to_string(kids[k]));
        }
      }
    }
  }

  const Diagram& shape() const { return shape_; }
  const std::vector<SkeletonVertex>& vertices() const { return vertices_; }
  const SkeletonVertex& vertex(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
  std::size_t order() const { return vertices_.size(); }
  std::size_t dimension() const { return dimension_; }
  int target() const { return vertices_.front().target; }

  /// Coordinate index on each open edge, left to right.
  std::vector<int> open_indices() const {
    std::vector<int> out;
    auto walk = [&](auto&& self, int v) -> void {
      const auto& kids = shape_.children(v);
      for (std::size_t k = 0; k < kids.size(); ++k) {
        if (kids[k] == Diagram::kOpen) {
          out.push_back(vertex(v).slots[k]);
        } else {
          self(self, kids[k]);
        }
      }
    };
    walk(walk, 0);
    return out;
  }

  /// Exponent vector n of the open edges (the monomial this skeleton produces).
  Monomial open_monomial() const { return Monomial::from_indices(dimension_, open_indices()); }

  SkeletonDiagram subtree(int v) const {
    const auto first = static_cast<std::size_t>(v);
    const auto last = first + shape_.subtree_size(v);
    return {shape_.subtree(v),
            std::vector<SkeletonVertex>(vertices_.begin() + static_cast<std::ptrdiff_t>(first),
                                        vertices_.begin() + static_cast<std::ptrdiff_t>(last)),
            dimension_};
  }

  std::string to_string() const {
    std::string out;
    write(0, out);
    return out;
  }

  /// Same as to_string but with children sorted, so it ignores planarity.
  std::string unordered_string() const { return unordered(0); }

  friend bool operator==(const SkeletonDiagram& a, const SkeletonDiagram& b) {
    return a.shape_ == b.shape_ && a.vertices_ == b.vertices_;
  }
  friend auto operator<=>(const SkeletonDiagram& a, const SkeletonDiagram& b) {
    if (auto c = a.shape_ <=> b.shape_; c != 0) return c;
    return a.vertices_ <=> b.vertices_;
  }

 private:
  std::string label(int v) const {
    const auto& sv = vertex(v);
    std::string out = coordinate_name(sv.target, dimension_) + "<";
    if (sv.slots.empty()) return out + "1";
    for (int s : sv.slots) out += coordinate_name(s, dimension_);
    return out;
  }

  void write(int v, std::string& out) const {
    out += label(v);
    const auto& kids = shape_.children(v);
    if (kids.empty()) return;
    out += "(";
    for (std::size_t k = 0; k < kids.size(); ++k) {
      if (k > 0) out += ",";
      if (kids[k] == Diagram::kOpen) {
        out += coordinate_name(vertex(v).slots[k], dimension_);
      } else {
        write(kids[k], out);
      }
    }
    out += ")";
  }

  std::string unordered(int v) const {
    const auto& sv = vertex(v);
    std::string out = coordinate_name(sv.target, dimension_) + "<" +
                      (sv.slots.empty() ? std::string("1") : monomial_label(Monomial::from_indices(dimension_, sv.slots)));
    const auto& kids = shape_.children(v);
    if (kids.empty()) return out;
    std::vector<std::string> parts;
    for (std::size_t k = 0; k < kids.size(); ++k) {
      parts.push_back(kids[k] == Diagram::kOpen ? coordinate_name(sv.slots[k], dimension_) : unordered(kids[k]));
    }
    std::sort(parts.begin(), parts.end());
    out += "(";
    for (std::size_t k = 0; k < parts.size(); ++k) out += (k ? "," : "") + parts[k];
    return out + ")";
  }

  Diagram shape_;
  std::vector<SkeletonVertex> vertices_;
  std::size_t dimension_ = 0;
};

/// A skeleton for a single term with a chosen slot ordering.
template <Scalar S>
SkeletonDiagram single_vertex_skeleton(const PolynomialVectorField<S>& field, int term, std::vector<int> slots) {
  const auto& t = field.terms().at(static_cast<std::size_t>(term));
  return {Diagram::single(static_cast<int>(slots.size())), {SkeletonVertex{term, t.target, std::move(slots)}},
          field.dimension()};
}

/// Replaces the open edge number `leaf` (left to right) of `outer` by `inner`.
inline SkeletonDiagram graft(const SkeletonDiagram& outer, int leaf, const SkeletonDiagram& inner) {
  std::vector<int> code;
  std::vector<SkeletonVertex> verts;
  int seen = 0;
  bool done = false;
  auto walk = [&](auto&& self, const SkeletonDiagram& s, int v, bool top) -> void {
    code.push_back(s.shape().arity(v));
    verts.push_back(s.vertex(v));
    const auto& kids = s.shape().children(v);
    for (std::size_t k = 0; k < kids.size(); ++k) {
      if (kids[k] != Diagram::kOpen) {
        self(self, s, kids[k], top);
        continue;
      }
      if (top && seen++ == leaf) {
        if (s.vertex(v).slots[k] != inner.target()) throw std::invalid_argument("graft: index mismatch");
        self(self, inner, 0, false);
        done = true;
      } else {
        code.push_back(Diagram::kOpen);
      }
    }
  };
  walk(walk, outer, 0, true);
  if (!done) throw std::out_of_range("graft: leaf out of range");
  return {Diagram(std::move(code)), std::move(verts), outer.dimension()};
}

namespace detail {

/// Distinct orderings of a term's slot indices in lexicographic order.
inline std::vector<std::vector<int>> slot_orderings(const Monomial& m) {
  std::vector<int> idx = m.indices();
  std::vector<std::vector<int>> out;
  do {
    out.push_back(idx);
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

struct SkeletonToken {
  int term;  // -1 for an open edge
  int info;  // ordering number for a vertex, coordinate for an open edge
};

}  // namespace detail

/// All index-consistent assignments of field terms to planar trees with n
/// vertices, in canonical order. Throws length_error past `limit` results.
template <Scalar S>
std::vector<SkeletonDiagram> enumerate_skeletons(const PolynomialVectorField<S>& field, int n,
                                                 std::size_t limit = 2'000'000) {
  if (n < 1) throw std::invalid_argument("enumerate_skeletons: order must be >= 1");
  using Token = detail::SkeletonToken;
  using Seq = std::vector<Token>;
  const std::size_t d = field.dimension();
  const auto& terms = field.terms();
  std::vector<std::vector<std::vector<int>>> orderings;
  for (const auto& t : terms) orderings.push_back(detail::slot_orderings(t.monomial));

  // memo[m][i]: fillings with m vertices whose output index is i
  std::vector<std::vector<std::vector<Seq>>> memo(static_cast<std::size_t>(n) + 1, std::vector<std::vector<Seq>>(d));
  for (std::size_t i = 0; i < d; ++i) memo[0][i].push_back({Token{-1, static_cast<int>(i)}});
  std::size_t total = 0;
  for (int m = 1; m <= n; ++m) {
    for (std::size_t ti = 0; ti < terms.size(); ++ti) {
      const int s = terms[ti].degree();
      auto& out = memo[static_cast<std::size_t>(m)][static_cast<std::size_t>(terms[ti].target)];
      for (std::size_t oi = 0; oi < orderings[ti].size(); ++oi) {
        const auto& slots = orderings[ti][oi];
        std::vector<int> comp;
        detail::for_each_composition(m - 1, s, comp, [&](const std::vector<int>& parts) {
          Seq seq{Token{static_cast<int>(ti), static_cast<int>(oi)}};
          auto fill = [&](auto&& self, std::size_t slot) -> void {
            if (slot == parts.size()) {
              if (++total > limit) throw std::length_error("enumerate_skeletons: result limit exceeded");
              out.push_back(seq);
              return;
            }
            const auto& options = memo[static_cast<std::size_t>(parts[slot])][static_cast<std::size_t>(slots[slot])];
            for (const auto& c : options) {
              const auto mark = seq.size();
              seq.insert(seq.end(), c.begin(), c.end());
              self(self, slot + 1);
              seq.resize(mark);
            }
          };
          fill(fill, 0);
        });
      }
    }
  }

  std::vector<SkeletonDiagram> result;
  for (std::size_t i = 0; i < d; ++i) {
    for (const auto& seq : memo[static_cast<std::size_t>(n)][i]) {
      std::vector<int> code;
      std::vector<SkeletonVertex> verts;
      for (const auto& tok : seq) {
        if (tok.term < 0) {
          code.push_back(Diagram::kOpen);
          continue;
        }
        const auto& slots = orderings[static_cast<std::size_t>(tok.term)][static_cast<std::size_t>(tok.info)];
        code.push_back(static_cast<int>(slots.size()));
        verts.push_back({tok.term, terms[static_cast<std::size_t>(tok.term)].target, slots});
      }
      result.emplace_back(Diagram(std::move(code)), std::move(verts), d);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// lambda of a single term: eigenvalues of its lower indices minus that of its target.
template <Scalar S>
S lambda_of(const PolyTerm<S>& term, std::span<const S> spectrum) {
  if (spectrum.size() != term.monomial.dimension()) throw std::invalid_argument("lambda_of: spectrum length mismatch");
  S sum(0);
  for (int i : term.monomial.indices()) sum = sum + spectrum[static_cast<std::size_t>(i)];
  return sum - spectrum[static_cast<std::size_t>(term.target)];
}

template <Scalar S>
S vertex_lambda(const SkeletonVertex& v, std::span<const S> spectrum) {
  S sum(0);
  for (int i : v.slots) sum = sum + spectrum[static_cast<std::size_t>(i)];
  return sum - spectrum[static_cast<std::size_t>(v.target)];
}

/// lambda(S): open-edge eigenvalues minus the root-edge eigenvalue.
template <Scalar S>
S lambda_of(const SkeletonDiagram& sk, std::span<const S> spectrum) {
  if (spectrum.size() != sk.dimension()) throw std::invalid_argument("lambda_of: spectrum length mismatch");
  S sum(0);
  for (int i : sk.open_indices()) sum = sum + spectrum[static_cast<std::size_t>(i)];
  return sum - spectrum[static_cast<std::size_t>(sk.target())];
}

/// lambda(K_v) for the rooted sub-skeleton at every vertex, by additivity.
template <Scalar S>
std::vector<S> subtree_lambdas(const SkeletonDiagram& sk, std::span<const S> spectrum) {
  if (spectrum.size() != sk.dimension()) throw std::invalid_argument("subtree_lambdas: spectrum length mismatch");
  std::vector<S> out(sk.order(), S(0));
  for (std::size_t v = sk.order(); v-- > 0;) {
    out[v] = out[v] + vertex_lambda(sk.vertices()[v], spectrum);
    const int p = sk.shape().parent(static_cast<int>(v));
    if (p >= 0) out[static_cast<std::size_t>(p)] = out[static_cast<std::size_t>(p)] + out[v];
  }
  return out;
}

/// Product of per-vertex weights coeff/#orderings. Summing a skeleton family
/// over all slot orderings reproduces the plain monomial coefficients.
template <Scalar S>
S skeleton_weight(const SkeletonDiagram& sk, const PolynomialVectorField<S>& field) {
  S w = from_int<S>(1);
  for (const auto& v : sk.vertices()) {
    const auto& t = field.terms().at(static_cast<std::size_t>(v.term));
    if (t.target != v.target || Monomial::from_indices(field.dimension(), v.slots) != t.monomial) {
      throw std::invalid_argument("skeleton_weight: skeleton does not match field");
    }
    w = w * t.coeff / from_int<S>(orderings_count(t.monomial));
  }
  return w;
}

/// Value of the skeleton's output component at point x.
template <Scalar S>
S skeleton_value(const SkeletonDiagram& sk, const PolynomialVectorField<S>& field, std::span<const S> x) {
  S v = skeleton_weight(sk, field);
  for (int i : sk.open_indices()) v = v * x[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace flowtree
