#pragma once

// Contraction diagrams: planar rooted trees whose vertices carry the arity of
// a homogeneous component. Open edges are contracted with the initial point.

#include "flowtree/field.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace flowtree {

class Diagram {
 public:
  static constexpr int kOpen = -1;

  Diagram() = default;

  /// Preorder code: a vertex is written as its arity, an open edge as kOpen.
  /// The code must describe exactly one tree with at least one vertex.
  explicit Diagram(std::vector<int> code) : code_(std::move(code)) {
    if (code_.empty() || code_[0] < 0) throw std::invalid_argument("Diagram: code must start with a vertex");
    std::size_t pos = 0;
    build(pos, -1);
    if (pos != code_.size()) throw std::invalid_argument("Diagram: trailing symbols in code");
    size_.assign(arity_.size(), 1);
    for (std::size_t v = arity_.size(); v-- > 1;) size_[static_cast<std::size_t>(parent_[v])] += size_[v];
  }

  /// A single vertex of the given arity with all slots open.
  static Diagram single(int arity) {
    std::vector<int> code{arity};
    code.insert(code.end(), static_cast<std::size_t>(arity), kOpen);
    return Diagram(std::move(code));
  }

  static Diagram parse(std::string_view text);

  const std::vector<int>& code() const { return code_; }
  std::size_t order() const { return arity_.size(); }
  int arity(int v) const { return arity_[static_cast<std::size_t>(v)]; }
  /// Child vertex ids per slot; kOpen marks an open edge.
  const std::vector<int>& children(int v) const { return children_[static_cast<std::size_t>(v)]; }
  int parent(int v) const { return parent_[static_cast<std::size_t>(v)]; }
  /// Vertex ids are preorder, so the subtree of v is [v, v + subtree_size(v)).
  std::size_t subtree_size(int v) const { return size_[static_cast<std::size_t>(v)]; }

  std::size_t open_edges() const {
    return static_cast<std::size_t>(std::count(code_.begin(), code_.end(), kOpen));
  }

  /// Rooted sub-diagram at v with all its descendants.
  Diagram subtree(int v) const {
    const auto first = static_cast<std::ptrdiff_t>(code_begin_[static_cast<std::size_t>(v)]);
    const auto last = static_cast<std::ptrdiff_t>(code_end_[static_cast<std::size_t>(v)]);
    return Diagram(std::vector<int>(code_.begin() + first, code_.begin() + last));
  }

  std::string to_string() const {
    std::string out;
    write(0, out);
    return out;
  }

  friend auto operator<=>(const Diagram& a, const Diagram& b) { return a.code_ <=> b.code_; }
  friend bool operator==(const Diagram& a, const Diagram& b) { return a.code_ == b.code_; }

 private:
  int build(std::size_t& pos, int parent) {
    if (pos >= code_.size()) throw std::invalid_argument("Diagram: truncated code");
    int a = code_[pos];
    if (a == kOpen) {
      ++pos;
      return kOpen;
    }
    if (a < 0) throw std::invalid_argument("Diagram: invalid symbol in code");
    int id = static_cast<int>(arity_.size());
    arity_.push_back(a);
    parent_.push_back(parent);
    children_.emplace_back();
    code_begin_.push_back(pos);
    ++pos;
    for (int k = 0; k < a; ++k) {
      int c = build(pos, id);
      children_[static_cast<std::size_t>(id)].push_back(c);
    }
    code_end_.resize(arity_.size());
    code_end_[static_cast<std::size_t>(id)] = pos;
    return id;
  }

  void write(int v, std::string& out) const {
    out += "T" + std::to_string(arity(v));
    if (arity(v) == 0) return;
    out += "(";
    bool first = true;
    for (int c : children(v)) {
      if (!first) out += ",";
      first = false;
      if (c == kOpen) {
        out += "x";
      } else {
        write(c, out);
      }
    }
    out += ")";
  }

  std::vector<int> code_;
  std::vector<int> arity_;
  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<std::size_t> size_;
  std::vector<std::size_t> code_begin_;
  std::vector<std::size_t> code_end_;
};

namespace detail {

class DiagramParser {
 public:
  explicit DiagramParser(std::string_view text) : text_(text) {}

  std::vector<int> parse() {
    std::vector<int> code;
    vertex(code);
    if (pos_ != text_.size()) fail("trailing characters");
    return code;
  }

 private:
  void vertex(std::vector<int>& code) {
    expect('T');
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
    if (start == pos_) fail("expected arity");
    if (pos_ - start > 1 && text_[start] == '0') fail("leading zero in arity");
    int arity = std::stoi(std::string(text_.substr(start, pos_ - start)));
    code.push_back(arity);
    if (arity == 0) return;
    expect('(');
    for (int k = 0; k < arity; ++k) {
      if (k > 0) expect(',');
      if (pos_ < text_.size() && text_[pos_] == 'x') {
        ++pos_;
        code.push_back(Diagram::kOpen);
      } else {
        vertex(code);
      }
    }
    expect(')');
  }

  void expect(char c) {
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("Diagram::parse: " + what + " at position " + std::to_string(pos_));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

template <class F>
void for_each_composition(int total, int parts, std::vector<int>& current, F&& f) {
  if (parts == 0) {
    if (total == 0) f(current);
    return;
  }
  if (parts == 1) {
    current.push_back(total);
    f(current);
    current.pop_back();
    return;
  }
  for (int first = 0; first <= total; ++first) {
    current.push_back(first);
    for_each_composition(total - first, parts - 1, current, f);
    current.pop_back();
  }
}

}  // namespace detail

inline Diagram Diagram::parse(std::string_view text) { return Diagram(detail::DiagramParser(text).parse()); }

/// Preorder codes of all planar trees with n vertices whose arities lie in
/// `arities`, sorted (depth-first lexicographic, open edge before any vertex).
inline std::vector<std::vector<int>> enumerate_diagram_codes(const std::vector<int>& arities, int n) {
  if (n < 1) throw std::invalid_argument("enumerate_diagrams: order must be >= 1");
  std::set<int> arity_set(arities.begin(), arities.end());
  for (int a : arity_set) {
    if (a < 0) throw std::invalid_argument("enumerate_diagrams: negative arity");
  }
  // codes[m]: preorder codes of all slot fillings with m vertices (m = 0 is an open edge)
  std::vector<std::vector<std::vector<int>>> codes(static_cast<std::size_t>(n) + 1);
  codes[0].push_back({Diagram::kOpen});
  for (int m = 1; m <= n; ++m) {
    auto& out = codes[static_cast<std::size_t>(m)];
    for (int s : arity_set) {
      std::vector<int> comp;
      detail::for_each_composition(m - 1, s, comp, [&](const std::vector<int>& parts) {
        std::vector<int> code{s};
        auto fill = [&](auto&& self, std::size_t slot) -> void {
          if (slot == parts.size()) {
            out.push_back(code);
            return;
          }
          for (const auto& c : codes[static_cast<std::size_t>(parts[slot])]) {
            const auto mark = code.size();
            code.insert(code.end(), c.begin(), c.end());
            self(self, slot + 1);
            code.resize(mark);
          }
        };
        fill(fill, 0);
      });
    }
  }
  auto top = std::move(codes[static_cast<std::size_t>(n)]);
  std::sort(top.begin(), top.end());
  return top;
}

inline std::vector<Diagram> enumerate_diagrams(const std::vector<int>& arities, int n) {
  std::vector<Diagram> result;
  for (auto& c : enumerate_diagram_codes(arities, n)) result.emplace_back(std::move(c));
  return result;
}

/// Tree factorial straight from a preorder code.
inline std::uint64_t tree_factorial(const std::vector<int>& code) {
  // stack of (remaining slots, vertices so far) for open vertices
  std::vector<std::pair<int, std::uint64_t>> stack;
  std::uint64_t f = 1;
  auto close = [&]() {
    while (!stack.empty() && stack.back().first == 0) {
      const std::uint64_t size = stack.back().second;
      f *= size;
      stack.pop_back();
      if (!stack.empty()) stack.back().second += size;
    }
  };
  for (int sym : code) {
    if (!stack.empty()) --stack.back().first;
    if (sym == Diagram::kOpen) {
      close();
      continue;
    }
    stack.push_back({sym, 1});
    close();
  }
  return f;
}

/// D! = product over vertices of the order of the sub-diagram rooted there.
inline std::uint64_t tree_factorial(const Diagram& d) {
  std::uint64_t f = 1;
  for (std::size_t v = 0; v < d.order(); ++v) f *= d.subtree_size(static_cast<int>(v));
  return f;
}

/// Coefficient 1/D! of the diagram in the evolution series.
inline Rational inverse_tree_factorial(const Diagram& d) { return Rational(1) / Rational(tree_factorial(d)); }

inline std::vector<Diagram> subdiagrams(const Diagram& d) {
  std::vector<Diagram> out;
  for (std::size_t v = 0; v < d.order(); ++v) out.push_back(d.subtree(static_cast<int>(v)));
  return out;
}

/// A connected piece of a diagram after cutting some edges. `vertices` lists
/// the original vertex ids in the piece's own preorder.
struct DiagramPiece {
  Diagram diagram;
  std::vector<int> vertices;
};

/// Extracts the piece rooted at `root`; a vertex v with cut[v] set is
/// severed from its parent and shows up as an open edge.
inline DiagramPiece extract_piece(const Diagram& d, int root, const std::vector<char>& cut) {
  DiagramPiece piece;
  std::vector<int> code;
  auto walk = [&](auto&& self, int v) -> void {
    piece.vertices.push_back(v);
    code.push_back(d.arity(v));
    for (int c : d.children(v)) {
      if (c == Diagram::kOpen || cut[static_cast<std::size_t>(c)]) {
        code.push_back(Diagram::kOpen);
      } else {
        self(self, c);
      }
    }
  };
  walk(walk, root);
  piece.diagram = Diagram(std::move(code));
  return piece;
}

struct DiagramPartition {
  std::vector<int> cut;  // child vertex of each cut edge, ascending
  std::vector<DiagramPiece> pieces;  // ordered by root vertex id
};

/// Pieces obtained by cutting the edges above the given vertices.
inline DiagramPartition partition_at(const Diagram& d, std::vector<int> cut_vertices) {
  std::sort(cut_vertices.begin(), cut_vertices.end());
  std::vector<char> cut(d.order(), 0);
  for (int v : cut_vertices) {
    if (v <= 0 || static_cast<std::size_t>(v) >= d.order()) throw std::out_of_range("partition_at: not an internal edge");
    cut[static_cast<std::size_t>(v)] = 1;
  }
  DiagramPartition p;
  p.cut = cut_vertices;
  p.pieces.push_back(extract_piece(d, 0, cut));
  for (int v : cut_vertices) p.pieces.push_back(extract_piece(d, v, cut));
  return p;
}

/// All 2^(#internal edges) ways to split the diagram along edges.
inline std::vector<DiagramPartition> partitions(const Diagram& d) {
  const std::size_t internal = d.order() - 1;
  if (internal >= 31) throw std::length_error("partitions: diagram too large");
  std::vector<DiagramPartition> out;
  for (std::uint32_t mask = 0; mask < (1u << internal); ++mask) {
    std::vector<int> cut;
    for (std::size_t k = 0; k < internal; ++k) {
      if (mask & (1u << k)) cut.push_back(static_cast<int>(k) + 1);
    }
    out.push_back(partition_at(d, std::move(cut)));
  }
  return out;
}

/// Representative of the diagram modulo reordering of children.
inline Diagram canonical_unordered(const Diagram& d) {
  auto canon = [&](auto&& self, int v) -> std::vector<int> {
    std::vector<std::vector<int>> kids;
    for (int c : d.children(v)) kids.push_back(c == Diagram::kOpen ? std::vector<int>{Diagram::kOpen} : self(self, c));
    std::sort(kids.begin(), kids.end());
    std::vector<int> code{d.arity(v)};
    for (auto& k : kids) code.insert(code.end(), k.begin(), k.end());
    return code;
  };
  return Diagram(canon(canon, 0));
}

/// Bottom-up contraction of a diagram with a field. Each vertex of arity s
/// applies the symmetric degree-s component to its children's values.
template <Scalar S>
class DiagramEvaluator {
 public:
  explicit DiagramEvaluator(const PolynomialVectorField<S>& field) : dimension_(field.dimension()) {
    for (int s : field.degrees()) forms_.emplace(s, SymmetricForm<S>(field, s));
  }

  /// Same contraction driven directly by a preorder code.
  std::vector<S> evaluate_code(const std::vector<int>& code, std::span<const S> x0) const {
    if (x0.size() != dimension_) throw std::invalid_argument("evaluate_diagram: dimension mismatch");
    const std::vector<S> leaf(x0.begin(), x0.end());
    std::size_t pos = 0;
    auto rec = [&](auto&& self) -> std::vector<S> {
      const int a = code.at(pos++);
      if (a == Diagram::kOpen) return leaf;
      auto it = forms_.find(a);
      if (it == forms_.end()) {
        throw std::invalid_argument("evaluate_diagram: field has no component of degree " + std::to_string(a));
      }
      std::vector<std::vector<S>> kids;
      kids.reserve(static_cast<std::size_t>(a));
      for (int k = 0; k < a; ++k) kids.push_back(self(self));
      std::vector<const std::vector<S>*> args;
      for (const auto& v : kids) args.push_back(&v);
      return it->second(args);
    };
    return rec(rec);
  }

  std::vector<S> operator()(const Diagram& d, std::span<const S> x0) const {
    if (x0.size() != dimension_) throw std::invalid_argument("evaluate_diagram: dimension mismatch");
    const std::vector<S> leaf(x0.begin(), x0.end());
    std::vector<std::vector<S>> values(d.order());
    for (std::size_t v = d.order(); v-- > 0;) {
      auto it = forms_.find(d.arity(static_cast<int>(v)));
      if (it == forms_.end()) {
        throw std::invalid_argument("evaluate_diagram: field has no component of degree " +
                                    std::to_string(d.arity(static_cast<int>(v))));
      }
      std::vector<const std::vector<S>*> args;
      for (int c : d.children(static_cast<int>(v))) args.push_back(c == Diagram::kOpen ? &leaf : &values[static_cast<std::size_t>(c)]);
      values[v] = it->second(args);
    }
    return values[0];
  }

 private:
  std::size_t dimension_;
  std::map<int, SymmetricForm<S>> forms_;
};

template <Scalar S>
std::vector<S> evaluate_diagram(const Diagram& d, const PolynomialVectorField<S>& field, std::span<const S> x0) {
  return DiagramEvaluator<S>(field)(d, x0);
}

}  // namespace flowtree
