#include "flowtree/diagram.hpp"
#include "flowtree/random.hpp"
#include "flowtree/skeleton.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace flowtree;

namespace {

BigInt catalan(int n) {
  BigInt c = 1;
  for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

// every symbol string over {-1,0,1,2} of length L that encodes a tree
std::set<std::vector<int>> brute_codes(const std::vector<int>& arities, int vertices) {
  std::set<std::vector<int>> out;
  int max_len = 1;
  for (int a : arities) max_len = std::max(max_len, 1 + vertices * a);
  std::vector<int> alphabet{-1};
  alphabet.insert(alphabet.end(), arities.begin(), arities.end());
  for (int len = 1; len <= max_len; ++len) {
    std::vector<int> code(static_cast<std::size_t>(len), 0);
    std::vector<std::size_t> idx(static_cast<std::size_t>(len), 0);
    while (true) {
      for (int k = 0; k < len; ++k) code[static_cast<std::size_t>(k)] = alphabet[idx[static_cast<std::size_t>(k)]];
      int need = 1, verts = 0;
      bool ok = code[0] >= 0;
      for (int k = 0; k < len && ok; ++k) {
        if (need == 0) ok = false;
        --need;
        if (code[static_cast<std::size_t>(k)] >= 0) {
          need += code[static_cast<std::size_t>(k)];
          ++verts;
        }
      }
      if (ok && need == 0 && verts == vertices) out.insert(code);
      int k = len - 1;
      while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == alphabet.size()) idx[static_cast<std::size_t>(k--)] = 0;
      if (k < 0) break;
    }
  }
  return out;
}

PolynomialVectorField<Rational> field_of(std::size_t d, std::vector<PolyTerm<Rational>> terms) {
  return {d, std::move(terms)};
}

}  // namespace

TEST(Enumerate, SingleFork) {
  auto ds = enumerate_diagrams({2}, 1);
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds[0].to_string(), "T2(x,x)");
}

TEST(Enumerate, BinaryCountsAreCatalan) {
  EXPECT_EQ(enumerate_diagrams({2}, 3).size(), 5u);
  for (int n = 1; n <= 10; ++n) EXPECT_EQ(BigInt(enumerate_diagrams({2}, n).size()), catalan(n)) << n;
}

TEST(Enumerate, MatchesBruteForce) {
  for (auto arities : std::vector<std::vector<int>>{{0, 1, 2}, {1, 3}, {0, 2}}) {
    for (int n = 1; n <= 3; ++n) {
      auto ds = enumerate_diagrams(arities, n);
      std::set<std::vector<int>> got;
      for (const auto& d : ds) got.insert(d.code());
      EXPECT_EQ(got.size(), ds.size());
      EXPECT_EQ(got, brute_codes(arities, n));
      EXPECT_TRUE(std::is_sorted(ds.begin(), ds.end()));
    }
  }
}

TEST(Enumerate, ConstantsOnly) {
  EXPECT_EQ(enumerate_diagrams({0}, 1).size(), 1u);
  EXPECT_TRUE(enumerate_diagrams({0}, 2).empty());
  EXPECT_THROW(enumerate_diagrams({2}, 0), std::invalid_argument);
}

TEST(Diagram, OpenEdgeCount) {
  for (const auto& d : enumerate_diagrams({0, 1, 2, 3}, 4)) {
    int expected = 1;
    for (std::size_t v = 0; v < d.order(); ++v) expected += d.arity(static_cast<int>(v)) - 1;
    EXPECT_EQ(static_cast<int>(d.open_edges()), expected);
  }
}

TEST(Diagram, TextRoundTrip) {
  for (const auto& d : enumerate_diagrams({0, 1, 2, 3}, 4)) {
    EXPECT_EQ(Diagram::parse(d.to_string()), d);
    EXPECT_EQ(Diagram::parse(d.to_string()).to_string(), d.to_string());
  }
  EXPECT_EQ(Diagram::parse("T2(T2(x,x),x)").code(), (std::vector<int>{2, 2, -1, -1, -1}));
  EXPECT_EQ(Diagram::parse("T1(T0)").to_string(), "T1(T0)");
}

TEST(Diagram, ParseErrors) {
  for (const char* bad : {"", "x", "T2(x)", "T2(x,x", "T2(x,x))", "T(x)", "T1(y)", "T01(x)", "T2(x;x)"}) {
    EXPECT_THROW(Diagram::parse(bad), std::invalid_argument) << bad;
  }
}

TEST(TreeFactorial, HandCases) {
  EXPECT_EQ(tree_factorial(Diagram::single(2)), 1u);
  EXPECT_EQ(tree_factorial(Diagram::parse("T2(T2(T2(x,x),x),x)")), 6u);
  EXPECT_EQ(tree_factorial(Diagram::parse("T2(T2(x,x),T2(x,x))")), 3u);
  EXPECT_EQ(inverse_tree_factorial(Diagram::parse("T2(T2(x,x),T2(x,x))")), Rational(1, 3));
}

TEST(TreeFactorial, Recurrence) {
  for (const auto& d : enumerate_diagrams({0, 1, 2}, 5)) {
    std::uint64_t prod = d.order();
    for (int c : d.children(0)) {
      if (c != Diagram::kOpen) prod *= tree_factorial(d.subtree(c));
    }
    EXPECT_EQ(tree_factorial(d), prod);
  }
}

TEST(TreeFactorial, BinarySumIsOne) {
  for (int n = 1; n <= 8; ++n) {
    Rational sum = 0;
    for (const auto& d : enumerate_diagrams({2}, n)) sum += inverse_tree_factorial(d);
    EXPECT_EQ(sum, Rational(1)) << n;
  }
}

TEST(Subdiagrams, Orders) {
  auto orders = [](const Diagram& d) {
    std::vector<std::size_t> o;
    for (const auto& s : subdiagrams(d)) o.push_back(s.order());
    return o;
  };
  EXPECT_EQ(orders(Diagram::single(3)), (std::vector<std::size_t>{1}));
  EXPECT_EQ(orders(Diagram::parse("T2(T2(T2(x,x),x),x)")), (std::vector<std::size_t>{3, 2, 1}));
  EXPECT_EQ(orders(Diagram::parse("T2(T2(x,x),T2(x,x))")), (std::vector<std::size_t>{3, 1, 1}));
  EXPECT_EQ(subdiagrams(Diagram::single(2))[0], Diagram::single(2));
}

TEST(Partitions, Counts) {
  auto single = partitions(Diagram::single(2));
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].pieces.size(), 1u);
  auto chain2 = partitions(Diagram::parse("T2(T2(x,x),x)"));
  ASSERT_EQ(chain2.size(), 2u);
  EXPECT_EQ(chain2[0].pieces.size(), 1u);
  ASSERT_EQ(chain2[1].pieces.size(), 2u);
  EXPECT_EQ(chain2[1].pieces[0].diagram, Diagram::single(2));
  EXPECT_EQ(chain2[1].pieces[1].diagram, Diagram::single(2));
  EXPECT_EQ(partitions(Diagram::parse("T2(T2(T2(x,x),x),x)")).size(), 4u);
}

TEST(Partitions, PiecesCoverVertices) {
  for (const auto& d : enumerate_diagrams({1, 2}, 4)) {
    for (const auto& p : partitions(d)) {
      EXPECT_EQ(p.pieces.size(), p.cut.size() + 1);
      std::size_t total = 0;
      std::set<int> seen;
      for (const auto& piece : p.pieces) {
        total += piece.diagram.order();
        seen.insert(piece.vertices.begin(), piece.vertices.end());
      }
      EXPECT_EQ(total, d.order());
      EXPECT_EQ(seen.size(), d.order());
    }
  }
}

TEST(EvaluateDiagram, SingleVertexIsComponent) {
  std::mt19937_64 rng(31);
  auto f = random_rational_field(2, {2, 3}, rng);
  auto x = random_rational_point(2, rng);
  EXPECT_EQ(evaluate_diagram(Diagram::single(3), f, std::span<const Rational>(x)), evaluate(f.component(3), x));
}

TEST(EvaluateDiagram, OneDimensionalChain) {
  const Rational a(3, 2), x0(2, 5);
  PolynomialVectorField<Rational> f(1, {{0, Monomial({2}), a}});
  std::vector<Rational> x{x0};
  auto v = evaluate_diagram(Diagram::parse("T2(T2(x,x),x)"), f, std::span<const Rational>(x));
  EXPECT_EQ(v[0], a * a * x0 * x0 * x0);
}

TEST(EvaluateDiagram, Homogeneity) {
  std::mt19937_64 rng(32);
  auto f = random_rational_field(2, {1, 2, 3}, rng);
  auto x = random_rational_point(2, rng);
  const Rational c(-3, 2);
  std::vector<Rational> cx{c * x[0], c * x[1]};
  for (const auto& d : enumerate_diagrams({1, 2, 3}, 3)) {
    auto a = evaluate_diagram(d, f, std::span<const Rational>(x));
    auto b = evaluate_diagram(d, f, std::span<const Rational>(cx));
    Rational scale = 1;
    for (std::size_t k = 0; k < d.open_edges(); ++k) scale *= c;
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(b[i], scale * a[i]);
  }
}

TEST(EvaluateDiagram, LabelMismatch) {
  PolynomialVectorField<Rational> f(1, {{0, Monomial({2}), Rational(1)}});
  std::vector<Rational> x{Rational(1)};
  EXPECT_THROW(evaluate_diagram(Diagram::single(3), f, std::span<const Rational>(x)), std::invalid_argument);
}

TEST(Skeletons, InconsistentIndicesGiveNothing) {
  auto f = field_of(2, {{1, Monomial({2, 0}), Rational(1)}});
  EXPECT_TRUE(enumerate_skeletons(f, 2).empty());
  EXPECT_EQ(enumerate_skeletons(f, 1).size(), 1u);
}

TEST(Skeletons, TwoTermContraction) {
  auto f = field_of(2, {{1, Monomial({2, 0}), Rational(1)}, {0, Monomial({2, 0}), Rational(1)}});
  auto all = enumerate_skeletons(f, 2);
  std::vector<std::string> rooted_y;
  for (const auto& s : all) {
    if (s.target() == 1) rooted_y.push_back(s.to_string());
  }
  EXPECT_EQ(rooted_y, (std::vector<std::string>{"y<xx(x,x<xx(x,x))", "y<xx(x<xx(x,x),x)"}));
  // the other two are x->xx fed into itself
  EXPECT_EQ(all.size(), 4u);
}

TEST(Skeletons, OneDimensionalCountEqualsDiagramCount) {
  auto f = field_of(1, {{0, Monomial({2}), Rational(1)}, {0, Monomial({3}), Rational(2)}});
  for (int n = 1; n <= 5; ++n) EXPECT_EQ(enumerate_skeletons(f, n).size(), enumerate_diagrams({2, 3}, n).size());
}

TEST(Skeletons, SumOverShapeEqualsDiagramValue) {
  std::mt19937_64 rng(33);
  auto f = random_rational_field(2, {1, 2}, rng, 0.7);
  auto x = random_rational_point(2, rng);
  for (int n = 1; n <= 3; ++n) {
    std::map<Diagram, std::vector<Rational>> sums;
    for (const auto& sk : enumerate_skeletons(f, n)) {
      auto& v = sums.try_emplace(sk.shape(), std::vector<Rational>(2, Rational(0))).first->second;
      v[static_cast<std::size_t>(sk.target())] += skeleton_value(sk, f, std::span<const Rational>(x));
    }
    for (const auto& d : enumerate_diagrams(f.degrees(), n)) {
      auto expect = evaluate_diagram(d, f, std::span<const Rational>(x));
      auto it = sums.find(d);
      std::vector<Rational> got = it == sums.end() ? std::vector<Rational>(2, Rational(0)) : it->second;
      EXPECT_EQ(got, expect) << d.to_string();
    }
  }
}

TEST(Lambda, TermValue) {
  auto f = field_of(2, {{1, Monomial({2, 0}), Rational(1)}, {0, Monomial({1, 0}), Rational(1)}});
  std::vector<Rational> spec{Rational(3, 7), Rational(-2)};
  for (const auto& t : f.terms()) {
    const Rational expect = t.degree() == 2 ? Rational(2 * spec[0] - spec[1]) : Rational(0);
    EXPECT_EQ(lambda_of(t, std::span<const Rational>(spec)), expect);
  }
}

TEST(Lambda, AdditiveUnderContraction) {
  std::mt19937_64 rng(34);
  auto f = random_rational_field(2, {2, 3}, rng);
  std::vector<Rational> spec = random_rational_point(2, rng);
  std::vector<SkeletonDiagram> pool;
  for (int n = 1; n <= 2; ++n) {
    auto s = enumerate_skeletons(f, n);
    pool.insert(pool.end(), s.begin(), s.end());
  }
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  int checked = 0;
  while (checked < 100) {
    const auto& p = pool[pick(rng)];
    const auto& q = pool[pick(rng)];
    auto idx = p.open_indices();
    std::vector<int> ok;
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] == q.target()) ok.push_back(static_cast<int>(k));
    }
    if (ok.empty()) continue;
    auto pq = graft(p, ok[static_cast<std::size_t>(checked) % ok.size()], q);
    std::span<const Rational> sp(spec);
    EXPECT_EQ(lambda_of(pq, sp), lambda_of(p, sp) + lambda_of(q, sp));
    EXPECT_EQ(pq.order(), p.order() + q.order());
    ++checked;
  }
}

TEST(Lambda, SubtreeValuesMatchDefinition) {
  std::mt19937_64 rng(35);
  auto f = random_rational_field(2, {1, 2}, rng, 0.5);
  std::vector<Rational> spec = random_rational_point(2, rng);
  std::span<const Rational> sp(spec);
  for (const auto& sk : enumerate_skeletons(f, 3)) {
    auto lams = subtree_lambdas(sk, sp);
    for (std::size_t v = 0; v < sk.order(); ++v) EXPECT_EQ(lams[v], lambda_of(sk.subtree(static_cast<int>(v)), sp));
  }
}
