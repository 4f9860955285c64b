#include "flowtree/resonance.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace flowtree;

namespace {

using RField = PolynomialVectorField<Rational>;
using GField = PolynomialVectorField<GaussianRational>;

GField gfield(std::initializer_list<std::pair<int, std::vector<int>>> terms) {
  std::vector<PolyTerm<GaussianRational>> out;
  for (const auto& [target, e] : terms) out.push_back({target, Monomial(e), GaussianRational(1)});
  return {2, out};
}

std::vector<GaussianRational> imag_spectrum(int a, int b) {
  return {GaussianRational(Rational(0), Rational(a)), GaussianRational(Rational(0), Rational(b))};
}

}  // namespace

TEST(Relations, OneToTwo) {
  std::vector<Rational> spec{Rational(1), Rational(2)};
  auto rel = find_resonance_relations(std::span<const Rational>(spec), 3);
  ASSERT_EQ(rel.size(), 1u);
  EXPECT_EQ(rel[0].n, (std::vector<int>{2, 0}));
  EXPECT_EQ(rel[0].target, 1);
  EXPECT_FALSE(rel[0].approximate);
}

TEST(Relations, ImaginaryOneToThree) {
  auto spec = imag_spectrum(1, 3);
  auto rel = find_resonance_relations(std::span<const GaussianRational>(spec), 3);
  ASSERT_EQ(rel.size(), 1u);
  EXPECT_EQ(rel[0].n, (std::vector<int>{3, 0}));
  EXPECT_EQ(rel[0].target, 1);
}

TEST(Relations, IrrationalRatioEmpty) {
  std::vector<Complex> spec{1.0, std::sqrt(2.0)};
  EXPECT_TRUE(find_resonance_relations(std::span<const Complex>(spec), 10).empty());
  std::vector<Complex> near{1.0, 2.0};
  auto rel = find_resonance_relations(std::span<const Complex>(near), 3);
  ASSERT_EQ(rel.size(), 1u);
  EXPECT_TRUE(rel[0].approximate);
}

TEST(Relations, BruteForceAgreement) {
  std::vector<Rational> spec{Rational(2), Rational(-3), Rational(1)};
  auto rel = find_resonance_relations(std::span<const Rational>(spec), 5);
  std::size_t brute = 0;
  for (int a = 0; a <= 5; ++a) {
    for (int b = 0; a + b <= 5; ++b) {
      for (int c = 0; a + b + c <= 5; ++c) {
        if (a + b + c < 2) continue;
        const Rational dot = 2 * a - 3 * b + c;
        for (const auto& l : spec) brute += dot == l ? 1 : 0;
      }
    }
  }
  EXPECT_EQ(rel.size(), brute);
  for (const auto& r : rel) {
    Rational dot = 0;
    for (std::size_t j = 0; j < 3; ++j) dot += r.n[j] * spec[j];
    EXPECT_EQ(dot, spec[static_cast<std::size_t>(r.target)]);
  }
}

TEST(NecessaryCondition, SingleColumn) {
  RField f(2, {{1, Monomial({2, 0}), Rational(1)}});
  auto g = generator_matrix(f);
  ASSERT_EQ(g.columns.size(), 1u);
  EXPECT_EQ(g.columns[0], (std::vector<int>{2, -1}));
  auto v = necessary_condition(g, {2, 0}, 1);
  ASSERT_TRUE(v);
  EXPECT_EQ(*v, (std::vector<int>{1}));
}

TEST(NecessaryCondition, WrongSign) {
  RField f(2, {{0, Monomial({0, 2}), Rational(1)}});
  EXPECT_FALSE(necessary_condition(generator_matrix(f), {2, 0}, 1));
  EXPECT_FALSE(necessary_condition(generator_matrix(f), {3, 0}, 0));
}

TEST(NecessaryCondition, CatalogEntryBalance) {
  // y->xx + x->xx at ratio 3: relation n = (3, 0) -> y
  RField f(2, {{1, Monomial({2, 0}), Rational(1)}, {0, Monomial({2, 0}), Rational(1)}});
  auto v = necessary_condition(generator_matrix(f), {3, 0}, 1);
  ASSERT_TRUE(v);
  EXPECT_EQ(*v, (std::vector<int>{1, 1}));
}

TEST(ResonanceDiagrams, MinimalWitness) {
  RField f(2, {{0, Monomial({1, 0}), Rational(1)}, {1, Monomial({0, 1}), Rational(2)}, {1, Monomial({2, 0}), Rational(1)}});
  std::vector<Rational> spec{Rational(1), Rational(2)};
  auto res = find_resonance_diagrams(f, std::span<const Rational>(spec), 1);
  ASSERT_EQ(res.size(), 1u);
  ASSERT_TRUE(res[0].witness);
  EXPECT_EQ(res[0].witness->to_string(), "y<xx(x,x)");
  EXPECT_EQ(res[0].order_bound, 1);
}

TEST(ResonanceDiagrams, CatalogFieldHasWitnesses) {
  auto f = gfield({{1, {2, 0}}, {0, {2, 0}}});
  auto spec = imag_spectrum(1, 3);
  auto res = find_resonance_diagrams(f, std::span<const GaussianRational>(spec), 3);
  ASSERT_FALSE(res.empty());
  for (const auto& r : res) {
    EXPECT_TRUE(lambda_of(*r.witness, std::span<const GaussianRational>(spec)) == GaussianRational(0));
    // witness implies the balance condition
    EXPECT_TRUE(necessary_condition(generator_matrix(f), r.n, r.target));
  }
}

TEST(ResonanceDiagrams, LoneGeneratorHasNone) {
  auto f = gfield({{1, {2, 0}}});
  auto spec = imag_spectrum(1, 3);
  EXPECT_TRUE(find_resonance_diagrams(f, std::span<const GaussianRational>(spec), 4).empty());
}

TEST(Catalog, PrintedListsQuadratic) {
  for (int k : {3, 4}) {
    auto c = compare_catalog(k, 2);
    EXPECT_TRUE(c.same_matches) << k;
    EXPECT_FALSE(c.opposite_matches) << k;
  }
}

TEST(Catalog, CubicSmallCases) {
  auto k3 = appendix_catalog(3, 3);
  ASSERT_EQ(k3.entries.size(), 1u);
  EXPECT_EQ(k3.entries[0].generators, (std::set<std::string>{"y->xxx"}));
  EXPECT_TRUE(appendix_catalog(4, 3).entries.empty());
  EXPECT_TRUE(appendix_catalog(8, 3).entries.empty());
}

TEST(Catalog, AgreesWithSkeletonSearch) {
  // the count-vector search against plain enumeration over every generator subset
  const int max_order = 3;
  for (int k : {3, 4}) {
    const auto cat = appendix_catalog(k, 2, max_order, FrequencySign::same, false);
    const auto gens = catalog_generators(2);
    const auto spec = catalog_spectrum(k, FrequencySign::same);
    std::set<std::set<std::string>> brute;
    for (int n = 1; n <= max_order; ++n) {
      for (const auto& sk : enumerate_skeletons(gens, n)) {
        if (!(lambda_of(sk, std::span<const GaussianRational>(spec)) == GaussianRational(0))) continue;
        std::set<std::string> used;
        for (const auto& v : sk.vertices()) used.insert(term_label(gens.terms()[static_cast<std::size_t>(v.term)]));
        brute.insert(used);
      }
    }
    EXPECT_EQ(cat.sets(), brute) << k;
  }
}

TEST(Catalog, WitnessesSatisfyNecessaryCondition) {
  for (auto [k, degree] : std::vector<std::pair<int, int>>{{3, 2}, {4, 2}, {3, 3}, {5, 3}, {7, 3}}) {
    const auto spec = catalog_spectrum(k, FrequencySign::same);
    for (const auto& e : appendix_catalog(k, degree, 6, FrequencySign::same, false).entries) {
      std::vector<PolyTerm<GaussianRational>> terms;
      const auto gens = catalog_generators(degree);
      for (const auto& t : gens.terms()) {
        if (e.generators.count(term_label(t))) terms.push_back(t);
      }
      const GField f(2, terms);
      auto res = find_resonance_diagrams(f, std::span<const GaussianRational>(spec), e.min_order);
      ASSERT_FALSE(res.empty());
      for (const auto& r : res) EXPECT_TRUE(necessary_condition(generator_matrix(f), r.n, r.target));
    }
  }
}

TEST(Catalog, RejectsUnsupported) {
  EXPECT_THROW(appendix_catalog(2, 2), std::invalid_argument);
  EXPECT_THROW(appendix_catalog(3, 4), std::invalid_argument);
}

TEST(Irreducible, SingleVertexIsItself) {
  RField f(2, {{1, Monomial({2, 0}), Rational(1)}});
  std::vector<Rational> spec{Rational(1), Rational(2)};
  auto sk = single_vertex_skeleton(f, 0, {0, 0});
  auto parts = irreducible_decomposition(sk, std::span<const Rational>(spec));
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_EQ(parts[0], sk);
}

TEST(Irreducible, ContractionOfTwoCopies) {
  // x->xxy is resonant at lambda = (1, -1)
  RField f(2, {{0, Monomial({2, 1}), Rational(1)}});
  std::vector<Rational> spec{Rational(1), Rational(-1)};
  auto base = single_vertex_skeleton(f, 0, {0, 0, 1});
  for (int leaf : {0, 1}) {
    auto twice = graft(base, leaf, base);
    EXPECT_EQ(lambda_of(twice, std::span<const Rational>(spec)), Rational(0));
    auto parts = irreducible_decomposition(twice, std::span<const Rational>(spec));
    ASSERT_EQ(parts.size(), 2u);
    EXPECT_EQ(parts[0], base);
    EXPECT_EQ(parts[1], base);
  }
}

TEST(Irreducible, NonResonantRejected) {
  RField f(2, {{0, Monomial({2, 0}), Rational(1)}});
  std::vector<Rational> spec{Rational(1), Rational(2)};
  EXPECT_THROW(irreducible_decomposition(single_vertex_skeleton(f, 0, {0, 0}), std::span<const Rational>(spec)),
               std::invalid_argument);
}

TEST(ResonanceLine, Definition) {
  // chain root -> middle -> leaf vertex, lambdas accumulate downward
  RField f(1, {{0, Monomial({2}), Rational(1)}});
  std::vector<Rational> spec{Rational(3)};
  auto v = single_vertex_skeleton(f, 0, {0, 0});
  auto chain = graft(graft(v, 0, v), 0, v);
  std::span<const Rational> s(spec);
  const auto lams = subtree_lambdas(chain, s);  // 9, 6, 3
  EXPECT_EQ(resonance_line_multiplier(chain, 2, 2, s), Rational(-1) / lams[2]);
  EXPECT_EQ(resonance_line_multiplier(chain, 1, 0, s), -(Rational(1) / lams[1] + Rational(1) / lams[0]));
  EXPECT_EQ(resonance_line_multiplier(chain, 0, 2, s), resonance_line_multiplier(chain, 2, 0, s));
  auto cherry = graft(graft(v, 0, v), 2, v);
  EXPECT_THROW(resonance_line_multiplier(cherry, 1, 2, s), std::invalid_argument);
}

TEST(ResonanceLine, MatchesOrderedIntegral) {
  // outer vertex x->xy (root, target x), inner y->xx born resonant:
  // the ordered integral is e^{(lr+mu) t} (t + L)/mu + e^{lr t}/mu^2 with L = -1/mu
  std::vector<Complex> spec{{0.4, 0.3}, {0.8, 0.6}};  // lambda_y = 2 lambda_x
  PolynomialVectorField<Complex> f(2, {{0, Monomial({1, 1}), 1.0}, {1, Monomial({2, 0}), 1.0}});
  const auto outer = single_vertex_skeleton(f, 0, {0, 1});
  const auto inner = single_vertex_skeleton(f, 1, {0, 0});
  const auto d = graft(outer, 1, inner);
  std::span<const Complex> s(spec);
  const auto lams = subtree_lambdas(d, s);
  EXPECT_LT(std::abs(lams[1]), 1e-15);
  const Complex mu = lams[0];
  const Complex l = resonance_line_multiplier(d, 0, 0, s);
  const double t = 1.3;
  const Complex numeric = iterated_integral_quadrature(s, f.terms(), 2, t);
  const Complex closed = std::exp((spec[0] + mu) * t) * (t + l) / mu + std::exp(spec[0] * t) / (mu * mu);
  EXPECT_NEAR(std::abs(numeric - closed), 0.0, 1e-10);
}

TEST(VertexIntegral, Cases) {
  EXPECT_NEAR(std::abs(vertex_integral_tpower(0, 2.0, 0.5) - (std::exp(1.0) - 1.0) / 2.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(vertex_integral_tpower(1, 1.0, 1.0) - 1.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(vertex_integral_tpower(2, 0.0, 2.0) - 8.0 / 3.0), 0.0, 1e-14);
  for (int s = 0; s <= 5; ++s) {
    const Complex lam(-0.7, 1.9);
    auto q = integrate_1d([&](double x) { return std::pow(x, s) * std::exp(lam * x); }, 0.0, 1.6);
    EXPECT_NEAR(std::abs(vertex_integral_tpower(s, lam, 1.6) - q.value), 0.0, 1e-11) << s;
  }
}

TEST(Secular, OneToTwoModel) {
  const double a = 0.3, b = -0.2;
  PolynomialVectorField<Complex> f(2, {{0, Monomial({1, 0}), 1.0}, {1, Monomial({0, 1}), 2.0}, {1, Monomial({2, 0}), 1.0}});
  std::vector<Complex> spec{1.0, 2.0};
  ResonanceRelation rel;
  rel.n = {2, 0};
  rel.target = 1;
  auto fit = detect_secular_term(f, std::span<const Complex>(spec), {a, b}, rel);
  EXPECT_TRUE(fit.detected);
  EXPECT_EQ(fit.k, 1);
  EXPECT_NEAR(std::abs(fit.amplitude - a * a), 0.0, 1e-6);
  auto quiet = detect_secular_term(f, std::span<const Complex>(spec), {0.0, b}, rel);
  EXPECT_EQ(quiet.k, 0);
}

TEST(Secular, NonResonantSpectrum) {
  PolynomialVectorField<Complex> f(2, {{0, Monomial({1, 0}), 1.0}, {1, Monomial({0, 1}), 2.5}, {1, Monomial({2, 0}), 1.0}});
  std::vector<Complex> spec{1.0, 2.5};
  ResonanceRelation rel;
  rel.n = {2, 0};
  rel.target = 1;
  auto fit = detect_secular_term(f, std::span<const Complex>(spec), {0.3, -0.2}, rel);
  EXPECT_EQ(fit.k, 0);
}
