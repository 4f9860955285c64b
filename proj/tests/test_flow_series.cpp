#include "flowtree/flow_series.hpp"
#include "flowtree/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace flowtree;

namespace {

PolynomialVectorField<Rational> one_d(const Rational& a, int s) { return {1, {{0, Monomial({s}), a}}}; }

// Taylor coefficients of the ODE solution by the recursion
// (n+1) a_{n+1} = [f(sum a_k t^k)]_n, using truncated power series in t.
std::vector<std::vector<Rational>> taylor_oracle(const PolynomialVectorField<Rational>& f,
                                                 const std::vector<Rational>& x0, int order) {
  const std::size_t d = f.dimension();
  std::vector<std::vector<Rational>> a{x0};
  auto mul = [&](const std::vector<Rational>& p, const std::vector<Rational>& q) {
    std::vector<Rational> r(p.size(), Rational(0));
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; i + j < p.size(); ++j) r[i + j] += p[i] * q[j];
    }
    return r;
  };
  for (int n = 0; n < order; ++n) {
    const std::size_t len = static_cast<std::size_t>(n) + 1;
    std::vector<std::vector<Rational>> comp(d, std::vector<Rational>(len, Rational(0)));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t k = 0; k < len; ++k) comp[i][k] = a[k][i];
    }
    std::vector<Rational> next(d, Rational(0));
    for (const auto& t : f.terms()) {
      std::vector<Rational> prod(len, Rational(0));
      prod[0] = t.coeff;
      for (int i : t.monomial.indices()) prod = mul(prod, comp[static_cast<std::size_t>(i)]);
      next[static_cast<std::size_t>(t.target)] += prod[static_cast<std::size_t>(n)];
    }
    for (auto& v : next) v /= n + 1;
    a.push_back(next);
  }
  return a;
}

}  // namespace

TEST(Series, OrderZeroIsIdentity) {
  auto s = build_series(one_d(Rational(3), 2), 0);
  std::vector<Rational> x{Rational(1, 7)};
  EXPECT_EQ(evaluate_series(s, std::span<const Rational>(x), Rational(5)), x);
  EXPECT_EQ(s.size(), 0u);
}

TEST(Series, OneDimensionalQuadraticCoefficients) {
  const Rational alpha(2, 3), x0(-3, 5);
  auto s = build_series(one_d(alpha, 2), 3);
  std::map<Rational, int> third;
  for (const auto& t : s.terms(3)) third[t.coefficient] += 1;
  EXPECT_EQ(third, (std::map<Rational, int>{{Rational(1, 6), 4}, {Rational(1, 3), 1}}));
  ASSERT_EQ(s.terms(2).size(), 2u);
  std::vector<Rational> x{x0};
  auto v = s.order_values(std::span<const Rational>(x));
  Rational expect = x0;
  for (int n = 0; n <= 3; ++n) {
    EXPECT_EQ(v[static_cast<std::size_t>(n)][0], expect);
    expect *= alpha * x0;
  }
}

TEST(Series, LinearFieldIsMatrixExponentialPartialSum) {
  PolynomialVectorField<Rational> f(2, {{0, Monomial({1, 0}), Rational(1, 2)},
                                        {0, Monomial({0, 1}), Rational(-1)},
                                        {1, Monomial({1, 0}), Rational(2)},
                                        {1, Monomial({0, 1}), Rational(1, 3)}});
  const auto a = f.linear_matrix();
  std::vector<Rational> x{Rational(1), Rational(-2, 3)};
  const Rational t(3, 4);
  const int order = 6;
  std::vector<Rational> term = x, sum = x;
  for (int j = 1; j <= order; ++j) {
    std::vector<Rational> next(2, Rational(0));
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t c = 0; c < 2; ++c) next[r] += a[r][c] * term[c];
    }
    for (auto& v : next) v = v * t / j;
    term = next;
    for (std::size_t r = 0; r < 2; ++r) sum[r] += term[r];
  }
  auto s = build_series(f, order);
  for (int n = 1; n <= order; ++n) EXPECT_EQ(s.terms(n).size(), 1u);
  EXPECT_EQ(evaluate_series(s, std::span<const Rational>(x), t), sum);
}

TEST(Series, MatchesTaylorRecursion) {
  std::mt19937_64 rng(41);
  for (int rep = 0; rep < 4; ++rep) {
    auto f = random_rational_field(2, {0, 1, 2, 3}, rng, 0.5);
    auto x = random_rational_point(2, rng);
    const int order = 4;
    auto v = build_series(f, order).order_values(std::span<const Rational>(x));
    auto oracle = taylor_oracle(f, x, order);
    for (int n = 0; n <= order; ++n) EXPECT_EQ(v[static_cast<std::size_t>(n)], oracle[static_cast<std::size_t>(n)]) << n;
  }
}

TEST(Series, QuadraticOneDimensionalValue) {
  PolynomialVectorField<Complex> f(1, {{0, Monomial({2}), Complex(1.0)}});
  auto s = build_series(f, 12);
  std::vector<Complex> x{Complex(0.1)};
  auto v = evaluate_series(s, std::span<const Complex>(x), Complex(1.0));
  EXPECT_LT(std::abs(v[0] - 1.0 / 9.0), 1e-8);
}

TEST(Series, DerivativeAtZeroIsField) {
  std::mt19937_64 rng(42);
  auto f = random_rational_field(2, {0, 1, 2}, rng);
  auto x = random_rational_point(2, rng);
  auto s = build_series(f, 3);
  EXPECT_EQ(evaluate_series_derivative(s, std::span<const Rational>(x), Rational(0)), evaluate(f, x));
  EXPECT_EQ(evaluate_series(s, std::span<const Rational>(x), Rational(0)), x);
}

TEST(Series, SemigroupDefectScalesWithOrder) {
  std::mt19937_64 rng(43);
  auto f = random_real_field(2, {2}, rng);
  const int order = 4;
  auto s = build_series(f, order);
  std::vector<Complex> x{Complex(0.3), Complex(-0.2)};
  auto defect = [&](double t) {
    auto whole = evaluate_series(s, std::span<const Complex>(x), Complex(2 * t));
    auto half = evaluate_series(s, std::span<const Complex>(x), Complex(t));
    auto twice = evaluate_series(s, std::span<const Complex>(half), Complex(t));
    return std::hypot(std::abs(whole[0] - twice[0]), std::abs(whole[1] - twice[1]));
  };
  const double r = std::log2(defect(0.2) / defect(0.1));
  EXPECT_GE(r, order + 0.5);
}

TEST(Series, ErrorAgainstRk4HasExpectedSlope) {
  std::mt19937_64 rng(44);
  auto f = random_real_field(2, {2}, rng);
  std::vector<Complex> x{Complex(0.6), Complex(-0.5)};
  const int order = 3;
  auto s = build_series(f, order);
  auto vals = s.order_values(std::span<const Complex>(x));
  auto report = radius_estimate(f, x);
  const double t0 = 0.5 * *report.time_bound;
  std::vector<double> lt, le;
  for (double t = t0 / 8; t <= t0 * 1.0001; t *= std::sqrt(2.0)) {
    auto series = sum_orders(vals, Complex(t));
    auto ref = rk4_solve(f, x, t, t / 2000);
    lt.push_back(std::log(t));
    le.push_back(std::log(std::hypot(std::abs(series[0] - ref[0]), std::abs(series[1] - ref[1]))));
  }
  double mt = 0, me = 0;
  for (std::size_t k = 0; k < lt.size(); ++k) {
    mt += lt[k];
    me += le[k];
  }
  mt /= static_cast<double>(lt.size());
  me /= static_cast<double>(lt.size());
  double num = 0, den = 0;
  for (std::size_t k = 0; k < lt.size(); ++k) {
    num += (lt[k] - mt) * (le[k] - me);
    den += (lt[k] - mt) * (lt[k] - mt);
  }
  EXPECT_GE(num / den, order + 0.5);
}

TEST(ScalarExact, QuadraticClosedForm) {
  for (double t : {0.0, 0.3, 0.9}) {
    EXPECT_NEAR(std::abs(scalar_exact(2.0, 2, 0.4, t) - 0.4 / (1 - 2.0 * 0.4 * t)), 0.0, 1e-14);
  }
  EXPECT_EQ(scalar_exact(1.5, 3, 0.7, 0.0), Complex(0.7));
  EXPECT_THROW(scalar_exact(1.0, 2, 1.0, 1.0), std::domain_error);
  EXPECT_THROW(scalar_exact(1.0, 2, 1.0, 2.0), std::domain_error);
}

TEST(ScalarExact, SatisfiesOde) {
  const double h = 1e-5;
  for (int s : {2, 3, 4}) {
    for (double t : {0.0, 0.1, 0.2}) {
      const Complex alpha(1.3), x0(0.8);
      auto d = (scalar_exact(alpha, s, x0, t + h) - scalar_exact(alpha, s, x0, t - h)) / (2 * h);
      EXPECT_NEAR(std::abs(d - alpha * std::pow(scalar_exact(alpha, s, x0, t), s)), 0.0, 1e-7) << s << " " << t;
    }
  }
}

TEST(SumCoefficients, KnownValues) {
  for (int k = 0; k <= 8; ++k) EXPECT_EQ(sum_coefficients(2, k).by_diagrams, Rational(1));
  EXPECT_EQ(sum_coefficients(3, 1).by_diagrams, Rational(1));
  EXPECT_EQ(sum_coefficients(3, 2).by_diagrams, Rational(3, 2));
  EXPECT_EQ(enumerate_diagrams({3}, 2).size(), 3u);
}

TEST(SumCoefficients, TwoPathsAgree) {
  for (int s : {2, 3, 4}) {
    for (int k = 0; k <= 7; ++k) {
      auto c = sum_coefficients(s, k);
      EXPECT_EQ(c.by_diagrams, c.by_closed_form) << s << " " << k;
    }
  }
}

TEST(SumCoefficients, PrintedFormulaDeviates) {
  for (int k = 1; k <= 7; ++k) {
    auto c = sum_coefficients(2, k);
    ASSERT_TRUE(c.as_printed.has_value());
    EXPECT_EQ(*c.as_printed, Rational(k % 2 == 0 ? k : -k));
  }
  EXPECT_FALSE(sum_coefficients(2, 0).as_printed.has_value());
}

TEST(Radius, OneDimensionalBlowup) {
  auto q = radius_estimate(1.0, 2, 1.0);
  ASSERT_TRUE(q.exact_blowup && q.time_bound && q.empirical_blowup);
  EXPECT_DOUBLE_EQ(*q.exact_blowup, 1.0);
  EXPECT_DOUBLE_EQ(q.corrected_bound, 1.0);
  EXPECT_DOUBLE_EQ(q.printed_bound, 1.0);
  EXPECT_NEAR(*q.empirical_blowup, 1.0, 1e-3);
  auto c = radius_estimate(1.0, 3, 1.0);
  EXPECT_DOUBLE_EQ(*c.exact_blowup, 0.5);
  EXPECT_DOUBLE_EQ(*c.time_bound, 0.5);
  EXPECT_DOUBLE_EQ(c.printed_bound, 2.0);
  EXPECT_NEAR(*closed_form_blowup(1.0, 3, 1.0, 2.0), 0.5, 1e-12);
}

TEST(Radius, ScalesWithCoefficient) {
  auto a = radius_estimate(1.5, 2, 0.5);
  auto b = radius_estimate(3.0, 2, 0.5);
  EXPECT_DOUBLE_EQ(a.corrected_bound, 2 * b.corrected_bound);
  EXPECT_THROW(radius_estimate(PolynomialVectorField<Complex>(1, {{0, Monomial({1}), Complex(1.0)}})),
               std::invalid_argument);
}

TEST(Discrete, HomogeneousTwoSteps) {
  auto e = discrete_expansion(one_d(Rational(1), 2), 2);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].diagram.to_string(), "T2(T2(x,x),T2(x,x))");
  EXPECT_EQ(e[0].multiplicity, 1u);
}

TEST(Discrete, LinearChain) {
  auto e = discrete_expansion(PolynomialVectorField<Rational>(2, {{0, Monomial({0, 1}), Rational(2)}}), 4);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].diagram.to_string(), "T1(T1(T1(T1(x))))");
}

TEST(Discrete, Affine) {
  PolynomialVectorField<Rational> f(1, {{0, Monomial({0}), Rational(3)}, {0, Monomial({1}), Rational(-2)}});
  auto e = discrete_expansion(f, 2);
  std::vector<std::string> names;
  for (const auto& t : e) names.push_back(t.diagram.to_string());
  EXPECT_EQ(names, (std::vector<std::string>{"T0", "T1(T0)", "T1(T1(x))"}));
  std::vector<Rational> x{Rational(5, 7)};
  EXPECT_EQ(evaluate_expansion(e, f, std::span<const Rational>(x)), iterate_map(f, std::span<const Rational>(x), 2));
}

TEST(Discrete, IterateSquare) {
  std::vector<Rational> x{Rational(2)};
  EXPECT_EQ(iterate_map(one_d(Rational(1), 2), std::span<const Rational>(x), 3)[0], Rational(256));
  EXPECT_EQ(iterate_map(one_d(Rational(1), 2), std::span<const Rational>(x), 0)[0], Rational(2));
}

TEST(Discrete, RandomMapsMatchIteration) {
  std::mt19937_64 rng(45);
  for (int rep = 0; rep < 20; ++rep) {
    auto f = random_rational_field(2, {0, 1, 2}, rng, 0.4, 3, 2);
    if (f.empty()) continue;
    auto x = random_rational_point(2, rng, 3, 2);
    const int n = 1 + rep % 3;
    EXPECT_EQ(evaluate_expansion(discrete_expansion(f, n), f, std::span<const Rational>(x)),
              iterate_map(f, std::span<const Rational>(x), n));
  }
}

TEST(Csv, Layout) {
  std::ostringstream os;
  std::vector<double> t{0.0, 0.5}, err{0.0, 1e-9};
  std::vector<std::vector<Complex>> st{{Complex(1, 2)}, {Complex(3, -4)}};
  write_trajectory_csv(os, t, st, &err);
  EXPECT_EQ(os.str(), "t,x0_re,x0_im,error\n0,1,2,0\n0.5,3,-4,1.0000000000000001e-09\n");
}
