#pragma once

// Random fields and points for property tests and the acceptance suite.

#include "flowtree/field.hpp"

#include <random>
#include <vector>

namespace flowtree {

/// Uniform rational p/q with |p| <= num_max, 1 <= q <= den_max.
template <class Rng>
Rational random_rational(Rng& rng, int num_max = 5, int den_max = 4) {
  std::uniform_int_distribution<int> num(-num_max, num_max);
  std::uniform_int_distribution<int> den(1, den_max);
  return Rational(num(rng), den(rng));
}

/// Random field with every monomial of the listed degrees present with
/// probability `density`. Coefficients are small rationals.
template <class Rng>
PolynomialVectorField<Rational> random_rational_field(std::size_t d, const std::vector<int>& degrees, Rng& rng,
                                                      double density = 1.0, int num_max = 5, int den_max = 4) {
  std::bernoulli_distribution keep(density);
  std::vector<PolyTerm<Rational>> terms;
  for (int s : degrees) {
    for (std::size_t i = 0; i < d; ++i) {
      for (const auto& m : monomials_of_degree(d, s)) {
        if (keep(rng)) terms.push_back({static_cast<int>(i), m, random_rational(rng, num_max, den_max)});
      }
    }
  }
  return {d, std::move(terms)};
}

template <class Rng>
PolynomialVectorField<Complex> random_real_field(std::size_t d, const std::vector<int>& degrees, Rng& rng,
                                                 double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<PolyTerm<Complex>> terms;
  for (int s : degrees) {
    for (std::size_t i = 0; i < d; ++i) {
      for (const auto& m : monomials_of_degree(d, s)) terms.push_back({static_cast<int>(i), m, Complex(u(rng), 0.0)});
    }
  }
  return {d, std::move(terms)};
}

template <class Rng>
std::vector<Complex> random_point(std::size_t d, Rng& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Complex> x;
  for (std::size_t i = 0; i < d; ++i) x.emplace_back(u(rng), u(rng));
  return x;
}

template <class Rng>
std::vector<Rational> random_rational_point(std::size_t d, Rng& rng, int num_max = 5, int den_max = 4) {
  std::vector<Rational> x;
  for (std::size_t i = 0; i < d; ++i) x.push_back(random_rational(rng, num_max, den_max));
  return x;
}

inline PolynomialVectorField<Complex> to_complex_field(const PolynomialVectorField<Rational>& f) {
  return convert_field<Complex>(f, [](const Rational& r) { return Complex(r.convert_to<double>(), 0.0); });
}

}  // namespace flowtree
