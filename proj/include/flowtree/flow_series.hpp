#pragma once

// The flow as a sum over diagrams: x(t) = sum_D t^|D| / D! * D(x0).
// Also the one-dimensional closed form used as an oracle, coefficient sums,
// radius estimates and the diagram expansion of iterated maps.

#include "flowtree/diagram.hpp"
#include "flowtree/numerics.hpp"

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace flowtree {

struct SeriesTerm {
  std::vector<int> code;  // preorder diagram code
  Rational coefficient;   // 1 / D!

  Diagram diagram() const { return Diagram(code); }
};

template <Scalar S>
class EvolutionSeries {
 public:
  EvolutionSeries(PolynomialVectorField<S> field, int order) : field_(std::move(field)), order_(order) {
    if (order < 0) throw std::invalid_argument("build_series: order must be >= 0");
    const auto arities = field_.degrees();
    terms_.resize(static_cast<std::size_t>(order) + 1);
    if (arities.empty()) return;
    for (int n = 1; n <= order; ++n) {
      for (auto& code : enumerate_diagram_codes(arities, n)) {
        Rational c = Rational(1) / Rational(tree_factorial(code));
        terms_[static_cast<std::size_t>(n)].push_back({std::move(code), std::move(c)});
      }
    }
  }

  const PolynomialVectorField<S>& field() const { return field_; }
  int order() const { return order_; }
  /// Diagrams of order n (n = 0 is the bare initial point and has none).
  const std::vector<SeriesTerm>& terms(int n) const { return terms_.at(static_cast<std::size_t>(n)); }

  std::size_t size() const {
    std::size_t total = 0;
    for (const auto& t : terms_) total += t.size();
    return total;
  }

  /// V_n = sum_{|D|=n} D(x0)/D!, V_0 = x0. The flow is sum_n t^n V_n.
  std::vector<std::vector<S>> order_values(std::span<const S> x0) const {
    if (x0.size() != field_.dimension()) throw std::invalid_argument("evaluate_series: dimension mismatch");
    std::vector<std::vector<S>> out;
    out.emplace_back(x0.begin(), x0.end());
    if (order_ == 0) return out;
    DiagramEvaluator<S> eval(field_);
    for (int n = 1; n <= order_; ++n) {
      std::vector<S> acc(field_.dimension(), S(0));
      for (const auto& term : terms_[static_cast<std::size_t>(n)]) {
        const S c = scalar_traits<S>::from_rational(term.coefficient);
        auto v = eval.evaluate_code(term.code, x0);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = acc[i] + c * v[i];
      }
      out.push_back(std::move(acc));
    }
    return out;
  }

 private:
  PolynomialVectorField<S> field_;
  int order_;
  std::vector<std::vector<SeriesTerm>> terms_;
};

template <Scalar S>
EvolutionSeries<S> build_series(const PolynomialVectorField<S>& field, int order) {
  return EvolutionSeries<S>(field, order);
}

/// sum_n t^n V_n by Horner's rule.
template <Scalar S>
std::vector<S> sum_orders(const std::vector<std::vector<S>>& values, const S& t) {
  std::vector<S> out = values.back();
  for (std::size_t n = values.size() - 1; n-- > 0;) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * t + values[n][i];
  }
  return out;
}

/// d/dt of sum_n t^n V_n.
template <Scalar S>
std::vector<S> sum_orders_derivative(const std::vector<std::vector<S>>& values, const S& t) {
  std::vector<S> out(values.front().size(), S(0));
  for (std::size_t n = values.size(); n-- > 1;) {
    const S k = from_int<S>(static_cast<long long>(n));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] * t + k * values[n][i];
  }
  return out;
}

template <Scalar S>
std::vector<S> evaluate_series(const EvolutionSeries<S>& series, std::span<const S> x0, const S& t) {
  return sum_orders(series.order_values(x0), t);
}

template <Scalar S>
std::vector<S> evaluate_series_derivative(const EvolutionSeries<S>& series, std::span<const S> x0, const S& t) {
  return sum_orders_derivative(series.order_values(x0), t);
}

// ---- one-dimensional closed form ----

/// Solution of x' = alpha x^s: x0 (1 - (s-1) alpha x0^(s-1) t)^(-1/(s-1)),
/// principal branch. Throws at or past the real blow-up time.
inline Complex scalar_exact(Complex alpha, int s, Complex x0, double t) {
  if (s < 2) throw std::invalid_argument("scalar_exact: s must be >= 2");
  const Complex base = 1.0 - static_cast<double>(s - 1) * alpha * std::pow(x0, s - 1) * t;
  if (std::abs(base.imag()) <= 1e-300 && base.real() <= 0.0) {
    throw std::domain_error("scalar_exact: at or beyond blow-up time");
  }
  return x0 * std::pow(base, -1.0 / static_cast<double>(s - 1));
}

/// First time at which the closed form ceases to exist or exceeds
/// factor*|x0|, found by bisection on [0, t_max]. Empty if it never does.
inline std::optional<double> closed_form_blowup(Complex alpha, int s, Complex x0, double t_max, double factor = 1e12) {
  auto blown = [&](double t) {
    try {
      return std::abs(scalar_exact(alpha, s, x0, t)) > factor * std::abs(x0);
    } catch (const std::domain_error&) {
      return true;
    }
  };
  if (!blown(t_max)) return std::nullopt;
  double lo = 0.0, hi = t_max;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (blown(mid) ? hi : lo) = mid;
  }
  return hi;
}

// ---- coefficient sums ----

struct CoefficientSum {
  int s = 0;
  int k = 0;
  Rational by_diagrams;                // sum over planar diagrams of 1/D!
  Rational by_closed_form;             // k-th Taylor coefficient of the closed form
  std::optional<Rational> as_printed;  // (1-s)^-k Gamma(1/(s-1)+k) / (Gamma(k) Gamma(1/(s-1)))
};

/// k-th Taylor coefficient of (1 - (s-1) t)^(-1/(s-1)): prod_{p<k} (1 + p(s-1)) / k!.
inline Rational closed_form_coefficient(int s, int k) {
  Rational c = 1;
  for (int p = 0; p < k; ++p) c = c * Rational(1 + p * (s - 1)) / Rational(p + 1);
  return c;
}

inline CoefficientSum sum_coefficients(int s, int k) {
  if (s < 2 || k < 0) throw std::invalid_argument("sum_coefficients: need s >= 2, k >= 0");
  CoefficientSum out;
  out.s = s;
  out.k = k;
  if (k == 0) {
    out.by_diagrams = 1;
  } else {
    for (const auto& code : enumerate_diagram_codes({s}, k)) out.by_diagrams += Rational(1) / Rational(tree_factorial(code));
  }
  out.by_closed_form = closed_form_coefficient(s, k);
  if (k >= 1) {
    // Gamma(a+k)/Gamma(a) = prod_{p<k} (a+p), a = 1/(s-1)
    const Rational a(1, s - 1);
    Rational num = 1;
    for (int p = 0; p < k; ++p) num *= a + p;
    Rational den = 1;
    for (int p = 1; p < k; ++p) den *= p;
    for (int p = 0; p < k; ++p) den *= 1 - s;
    out.as_printed = num / den;
  }
  return out;
}

// ---- radius ----

struct RadiusReport {
  int s = 0;
  double norm_bound = 0.0;           // Frobenius upper bound on ||T||
  double corrected_bound = 0.0;      // for t |x|^(s-1): 1 / ((s-1) ||T||)
  double printed_bound = 0.0;  // (s-1) / ||T||
  std::optional<double> x0_norm;
  std::optional<double> time_bound;        // corrected_bound / |x0|^(s-1)
  std::optional<double> exact_blowup;      // d = 1 closed form
  std::optional<double> empirical_blowup;  // adaptive RK run
};

inline RadiusReport radius_estimate(const PolynomialVectorField<Complex>& field,
                                    std::optional<std::vector<Complex>> x0 = std::nullopt) {
  const auto nonconstant = field.degrees();
  if (nonconstant.size() != 1 || nonconstant[0] < 2) {
    throw std::invalid_argument("radius_estimate: field must be homogeneous of degree >= 2");
  }
  RadiusReport r;
  r.s = nonconstant[0];
  r.norm_bound = operator_norm_upper(field);
  if (!(r.norm_bound > 0)) throw std::invalid_argument("radius_estimate: zero field");
  r.corrected_bound = 1.0 / ((r.s - 1) * r.norm_bound);
  r.printed_bound = (r.s - 1) / r.norm_bound;
  if (!x0) return r;
  if (x0->size() != field.dimension()) throw std::invalid_argument("radius_estimate: dimension mismatch");
  double n2 = 0.0;
  for (const auto& c : *x0) n2 += std::norm(c);
  r.x0_norm = std::sqrt(n2);
  if (*r.x0_norm > 0) r.time_bound = r.corrected_bound / std::pow(*r.x0_norm, r.s - 1);
  if (field.dimension() == 1) {
    const Complex rate = static_cast<double>(r.s - 1) * field.terms()[0].coeff * std::pow((*x0)[0], r.s - 1);
    if (std::abs(rate.imag()) <= 1e-14 * std::abs(rate) && rate.real() > 0) r.exact_blowup = 1.0 / rate.real();
  }
  if (r.time_bound) {
    const double horizon = 4.0 * (r.exact_blowup ? *r.exact_blowup : *r.time_bound);
    r.empirical_blowup = empirical_blowup(field, *x0, horizon);
  }
  return r;
}

inline RadiusReport radius_estimate(double alpha, int s, double x0) {
  PolynomialVectorField<Complex> f(1, {{0, Monomial({s}), Complex(alpha, 0.0)}});
  return radius_estimate(f, std::vector<Complex>{Complex(x0, 0.0)});
}

// ---- discrete dynamics ----

struct ExpansionTerm {
  Diagram diagram;
  std::uint64_t multiplicity = 0;
};

/// Diagram multiset of the n-fold substitution x -> P(x). Level 0 is the
/// bare point; level k+1 puts a component of every arity s on top of s
/// level-k diagrams. Planar tuples are grouped by unordered shape, since
/// their values agree for symmetric tensors.
template <Scalar S>
std::vector<ExpansionTerm> discrete_expansion(const PolynomialVectorField<S>& map_field, int n) {
  if (n < 1) throw std::invalid_argument("discrete_expansion: n must be >= 1");
  const auto arities = map_field.degrees();
  std::map<std::vector<int>, std::uint64_t> level{{{Diagram::kOpen}, 1}};
  auto canon = [](const std::vector<int>& code) { return canonical_unordered(Diagram(code)).code(); };
  for (int step = 0; step < n; ++step) {
    std::map<std::vector<int>, std::uint64_t> next;
    std::vector<std::pair<std::vector<int>, std::uint64_t>> items(level.begin(), level.end());
    for (int s : arities) {
      std::vector<std::size_t> idx(static_cast<std::size_t>(s), 0);
      while (true) {
        std::vector<int> code{s};
        std::uint64_t mult = 1;
        for (std::size_t k : idx) {
          code.insert(code.end(), items[k].first.begin(), items[k].first.end());
          if (mult > UINT64_MAX / items[k].second) throw std::overflow_error("discrete_expansion: multiplicity overflow");
          mult *= items[k].second;
        }
        next[canon(code)] += mult;
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == items.size()) idx[k++] = 0;
        if (k == idx.size()) break;
      }
    }
    level = std::move(next);
  }
  std::vector<ExpansionTerm> out;
  for (auto& [code, m] : level) out.push_back({Diagram(code), m});
  return out;
}

template <Scalar S>
std::vector<S> evaluate_expansion(const std::vector<ExpansionTerm>& terms, const PolynomialVectorField<S>& map_field,
                                  std::span<const S> x0) {
  DiagramEvaluator<S> eval(map_field);
  std::vector<S> out(map_field.dimension(), S(0));
  for (const auto& t : terms) {
    auto v = eval(t.diagram, x0);
    const S m = scalar_traits<S>::from_rational(Rational(BigInt(t.multiplicity)));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] + m * v[i];
  }
  return out;
}

template <Scalar S>
std::vector<S> iterate_map(const PolynomialVectorField<S>& map_field, std::span<const S> x0, int n) {
  if (n < 0) throw std::invalid_argument("iterate_map: n must be >= 0");
  std::vector<S> x(x0.begin(), x0.end());
  for (int k = 0; k < n; ++k) x = evaluate(map_field, x);
  return x;
}

// ---- CSV ----

/// Columns: t, then re/im of every component, then an optional error column.
inline void write_trajectory_csv(std::ostream& os, const std::vector<double>& times,
                                 const std::vector<std::vector<Complex>>& states,
                                 const std::vector<double>* errors = nullptr) {
  if (states.size() != times.size() || (errors && errors->size() != times.size())) {
    throw std::invalid_argument("write_trajectory_csv: column length mismatch");
  }
  const std::size_t d = states.empty() ? 0 : states.front().size();
  os << "t";
  for (std::size_t i = 0; i < d; ++i) os << ",x" << i << "_re,x" << i << "_im";
  if (errors) os << ",error";
  os << "\n" << std::setprecision(17);
  for (std::size_t r = 0; r < times.size(); ++r) {
    os << times[r];
    for (const auto& c : states[r]) os << "," << c.real() << "," << c.imag();
    if (errors) os << "," << (*errors)[r];
    os << "\n";
  }
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  write_trajectory_csv(os, traj.times, traj.states);
}

}  // namespace flowtree
