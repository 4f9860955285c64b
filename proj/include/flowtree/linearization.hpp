#pragma once

// Perturbation theory around a fixed point with diagonal linear part:
// x(t) = f(c0 e^{lambda t}), c0 = f^{-1}(x0), where f = id + sum_S C_S S and
// C_S is the product of 1/lambda(K) over the rooted sub-skeletons K of S.

#include "flowtree/diagram.hpp"
#include "flowtree/polynomial.hpp"
#include "flowtree/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtree {

class ResonanceEncountered : public std::runtime_error {
 public:
  ResonanceEncountered(std::string skeleton, std::string subdiagram, Complex lambda)
      : std::runtime_error("resonance: lambda(" + subdiagram + ") = 0 inside " + skeleton),
        skeleton_(std::move(skeleton)),
        subdiagram_(std::move(subdiagram)),
        lambda_(lambda) {}

  const std::string& skeleton() const { return skeleton_; }
  const std::string& subdiagram() const { return subdiagram_; }
  Complex lambda() const { return lambda_; }

 private:
  std::string skeleton_;
  std::string subdiagram_;
  Complex lambda_;
};

/// Diagonal of the linear part. Throws if the linear part is not diagonal.
template <Scalar S>
std::vector<S> spectrum_of(const PolynomialVectorField<S>& field) {
  std::vector<S> out(field.dimension(), S(0));
  for (const auto& t : field.terms()) {
    if (t.degree() != 1) continue;
    const int j = t.monomial.indices()[0];
    if (j != t.target) throw std::invalid_argument("linear part is not diagonal");
    out[static_cast<std::size_t>(j)] = t.coeff;
  }
  return out;
}

template <Scalar S>
void check_spectrum(const PolynomialVectorField<S>& field, std::span<const S> spectrum) {
  if (spectrum.size() != field.dimension()) throw std::invalid_argument("spectrum length does not match dimension");
  const auto diag = spectrum_of(field);
  for (std::size_t i = 0; i < diag.size(); ++i) {
    if (!(diag[i] == spectrum[i])) {
      throw std::invalid_argument("spectrum entry " + std::to_string(i) + " does not match the linear part");
    }
  }
}

/// Zero test for small denominators: exact in exact mode, relative
/// |v| <= 1e-12 max|lambda_i| in floating mode.
template <Scalar S>
bool resonant_value(const S& v, std::span<const S> spectrum) {
  if constexpr (scalar_traits<S>::exact) {
    return v == S(0);
  } else {
    double scale = 0.0;
    for (const auto& l : spectrum) scale = std::max(scale, magnitude(l));
    return magnitude(v) <= 1e-12 * scale;
  }
}

/// C_S = prod over rooted sub-skeletons K of 1/lambda(K).
template <Scalar S>
S nonres_coefficient(const SkeletonDiagram& sk, std::span<const S> spectrum) {
  const auto lams = subtree_lambdas(sk, spectrum);
  S c = from_int<S>(1);
  for (std::size_t v = 0; v < lams.size(); ++v) {
    if (resonant_value(lams[v], spectrum)) {
      throw ResonanceEncountered(sk.to_string(), sk.subtree(static_cast<int>(v)).to_string(), to_complex(lams[v]));
    }
    c = c / lams[v];
  }
  return c;
}

template <Scalar S>
struct LinearizationSeries {
  PolynomialVectorField<S> nonlinear;  // skeletons index into these terms
  std::vector<S> spectrum;
  int order = 0;
  bool inverse = false;  // false: f, true: f^{-1}
  std::vector<SkeletonDiagram> skeletons;
  std::vector<S> coefficients;

  void sort() {
    std::vector<std::size_t> idx(skeletons.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return skeletons[a] < skeletons[b]; });
    std::vector<SkeletonDiagram> sk;
    std::vector<S> co;
    for (auto k : idx) {
      sk.push_back(std::move(skeletons[k]));
      co.push_back(std::move(coefficients[k]));
    }
    skeletons = std::move(sk);
    coefficients = std::move(co);
  }

  /// Requires skeletons sorted (linearizing_map and inverse_series keep them so).
  std::optional<S> coefficient(const SkeletonDiagram& sk) const {
    auto it = std::lower_bound(skeletons.begin(), skeletons.end(), sk);
    if (it == skeletons.end() || !(*it == sk)) return std::nullopt;
    return coefficients[static_cast<std::size_t>(it - skeletons.begin())];
  }

  /// identity + sum_S coeff_S * weight(S) * y^{open(S)}, as a polynomial map.
  PolyMap<S> map() const {
    const std::size_t d = nonlinear.dimension();
    PolyMap<S> out = identity_map<S>(d);
    for (std::size_t k = 0; k < skeletons.size(); ++k) {
      const auto& sk = skeletons[k];
      out[static_cast<std::size_t>(sk.target())].add(sk.open_monomial(), coefficients[k] * skeleton_weight(sk, nonlinear));
    }
    return out;
  }
};

namespace detail {

template <Scalar S>
PolynomialVectorField<S> fixed_point_nonlinearity(const PolynomialVectorField<S>& field, std::span<const S> spectrum) {
  check_spectrum(field, spectrum);
  for (const auto& t : field.terms()) {
    if (t.degree() == 0) throw std::invalid_argument("field has a constant term: origin is not a fixed point");
  }
  return field.nonlinear_part();
}

}  // namespace detail

/// f = id + sum over skeletons with |S| <= order of C_S S.
template <Scalar S>
LinearizationSeries<S> linearizing_map(const PolynomialVectorField<S>& field, std::span<const S> spectrum, int order,
                                       std::size_t limit = 2'000'000) {
  if (order < 0) throw std::invalid_argument("linearizing_map: order must be >= 0");
  LinearizationSeries<S> out;
  out.nonlinear = detail::fixed_point_nonlinearity(field, spectrum);
  out.spectrum.assign(spectrum.begin(), spectrum.end());
  out.order = order;
  if (out.nonlinear.empty()) return out;
  for (int n = 1; n <= order; ++n) {
    auto sks = enumerate_skeletons(out.nonlinear, n, limit);
    for (auto& sk : sks) {
      out.coefficients.push_back(nonres_coefficient(sk, spectrum));
      out.skeletons.push_back(std::move(sk));
    }
  }
  out.sort();
  return out;
}

/// Same map from the homological equation (lambda.n - lambda_i) h^i_n = [P(y + h)]^i_n,
/// degree by degree up to max_degree. Independent of skeleton enumeration.
template <Scalar S>
PolyMap<S> linearizing_polynomial(const PolynomialVectorField<S>& field, std::span<const S> spectrum, int max_degree) {
  const auto p = to_poly_map(detail::fixed_point_nonlinearity(field, spectrum));
  const std::size_t d = field.dimension();
  PolyMap<S> f = identity_map<S>(d);
  for (int k = 2; k <= max_degree; ++k) {
    const auto pf = compose(p, f, k);
    for (std::size_t i = 0; i < d; ++i) {
      const auto layer = pf[i].homogeneous(k);
      for (const auto& [m, c] : layer.coefficients()) {
        S den(0);
        for (std::size_t j = 0; j < d; ++j) den = den + from_int<S>(m[j]) * spectrum[j];
        den = den - spectrum[i];
        if (resonant_value(den, spectrum)) {
          throw ResonanceEncountered("degree " + std::to_string(k), monomial_label(m) + " -> " + coordinate_name(static_cast<int>(i), d),
                                     to_complex(den));
        }
        f[i].add(m, c / den);
      }
    }
  }
  return f;
}

/// g with g(f(x)) = x to the given degree, solved degree by degree.
/// Requires f = id + (terms of degree >= 2).
template <Scalar S>
PolyMap<S> inverse_map(const PolyMap<S>& f, int max_degree) {
  const std::size_t d = f.size();
  for (std::size_t i = 0; i < d; ++i) {
    if (!(f[i].homogeneous(1) == Polynomial<S>::variable(d, static_cast<int>(i))) || !f[i].homogeneous(0).is_zero()) {
      throw std::invalid_argument("inverse_map: map must be identity plus higher-order terms");
    }
  }
  PolyMap<S> g = identity_map<S>(d);
  for (int k = 2; k <= max_degree; ++k) {
    const auto gf = compose(g, f, k);
    for (std::size_t i = 0; i < d; ++i) g[i] -= gf[i].homogeneous(k);
  }
  return g;
}

// ---- inverse series on skeletons ----

namespace detail {

/// All antichains of vertices in the subtree of v (the empty one included).
inline std::vector<std::vector<int>> antichains(const Diagram& d, int v) {
  std::vector<std::vector<int>> acc{{}};
  for (int c : d.children(v)) {
    if (c == Diagram::kOpen) continue;
    auto sub = antichains(d, c);
    std::vector<std::vector<int>> next;
    for (const auto& a : acc) {
      for (const auto& b : sub) {
        auto u = a;
        u.insert(u.end(), b.begin(), b.end());
        next.push_back(std::move(u));
      }
    }
    acc = std::move(next);
  }
  acc.push_back({v});
  return acc;
}

inline SkeletonDiagram skeleton_piece(const SkeletonDiagram& sk, int root, const std::vector<char>& cut) {
  auto piece = extract_piece(sk.shape(), root, cut);
  std::vector<SkeletonVertex> verts;
  for (int v : piece.vertices) verts.push_back(sk.vertex(v));
  return {std::move(piece.diagram), std::move(verts), sk.dimension()};
}

}  // namespace detail

/// Sub-skeletons hanging below an antichain are removed and the top part
/// (with open edges in their place) is returned.
inline SkeletonDiagram top_part(const SkeletonDiagram& sk, const std::vector<int>& cut_vertices) {
  std::vector<char> cut(sk.order(), 0);
  for (int v : cut_vertices) cut[static_cast<std::size_t>(v)] = 1;
  return detail::skeleton_piece(sk, 0, cut);
}

/// f^{-1} on skeletons by the triangular system coming from f^{-1}(f(y)) = y:
/// G_E = -C_E - sum over nonempty antichains A below the root of
///       G_{top(E,A)} prod_{v in A} C_{E_v}.
template <Scalar S>
LinearizationSeries<S> inverse_series(const LinearizationSeries<S>& f, int order) {
  if (f.inverse) throw std::invalid_argument("inverse_series: input is already an inverse");
  if (order > f.order) throw std::invalid_argument("inverse_series: order exceeds the series order");
  LinearizationSeries<S> g;
  g.nonlinear = f.nonlinear;
  g.spectrum = f.spectrum;
  g.order = order;
  g.inverse = true;
  std::map<SkeletonDiagram, S> solved;
  std::vector<std::size_t> by_order;
  for (std::size_t k = 0; k < f.skeletons.size(); ++k) {
    if (static_cast<int>(f.skeletons[k].order()) <= order) by_order.push_back(k);
  }
  std::stable_sort(by_order.begin(), by_order.end(),
                   [&](std::size_t a, std::size_t b) { return f.skeletons[a].order() < f.skeletons[b].order(); });
  for (std::size_t k : by_order) {
    const auto& e = f.skeletons[k];
    S value = -f.coefficients[k];
    std::vector<std::vector<int>> below{{}};
    for (int c : e.shape().children(0)) {
      if (c == Diagram::kOpen) continue;
      auto sub = detail::antichains(e.shape(), c);
      std::vector<std::vector<int>> next;
      for (const auto& a : below) {
        for (const auto& b : sub) {
          auto u = a;
          u.insert(u.end(), b.begin(), b.end());
          next.push_back(std::move(u));
        }
      }
      below = std::move(next);
    }
    for (const auto& a : below) {
      if (a.empty()) continue;
      S term = solved.at(top_part(e, a));
      for (int v : a) {
        auto c = f.coefficient(e.subtree(v));
        if (!c) throw std::logic_error("inverse_series: missing sub-skeleton coefficient");
        term = term * *c;
      }
      value = value - term;
    }
    solved.emplace(e, value);
  }
  for (auto& [sk, c] : solved) {
    g.skeletons.push_back(sk);
    g.coefficients.push_back(c);
  }
  return g;
}

/// G_D from the partition formula sum_pi sign * prod_{Q in pi} C_Q with
/// sign = (-1)^(#pi + offset). offset 0 reproduces the triangular solve.
template <Scalar S>
S partition_inverse_coefficient(const SkeletonDiagram& sk, std::span<const S> spectrum, int offset) {
  S total(0);
  for (const auto& p : partitions(sk.shape())) {
    std::vector<char> cut(sk.order(), 0);
    for (int v : p.cut) cut[static_cast<std::size_t>(v)] = 1;
    S prod = nonres_coefficient(detail::skeleton_piece(sk, 0, cut), spectrum);
    for (int v : p.cut) prod = prod * nonres_coefficient(detail::skeleton_piece(sk, v, cut), spectrum);
    const bool negative = (static_cast<int>(p.pieces.size()) + offset) % 2 != 0;
    if (negative) {
      total = total - prod;
    } else {
      total = total + prod;
    }
  }
  return total;
}

struct PartitionSignReport {
  int order = 0;
  bool sign_minus_matches = false;    // (-1)^#pi
  bool sign_printed_matches = false;  // (-1)^(#pi+1)
};

/// For each order, which global sign makes the partition formula agree with
/// the triangular solve on every skeleton of that order.
template <Scalar S>
std::vector<PartitionSignReport> partition_sign_check(const LinearizationSeries<S>& g, double tol = 1e-10) {
  std::vector<PartitionSignReport> out;
  for (int n = 1; n <= g.order; ++n) out.push_back({n, true, true});
  for (std::size_t k = 0; k < g.skeletons.size(); ++k) {
    const auto& sk = g.skeletons[k];
    auto& rep = out[sk.order() - 1];
    std::span<const S> spec(g.spectrum);
    const S a = partition_inverse_coefficient(sk, spec, 0);
    auto same = [&](const S& x, const S& y) {
      if constexpr (scalar_traits<S>::exact) {
        return x == y;
      } else {
        return magnitude(x - y) <= tol * std::max(1.0, magnitude(y));
      }
    };
    rep.sign_minus_matches = rep.sign_minus_matches && same(a, g.coefficients[k]);
    rep.sign_printed_matches = rep.sign_printed_matches && same(-a, g.coefficients[k]);
  }
  return out;
}

// ---- evaluation ----

template <Scalar S>
std::vector<S> apply_map(const PolyMap<S>& m, std::span<const S> x) {
  std::vector<S> out;
  for (const auto& p : m) out.push_back(p(x));
  return out;
}

/// Highest polynomial degree reached by skeletons with at most `order` vertices.
template <Scalar S>
int series_degree(const PolynomialVectorField<S>& nonlinear, int order) {
  return 1 + order * std::max(0, nonlinear.max_degree() - 1);
}

/// c0 = f^{-1}(x0), with the inverse solved to the degree that f reaches.
template <Scalar S>
std::vector<S> deformed_initial_conditions(const LinearizationSeries<S>& f, std::span<const S> x0) {
  return apply_map(inverse_map(f.map(), series_degree(f.nonlinear, f.order)), x0);
}

template <Scalar S>
struct NearFixedPointFlow {
  PolyMap<S> f;
  std::vector<S> c0;
  std::vector<S> spectrum;

  std::vector<Complex> operator()(double t) const {
    std::vector<Complex> y;
    for (std::size_t i = 0; i < c0.size(); ++i) y.push_back(to_complex(c0[i]) * std::exp(to_complex(spectrum[i]) * t));
    std::vector<Complex> out;
    for (const auto& p : f) {
      Complex sum(0.0);
      for (const auto& [m, c] : p.coefficients()) sum += to_complex(c) * eval_monomial(m, std::span<const Complex>(y));
      out.push_back(sum);
    }
    return out;
  }
};

/// Builds f and c0 once; the result evaluates f(c0 e^{lambda t}) at any t.
template <Scalar S>
NearFixedPointFlow<S> near_fixed_point_flow(const PolynomialVectorField<S>& field, std::span<const S> spectrum,
                                            std::span<const S> x0, int order) {
  auto series = linearizing_map(field, spectrum, order);
  NearFixedPointFlow<S> flow;
  flow.f = series.map();
  flow.c0 = deformed_initial_conditions(series, x0);
  flow.spectrum.assign(spectrum.begin(), spectrum.end());
  return flow;
}

template <Scalar S>
std::vector<Complex> evolve_near_fixed_point(const PolynomialVectorField<S>& field, std::span<const S> spectrum,
                                             std::span<const S> x0, double t, int order) {
  return near_fixed_point_flow(field, spectrum, x0, order)(t);
}

// ---- small denominators ----

template <Scalar S>
struct SmallDenominator {
  std::vector<int> n;
  int target = 0;
  S value{};
  double magnitude = 0.0;
  bool resonant = false;
};

/// Every n >= 0 with 2 <= |n|_1 <= bound and every target i, sorted by |(lambda, n - e_i)|.
template <Scalar S>
std::vector<SmallDenominator<S>> small_denominator_scan(std::span<const S> spectrum, int bound) {
  if (bound < 1) throw std::invalid_argument("small_denominator_scan: bound must be >= 1");
  const std::size_t d = spectrum.size();
  std::vector<SmallDenominator<S>> out;
  for (int total = 2; total <= bound; ++total) {
    for (const auto& m : monomials_of_degree(d, total)) {
      S dot(0);
      for (std::size_t j = 0; j < d; ++j) dot = dot + from_int<S>(m[j]) * spectrum[j];
      for (std::size_t i = 0; i < d; ++i) {
        SmallDenominator<S> e;
        e.n = m.exponents();
        e.target = static_cast<int>(i);
        e.value = dot - spectrum[i];
        e.magnitude = flowtree::magnitude(e.value);
        e.resonant = resonant_value(e.value, spectrum);
        out.push_back(std::move(e));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.resonant != b.resonant) return a.resonant;
    return a.magnitude < b.magnitude;
  });
  return out;
}

struct DiophantineParams {
  double M = 1.0;
  double nu = 0.0;
  int bound = 1;
};

/// Largest M with |(lambda, n - e_i)| >= M |n|_1^(-nu) over the scanned range;
/// zero when the scan hits a resonance.
template <Scalar S>
DiophantineParams estimate_diophantine(std::span<const S> spectrum, int bound, std::optional<double> nu = std::nullopt) {
  DiophantineParams p;
  p.nu = nu ? *nu : static_cast<double>(spectrum.size() + 1);
  p.bound = bound;
  double m = INFINITY;
  for (const auto& e : small_denominator_scan(spectrum, bound)) {
    if (e.resonant) return {0.0, p.nu, bound};
    const double norm = std::accumulate(e.n.begin(), e.n.end(), 0.0);
    m = std::min(m, e.magnitude * std::pow(norm, p.nu));
  }
  p.M = m;
  return p;
}

struct PerturbationRadius {
  int s = 0;
  int n = 0;                   // finite order standing in for the limit
  double root_mean = 0.0;      // (sum_{|D|=n} (D!)^nu)^(1/n)
  double x_power_bound = 0.0;  // bound on |x|^(s-1)
  double x_bound = 0.0;        // bound on |x|
};

/// M / ((s-1)^nu ||T||) / root_mean, with the limit replaced by its value at n.
template <Scalar S>
PerturbationRadius perturbation_radius_bound(const PolynomialVectorField<S>& field, const DiophantineParams& params, int n) {
  const auto nonlinear = field.nonlinear_part();
  const auto degs = nonlinear.degrees();
  if (degs.size() != 1) throw std::invalid_argument("perturbation_radius_bound: nonlinearity must be homogeneous");
  if (n < 1) throw std::invalid_argument("perturbation_radius_bound: n must be >= 1");
  PerturbationRadius r;
  r.s = degs[0];
  r.n = n;
  std::vector<double> logs;
  for (const auto& code : enumerate_diagram_codes({r.s}, n)) {
    logs.push_back(params.nu * std::log(static_cast<double>(tree_factorial(code))));
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  double acc = 0.0;
  for (double l : logs) acc += std::exp(l - mx);
  r.root_mean = std::exp((mx + std::log(acc)) / n);
  const double norm = operator_norm_upper(nonlinear);
  r.x_power_bound = params.M / (std::pow(r.s - 1, params.nu) * norm) / r.root_mean;
  r.x_bound = std::pow(r.x_power_bound, 1.0 / (r.s - 1));
  return r;
}

// ---- first order of the ordered exponent ----

/// (e^{delta t} - 1) / delta, continuous at delta = 0.
inline Complex exp_ratio(Complex delta, double t) {
  const Complex z = delta * t;
  if (std::abs(z) < 1e-3) return t * (1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0);
  return (std::exp(z) - 1.0) / delta;
}

/// coeff * (e^{(lambda.n) t} - e^{lambda_i t}) / (lambda.n - lambda_i), and
/// coeff * t e^{lambda_i t} when the denominator vanishes.
inline Complex first_order_term(std::span<const Complex> spectrum, const PolyTerm<Complex>& term, double t) {
  Complex rate(0.0);
  for (int j : term.monomial.indices()) rate += spectrum[static_cast<std::size_t>(j)];
  const Complex li = spectrum[static_cast<std::size_t>(term.target)];
  return term.coeff * std::exp(li * t) * exp_ratio(rate - li, t);
}

}  // namespace flowtree
