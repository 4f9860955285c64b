#pragma once

// Resonances: integer relations (lambda, n - e_i) = 0, the diagrams that
// realize them, their decomposition into irreducible pieces, and numerical
// detection of the secular t^k e^{rt} terms they produce.

#include "flowtree/linearization.hpp"
#include "flowtree/numerics.hpp"
#include "flowtree/skeleton.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtree {

struct ResonanceRelation {
  std::vector<int> n;
  int target = 0;
  std::optional<SkeletonDiagram> witness;
  bool approximate = false;  // found with the floating tolerance
  int order_bound = 0;       // skeleton order searched (0: not searched)
};

/// Every n >= 0 with 2 <= |n|_1 <= bound and target i with (lambda, n - e_i) = 0.
template <Scalar S>
std::vector<ResonanceRelation> find_resonance_relations(std::span<const S> spectrum, int bound) {
  if (bound < 2) throw std::invalid_argument("find_resonance_relations: bound must be >= 2");
  std::vector<ResonanceRelation> out;
  for (const auto& e : small_denominator_scan(spectrum, bound)) {
    if (!e.resonant) break;
    ResonanceRelation r;
    r.n = e.n;
    r.target = e.target;
    r.approximate = !scalar_traits<S>::exact;
    out.push_back(std::move(r));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    const int da = std::accumulate(a.n.begin(), a.n.end(), 0), db = std::accumulate(b.n.begin(), b.n.end(), 0);
    if (da != db) return da < db;
    if (a.n != b.n) return a.n > b.n;
    return a.target < b.target;
  });
  return out;
}

// ---- generator matrix ----

struct GeneratorMatrix {
  std::size_t dimension = 0;
  std::vector<std::vector<int>> columns;  // slot multiplicities, target entry reduced by one
  std::vector<std::string> labels;
};

template <Scalar S>
GeneratorMatrix generator_matrix(const PolynomialVectorField<S>& field) {
  GeneratorMatrix g;
  g.dimension = field.dimension();
  const auto nonlinear = field.nonlinear_part();
  for (const auto& t : nonlinear.terms()) {
    auto col = t.monomial.exponents();
    col[static_cast<std::size_t>(t.target)] -= 1;
    g.columns.push_back(std::move(col));
    g.labels.push_back(term_label(t));
  }
  return g;
}

/// Some v in N^columns with A v = n - e_target and |v|_1 <= max_total.
/// Having one is necessary for a resonance diagram, not sufficient.
inline std::optional<std::vector<int>> necessary_condition(const GeneratorMatrix& g, const std::vector<int>& n, int target,
                                                           int max_total = 12) {
  if (n.size() != g.dimension) throw std::invalid_argument("necessary_condition: dimension mismatch");
  std::vector<int> goal = n;
  goal.at(static_cast<std::size_t>(target)) -= 1;
  const std::size_t cols = g.columns.size();
  std::vector<int> v(cols, 0);
  std::vector<int> acc(g.dimension, 0);
  std::optional<std::vector<int>> found;
  auto search = [&](auto&& self, std::size_t c, int used) -> void {
    if (found) return;
    if (used > 0 && acc == goal) {
      found = v;
      return;
    }
    if (c == cols || used == max_total) return;
    self(self, c + 1, used);
    for (int k = 1; used + k <= max_total && !found; ++k) {
      v[c] = k;
      for (std::size_t i = 0; i < g.dimension; ++i) acc[i] += g.columns[c][i];
      self(self, c + 1, used + k);
    }
    for (std::size_t i = 0; i < g.dimension; ++i) acc[i] -= v[c] * g.columns[c][i];
    v[c] = 0;
  };
  search(search, 0, 0);
  return found;
}

// ---- resonance diagrams ----

/// Skeletons of order <= max_order with lambda(D) = 0, one witness per (n, target).
template <Scalar S>
std::vector<ResonanceRelation> find_resonance_diagrams(const PolynomialVectorField<S>& field, std::span<const S> spectrum,
                                                       int max_order, std::size_t limit = 2'000'000) {
  if (max_order < 1) throw std::invalid_argument("find_resonance_diagrams: max_order must be >= 1");
  const auto nonlinear = field.nonlinear_part();
  std::map<std::pair<std::vector<int>, int>, ResonanceRelation> found;
  for (int n = 1; n <= max_order; ++n) {
    for (auto& sk : enumerate_skeletons(nonlinear, n, limit)) {
      if (!resonant_value(lambda_of(sk, spectrum), spectrum)) continue;
      auto key = std::make_pair(sk.open_monomial().exponents(), sk.target());
      if (found.count(key)) continue;
      ResonanceRelation r;
      r.n = key.first;
      r.target = key.second;
      r.witness = std::move(sk);
      r.approximate = !scalar_traits<S>::exact;
      r.order_bound = max_order;
      found.emplace(std::move(key), std::move(r));
    }
  }
  std::vector<ResonanceRelation> out;
  for (auto& [k, r] : found) out.push_back(std::move(r));
  return out;
}

/// Cuts the resonance skeleton at every non-root vertex whose rooted
/// sub-skeleton is itself resonant. Every piece is resonant and irreducible;
/// the top piece comes first, the rest follow in preorder of their roots.
template <Scalar S>
std::vector<SkeletonDiagram> irreducible_decomposition(const SkeletonDiagram& sk, std::span<const S> spectrum) {
  const auto lams = subtree_lambdas(sk, spectrum);
  if (!resonant_value(lams[0], spectrum)) throw std::invalid_argument("irreducible_decomposition: skeleton is not resonant");
  std::vector<char> cut(sk.order(), 0);
  std::vector<int> roots{0};
  for (std::size_t v = 1; v < sk.order(); ++v) {
    if (resonant_value(lams[v], spectrum)) {
      cut[v] = 1;
      roots.push_back(static_cast<int>(v));
    }
  }
  std::vector<SkeletonDiagram> out;
  for (int r : roots) out.push_back(detail::skeleton_piece(sk, r, cut));
  return out;
}

/// -sum of 1/lambda(K_v) over the vertices on the path from v1 up to v2 (or v2 up to v1).
template <Scalar S>
S resonance_line_multiplier(const SkeletonDiagram& sk, int v1, int v2, std::span<const S> spectrum) {
  const auto lams = subtree_lambdas(sk, spectrum);
  auto path_up = [&](int from, int to) -> std::optional<std::vector<int>> {
    std::vector<int> path{from};
    while (from != to) {
      from = sk.shape().parent(from);
      if (from < 0) return std::nullopt;
      path.push_back(from);
    }
    return path;
  };
  auto path = path_up(v1, v2);
  if (!path) path = path_up(v2, v1);
  if (!path) throw std::invalid_argument("resonance_line_multiplier: vertices are not on one root path");
  S sum(0);
  for (int v : *path) {
    const auto& l = lams[static_cast<std::size_t>(v)];
    if (resonant_value(l, spectrum)) throw std::domain_error("resonance_line_multiplier: zero denominator on the path");
    sum = sum + from_int<S>(1) / l;
  }
  return -sum;
}

/// int_0^{t1} t^s e^{lambda t} dt = e^{lambda t1} * sum_j poly[j] t1^j + constant.
struct TPowerIntegral {
  std::vector<Complex> poly;
  Complex constant;

  Complex operator()(Complex lambda, double t1) const {
    Complex p(0.0);
    for (std::size_t j = poly.size(); j-- > 0;) p = p * t1 + poly[j];
    return std::exp(lambda * t1) * p + constant;
  }
};

inline TPowerIntegral vertex_integral_tpower(int s, Complex lambda) {
  if (s < 0) throw std::invalid_argument("vertex_integral_tpower: s must be >= 0");
  TPowerIntegral r;
  r.poly.assign(static_cast<std::size_t>(s) + 2, Complex(0.0));
  if (lambda == Complex(0.0)) {
    r.poly[static_cast<std::size_t>(s) + 1] = 1.0 / (s + 1);
    r.constant = 0.0;
    return r;
  }
  // (1/lambda) sum_k s!/(s-k)! t^{s-k} / (-lambda)^k, minus the same at t = 0
  Complex f = 1.0 / lambda;
  for (int k = 0; k <= s; ++k) {
    r.poly[static_cast<std::size_t>(s - k)] = f;
    f = f * static_cast<double>(s - k) / (-lambda);
  }
  r.constant = -r.poly[0];
  return r;
}

inline Complex vertex_integral_tpower(int s, Complex lambda, double t1) { return vertex_integral_tpower(s, lambda)(lambda, t1); }

// ---- secular terms ----

struct SecularOptions {
  double t_max = 1.0;
  double step = 1e-3;
  int max_k = 3;
};

/// Integrates the field, then fits component `target` of the trajectory to
/// polynomial(t) e^{(lambda,n) t} plus free multiples of the exponentials
/// the first-order forcing produces.
inline SecularFit detect_secular_term(const PolynomialVectorField<Complex>& field, std::span<const Complex> spectrum,
                                      const std::vector<Complex>& x0, const ResonanceRelation& relation,
                                      const SecularOptions& opt = {}) {
  check_spectrum(field, spectrum);
  Complex rate(0.0);
  for (std::size_t j = 0; j < relation.n.size(); ++j) rate += static_cast<double>(relation.n[j]) * spectrum[j];
  const auto i = static_cast<std::size_t>(relation.target);
  std::vector<Complex> extras{spectrum[i]};
  const auto nonlinear = field.nonlinear_part();
  for (const auto& t : nonlinear.terms()) {
    if (t.target != relation.target) continue;
    Complex r(0.0);
    for (int j : t.monomial.indices()) r += spectrum[static_cast<std::size_t>(j)];
    extras.push_back(r);
  }
  IntegratorConfig cfg;
  cfg.step = opt.step;
  const auto traj = integrate(field, x0, opt.t_max, cfg);
  if (traj.truncated) throw std::runtime_error("detect_secular_term: integration stopped (" + traj.reason + ")");
  return fit_secular(traj, i, rate, opt.max_k, extras);
}

// ---- catalog of generator sets admitting resonances (d = 2) ----

enum class FrequencySign { same, opposite };  // lambda = (i, i k) or (i, -i k)

inline std::vector<GaussianRational> catalog_spectrum(int k, FrequencySign sign) {
  const long long kk = sign == FrequencySign::same ? k : -k;
  return {GaussianRational(Rational(0), Rational(1)), GaussianRational(Rational(0), Rational(kk))};
}

/// All 2-d terms of the given degree with unit coefficients: x-target first.
inline PolynomialVectorField<GaussianRational> catalog_generators(int degree) {
  std::vector<PolyTerm<GaussianRational>> terms;
  for (int target = 0; target < 2; ++target) {
    for (const auto& m : monomials_of_degree(2, degree)) terms.push_back({target, m, GaussianRational(1)});
  }
  return {2, terms};
}

struct CatalogEntry {
  std::set<std::string> generators;  // term labels such as "y->xx"
  int min_order = 0;                 // fewest vertices of a resonance diagram using exactly this set
  std::string witness;               // one such diagram
  long long witness_count = -1;      // distinct unordered diagrams at min_order (-1: not counted)
};

struct Catalog {
  int k = 0;
  int degree = 0;
  FrequencySign sign = FrequencySign::same;
  int max_order = 0;
  std::vector<CatalogEntry> entries;

  std::set<std::set<std::string>> sets() const {
    std::set<std::set<std::string>> out;
    for (const auto& e : entries) out.insert(e.generators);
    return out;
  }
};

namespace detail {

// Builds a tree from the vertex multiset `counts` (over the generator terms)
// if one exists, attaching each vertex to the leftmost open slot of its target.
inline std::optional<SkeletonDiagram> build_from_counts(const PolynomialVectorField<GaussianRational>& gens,
                                                        const std::vector<int>& counts) {
  const auto& terms = gens.terms();
  const std::size_t g = terms.size();
  for (std::size_t root = 0; root < g; ++root) {
    if (counts[root] == 0) continue;
    std::vector<int> rest = counts;
    rest[root] -= 1;
    std::vector<std::size_t> order{root};
    std::set<std::vector<int>> dead;
    // avail = slots of placed vertices minus non-root placed targets
    auto avail = [&](int index) {
      int a = 0;
      for (std::size_t q = 0; q < order.size(); ++q) {
        a += terms[order[q]].monomial[static_cast<std::size_t>(index)];
        if (q > 0 && terms[order[q]].target == index) --a;
      }
      return a;
    };
    auto search = [&](auto&& self) -> bool {
      if (std::all_of(rest.begin(), rest.end(), [](int c) { return c == 0; })) return true;
      if (dead.count(rest)) return false;
      for (std::size_t q = 0; q < g; ++q) {
        if (rest[q] == 0 || avail(terms[q].target) == 0) continue;
        rest[q] -= 1;
        order.push_back(q);
        if (self(self)) return true;
        order.pop_back();
        rest[q] += 1;
      }
      dead.insert(rest);
      return false;
    };
    if (!search(search)) continue;
    auto sk = single_vertex_skeleton(gens, static_cast<int>(order[0]), terms[order[0]].monomial.indices());
    for (std::size_t q = 1; q < order.size(); ++q) {
      const auto& t = terms[order[q]];
      const auto open = sk.open_indices();
      const auto leaf = std::find(open.begin(), open.end(), t.target) - open.begin();
      sk = graft(sk, static_cast<int>(leaf), single_vertex_skeleton(gens, static_cast<int>(order[q]), t.monomial.indices()));
    }
    return sk;
  }
  return std::nullopt;
}

}  // namespace detail

/// Generator sets S (over the 2(degree+1) terms of the given degree) such that
/// some diagram using exactly the terms in S has lambda(D) = 0, with at most
/// max_order vertices, for lambda = (i, +-i k).
inline Catalog appendix_catalog(int k, int degree, int max_order = 6, FrequencySign sign = FrequencySign::same,
                                bool count_witnesses = true) {
  if (degree != 2 && degree != 3) throw std::invalid_argument("catalog: degree must be 2 or 3");
  if (k < 3 || k > 8) throw std::invalid_argument("catalog: k must be in 3..8");
  if (max_order < 1) throw std::invalid_argument("catalog: max_order must be >= 1");
  const auto gens = catalog_generators(degree);
  const auto spec = catalog_spectrum(k, sign);
  std::span<const GaussianRational> spectrum(spec);
  const std::size_t g = gens.terms().size();
  std::vector<GaussianRational> lam;
  for (const auto& t : gens.terms()) lam.push_back(lambda_of(t, spectrum));

  // support mask -> best (order, witness)
  std::map<unsigned, std::pair<int, SkeletonDiagram>> best;
  std::vector<int> counts(g, 0);
  auto visit = [&](auto&& self, std::size_t q, int used, GaussianRational sum) -> void {
    if (q == g) {
      if (used == 0 || !(sum == GaussianRational(0))) return;
      unsigned mask = 0;
      for (std::size_t j = 0; j < g; ++j) {
        if (counts[j] > 0) mask |= 1u << j;
      }
      auto it = best.find(mask);
      if (it != best.end() && it->second.first <= used) return;
      if (auto sk = detail::build_from_counts(gens, counts)) best.insert_or_assign(mask, std::make_pair(used, *sk));
      return;
    }
    for (int c = 0; used + c <= max_order; ++c) {
      counts[q] = c;
      self(self, q + 1, used + c, sum + from_int<GaussianRational>(c) * lam[q]);
    }
    counts[q] = 0;
  };
  visit(visit, 0, 0, GaussianRational(0));

  Catalog cat{k, degree, sign, max_order, {}};
  for (const auto& [mask, found] : best) {
    CatalogEntry e;
    std::vector<PolyTerm<GaussianRational>> sub;
    for (std::size_t j = 0; j < g; ++j) {
      if (mask & (1u << j)) {
        e.generators.insert(term_label(gens.terms()[j]));
        sub.push_back(gens.terms()[j]);
      }
    }
    e.min_order = found.first;
    e.witness = found.second.unordered_string();
    if (count_witnesses) {
      const PolynomialVectorField<GaussianRational> field(2, sub);
      std::set<std::string> distinct;
      try {
        for (const auto& sk : enumerate_skeletons(field, e.min_order, 200'000)) {
          if (!(lambda_of(sk, spectrum) == GaussianRational(0))) continue;
          std::set<int> used;
          for (const auto& v : sk.vertices()) used.insert(v.term);
          if (used.size() == sub.size()) distinct.insert(sk.unordered_string());
        }
        e.witness_count = static_cast<long long>(distinct.size());
      } catch (const std::length_error&) {
        e.witness_count = -1;
      }
    }
    cat.entries.push_back(std::move(e));
  }
  std::sort(cat.entries.begin(), cat.entries.end(), [](const auto& a, const auto& b) {
    if (a.min_order != b.min_order) return a.min_order < b.min_order;
    return a.generators < b.generators;
  });
  return cat;
}

struct ReferenceEntry {
  std::set<std::string> generators;
  std::optional<int> diagram_count;
};

/// Normalizes "y->yx" to "y->xy" (slot order does not matter).
inline std::string canonical_term_label(const std::string& label) {
  const auto arrow = label.find("->");
  if (arrow == std::string::npos || arrow != 1) throw std::invalid_argument("bad term label: " + label);
  std::string slots = label.substr(arrow + 2);
  std::sort(slots.begin(), slots.end());
  return label.substr(0, arrow + 2) + slots;
}

/// Published lists of generator sets admitting resonances for lambda ratio k.
inline std::optional<std::vector<ReferenceEntry>> reference_catalog(int k, int degree) {
  auto entry = [](std::initializer_list<const char*> labels, std::optional<int> count = std::nullopt) {
    ReferenceEntry e;
    for (const char* l : labels) e.generators.insert(canonical_term_label(l));
    e.diagram_count = count;
    return e;
  };
  if (degree == 2 && k == 3) return std::vector{entry({"y->xx", "x->xx"}), entry({"y->yx", "y->xx"})};
  if (degree == 2 && k == 4) {
    return std::vector{entry({"y->xx", "x->xx"}, 2), entry({"y->xy", "x->xx", "y->xx"}, 2), entry({"y->xy", "y->xx"}),
                       entry({"y->xx", "x->yx"}), entry({"y->yy", "y->xx"})};
  }
  if (degree == 3) {
    switch (k) {
      case 3: return std::vector{entry({"y->xxx"})};
      case 4: return std::vector<ReferenceEntry>{};
      case 5:
      case 6: return std::vector{entry({"y->xxx", "x->xxx"}), entry({"y->yxx", "y->xxx"})};
      case 7:
        return std::vector{entry({"x->xxx", "y->xxx"}, 2), entry({"y->xxx", "x->yxx"}),
                           entry({"y->xxx", "x->xxx", "y->yxx"}, 2), entry({"y->yxx", "y->xxx"})};
      case 8: return std::vector<ReferenceEntry>{};
      default: break;
    }
  }
  return std::nullopt;
}

struct CatalogComparison {
  int k = 0;
  int degree = 0;
  Catalog same;      // lambda = (i, i k)
  Catalog opposite;  // lambda = (i, -i k)
  std::vector<ReferenceEntry> reference;
  bool same_matches = false;
  bool opposite_matches = false;
  std::vector<std::set<std::string>> missing;  // in the reference, not found (same sign)
  std::vector<std::set<std::string>> extra;    // found (same sign), not in the reference
};

inline CatalogComparison compare_catalog(int k, int degree, int max_order = 6) {
  CatalogComparison c;
  c.k = k;
  c.degree = degree;
  c.same = appendix_catalog(k, degree, max_order, FrequencySign::same);
  c.opposite = appendix_catalog(k, degree, max_order, FrequencySign::opposite, false);
  auto ref = reference_catalog(k, degree);
  if (!ref) throw std::invalid_argument("catalog: no reference list for this (k, degree)");
  c.reference = *ref;
  std::set<std::set<std::string>> want;
  for (const auto& e : c.reference) want.insert(e.generators);
  const auto got = c.same.sets();
  c.same_matches = got == want;
  c.opposite_matches = c.opposite.sets() == want;
  for (const auto& s : want) {
    if (!got.count(s)) c.missing.push_back(s);
  }
  for (const auto& s : got) {
    if (!want.count(s)) c.extra.push_back(s);
  }
  return c;
}

}  // namespace flowtree
