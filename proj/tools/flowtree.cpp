// flowtree command-line front end. Data goes to stdout, diagnostics to stderr.
// Exit codes: 0 ok, 1 usage/input, 2 numeric failure, 3 verification failure.

#include "flowtree/field_io.hpp"
#include "flowtree/flow_series.hpp"
#include "flowtree/linearization.hpp"
#include "flowtree/numerics.hpp"
#include "flowtree/resonance.hpp"
#include "flowtree/verify.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace flowtree;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0, kUsage = 1, kNumeric = 2, kVerify = 3;

struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "0.1,0.2" or a JSON array of numbers / [re, im] pairs
std::vector<Complex> parse_vector(const std::string& text, std::size_t d, const std::string& flag) {
  std::vector<Complex> out;
  if (!text.empty() && text.front() == '[') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw FieldFormatError(flag + ": " + e.what());
    }
    if (!j.is_array()) throw FieldFormatError(flag + ": expected an array");
    for (std::size_t k = 0; k < j.size(); ++k) out.push_back(detail::parse_complex(j[k], flag + "[" + std::to_string(k) + "]"));
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        out.emplace_back(std::stod(item, &used), 0.0);
        if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw FieldFormatError(flag + ": cannot read \"" + item + "\" as a number");
      }
    }
  }
  if (out.size() != d) {
    throw FieldFormatError(flag + ": " + std::to_string(out.size()) + " entries for dimension " + std::to_string(d));
  }
  return out;
}

json complex_array(const std::vector<Complex>& v) {
  json out = json::array();
  for (const auto& z : v) out.push_back(complex_json(z));
  return out;
}

template <Scalar S>
std::vector<Complex> to_complex_vector(const std::vector<S>& v) {
  std::vector<Complex> out;
  for (const auto& x : v) out.push_back(to_complex(x));
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<Complex> spectrum_for(const FieldFile& file) {
  return file.spectrum ? *file.spectrum : spectrum_of(file.field);
}

// ---- evolve ----

struct EvolveArgs {
  std::string field, x0;
  double t = 1.0;
  int order = 8;
  int samples = 10;
  bool oracle = false;
};

// d = 1, single term alpha x^s: closed form available
std::optional<std::pair<Complex, int>> scalar_monomial(const PolynomialVectorField<Complex>& f) {
  if (f.dimension() != 1 || f.terms().size() != 1 || f.terms()[0].degree() < 2) return std::nullopt;
  return std::make_pair(f.terms()[0].coeff, f.terms()[0].degree());
}

int run_evolve(const EvolveArgs& a) {
  const auto file = parse_field(a.field);
  const auto& f = file.field;
  const auto x0 = parse_vector(a.x0, f.dimension(), "--x0");
  if (a.samples < 1) throw FieldFormatError("--samples: must be >= 1");
  if (f.degrees().size() == 1 && f.degrees()[0] >= 2) {
    const auto rep = radius_estimate(f, x0);
    if (rep.time_bound && a.t > *rep.time_bound) {
      std::cerr << "warning: t = " << a.t << " exceeds the convergence bound " << *rep.time_bound << "\n";
    }
  }
  std::vector<double> times;
  for (int k = 0; k <= a.samples; ++k) times.push_back(a.t * k / a.samples);

  std::vector<std::vector<Complex>> states;
  if (rational_mode_requested()) {
    const auto fe = exact_field(f);
    const auto xe = exact_vector(x0);
    const auto values = build_series(fe, a.order).order_values(std::span<const GaussianRational>(xe));
    for (double t : times) states.push_back(to_complex_vector(sum_orders(values, rationalize(Complex(t)))));
  } else {
    const auto values = build_series(f, a.order).order_values(std::span<const Complex>(x0));
    for (double t : times) states.push_back(sum_orders(values, Complex(t)));
  }
  for (const auto& s : states) {
    for (const auto& z : s) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw NumericFailure("series value is not finite");
    }
  }
  if (!a.oracle) {
    write_trajectory_csv(std::cout, times, states);
    return kOk;
  }
  std::vector<double> errors;
  const auto mono = scalar_monomial(f);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<Complex> ref;
    if (mono) {
      try {
        ref = {scalar_exact(mono->first, mono->second, x0[0], times[k])};
      } catch (const std::domain_error&) {
        throw NumericFailure("closed form blows up before t = " + std::to_string(times[k]));
      }
    } else if (times[k] == 0.0) {
      ref = x0;
    } else {
      IntegratorConfig cfg;
      cfg.step = times[k] / 4000;
      cfg.record = false;
      cfg.blowup_threshold = 1e12;
      const auto traj = integrate(f, x0, times[k], cfg);
      if (traj.truncated) throw NumericFailure("oracle integration stopped: " + traj.reason);
      ref = traj.final_state();
    }
    double e = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) e = std::max(e, std::abs(ref[i] - states[k][i]));
    errors.push_back(e);
  }
  write_trajectory_csv(std::cout, times, states, &errors);
  return kOk;
}

// ---- series ----

int run_series(const std::string& path, int order, const std::string& x0_text) {
  const auto file = parse_field(path);
  const auto series = build_series(file.field, order);
  json out;
  out["order"] = order;
  out["dimension"] = file.field.dimension();
  out["field"] = field_to_json(file.field, file.spectrum);
  out["diagrams"] = json::array();
  for (int n = 1; n <= order; ++n) {
    for (const auto& term : series.terms(n)) {
      const auto fact = tree_factorial(term.code);
      out["diagrams"].push_back({{"order", n},
                                 {"diagram", term.diagram().to_string()},
                                 {"tree_factorial", fact},
                                 {"coefficient", 1.0 / static_cast<double>(fact)}});
    }
  }
  if (!x0_text.empty()) {
    const auto x0 = parse_vector(x0_text, file.field.dimension(), "--x0");
    json values = json::array();
    for (const auto& v : series.order_values(std::span<const Complex>(x0))) values.push_back(complex_array(v));
    out["order_values"] = values;
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---- radius ----

int run_radius(const std::string& path, const std::string& x0_text) {
  const auto file = parse_field(path);
  std::optional<std::vector<Complex>> x0;
  if (!x0_text.empty()) x0 = parse_vector(x0_text, file.field.dimension(), "--x0");
  const auto r = radius_estimate(file.field, x0);
  json out{{"s", r.s},
           {"norm_bound", r.norm_bound},
           {"bound", r.corrected_bound},
           {"printed_bound", r.printed_bound},
           {"x0_norm", optional_number(r.x0_norm)},
           {"time_bound", optional_number(r.time_bound)},
           {"exact_blowup", optional_number(r.exact_blowup)},
           {"empirical_blowup", optional_number(r.empirical_blowup)}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---- linearize ----

template <Scalar S>
json linearize_json(const PolynomialVectorField<S>& field, const std::vector<S>& spectrum, int order,
                    const std::optional<std::vector<S>>& x0) {
  std::span<const S> spec(spectrum);
  const auto series = linearizing_map(field, spec, order);
  json out;
  out["order"] = order;
  out["spectrum"] = complex_array(to_complex_vector(spectrum));
  out["diagrams"] = json::array();
  for (std::size_t k = 0; k < series.skeletons.size(); ++k) {
    out["diagrams"].push_back({{"skeleton", series.skeletons[k].to_string()},
                               {"order", series.skeletons[k].order()},
                               {"C_D", complex_json(to_complex(series.coefficients[k]))}});
  }
  out["c0"] = x0 ? complex_array(to_complex_vector(deformed_initial_conditions(series, std::span<const S>(*x0)))) : json(nullptr);
  try {
    const auto params = estimate_diophantine(spec, series_degree(series.nonlinear, order));
    const auto r = perturbation_radius_bound(field, params, std::max(order, 1));
    out["radius_bound"] = r.x_bound;
  } catch (const std::invalid_argument& e) {
    std::cerr << "note: no radius bound (" << e.what() << ")\n";
    out["radius_bound"] = nullptr;
  }
  return out;
}

int run_linearize(const std::string& path, int order, const std::string& x0_text) {
  const auto file = parse_field(path);
  const auto spec = spectrum_for(file);
  std::optional<std::vector<Complex>> x0;
  if (!x0_text.empty()) x0 = parse_vector(x0_text, file.field.dimension(), "--x0");
  json out;
  if (rational_mode_requested()) {
    std::optional<std::vector<GaussianRational>> xe;
    if (x0) xe = exact_vector(*x0);
    out = linearize_json(exact_field(file.field), exact_vector(spec), order, xe);
  } else {
    out = linearize_json(file.field, spec, order, x0);
  }
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---- resonances ----

template <Scalar S>
json resonances_json(const PolynomialVectorField<S>& field, const std::vector<S>& spectrum, int bound, int max_order) {
  std::span<const S> spec(spectrum);
  const auto relations = find_resonance_relations(spec, bound);
  std::map<std::pair<std::vector<int>, int>, std::string> witnesses;
  if (max_order > 0) {
    for (const auto& r : find_resonance_diagrams(field, spec, max_order)) witnesses[{r.n, r.target}] = r.witness->to_string();
  }
  const auto g = generator_matrix(field);
  json out;
  out["spectrum"] = complex_array(to_complex_vector(spectrum));
  out["exact"] = scalar_traits<S>::exact;
  out["relations"] = json::array();
  json entries = json::array();
  for (const auto& r : relations) {
    auto it = witnesses.find({r.n, r.target});
    out["relations"].push_back({{"n", r.n},
                                {"target", r.target},
                                {"witness", it == witnesses.end() ? json(nullptr) : json(it->second)},
                                {"order_bound", max_order}});
    const auto v = necessary_condition(g, r.n, r.target);
    entries.push_back({{"n", r.n}, {"target", r.target}, {"combination", v ? json(*v) : json(nullptr)}});
  }
  out["catalog"] = {{"generators", g.labels}, {"columns", g.columns}, {"entries", entries}};
  return out;
}

int run_resonances(const std::string& path, int bound, int max_order) {
  const auto file = parse_field(path);
  const auto spec = spectrum_for(file);
  const json out = rational_mode_requested() ? resonances_json(exact_field(file.field), exact_vector(spec), bound, max_order)
                                             : resonances_json(file.field, spec, bound, max_order);
  std::cout << out.dump(2) << "\n";
  return kOk;
}

// ---- catalog ----

std::string joined(const std::set<std::string>& s) {
  std::string out;
  for (const auto& x : s) out += (out.empty() ? "" : " ") + x;
  return out;
}

int run_catalog(int k, int degree, int max_order) {
  const auto c = compare_catalog(k, degree, max_order);
  std::set<std::set<std::string>> reference;
  for (const auto& e : c.reference) reference.insert(e.generators);
  const auto opposite = c.opposite.sets();
  std::cout << "generators,min_order,witness_count,witness,in_reference,opposite_sign,status\n";
  std::set<std::set<std::string>> seen;
  for (const auto& e : c.same.entries) {
    seen.insert(e.generators);
    const bool ref = reference.count(e.generators) > 0;
    std::cout << joined(e.generators) << "," << e.min_order << "," << e.witness_count << "," << e.witness << ","
              << (ref ? "yes" : "no") << "," << (opposite.count(e.generators) ? "yes" : "no") << ","
              << (ref ? "match" : "extra") << "\n";
  }
  for (const auto& s : reference) {
    if (seen.count(s)) continue;
    std::cout << joined(s) << ",,,,yes," << (opposite.count(s) ? "yes" : "no") << ",missing\n";
  }
  std::cerr << "degree " << degree << " k=" << k << ": " << (c.same_matches ? "matches" : "differs from")
            << " the reference list\n";
  return kOk;
}

// ---- verify ----

int run_verify(std::uint64_t seed) {
  bool ok = true;
  run_acceptance(seed, [&](const CriterionResult& r) {
    print_result(std::cout, r);
    std::cout.flush();
    ok = ok && r.passed;
  });
  return ok ? kOk : kVerify;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowtree: diagram series for polynomial vector fields"};
  app.require_subcommand(1);
  std::uint64_t seed = 20240601;
  app.add_option("--seed", seed, "seed for randomized checks");

  EvolveArgs ev;
  auto* evolve = app.add_subcommand("evolve", "evaluate the flow series on [0, t] as CSV");
  evolve->add_option("--field", ev.field, "field file")->required();
  evolve->add_option("--x0", ev.x0, "initial point")->required();
  evolve->add_option("--t", ev.t, "final time")->required();
  evolve->add_option("--order", ev.order, "series order")->check(CLI::NonNegativeNumber);
  evolve->add_option("--samples", ev.samples, "number of time steps in the output");
  evolve->add_flag("--oracle", ev.oracle, "append the error against a reference solution");

  std::string field, x0;
  int order = 4, bound = 6, max_order = 4, k = 3, degree = 2, catalog_order = 6;
  auto* series = app.add_subcommand("series", "dump diagrams and coefficients as JSON");
  series->add_option("--field", field, "field file")->required();
  series->add_option("--order", order, "series order")->check(CLI::NonNegativeNumber);
  series->add_option("--x0", x0, "also print the order values at this point");

  auto* radius = app.add_subcommand("radius", "convergence radius estimate");
  radius->add_option("--field", field, "field file")->required();
  radius->add_option("--x0", x0, "initial point");

  auto* linearize = app.add_subcommand("linearize", "fixed-point linearization series");
  linearize->add_option("--field", field, "field file")->required();
  linearize->add_option("--order", order, "skeleton order")->check(CLI::PositiveNumber);
  linearize->add_option("--x0", x0, "initial point for c0");

  auto* resonances = app.add_subcommand("resonances", "resonance relations and diagrams");
  resonances->add_option("--field", field, "field file")->required();
  resonances->add_option("--bound", bound, "largest |n|")->check(CLI::Range(2, 64));
  resonances->add_option("--max-order", max_order, "largest diagram order searched")->check(CLI::NonNegativeNumber);

  auto* catalog = app.add_subcommand("catalog", "generator sets admitting resonances (d = 2) as CSV");
  catalog->add_option("--k", k, "frequency ratio")->required();
  catalog->add_option("--degree", degree, "term degree")->required();
  catalog->add_option("--max-order", catalog_order, "largest diagram order searched")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify", "run the acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*evolve) return run_evolve(ev);
    if (*series) return run_series(field, order, x0);
    if (*radius) return run_radius(field, x0);
    if (*linearize) return run_linearize(field, order, x0);
    if (*resonances) return run_resonances(field, bound, max_order);
    if (*catalog) return run_catalog(k, degree, catalog_order);
    if (*verify) return run_verify(seed);
  } catch (const ResonanceEncountered& e) {
    std::cerr << "ResonanceEncountered: " << e.what() << "\n";
    return kNumeric;
  } catch (const NumericFailure& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const FieldFormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::length_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
