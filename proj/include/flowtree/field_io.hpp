#pragma once

// Field files: {"dimension": d, "terms": [{"target": i, "exponents": [...], "coeff": [re, im]}],
//               "spectrum": [[re, im], ...]}   (spectrum optional)

#include "flowtree/field.hpp"
#include "flowtree/scalar.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtree {

class FieldFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FieldFile {
  PolynomialVectorField<Complex> field{1};
  std::optional<std::vector<Complex>> spectrum;
};

namespace detail {

inline Complex parse_complex(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) return {j[0].get<double>(), j[1].get<double>()};
  throw FieldFormatError(where + ": expected a number or [re, im]");
}

inline int parse_int(const nlohmann::json& j, const std::string& where) {
  if (!j.is_number_integer()) throw FieldFormatError(where + ": expected an integer");
  return j.get<int>();
}

inline std::string line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) line += text[k] == '\n' ? 1 : 0;
  return "line " + std::to_string(line);
}

}  // namespace detail

inline FieldFile field_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw FieldFormatError("document: expected an object");
  if (!doc.contains("dimension")) throw FieldFormatError("document: missing \"dimension\"");
  const int d = detail::parse_int(doc["dimension"], "dimension");
  if (d < 1) throw FieldFormatError("dimension: must be >= 1");
  if (!doc.contains("terms") || !doc["terms"].is_array()) throw FieldFormatError("document: missing \"terms\" array");
  std::vector<PolyTerm<Complex>> terms;
  const auto& arr = doc["terms"];
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = "terms[" + std::to_string(k) + "]";
    const auto& t = arr[k];
    if (!t.is_object()) throw FieldFormatError(where + ": expected an object");
    for (const char* key : {"target", "exponents", "coeff"}) {
      if (!t.contains(key)) throw FieldFormatError(where + ": missing \"" + key + "\"");
    }
    const int target = detail::parse_int(t["target"], where + ".target");
    if (target < 0 || target >= d) throw FieldFormatError(where + ".target: out of range for dimension " + std::to_string(d));
    const auto& ex = t["exponents"];
    if (!ex.is_array()) throw FieldFormatError(where + ".exponents: expected an array");
    if (ex.size() != static_cast<std::size_t>(d)) {
      throw FieldFormatError(where + ".exponents: length " + std::to_string(ex.size()) + " does not match dimension " +
                             std::to_string(d));
    }
    std::vector<int> e;
    for (std::size_t q = 0; q < ex.size(); ++q) {
      const int v = detail::parse_int(ex[q], where + ".exponents[" + std::to_string(q) + "]");
      if (v < 0) throw FieldFormatError(where + ".exponents[" + std::to_string(q) + "]: negative exponent");
      e.push_back(v);
    }
    terms.push_back({target, Monomial(std::move(e)), detail::parse_complex(t["coeff"], where + ".coeff")});
  }
  FieldFile out;
  try {
    out.field = PolynomialVectorField<Complex>(static_cast<std::size_t>(d), std::move(terms));
  } catch (const std::invalid_argument& e) {
    throw FieldFormatError(std::string("terms: ") + e.what());
  }
  if (doc.contains("spectrum")) {
    const auto& sp = doc["spectrum"];
    if (!sp.is_array() || sp.size() != static_cast<std::size_t>(d)) {
      throw FieldFormatError("spectrum: expected " + std::to_string(d) + " entries");
    }
    std::vector<Complex> spec;
    for (std::size_t i = 0; i < sp.size(); ++i) spec.push_back(detail::parse_complex(sp[i], "spectrum[" + std::to_string(i) + "]"));
    std::vector<Complex> diag(static_cast<std::size_t>(d), Complex(0.0));
    for (const auto& t : out.field.terms()) {
      if (t.degree() != 1) continue;
      const int j = t.monomial.indices()[0];
      if (j != t.target) throw FieldFormatError("spectrum: linear part is not diagonal (term " + term_label(t) + ")");
      diag[static_cast<std::size_t>(j)] = t.coeff;
    }
    for (std::size_t i = 0; i < spec.size(); ++i) {
      if (std::abs(spec[i] - diag[i]) > 1e-12 * std::max(1.0, std::abs(spec[i]))) {
        throw FieldFormatError("spectrum[" + std::to_string(i) + "]: does not match the linear part");
      }
    }
    out.spectrum = std::move(spec);
  }
  return out;
}

inline FieldFile parse_field_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FieldFormatError(detail::line_of(text, e.byte) + ": " + e.what());
  }
  return field_from_json(doc);
}

inline FieldFile parse_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FieldFormatError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_field_text(ss.str());
  } catch (const FieldFormatError& e) {
    throw FieldFormatError(path + ": " + e.what());
  }
}

inline nlohmann::json complex_json(Complex z) { return nlohmann::json::array({z.real() + 0.0, z.imag() + 0.0}); }  // no -0

inline nlohmann::json field_to_json(const PolynomialVectorField<Complex>& field,
                                    const std::optional<std::vector<Complex>>& spectrum = std::nullopt) {
  nlohmann::json doc;
  doc["dimension"] = field.dimension();
  doc["terms"] = nlohmann::json::array();
  for (const auto& t : field.terms()) {
    doc["terms"].push_back({{"target", t.target}, {"exponents", t.monomial.exponents()}, {"coeff", complex_json(t.coeff)}});
  }
  if (spectrum) {
    doc["spectrum"] = nlohmann::json::array();
    for (const auto& z : *spectrum) doc["spectrum"].push_back(complex_json(z));
  }
  return doc;
}

/// FLOWTREE_RATIONAL=1 requests exact arithmetic where a command supports it.
inline bool rational_mode_requested() {
  const char* v = std::getenv("FLOWTREE_RATIONAL");
  return v != nullptr && std::string(v) == "1";
}

/// First continued-fraction convergent p/q that rounds back to v, so 0.1
/// becomes 1/10; falls back to the exact binary value.
inline Rational rationalize(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("rationalize: non-finite value");
  const Rational exact = exact_rational(v);
  BigInt h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  Rational rest = exact;
  for (int step = 0; step < 64; ++step) {
    const BigInt num = numerator(rest), den = denominator(rest);
    BigInt a = num / den;
    if (num < 0 && num % den != 0) a -= 1;  // floor
    const BigInt h2 = a * h1 + h0, k2 = a * k1 + k0;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const Rational approx(h1, k1);
    if (approx.convert_to<double>() == v) return approx;
    const Rational frac = rest - Rational(a);
    if (frac == 0) break;
    rest = Rational(1) / frac;
  }
  return exact;
}

inline GaussianRational rationalize(const Complex& z) { return {rationalize(z.real()), rationalize(z.imag())}; }

/// Exact copy of a floating field, coefficients rationalized.
inline PolynomialVectorField<GaussianRational> exact_field(const PolynomialVectorField<Complex>& f) {
  return convert_field<GaussianRational>(f, [](const Complex& z) { return rationalize(z); });
}

inline std::vector<GaussianRational> exact_vector(const std::vector<Complex>& v) {
  std::vector<GaussianRational> out;
  for (const auto& z : v) out.push_back(rationalize(z));
  return out;
}

}  // namespace flowtree
