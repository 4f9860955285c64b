#pragma once

// Scalar types used throughout flowtree.
//
// Two modes exist: complex floating point for dynamics, and exact
// (Gaussian) rationals for combinatorial identities. Every algorithm is a
// template over the scalar; scalar_traits<S> supplies the few operations that
// differ between the modes.

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace flowtree {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using Complex = std::complex<double>;

/// Exact complex number with rational real and imaginary parts.
class GaussianRational {
 public:
  GaussianRational() = default;
  GaussianRational(long long re) : re_(re) {}  // NOLINT: implicit like int -> double
  GaussianRational(Rational re) : re_(std::move(re)) {}  // NOLINT
  GaussianRational(Rational re, Rational im) : re_(std::move(re)), im_(std::move(im)) {}

  static GaussianRational i() { return {Rational(0), Rational(1)}; }

  const Rational& real() const { return re_; }
  const Rational& imag() const { return im_; }

  GaussianRational& operator+=(const GaussianRational& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  GaussianRational& operator-=(const GaussianRational& o) {
    re_ -= o.re_;
    im_ -= o.im_;
    return *this;
  }
  GaussianRational& operator*=(const GaussianRational& o) {
    Rational re = re_ * o.re_ - im_ * o.im_;
    Rational im = re_ * o.im_ + im_ * o.re_;
    re_ = std::move(re);
    im_ = std::move(im);
    return *this;
  }
  GaussianRational& operator/=(const GaussianRational& o) {
    Rational den = o.re_ * o.re_ + o.im_ * o.im_;
    if (den == 0) throw std::domain_error("GaussianRational: division by zero");
    Rational re = (re_ * o.re_ + im_ * o.im_) / den;
    Rational im = (im_ * o.re_ - re_ * o.im_) / den;
    re_ = std::move(re);
    im_ = std::move(im);
    return *this;
  }

  friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
  friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
  friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
  friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
  friend GaussianRational operator-(const GaussianRational& a) { return {Rational(-a.re_), Rational(-a.im_)}; }
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
    return a.re_ == b.re_ && a.im_ == b.im_;
  }

  friend std::ostream& operator<<(std::ostream& os, const GaussianRational& z) {
    os << z.re_;
    if (z.im_ != 0) os << (z.im_ > 0 ? "+" : "") << z.im_ << "i";
    return os;
  }

 private:
  Rational re_{0};
  Rational im_{0};
};

template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Complex> {
  static constexpr bool exact = false;
  static Complex from_int(long long v) { return {static_cast<double>(v), 0.0}; }
  static Complex from_rational(const Rational& r) { return {r.convert_to<double>(), 0.0}; }
  static Complex to_complex(const Complex& z) { return z; }
  static double magnitude(const Complex& z) { return std::abs(z); }
  static bool is_finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }
};

template <>
struct scalar_traits<Rational> {
  static constexpr bool exact = true;
  static Rational from_int(long long v) { return Rational(v); }
  static Rational from_rational(const Rational& r) { return r; }
  static Complex to_complex(const Rational& r) { return {r.convert_to<double>(), 0.0}; }
  static double magnitude(const Rational& r) { return std::abs(r.convert_to<double>()); }
  static bool is_finite(const Rational&) { return true; }
};

template <>
struct scalar_traits<GaussianRational> {
  static constexpr bool exact = true;
  static GaussianRational from_int(long long v) { return GaussianRational(v); }
  static GaussianRational from_rational(const Rational& r) { return GaussianRational(r); }
  static Complex to_complex(const GaussianRational& z) {
    return {z.real().convert_to<double>(), z.imag().convert_to<double>()};
  }
  static double magnitude(const GaussianRational& z) { return std::abs(to_complex(z)); }
  static bool is_finite(const GaussianRational&) { return true; }
};

template <class S>
concept Scalar = requires(S a, S b) {
  { a + b } -> std::convertible_to<S>;
  { a - b } -> std::convertible_to<S>;
  { a * b } -> std::convertible_to<S>;
  { a / b } -> std::convertible_to<S>;
  { -a } -> std::convertible_to<S>;
  { a == b } -> std::convertible_to<bool>;
  { scalar_traits<S>::exact } -> std::convertible_to<bool>;
};

template <Scalar S>
S from_int(long long v) {
  return scalar_traits<S>::from_int(v);
}

template <Scalar S>
Complex to_complex(const S& v) {
  return scalar_traits<S>::to_complex(v);
}

template <Scalar S>
double magnitude(const S& v) {
  return scalar_traits<S>::magnitude(v);
}

/// Zero test: exact comparison for exact scalars, |v| <= tol otherwise.
template <Scalar S>
bool near_zero(const S& v, double tol) {
  if constexpr (scalar_traits<S>::exact) {
    return v == S(0);
  } else {
    return magnitude(v) <= tol;
  }
}

/// Exact conversion of a finite double to a rational.
inline Rational exact_rational(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("exact_rational: non-finite value");
  int exponent = 0;
  double mantissa = std::frexp(v, &exponent);
  // 53 bits of mantissa scaled to an integer.
  auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  exponent -= 53;
  Rational r(scaled);
  if (exponent > 0) {
    r *= Rational(BigInt(1) << exponent);
  } else if (exponent < 0) {
    r /= Rational(BigInt(1) << (-exponent));
  }
  return r;
}

inline GaussianRational exact_gaussian(const Complex& z) {
  return {exact_rational(z.real()), exact_rational(z.imag())};
}

template <Scalar S>
std::string to_string(const S& v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace flowtree
