#pragma once

// Numerical references: Runge-Kutta integration, Gauss-Kronrod quadrature of
// time-ordered integrals, and least-squares detection of t^k e^{rt} factors.

#include "flowtree/field.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flowtree {

enum class Method { rk4_fixed, rk45_adaptive };

struct IntegratorConfig {
  Method method = Method::rk4_fixed;
  double step = 1e-3;        // rk4 step (shrunk so that t_end is hit exactly)
  double tolerance = 1e-10;  // rk45 mixed absolute/relative local tolerance
  std::size_t max_steps = 2'000'000;
  double blowup_threshold = 0.0;  // stop once max|x_i| exceeds this (0: never)
  bool record = true;             // keep intermediate states
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<Complex>> states;
  bool truncated = false;
  std::string reason;

  const std::vector<Complex>& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

namespace detail {

inline double max_abs(const std::vector<Complex>& x) {
  double m = 0.0;
  for (const auto& c : x) m = std::max(m, std::abs(c));
  return m;
}

inline std::vector<Complex> axpy(const std::vector<Complex>& x, double h,
                                 std::initializer_list<std::pair<double, const std::vector<Complex>*>> ks) {
  std::vector<Complex> out = x;
  for (const auto& [c, k] : ks) {
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += h * c * (*k)[i];
  }
  return out;
}

}  // namespace detail

inline std::vector<Complex> rk4_step(const PolynomialVectorField<Complex>& f, const std::vector<Complex>& x, double h) {
  auto k1 = evaluate(f, x);
  auto k2 = evaluate(f, detail::axpy(x, h, {{0.5, &k1}}));
  auto k3 = evaluate(f, detail::axpy(x, h, {{0.5, &k2}}));
  auto k4 = evaluate(f, detail::axpy(x, h, {{1.0, &k3}}));
  return detail::axpy(x, h, {{1.0 / 6, &k1}, {1.0 / 3, &k2}, {1.0 / 3, &k3}, {1.0 / 6, &k4}});
}

namespace detail {

inline Trajectory integrate_rk4(const PolynomialVectorField<Complex>& f, std::vector<Complex> x, double t_end,
                                const IntegratorConfig& cfg) {
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  if (t_end == 0.0) return traj;
  const auto n = static_cast<std::size_t>(std::ceil(std::abs(t_end) / cfg.step - 1e-9));
  if (n > cfg.max_steps) throw std::invalid_argument("integrate: step count exceeds max_steps");
  const double h = t_end / static_cast<double>(n);
  for (std::size_t k = 1; k <= n; ++k) {
    x = rk4_step(f, x, h);
    const double t = k == n ? t_end : h * static_cast<double>(k);
    const bool blown = !std::isfinite(max_abs(x)) || (cfg.blowup_threshold > 0 && max_abs(x) > cfg.blowup_threshold);
    if (cfg.record || k == n || blown) {
      traj.times.push_back(t);
      traj.states.push_back(x);
    }
    if (blown) {
      traj.truncated = true;
      traj.reason = "blow-up";
      break;
    }
  }
  return traj;
}

// Dormand-Prince 5(4) with the standard step controller.
inline Trajectory integrate_rk45(const PolynomialVectorField<Complex>& f, std::vector<Complex> x, double t_end,
                                 const IntegratorConfig& cfg) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(x);
  if (t_end <= 0.0) {
    if (t_end < 0.0) throw std::invalid_argument("integrate: rk45 needs t_end >= 0");
    return traj;
  }
  double t = 0.0;
  double h = std::min(t_end, 1e-3);
  auto k1 = evaluate(f, x);
  for (std::size_t steps = 0;; ++steps) {
    if (steps >= cfg.max_steps) {
      traj.truncated = true;
      traj.reason = "max steps";
      break;
    }
    if (t + h > t_end) h = t_end - t;
    auto k2 = evaluate(f, axpy(x, h, {{a21, &k1}}));
    auto k3 = evaluate(f, axpy(x, h, {{a31, &k1}, {a32, &k2}}));
    auto k4 = evaluate(f, axpy(x, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    auto k5 = evaluate(f, axpy(x, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    auto k6 = evaluate(f, axpy(x, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    auto y = axpy(x, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    auto k7 = evaluate(f, y);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      Complex e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = cfg.tolerance * (1.0 + std::max(std::abs(x[i]), std::abs(y[i])));
      err = std::max(err, std::abs(e) / scale);
    }
    if (!std::isfinite(err)) err = 1e10;
    if (err <= 1.0) {
      t = t + h >= t_end ? t_end : t + h;
      x = std::move(y);
      k1 = std::move(k7);
      const bool blown = cfg.blowup_threshold > 0 && max_abs(x) > cfg.blowup_threshold;
      if (cfg.record || t == t_end || blown) {
        traj.times.push_back(t);
        traj.states.push_back(x);
      }
      if (blown) {
        traj.truncated = true;
        traj.reason = "blow-up";
        break;
      }
      if (t == t_end) break;
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < 1e-15 * std::max(1.0, t)) {
      traj.truncated = true;
      traj.reason = "step underflow";
      if (traj.times.back() != t) {
        traj.times.push_back(t);
        traj.states.push_back(x);
      }
      break;
    }
  }
  return traj;
}

}  // namespace detail

inline Trajectory integrate(const PolynomialVectorField<Complex>& f, const std::vector<Complex>& x0, double t_end,
                            const IntegratorConfig& cfg = {}) {
  if (x0.size() != f.dimension()) throw std::invalid_argument("integrate: dimension mismatch");
  if (cfg.method == Method::rk4_fixed) {
    if (!(cfg.step > 0)) throw std::invalid_argument("integrate: step must be positive");
    return detail::integrate_rk4(f, x0, t_end, cfg);
  }
  if (!(cfg.tolerance > 0)) throw std::invalid_argument("integrate: tolerance must be positive");
  return detail::integrate_rk45(f, x0, t_end, cfg);
}

/// Final state of a fixed-step RK4 run.
inline std::vector<Complex> rk4_solve(const PolynomialVectorField<Complex>& f, const std::vector<Complex>& x0,
                                      double t_end, double step = 1e-3) {
  IntegratorConfig cfg;
  cfg.step = step;
  cfg.record = false;
  return integrate(f, x0, t_end, cfg).final_state();
}

/// Time at which an adaptive run first exceeds `factor` times max|x0|.
/// Empty if the run reaches t_max without doing so.
inline std::optional<double> empirical_blowup(const PolynomialVectorField<Complex>& f, const std::vector<Complex>& x0,
                                              double t_max, double factor = 1e6, double tolerance = 1e-10) {
  IntegratorConfig cfg;
  cfg.method = Method::rk45_adaptive;
  cfg.tolerance = tolerance;
  cfg.record = false;
  cfg.blowup_threshold = factor * detail::max_abs(x0);
  auto traj = integrate(f, x0, t_max, cfg);
  if (!traj.truncated) return std::nullopt;
  return traj.final_time();
}

// ---- quadrature ----

struct QuadratureResult {
  Complex value;
  double error_estimate = 0.0;
};

/// Adaptive Gauss-Kronrod (15/31) on [a, b]; real and imaginary parts separately.
inline QuadratureResult integrate_1d(const std::function<Complex(double)>& g, double a, double b,
                                     double tolerance = 1e-13, unsigned max_depth = 20) {
  using boost::math::quadrature::gauss_kronrod;
  double err_re = 0.0, err_im = 0.0;
  const double re = gauss_kronrod<double, 31>::integrate([&](double s) { return g(s).real(); }, a, b, max_depth,
                                                         tolerance, &err_re);
  const double im = gauss_kronrod<double, 31>::integrate([&](double s) { return g(s).imag(); }, a, b, max_depth,
                                                         tolerance, &err_im);
  const double scale = std::max(1.0, std::abs(Complex(re, im)));
  if (!std::isfinite(re) || !std::isfinite(im) || std::max(err_re, err_im) > 1e-6 * scale) {
    throw std::runtime_error("quadrature did not converge");
  }
  return {Complex(re, im), std::max(err_re, err_im)};
}

/// Integral over the ordered simplex 0 < t1 < t2 < t of g(t1, t2).
inline QuadratureResult ordered_integral_2d(const std::function<Complex(double, double)>& g, double t,
                                            double tolerance = 1e-10) {
  double inner_err = 0.0;
  auto outer = [&](double t2) {
    auto r = integrate_1d([&](double t1) { return g(t1, t2); }, 0.0, t2, tolerance, 12);
    inner_err = std::max(inner_err, r.error_estimate);
    return r.value;
  };
  auto r = integrate_1d(outer, 0.0, t, tolerance, 12);
  r.error_estimate += inner_err * std::abs(t);
  return r;
}

/// Sum of the eigenvalues of a term's lower indices.
inline Complex slot_rate(const PolyTerm<Complex>& term, std::span<const Complex> spectrum) {
  Complex sum(0.0);
  for (int i : term.monomial.indices()) sum += spectrum[static_cast<std::size_t>(i)];
  return sum;
}

/// Time-ordered integrals in the interaction picture.
/// depth 1: coeff * int_0^t e^{lam_i (t - t1)} e^{(lam . n) t1} dt1 for terms[0].
/// depth 2: terms[1] feeds the first matching slot of terms[0]; the other
/// slots of terms[0] are open (they evolve as e^{lam_j t2}).
inline Complex iterated_integral_quadrature(std::span<const Complex> spectrum, const std::vector<PolyTerm<Complex>>& terms,
                                            int depth, double t) {
  if (depth == 1) {
    if (terms.empty()) throw std::invalid_argument("iterated_integral_quadrature: missing term");
    const auto& a = terms[0];
    const Complex li = spectrum[static_cast<std::size_t>(a.target)];
    const Complex rate = slot_rate(a, spectrum);
    return a.coeff * integrate_1d([&](double t1) { return std::exp(li * (t - t1) + rate * t1); }, 0.0, t).value;
  }
  if (depth == 2) {
    if (terms.size() < 2) throw std::invalid_argument("iterated_integral_quadrature: depth 2 needs two terms");
    const auto& a = terms[0];
    const auto& b = terms[1];
    auto idx = a.monomial.indices();
    auto it = std::find(idx.begin(), idx.end(), b.target);
    if (it == idx.end()) throw std::invalid_argument("iterated_integral_quadrature: inner target not a slot of outer");
    idx.erase(it);
    Complex open(0.0);
    for (int j : idx) open += spectrum[static_cast<std::size_t>(j)];
    const Complex la = spectrum[static_cast<std::size_t>(a.target)];
    const Complex lb = spectrum[static_cast<std::size_t>(b.target)];
    const Complex rb = slot_rate(b, spectrum);
    auto g = [&](double t1, double t2) {
      return std::exp(la * (t - t2) + open * t2) * std::exp(lb * (t2 - t1) + rb * t1);
    };
    return a.coeff * b.coeff * ordered_integral_2d(g, t).value;
  }
  throw std::invalid_argument("iterated_integral_quadrature: depth must be 1 or 2");
}

// ---- secular fit ----

struct SecularFit {
  bool detected = false;
  int k = 0;               // highest significant power of t
  Complex rate;            // exponential rate that was stripped
  Complex amplitude;       // coefficient of t^k e^{rate t}
  double residual = 0.0;   // RMS residual of the selected model
  std::vector<double> model_residuals;  // RMS residual for degree 0..max_k
};

/// Least-squares fit of samples y(t) to sum_j a_j t^j e^{rate t} plus free
/// multiples of e^{r t} for each extra rate. Degree k is significant when it
/// lowers the residual of degree k-1 more than tenfold (above a noise floor);
/// the reported k is the highest significant degree.
inline SecularFit fit_secular(const std::vector<double>& times, const std::vector<Complex>& values, Complex rate,
                              int max_k, const std::vector<Complex>& extra_rates = {}) {
  if (times.size() != values.size()) throw std::invalid_argument("fit_secular: size mismatch");
  if (times.size() < 20) throw std::invalid_argument("fit_secular: need at least 20 samples");
  if (max_k < 0) throw std::invalid_argument("fit_secular: max_k must be >= 0");
  std::vector<Complex> extras;
  for (const auto& r : extra_rates) {
    bool dup = std::abs(r - rate) < 1e-9 * (1.0 + std::abs(rate));
    for (const auto& e : extras) dup = dup || std::abs(r - e) < 1e-9 * (1.0 + std::abs(r));
    if (!dup) extras.push_back(r);
  }
  const double t_max = std::max(std::abs(times.front()), std::abs(times.back()));
  if (!(t_max > 0)) throw std::invalid_argument("fit_secular: degenerate time range");
  const auto n = static_cast<Eigen::Index>(times.size());
  Eigen::VectorXcd y(n);
  double y_max = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    y(r) = values[static_cast<std::size_t>(r)];
    y_max = std::max(y_max, std::abs(y(r)));
  }
  const double floor = 1e-10 * std::max(y_max, 1e-300);
  auto rms = [&](const Eigen::VectorXcd& v) { return std::sqrt(v.squaredNorm() / static_cast<double>(n)); };

  SecularFit fit;
  fit.rate = rate;
  std::vector<Eigen::VectorXcd> coeffs;
  for (int k = 0; k <= max_k; ++k) {
    const auto cols = static_cast<Eigen::Index>(k + 1 + static_cast<int>(extras.size()));
    Eigen::MatrixXcd a(n, cols);
    for (Eigen::Index r = 0; r < n; ++r) {
      const double t = times[static_cast<std::size_t>(r)];
      const Complex e = std::exp(rate * t);
      for (int j = 0; j <= k; ++j) a(r, j) = std::pow(t / t_max, j) * e;
      for (std::size_t q = 0; q < extras.size(); ++q) a(r, k + 1 + static_cast<Eigen::Index>(q)) = std::exp(extras[q] * t);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(a);
    qr.setThreshold(1e-13);
    if (qr.rank() < cols) throw std::runtime_error("fit_secular: ill-conditioned fit");
    Eigen::VectorXcd c = qr.solve(y);
    fit.model_residuals.push_back(rms(a * c - y));
    coeffs.push_back(std::move(c));
  }
  const double zero_res = rms(y);
  // nothing to detect when even the richest model explains no more than noise
  if (!(zero_res > 10.0 * std::max(fit.model_residuals.back(), floor))) {
    fit.detected = false;
    fit.residual = fit.model_residuals.back();
    return fit;
  }
  int best = 0;
  for (int k = 1; k <= max_k; ++k) {
    const double prev = fit.model_residuals[static_cast<std::size_t>(k - 1)];
    const double cur = fit.model_residuals[static_cast<std::size_t>(k)];
    if (prev > 10.0 * std::max(cur, floor)) best = k;
  }
  fit.detected = true;
  fit.k = best;
  fit.residual = fit.model_residuals[static_cast<std::size_t>(best)];
  fit.amplitude = coeffs[static_cast<std::size_t>(best)](best) / std::pow(t_max, best);
  return fit;
}

inline SecularFit fit_secular(const Trajectory& traj, std::size_t component, Complex rate, int max_k,
                              const std::vector<Complex>& extra_rates = {}) {
  std::vector<Complex> y;
  for (const auto& s : traj.states) y.push_back(s.at(component));
  return fit_secular(traj.times, y, rate, max_k, extra_rates);
}

}  // namespace flowtree
