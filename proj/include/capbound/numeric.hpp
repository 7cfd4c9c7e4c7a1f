#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "capbound/errors.hpp"

namespace capbound {

inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kLog2e = std::numbers::log2e;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace numeric {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
}

// Standard normal quantile; p in [0,1] maps onto the extended reals.
inline double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace detail {

template <class F>
double integrate_adaptive(F& f, double a, double b, double tol, unsigned depth) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  const double val = gauss_kronrod<double, 31>::integrate(f, a, b, 0, 0.0, &err);
  if (depth == 0 || err <= tol || err <= 1e-14 * std::abs(val)) return val;
  const double mid = 0.5 * (a + b);
  return integrate_adaptive(f, a, mid, 0.5 * tol, depth - 1) + integrate_adaptive(f, mid, b, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (31-point) quadrature on [a, b] with bisection
/// until the Kronrod error estimate meets the absolute tolerance.
///
/// An infinite upper limit is folded onto a bounded interval with
/// r = a + t / (1 - t), t in [0, 1).
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10, unsigned max_depth = 18) {
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, abs_tol, max_depth);
  if (std::isinf(a)) throw DomainError("integrate: lower limit must be finite");
  if (std::isinf(b)) {
    auto g = [&](double t) {
      if (t >= 1.0) return 0.0;
      const double one_minus = 1.0 - t;
      const double r = a + t / one_minus;
      const double v = f(r) / (one_minus * one_minus);
      return std::isfinite(v) ? v : 0.0;
    };
    return detail::integrate_adaptive(g, 0.0, 1.0, abs_tol, max_depth);
  }
  return detail::integrate_adaptive(f, a, b, abs_tol, max_depth);
}

// 64-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre64 {
  std::array<double, 64> nodes{};
  std::array<double, 64> weights{};

  static const GaussLegendre64& get() {
    static const GaussLegendre64 rule = [] {
      using G = boost::math::quadrature::gauss<double, 64>;
      GaussLegendre64 r;
      const auto& x = G::abscissa();
      const auto& w = G::weights();
      for (std::size_t i = 0; i < 32; ++i) {
        r.nodes[i] = -x[i];
        r.weights[i] = w[i];
        r.nodes[63 - i] = x[i];
        r.weights[63 - i] = w[i];
      }
      return r;
    }();
    return rule;
  }
};

struct Minimum {
  double x;
  double value;
};

// Golden-section minimisation on [a, b].
template <class F>
Minimum golden_section_minimize(F&& f, double a, double b, double tol = 1e-12, int max_iter = 200) {
  constexpr double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? Minimum{c, fc} : Minimum{d, fd};
}

/// Global-ish minimisation of a possibly multimodal function: a uniform scan
/// of `n_scan` points followed by golden-section refinement around the best
/// scan point. Endpoints are included in the scan.
template <class F>
Minimum scan_minimize(F&& f, double a, double b, int n_scan = 64, double tol = 1e-12) {
  Minimum best{a, f(a)};
  int best_i = 0;
  for (int i = 1; i <= n_scan; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / n_scan;
    const double v = f(x);
    if (v < best.value) {
      best = {x, v};
      best_i = i;
    }
  }
  const double lo = a + (b - a) * std::max(0, best_i - 1) / n_scan;
  const double hi = a + (b - a) * std::min(n_scan, best_i + 1) / n_scan;
  const Minimum refined = golden_section_minimize(f, lo, hi, tol);
  return refined.value < best.value ? refined : best;
}

/// Bisection for a sign change of `f` on [a, b]. Throws NumericError when the
/// bracket is invalid or `max_iter` is exhausted before the tolerance.
template <class F>
double bisect(F&& f, double a, double b, double tol = 1e-12, int max_iter = 200) {
  double fa = f(a);
  const double fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa < 0.0) == (fb < 0.0)) throw NumericError("bisect: root is not bracketed");
  for (int it = 0; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    if (b - a <= tol) return m;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  if (b - a <= tol) return 0.5 * (a + b);
  throw NumericError("bisect: no convergence");
}

struct NelderMeadResult {
  std::vector<double> x;
  double value;
  int evaluations;
  bool converged;
};

/// Nelder-Mead simplex minimisation with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2). Stops when the
/// spread of simplex values falls below `ftol` or after `max_eval` calls.
template <class F>
NelderMeadResult nelder_mead(F&& f, std::vector<double> x0, double step, double ftol = 1e-12,
                             int max_eval = 2000) {
  const std::size_t n = x0.size();
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step;
  int evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);
  std::vector<std::size_t> order(n + 1);
  bool converged = false;
  while (evals < max_eval) {
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];
    if (std::abs(vals[worst] - vals[best]) <= ftol) {
      converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != worst)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / static_cast<double>(n);
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + t * (pts[worst][k] - centroid[k]);
      return x;
    };
    const std::vector<double> xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const std::vector<double> xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const std::vector<double> xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[best][k] + 0.5 * (pts[i][k] - pts[best][k]);
      vals[i] = eval(pts[i]);
    }
  }
  const std::size_t b = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[b], vals[b], evals, converged};
}

}  // namespace numeric

// Uniform doubles in the open interval (0, 1) from 64-bit engine output.
// The conversion is spelled out so sampled paths do not depend on a
// particular standard library's distribution implementation.
template <class Engine>
double uniform_open(Engine& rng) {
  const std::uint64_t bits = rng() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace capbound
