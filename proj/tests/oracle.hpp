#pragma once

// Reference computations for the test suites. These deliberately avoid the
// library's quadrature, root finders and optimisers.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double rayleigh_cdf(double gamma, double r) { return r <= 0.0 ? 0.0 : 1.0 - std::exp(-(std::exp2(r) - 1.0) / gamma); }

inline double rayleigh_pdf(double gamma, double r) {
  if (r < 0.0) return 0.0;
  return std::log(2.0) / gamma * std::exp2(r) * std::exp(-(std::exp2(r) - 1.0) / gamma);
}

inline double rayleigh_log_pdf(double gamma, double r) {
  return std::log(std::log(2.0) / gamma) + r * std::log(2.0) - (std::exp2(r) - 1.0) / gamma;
}

// Composite Simpson with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Integral over [a, inf) through r = a + t / (1 - t); f must decay fast.
inline double simpson_to_inf(const std::function<double(double)>& f, double a, int n = 40000) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t;
    return f(a + t / s) / (s * s);
  };
  return simpson(g, 0.0, 1.0 - 1e-12, n);
}

// Plain bisection on a sign change.
inline double bisect(const std::function<double(double)>& f, double a, double b, int iters = 200) {
  double fa = f(a);
  for (int i = 0; i < iters; ++i) {
    const double m = 0.5 * (a + b);
    const double fm = f(m);
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Empirical CDF of an unsorted sample at x.
inline double ecdf(std::vector<double> v, double x) {
  std::size_t k = 0;
  for (double s : v) k += s <= x;
  return static_cast<double>(k) / static_cast<double>(v.size());
}

// Lag-one sample autocorrelation across paths: corr(C_1, C_2).
inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
