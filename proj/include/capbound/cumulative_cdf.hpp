#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "capbound/cdf_curve.hpp"
#include "capbound/copula.hpp"
#include "capbound/errors.hpp"
#include "capbound/marginal.hpp"
#include "capbound/numeric.hpp"

namespace capbound {

namespace detail {
// FFTW planner and plan destruction are not thread-safe.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}
}  // namespace detail

/// P(S <= x) for tau comonotonic slots with common marginal m: S = tau C.
inline double exact_cdf_comonotonic(const Marginal& m, int tau, double x) {
  if (tau < 1) throw DomainError("exact_cdf_comonotonic: tau must be >= 1");
  return m.cdf(x / tau);
}

/// P(C_1 + ... + C_d <= z) for d <= 3 by integrating the copula measure of
/// {u : sum of quantiles <= z}. The last coordinate is integrated in closed
/// form through the conditional CDF D1C, so d = 2 is a single integral and
/// d = 3 a double one.
inline double exact_cdf_copula_integral(const DependenceSpec& spec, const std::vector<Marginal>& margins,
                                        double z) {
  const std::size_t d = margins.size();
  if (d == 0) throw DomainError("exact_cdf_copula_integral: needs at least one marginal");
  if (d > 3) throw CapabilityError("exact_cdf_copula_integral: dimension above 3 is not supported");
  if (!spec.has_density())
    throw CapabilityError("exact_cdf_copula_integral: dependence '" + spec.label() + "' has no copula density");
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  if (d == 1) return margins[0].cdf(z);

  const bool indep = spec.kind() == DependenceSpec::Kind::independent;
  auto cond = [&](double u, double v) {  // P(U_next <= v | U_prev = u)
    if (indep) return std::clamp(v, 0.0, 1.0);
    return spec.bivariate().d1(u, v);
  };
  auto dens = [&](double u, double v) { return indep ? 1.0 : spec.bivariate().density(u, v); };

  const double top1 = margins[0].cdf(z);
  if (top1 <= 0.0) return 0.0;
  if (d == 2) {
    auto f = [&](double u1) {
      if (u1 <= 0.0 || u1 >= 1.0) return 0.0;
      return cond(u1, margins[1].cdf(z - margins[0].quantile(u1)));
    };
    return std::clamp(numeric::integrate(f, 0.0, top1, 1e-10), 0.0, 1.0);
  }
  auto outer = [&](double u1) {
    if (u1 <= 0.0 || u1 >= 1.0) return 0.0;
    const double rest = z - margins[0].quantile(u1);
    const double top2 = margins[1].cdf(rest);
    if (top2 <= 0.0) return 0.0;
    auto inner = [&](double u2) {
      if (u2 <= 0.0 || u2 >= 1.0) return 0.0;
      return dens(u1, u2) * cond(u2, margins[2].cdf(rest - margins[1].quantile(u2)));
    };
    return numeric::integrate(inner, 0.0, top2, 1e-10, 12);
  };
  return std::clamp(numeric::integrate(outer, 0.0, top1, 1e-9, 12), 0.0, 1.0);
}

/// CDF of the sum of tau i.i.d. copies of m by discrete convolution.
///
/// The marginal is discretized on a lattice of width h with mass
/// F((k+1/2)h) - F((k-1/2)h) at kh, so the lattice law keeps all mass; h is
/// chosen so grid_n lattice points cover [0, tau q] with q the
/// (1 - 1e-10)-quantile. The tau-fold convolution is a pointwise power of
/// the real FFT. The returned curve is sampled at (K+1/2)h.
inline CdfCurve cdf_iid_convolution(const Marginal& m, int tau, std::size_t grid_n = 4096) {
  if (tau < 1) throw DomainError("cdf_iid_convolution: tau must be >= 1");
  if (grid_n < 16) throw DomainError("cdf_iid_convolution: grid_n must be >= 16");
  const double q = m.quantile(1.0 - 1e-10);
  const double h = static_cast<double>(tau) * q / static_cast<double>(grid_n);
  const std::size_t k1 = static_cast<std::size_t>(std::ceil(q / h));
  std::vector<double> p(k1 + 1);
  double prev = 0.0;
  for (std::size_t k = 0; k <= k1; ++k) {
    const double cur = m.cdf((static_cast<double>(k) + 0.5) * h);
    p[k] = cur - prev;
    prev = cur;
  }
  p[k1] += 1.0 - prev;  // mass beyond the lattice goes to the last point

  const std::size_t support = static_cast<std::size_t>(tau) * k1 + 1;
  std::vector<double> mass;
  if (tau == 1) {
    mass = p;
  } else {
    std::size_t len = 1;
    while (len < support) len <<= 1;
    const std::size_t nc = len / 2 + 1;
    std::vector<double> buf(len, 0.0);
    std::vector<std::complex<double>> spec(nc);
    fftw_plan fwd, inv;
    {
      const std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      fwd = fftw_plan_dft_r2c_1d(static_cast<int>(len), buf.data(),
                                 reinterpret_cast<fftw_complex*>(spec.data()), FFTW_ESTIMATE);
      inv = fftw_plan_dft_c2r_1d(static_cast<int>(len), reinterpret_cast<fftw_complex*>(spec.data()),
                                 buf.data(), FFTW_ESTIMATE);
    }
    std::copy(p.begin(), p.end(), buf.begin());
    fftw_execute(fwd);
    for (auto& c : spec) {
      std::complex<double> acc(1.0, 0.0), base = c;
      for (int e = tau; e > 0; e >>= 1) {
        if (e & 1) acc *= base;
        base *= base;
      }
      c = acc;
    }
    fftw_execute(inv);
    {
      const std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
      fftw_destroy_plan(fwd);
      fftw_destroy_plan(inv);
    }
    mass.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(support));
    for (double& v : mass) v = std::max(0.0, v / static_cast<double>(len));
  }

  std::vector<double> xs(mass.size()), ps(mass.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    acc += mass[k];
    xs[k] = (static_cast<double>(k) + 0.5) * h;
    ps[k] = std::clamp(acc, k ? ps[k - 1] : 0.0, 1.0);
  }
  const double total = acc;
  for (double& v : ps) v = std::min(1.0, v / total);
  ps.back() = 1.0;
  return {std::move(xs), std::move(ps)};
}

/// Normal approximation Phi((x - tau mu) / (sqrt(tau) sigma)).
inline double cdf_iid_clt(const Moments& mo, int tau, double x) {
  if (tau < 1) throw DomainError("cdf_iid_clt: tau must be >= 1");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double sd = std::sqrt(static_cast<double>(tau) * mo.variance);
  if (sd == 0.0) return x >= tau * mo.mean ? 1.0 : 0.0;
  return numeric::normal_cdf((x - tau * mo.mean) / sd);
}

inline double cdf_iid_clt(const Marginal& m, int tau, double x) { return cdf_iid_clt(m.moments(), tau, x); }

enum class Tail { upper, lower };

/// Chernoff bound for the sum of tau i.i.d. copies of m.
///
/// Upper tail: P(S >= x) <= inf_{theta>0} exp(-theta x + tau kappa(theta));
/// lower tail: P(S <= x) <= inf_{theta>0} exp(theta x + tau kappa(-theta)),
/// with kappa the log-MGF. The infimum is taken over a log grid on
/// [1e-3, 50] (kappa cached at construction) refined by golden section in
/// log theta. Results are clamped to 1.
class ChernoffTail {
 public:
  ChernoffTail(const Marginal& m, int tau, Tail tail, std::size_t grid = 121)
      : m_(m), tau_(tau), sign_(tail == Tail::upper ? 1.0 : -1.0) {
    if (tau < 1) throw DomainError("tail_iid_chernoff: tau must be >= 1");
    const double lo = std::log(1e-3), hi = std::log(50.0);
    for (std::size_t i = 0; i < grid; ++i) {
      const double lt = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
      log_theta_.push_back(lt);
      kappa_.push_back(m_.log_mgf(sign_ * std::exp(lt)));
    }
  }

  double operator()(double x) const {
    auto exponent = [&](double theta, double kappa) { return -sign_ * theta * x + tau_ * kappa; };
    std::size_t best = 0;
    double best_val = kInf;
    for (std::size_t i = 0; i < log_theta_.size(); ++i) {
      const double v = exponent(std::exp(log_theta_[i]), kappa_[i]);
      if (v < best_val) {
        best_val = v;
        best = i;
      }
    }
    const double a = log_theta_[best ? best - 1 : 0];
    const double b = log_theta_[std::min(best + 1, log_theta_.size() - 1)];
    auto f = [&](double lt) {
      const double t = std::exp(lt);
      return exponent(t, m_.log_mgf(sign_ * t));
    };
    const numeric::Minimum r = numeric::golden_section_minimize(f, a, b, 1e-9, 80);
    best_val = std::min(best_val, r.value);
    return std::min(1.0, std::exp(best_val));
  }

 private:
  Marginal m_;
  int tau_;
  double sign_;
  std::vector<double> log_theta_;
  std::vector<double> kappa_;
};

inline double tail_iid_chernoff(const Marginal& m, int tau, double x, Tail tail = Tail::upper) {
  return ChernoffTail(m, tau, tail)(x);
}

}  // namespace capbound
