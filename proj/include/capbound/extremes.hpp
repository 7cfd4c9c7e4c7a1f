#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "capbound/copula.hpp"
#include "capbound/csv.hpp"
#include "capbound/errors.hpp"
#include "capbound/marginal.hpp"
#include "capbound/numeric.hpp"

namespace capbound {

/// Window statistics of one capacity path C(1..t), with S(j,k) = C(j+1) + ... + C(k).
/// Forward statistics range over prefixes S(0,k), backward over suffixes
/// S(k,t), general over all nonempty windows.
struct PathExtremes {
  double S_total = 0.0;
  double fwd_max = 0.0;
  double bwd_max = 0.0;
  double gen_max = 0.0;
  double fwd_min = 0.0;
  double bwd_min = 0.0;
  double gen_min = 0.0;
  double range_gen = 0.0;  // gen_max - gen_min
  double range_fwd = 0.0;  // fwd_max - fwd_min
};

inline PathExtremes path_extremes(std::span<const double> c) {
  if (c.empty()) throw DomainError("path_extremes: path must have length >= 1");
  PathExtremes e;
  double prefix = 0.0;
  double best_end_max = -kInf, best_end_min = kInf;  // best window ending at the current slot
  e.fwd_max = e.gen_max = -kInf;
  e.fwd_min = e.gen_min = kInf;
  for (double x : c) {
    prefix += x;
    e.fwd_max = std::max(e.fwd_max, prefix);
    e.fwd_min = std::min(e.fwd_min, prefix);
    best_end_max = std::max(x, best_end_max + x);
    best_end_min = std::min(x, best_end_min + x);
    e.gen_max = std::max(e.gen_max, best_end_max);
    e.gen_min = std::min(e.gen_min, best_end_min);
  }
  e.S_total = prefix;
  double suffix = 0.0;
  e.bwd_max = -kInf;
  e.bwd_min = kInf;
  for (auto it = c.rbegin(); it != c.rend(); ++it) {
    suffix += *it;
    e.bwd_max = std::max(e.bwd_max, suffix);
    e.bwd_min = std::min(e.bwd_min, suffix);
  }
  e.range_gen = e.gen_max - e.gen_min;
  e.range_fwd = e.fwd_max - e.fwd_min;
  return e;
}

inline PathExtremes path_extremes(const std::vector<double>& c) { return path_extremes(std::span<const double>(c)); }

namespace detail {

inline void check_extreme_args(int t, double x, const char* who) {
  if (t < 1) throw DomainError(std::string(who) + ": horizon t must be >= 1");
  if (std::isnan(x)) throw DomainError(std::string(who) + ": x is NaN");
}

}  // namespace detail

/// Lower bound on the CDF of the running maximum over t slots:
///   C(F(x), F(x/2, x/2), ..., F(x/t, ..., x/t)),
/// with F(x/k, ...) the k-slot joint CDF and C the time copula of `spec`.
inline double max_cdf_lower_bound_nongranger(const DependenceSpec& spec, const Marginal& m, int t, double x,
                                             const OrthantOptions& opt = {}) {
  detail::check_extreme_args(t, x, "max_cdf_lower_bound_nongranger");
  if (x < m.support_lower()) return 0.0;
  std::vector<double> levels(static_cast<std::size_t>(t));
  for (int k = 1; k <= t; ++k) {
    const std::vector<double> th(static_cast<std::size_t>(k), x / k);
    levels[static_cast<std::size_t>(k - 1)] = std::clamp(joint_orthant_prob(spec, m, th, opt).value, 0.0, 1.0);
  }
  if (t == 1) return levels[0];
  if (spec.kind() == DependenceSpec::Kind::markov && static_cast<std::size_t>(t) > opt.max_quadrature_dim)
    throw CapabilityError("max_cdf_lower_bound_nongranger: markov horizon exceeds quadrature limit");
  return std::clamp(copula_cdf(spec, levels), 0.0, 1.0);
}

/// Upper bound on the CDF of the running minimum over t slots:
///   1 - Cbar(Fbar(x), Fbar(x/2, x/2), ..., Fbar(x/t, ..., x/t)),
/// with Fbar(x/k, ...) the k-slot joint survival function and Cbar the
/// survival copula of `spec`.
inline double min_cdf_upper_bound_nongranger(const DependenceSpec& spec, const Marginal& m, int t, double x,
                                             const OrthantOptions& opt = {}) {
  detail::check_extreme_args(t, x, "min_cdf_upper_bound_nongranger");
  if (x < m.support_lower()) return 0.0;
  std::vector<double> levels(static_cast<std::size_t>(t));
  for (int k = 1; k <= t; ++k) {
    const std::vector<double> th(static_cast<std::size_t>(k), x / k);
    levels[static_cast<std::size_t>(k - 1)] = std::clamp(survival_orthant_prob(spec, m, th, opt).value, 0.0, 1.0);
  }
  if (t == 1) return 1.0 - levels[0];
  if (spec.kind() == DependenceSpec::Kind::markov && static_cast<std::size_t>(t) > opt.max_quadrature_dim)
    throw CapabilityError("min_cdf_upper_bound_nongranger: markov horizon exceeds quadrature limit");
  return std::clamp(1.0 - survival_copula(spec, levels), 0.0, 1.0);
}

/// Adjustment coefficient of the i.i.d. net process C - c: the positive root
/// of kappa(theta) = log E e^{theta C} - theta c. Requires c > E[C].
inline double iid_lundberg_root(const Marginal& m, double c) {
  if (!std::isfinite(c)) throw DomainError("iid_lundberg_root: reference rate must be finite");
  const double mean = m.mean();
  if (!(c > mean))
    throw NoRootError("iid_lundberg_root: reference rate " + csv::format_double(c) + " does not exceed the mean " +
                      csv::format_double(mean));
  auto kappa = [&](double th) { return m.log_mgf(th) - th * c; };
  double hi = 1.0;
  while (!(kappa(hi) > 0.0)) {
    hi *= 2.0;
    if (hi > 1e6 || !std::isfinite(kappa(hi)))
      throw NoRootError("iid_lundberg_root: kappa stays negative (capacity bounded by the reference rate)");
  }
  // kappa < 0 on (0, theta*) and > 0 beyond; kappa(0) = 0 so bisect by sign directly
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kappa(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

/// P(sup_{t>=0} sum_{i<=t} (C_i - c) >= x) <= e^{-theta* x} for x >= 0.
inline double iid_sup_tail_lundberg(const Marginal& m, double c, double x) {
  if (!(x >= 0.0)) throw DomainError("iid_sup_tail_lundberg: level x must be >= 0");
  return std::exp(-iid_lundberg_root(m, c) * x);
}

}  // namespace capbound
