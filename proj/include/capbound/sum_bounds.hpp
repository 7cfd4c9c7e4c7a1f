#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "capbound/cdf_curve.hpp"
#include "capbound/errors.hpp"
#include "capbound/marginal.hpp"
#include "capbound/numeric.hpp"

namespace capbound {

// ---------------------------------------------------------------------------
// Standard bounds
// ---------------------------------------------------------------------------

struct StandardBounds {
  double lower = 0.0;  // max(sup sum F_i(u_i) - (d-1), 0)
  double upper = 1.0;  // min(inf sum F_i(u_i), 1)
  double equal_split_lower = 0.0;
  double equal_split_upper = 1.0;
  std::vector<double> argmax;  // maximiser of sum F_i(u_i)
  std::vector<double> argmin;  // minimiser of sum F_i(u_i)
  bool fallback = false;       // optimisation did not converge; equal split returned
};

namespace detail {

struct SimplexOptimum {
  double value;
  std::vector<double> u;
  bool converged;
};

/// Optimises sum F_i(u_i) over {u >= 0, sum u = s} by pairwise mass
/// transfer: for each pair (i, j) the split of u_i + u_j is scanned on 33
/// points and refined by golden section. Descent starts from the best point
/// with k equal nonzero coordinates (k = d is the equal split, k = 1 a
/// vertex) and from `restarts` Dirichlet(1,...,1) points drawn with a fixed
/// seed.
inline SimplexOptimum optimise_on_simplex(const std::vector<Marginal>& ms, double s, bool maximise,
                                          int restarts = 20, std::uint64_t seed = 0x5eedULL) {
  const std::size_t d = ms.size();
  const double sign = maximise ? -1.0 : 1.0;
  auto total = [&](const std::vector<double>& u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) acc += ms[i].cdf(u[i]);
    return acc;
  };
  std::vector<std::vector<double>> starts;
  {
    std::vector<double> pick;
    double pick_val = kInf;
    for (std::size_t k = d; k >= 1; --k) {
      std::vector<double> u(d, 0.0);
      for (std::size_t i = 0; i < k; ++i) u[i] = s / static_cast<double>(k);
      if (const double v = sign * total(u); v < pick_val) {
        pick_val = v;
        pick = u;
      }
    }
    starts.push_back(pick);
  }
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> u(d);
    double norm = 0.0;
    for (double& x : u) norm += (x = expo(rng));
    for (double& x : u) x *= s / norm;
    starts.push_back(u);
  }
  SimplexOptimum best{kInf, {}, true};
  for (std::vector<double>& u : starts) {
    double cur = sign * total(u);
    bool converged = false;
    for (int sweep = 0; sweep < 100; ++sweep) {
      const double before = cur;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
          const double t = u[i] + u[j];
          if (t <= 0.0) continue;
          auto pair = [&](double x) { return sign * (ms[i].cdf(x) + ms[j].cdf(t - x)); };
          const double here = pair(u[i]);
          const numeric::Minimum m = numeric::scan_minimize(pair, 0.0, t, 32, 1e-12);
          if (m.value < here) {
            u[i] = m.x;
            u[j] = t - m.x;
          }
        }
      }
      cur = sign * total(u);
      if (before - cur <= 1e-14) {
        converged = true;
        break;
      }
    }
    if (cur < best.value) best = {cur, u, converged};
  }
  best.value *= sign;
  return best;
}

}  // namespace detail

/// Dependence-free bounds on P(X_1 + ... + X_d <= s) from the margins alone.
/// All margins have support in [0, inf), so the optimisation runs over the
/// simplex sum u_i = s, u_i >= 0.
inline StandardBounds standard_bounds(const std::vector<Marginal>& ms, double s, int restarts = 20) {
  if (ms.empty()) throw DomainError("standard_bounds: needs at least one marginal");
  const std::size_t d = ms.size();
  StandardBounds out;
  double es = 0.0;
  for (const auto& m : ms) es += m.cdf(s / static_cast<double>(d));
  out.equal_split_lower = std::max(es - static_cast<double>(d - 1), 0.0);
  out.equal_split_upper = std::min(es, 1.0);
  if (s < 0.0) {
    out.lower = out.upper = out.equal_split_lower = out.equal_split_upper = 0.0;
    return out;
  }
  if (d == 1) {
    out.lower = out.upper = ms[0].cdf(s);
    out.argmax = out.argmin = {s};
    return out;
  }
  const auto hi = detail::optimise_on_simplex(ms, s, true, restarts);
  const auto lo = detail::optimise_on_simplex(ms, s, false, restarts);
  out.argmax = hi.u;
  out.argmin = lo.u;
  if (!hi.converged || !lo.converged) {
    out.fallback = true;
    out.lower = out.equal_split_lower;
    out.upper = out.equal_split_upper;
    return out;
  }
  out.lower = std::max(std::max(hi.value - static_cast<double>(d - 1), 0.0), out.equal_split_lower);
  out.upper = std::min(std::min(lo.value, 1.0), out.equal_split_upper);
  return out;
}

struct ProbabilityPair {
  double lower;
  double upper;
};

/// Standard bounds for tau identical margins evaluated at the equal split
/// u_i = s / tau: upper min(tau F(s/tau), 1), lower max(1 - tau Fbar(s/tau), 0).
inline ProbabilityPair standard_bounds_equal_split(const Marginal& m, int tau, double s) {
  if (tau < 1) throw DomainError("standard_bounds_equal_split: tau must be >= 1");
  const double u = s / tau;
  return {std::max(1.0 - tau * m.survival(u), 0.0), std::min(tau * m.cdf(u), 1.0)};
}

// ---------------------------------------------------------------------------
// Dual bounds
// ---------------------------------------------------------------------------

/// Homogeneous dual objective n * int_u^{s-(n-1)u} Fbar / (s - n u). Within
/// 1e-8 of u = s/n the removable singularity is replaced by its limit
/// n Fbar(s/n).
inline double dual_objective(const Marginal& m, int n, double s, double u) {
  const double gap = s - n * u;
  if (std::abs(gap) < 1e-8) return n * m.survival(s / n);
  const double b = s - (n - 1) * u;
  return n * m.survival_integral(std::min(u, b), std::max(u, b)) / std::abs(gap);
}

struct DualBound {
  double value;     // clamped bound
  double argument;  // optimising u
};

/// Upper bound D(s) on sup P(S >= s) over all dependence structures, for n
/// identical margins. The infimum runs over u in [support_lower, s/n]; lower
/// u cannot improve on the clamp at 1.
inline DualBound dual_upper_bound_homogeneous(const Marginal& m, int n, double s) {
  if (n < 2) throw DomainError("dual_upper_bound_homogeneous: n must be >= 2");
  const double lo = m.support_lower();
  const double hi = s / n;
  if (!(hi > lo)) return {1.0, hi};
  auto f = [&](double u) { return dual_objective(m, n, s, u); };
  const numeric::Minimum r = numeric::scan_minimize(f, lo, hi, 128, 1e-11);
  return {std::min(r.value, 1.0), r.x};
}

/// Lower bound d(s) on inf P(S >= s) over all dependence structures, for n
/// identical margins: sup over u > s/n of the dual objective minus (n-1),
/// clamped at 0. The search window is (s/n, s/n + max(s, q)] with q the
/// (1 - 1e-10)-quantile.
inline DualBound dual_lower_bound_homogeneous(const Marginal& m, int n, double s) {
  if (n < 2) throw DomainError("dual_lower_bound_homogeneous: n must be >= 2");
  const double lo = s / n;
  const double width = std::max(s, m.quantile(1.0 - 1e-10));
  auto f = [&](double u) { return -(dual_objective(m, n, s, u) - (n - 1)); };
  const numeric::Minimum r = numeric::scan_minimize(f, lo, lo + width, 256, 1e-11);
  return {std::max(-r.value, 0.0), r.x};
}

struct HeterogeneousDual {
  double upper;                     // D(s)
  double lower;                     // d(s)
  std::vector<double> upper_point;  // u attaining D
  std::vector<double> lower_point;  // u attaining d
  int upper_start;                  // index of the winning start
  int lower_start;
};

namespace detail {

// sum_i (1/delta) int_{u_i}^{u_i + delta} Fbar_i, delta > 0; the average
// becomes Fbar_i(u_i) as delta -> 0.
inline double window_average_sum(const std::vector<Marginal>& ms, const std::vector<double>& u, double delta) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (delta < 1e-9)
      acc += ms[i].survival(u[i]);
    else
      acc += ms[i].survival_integral(u[i], u[i] + delta) / delta;
  }
  return acc;
}

}  // namespace detail

/// Dual bounds for n <= 4 possibly different margins by Nelder-Mead.
///
/// With delta = s - sum u (D) or sum u - s (d), the objective reduces to a
/// sum of window averages of the survival functions. The search runs over
/// (u_1, ..., u_{n-1}, log delta) from 10 seeded random starts, the
/// homogeneous optimum (start 10) and the equal split (start 11).
inline HeterogeneousDual dual_bounds_heterogeneous(const std::vector<Marginal>& ms, double s,
                                                   std::uint64_t seed = 0x0d0a1ULL) {
  const std::size_t n = ms.size();
  if (n > 4) throw CapabilityError("dual_bounds_heterogeneous: n > 4 is not supported");
  if (n < 2) throw DomainError("dual_bounds_heterogeneous: n must be >= 2");
  const double nd = static_cast<double>(n);

  auto unpack = [&](const std::vector<double>& x, double sign, std::vector<double>& u) {
    const double delta = std::exp(std::min(x[n - 1], 30.0));
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) acc += (u[i] = x[i]);
    u[n - 1] = s - sign * delta - acc;
    return delta;
  };
  auto obj_upper = [&](const std::vector<double>& x) {
    std::vector<double> u(n);
    const double delta = unpack(x, 1.0, u);
    return detail::window_average_sum(ms, u, delta);
  };
  auto obj_lower = [&](const std::vector<double>& x) {
    std::vector<double> u(n);
    const double delta = unpack(x, -1.0, u);
    std::vector<double> left(n);
    for (std::size_t i = 0; i < n; ++i) left[i] = u[i] - delta;
    return -(detail::window_average_sum(ms, left, delta) - (nd - 1.0));
  };

  // For identical margins the homogeneous optimum is a structured start.
  double hom_u_up = s / nd - 0.1 * std::max(s, 1.0) / nd, hom_u_lo = s / nd + 0.1 * std::max(s, 1.0) / nd;
  bool identical = true;
  for (std::size_t i = 1; i < n; ++i)
    identical = identical && ms[i].kind() == ms[0].kind() && ms[i].gamma_snr() == ms[0].gamma_snr() &&
                ms[i].table_r() == ms[0].table_r() && ms[i].table_F() == ms[0].table_F();
  if (identical) {
    hom_u_up = dual_upper_bound_homogeneous(ms[0], static_cast<int>(n), s).argument;
    hom_u_lo = dual_lower_bound_homogeneous(ms[0], static_cast<int>(n), s).argument;
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double scale = std::max(s, 1.0);
  auto make_start = [&](int k, double hom_u) {
    std::vector<double> x(n);
    if (k < 10) {
      for (std::size_t i = 0; i + 1 < n; ++i) x[i] = unif(rng) * 1.5 * scale / nd;
      x[n - 1] = std::log(scale * (1e-3 + unif(rng)));
    } else if (k == 10) {
      for (std::size_t i = 0; i + 1 < n; ++i) x[i] = hom_u;
      x[n - 1] = std::log(std::max(std::abs(s - nd * hom_u), 1e-8));
    } else {
      for (std::size_t i = 0; i + 1 < n; ++i) x[i] = s / nd;
      x[n - 1] = std::log(1e-3 * scale);
    }
    return x;
  };

  HeterogeneousDual out{kInf, -kInf, {}, {}, -1, -1};
  for (int k = 0; k < 12; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      const bool upper = dir == 0;
      std::vector<double> x0 = make_start(k, upper ? hom_u_up : hom_u_lo);
      auto run = [&](auto&& obj) {
        auto r = numeric::nelder_mead(obj, x0, 0.1 * scale, 1e-12, 800);
        r = numeric::nelder_mead(obj, r.x, 0.02 * scale, 1e-13, 400);  // restart against collapse
        return r;
      };
      if (upper) {
        const auto r = run(obj_upper);
        if (r.value < out.upper) {
          out.upper = r.value;
          out.upper_start = k;
          out.upper_point.assign(n, 0.0);
          unpack(r.x, 1.0, out.upper_point);
        }
      } else {
        const auto r = run(obj_lower);
        if (-r.value > out.lower) {
          out.lower = -r.value;
          out.lower_start = k;
          out.lower_point.assign(n, 0.0);
          unpack(r.x, -1.0, out.lower_point);
        }
      }
    }
  }
  out.upper = std::min(out.upper, 1.0);
  out.lower = std::max(out.lower, 0.0);
  return out;
}

// ---------------------------------------------------------------------------
// Sharpness of the homogeneous upper dual bound
// ---------------------------------------------------------------------------

enum class Verdict { holds, violated, inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

struct SharpnessReport {
  double a = 0.0;       // minimiser of the dual objective
  double b = 0.0;       // s - (n-1) a
  double a_star = 0.0;  // F^{-1}(1 - D(s))
  double bound = 1.0;   // D(s)
  double first_order_residual = 0.0;
  double second_order_value = 0.0;  // f(a) - (n-1)^2 f(b)
  bool attainment = false;          // interior minimiser with a* <= a
  int ordering_points = 0;
  int ordering_violations = 0;
  std::string mixability = "not checked";
  Verdict verdict = Verdict::inconclusive;
};

/// Checks the attainment, second-order and ordering conditions at the
/// minimiser of the homogeneous upper dual objective.
///
/// The minimiser is polished by bisection on the first-order identity
/// n int_a^b Fbar / (b - a) = Fbar(a) + (n-1) Fbar(b) when it brackets a
/// sign change. The ordering condition
/// (n-1)(F(y) - F(b)) <= F(a) - F((s - y)/(n-1)) is spot-checked on 50
/// points y in [b, b + max(s, q)]. Mixability is not verified.
inline SharpnessReport sharpness_check(const Marginal& m, int n, double s) {
  if (n < 2) throw DomainError("sharpness_check: n must be >= 2");
  SharpnessReport rep;
  const DualBound D = dual_upper_bound_homogeneous(m, n, s);
  rep.bound = D.value;
  auto foc = [&](double a) {
    const double b = s - (n - 1) * a;
    return dual_objective(m, n, s, a) - (m.survival(a) + (n - 1) * m.survival(b));
  };
  double a = D.argument;
  const double lo = m.support_lower(), hi = s / n;
  const double w = std::max(1e-6, 0.02 * (hi - lo));
  const double l = std::max(lo, a - w), r = std::min(hi - 1e-7, a + w);
  if (r > l && (foc(l) < 0.0) != (foc(r) < 0.0)) a = numeric::bisect(foc, l, r, 1e-14);
  rep.a = a;
  rep.b = s - (n - 1) * a;
  rep.a_star = rep.bound < 1.0 ? m.quantile(1.0 - rep.bound) : m.support_lower();
  rep.first_order_residual = std::abs(foc(a));
  rep.second_order_value = m.pdf(a) - (n - 1.0) * (n - 1.0) * m.pdf(rep.b);
  const bool interior = a > lo + 1e-9 && a < hi - 1e-9;
  rep.attainment = interior && rep.bound < 1.0 && rep.a_star <= a + 1e-9 && rep.first_order_residual < 1e-6;

  const double width = std::max(s, m.quantile(1.0 - 1e-10));
  for (int k = 0; k < 50; ++k) {
    const double y = rep.b + width * k / 49.0;
    const double lhs = (n - 1) * (m.cdf(y) - m.cdf(rep.b));
    const double rhs = m.cdf(a) - m.cdf((s - y) / (n - 1));
    ++rep.ordering_points;
    if (lhs > rhs + 1e-12) ++rep.ordering_violations;
  }
  if (!rep.attainment || rep.second_order_value < 0.0 || rep.ordering_violations > 0)
    rep.verdict = (rep.ordering_violations > 0 || rep.second_order_value < 0.0) ? Verdict::violated
                                                                                 : Verdict::inconclusive;
  else
    rep.verdict = Verdict::holds;
  return rep;
}

// ---------------------------------------------------------------------------
// Bound curves on a grid
// ---------------------------------------------------------------------------

namespace detail {
inline CdfCurve monotone_curve(const std::vector<double>& xs, std::vector<double> ps) {
  for (std::size_t i = 0; i < ps.size(); ++i) {
    ps[i] = std::clamp(ps[i], 0.0, 1.0);
    if (i) ps[i] = std::max(ps[i], ps[i - 1]);
  }
  return {xs, std::move(ps)};
}
}  // namespace detail

/// Optimised standard bounds for tau identical margins on a grid. Each
/// pointwise bound is valid, and the running max of a lower bound on a
/// nondecreasing CDF is still a lower bound (likewise the running min from
/// the right for the upper bound).
inline BoundPair standard_bound_pair(const Marginal& m, int tau, const std::vector<double>& xs) {
  std::vector<double> lo(xs.size()), up(xs.size());
  const std::vector<Marginal> ms(static_cast<std::size_t>(tau), m);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // identical margins: descent from the best symmetric start needs no random restarts
    const StandardBounds b = standard_bounds(ms, xs[i], 0);
    lo[i] = b.lower;
    up[i] = b.upper;
  }
  for (std::size_t i = up.size(); i-- > 1;) up[i - 1] = std::min(up[i - 1], up[i]);
  return {detail::monotone_curve(xs, lo), detail::monotone_curve(xs, up), BoundMethod::standard, tau};
}

inline BoundPair equal_split_bound_pair(const Marginal& m, int tau, const std::vector<double>& xs) {
  std::vector<double> lo(xs.size()), up(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const ProbabilityPair p = standard_bounds_equal_split(m, tau, xs[i]);
    lo[i] = p.lower;
    up[i] = p.upper;
  }
  return {detail::monotone_curve(xs, lo), detail::monotone_curve(xs, up), BoundMethod::standard_equal_split,
          tau};
}

/// CDF bounds from the homogeneous duals: lower 1 - D(x), upper 1 - d(x).
inline BoundPair dual_bound_pair(const Marginal& m, int tau, const std::vector<double>& xs) {
  if (tau < 2) {
    std::vector<double> ps(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) ps[i] = m.cdf(xs[i]);
    return {CdfCurve(xs, ps), CdfCurve(xs, ps), BoundMethod::dual, tau};
  }
  std::vector<double> lo(xs.size()), up(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lo[i] = xs[i] <= 0.0 ? 0.0 : 1.0 - dual_upper_bound_homogeneous(m, tau, xs[i]).value;
    up[i] = xs[i] < 0.0 ? 0.0 : 1.0 - dual_lower_bound_homogeneous(m, tau, xs[i]).value;
  }
  for (std::size_t i = up.size(); i-- > 1;) up[i - 1] = std::min(up[i - 1], up[i]);
  return {detail::monotone_curve(xs, lo), detail::monotone_curve(xs, up), BoundMethod::dual, tau};
}

}  // namespace capbound
