#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "capbound/cdf_curve.hpp"
#include "capbound/csv.hpp"
#include "capbound/errors.hpp"
#include "capbound/marginal.hpp"
#include "capbound/numeric.hpp"

namespace capbound {

namespace detail {

inline void check_theta(double theta, const char* who) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) throw DomainError(std::string(who) + ": theta must be finite and >= 0");
}

inline void check_tau(int tau, const char* who) {
  if (tau < 1) throw DomainError(std::string(who) + ": tau must be >= 1");
}

// int_{[a,b]} e^{-lambda (y - a)} dF(y) for the marginal, b may be +inf.
// `with_atom` includes the tabulated point mass at the first table row when it lies in [a, b].
inline double shifted_laplace(const Marginal& m, double lambda, double a, double b, bool with_atom) {
  if (!(b > a)) return 0.0;
  if (m.kind() == Marginal::Kind::rayleigh) {
    auto f = [&](double y) { return m.pdf(y) * std::exp(-lambda * (y - a)); };
    const double w = lambda > 0.0 ? std::min(b, a + 20.0 / lambda) : b;
    double acc = numeric::integrate(f, a, w, 1e-15);
    if (b > w) acc += numeric::integrate(f, w, b, 1e-15);
    return acc;
  }
  const auto& r = m.table_r();
  const auto& F = m.table_F();
  double acc = 0.0;
  if (with_atom && F.front() > 0.0 && r.front() >= a && r.front() <= b)
    acc += F.front() * std::exp(-lambda * (r.front() - a));
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    const double y0 = std::max(a, r[k]), y1 = std::min(b, r[k + 1]);
    if (!(y1 > y0)) continue;
    const double dens = (F[k + 1] - F[k]) / (r[k + 1] - r[k]);
    const double len = y1 - y0;
    const double seg = lambda > 0.0 ? -std::expm1(-lambda * len) / lambda : len;
    acc += dens * std::exp(-lambda * (y0 - a)) * seg;
  }
  return acc;
}

}  // namespace detail

/// Laplace-side MGF of the sum of tau i.i.d. slots: E[e^{-theta S}] = (E[e^{-theta C}])^tau.
inline double mgf_iid(const Marginal& m, int tau, double theta) {
  detail::check_tau(tau, "mgf_iid");
  detail::check_theta(theta, "mgf_iid");
  if (theta == 0.0) return 1.0;
  return std::exp(static_cast<double>(tau) * m.log_mgf(-theta));
}

struct MgfBounds {
  double lower;  // from the lower CDF bound (stochastically largest sum)
  double upper;  // from the upper CDF bound
};

/// Stieltjes integral of e^{-theta x} against a sampled CDF read as a point
/// mass ps[0] at xs[0] followed by linear pieces. Mass missing at the right
/// end sits at +inf and contributes nothing.
inline double laplace_stieltjes(const CdfCurve& c, double theta) {
  detail::check_theta(theta, "laplace_stieltjes");
  if (c.empty()) throw DomainError("laplace_stieltjes: empty curve");
  const auto& xs = c.xs();
  const auto& ps = c.ps();
  double acc = ps[0] * std::exp(-theta * xs[0]);
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double dp = ps[k + 1] - ps[k];
    if (dp == 0.0) continue;
    const double dx = xs[k + 1] - xs[k];
    const double z = theta * dx;
    const double avg = z > 0.0 ? -std::expm1(-z) / z : 1.0;  // mean of e^{-theta (x - x_k)} over the piece
    acc += dp * std::exp(-theta * xs[k]) * avg;
  }
  return acc;
}

/// MGF bounds of S from sampled CDF bounds: the lower CDF bound gives the
/// smaller transform since e^{-theta x} is decreasing.
inline MgfBounds mgf_bounds_dependent(const BoundPair& b, double theta) {
  return {laplace_stieltjes(b.lower, theta), laplace_stieltjes(b.upper, theta)};
}

struct LogMgfBounds {
  double log_lower;  // log of the transform of max(1 - tau Fbar(x/tau), 0)
  double log_upper;  // log of the transform of min(tau F(x/tau), 1)
};

/// Exact log transforms of the equal-split CDF bounds of the tau-slot sum.
/// The upper CDF bound carries measure tau dF(y) at x = tau y below the
/// 1/tau-quantile; the lower one carries tau dF(y) above the
/// (1 - 1/tau)-quantile. Jumps of the clamped curves become atoms.
inline LogMgfBounds log_mgf_equal_split(const Marginal& m, int tau, double theta) {
  detail::check_tau(tau, "log_mgf_equal_split");
  detail::check_theta(theta, "log_mgf_equal_split");
  const double t = static_cast<double>(tau);
  const double lambda = theta * t;
  const double lo = m.support_lower();
  const bool tab = m.kind() == Marginal::Kind::tabulated;

  // upper CDF bound: reaches 1 at y_u = F^{-1}(1/tau)
  double log_upper;
  {
    const double yu = tau == 1 ? kInf : m.quantile(1.0 / t);
    const bool at_atom = tab && yu == lo;  // the first-row atom alone already exceeds 1/tau
    const double body = at_atom ? 0.0 : detail::shifted_laplace(m, lambda, lo, yu, true);
    double jump = 0.0;
    if (std::isfinite(yu)) {
      const double left = at_atom ? 0.0 : m.cdf(yu);  // F(y_u-)
      jump = std::max(0.0, 1.0 - t * left) * std::exp(-lambda * (yu - lo));
    }
    log_upper = -lambda * lo + std::log(t * body + jump);
  }
  // lower CDF bound: zero below y_l = F^{-1}(1 - 1/tau)
  double log_lower;
  {
    const double yl = tau == 1 ? lo : m.quantile(1.0 - 1.0 / t);
    const double jump = std::max(0.0, 1.0 - t * m.survival(yl));
    const double tail = detail::shifted_laplace(m, lambda, yl, kInf, false);
    log_lower = -lambda * yl + std::log(jump + t * tail);
  }
  return {log_lower, log_upper};
}

inline MgfBounds mgf_bounds_equal_split(const Marginal& m, int tau, double theta) {
  const LogMgfBounds l = log_mgf_equal_split(m, tau, theta);
  return {std::exp(l.log_lower), std::exp(l.log_upper)};
}

// ---------------------------------------------------------------------------
// Effective capacity
// ---------------------------------------------------------------------------

enum class EffectiveCapacityMode { iid, dep_lower, dep_upper };

inline std::string to_string(EffectiveCapacityMode m) {
  switch (m) {
    case EffectiveCapacityMode::iid: return "iid";
    case EffectiveCapacityMode::dep_lower: return "dep-lower";
    case EffectiveCapacityMode::dep_upper: return "dep-upper";
  }
  return "?";
}

inline EffectiveCapacityMode parse_effective_capacity_mode(const std::string& s) {
  if (s == "iid") return EffectiveCapacityMode::iid;
  if (s == "dep-lower") return EffectiveCapacityMode::dep_lower;
  if (s == "dep-upper") return EffectiveCapacityMode::dep_upper;
  throw ValidationError("unknown effective-capacity mode '" + s + "' (iid, dep-lower, dep-upper)");
}

struct EffectiveCapacity {
  double rate;      // value at the largest evaluated window
  double previous;  // value at the window before it
  double gap;       // |rate - previous|
  int tau;          // largest evaluated window
};

/// Effective capacity -(1/(theta tau)) log E[e^{-theta S(tau)}]. The i.i.d.
/// value does not depend on tau. The dependence modes use the equal-split
/// transform bounds over tau = 1, 2, 4, ..., tau_limit: dep-lower uses the
/// transform of the upper CDF bound and dep-upper the lower one, so
/// dep-lower <= iid <= dep-upper for every tau.
inline EffectiveCapacity effective_capacity(const Marginal& m, double theta, EffectiveCapacityMode mode,
                                            int tau_limit = 256) {
  detail::check_theta(theta, "effective_capacity");
  detail::check_tau(tau_limit, "effective_capacity");
  if (mode == EffectiveCapacityMode::iid) {
    const double r = theta == 0.0 ? m.mean() : -m.log_mgf(-theta) / theta;
    return {r, r, 0.0, 1};
  }
  if (theta == 0.0) throw DomainError("effective_capacity: dependence modes need theta > 0");
  std::vector<int> taus;
  for (int t = 1; t < tau_limit; t *= 2) taus.push_back(t);
  taus.push_back(tau_limit);
  double prev = kInf, cur = kInf;
  for (int t : taus) {
    const LogMgfBounds l = log_mgf_equal_split(m, t, theta);
    const double lg = mode == EffectiveCapacityMode::dep_lower ? l.log_upper : l.log_lower;
    prev = cur;
    cur = -lg / (theta * static_cast<double>(t));
  }
  if (!std::isfinite(prev)) prev = cur;
  return {cur, prev, std::abs(cur - prev), tau_limit};
}

inline void write_effective_capacity_csv(std::ostream& out, const std::vector<double>& thetas,
                                         const std::vector<double>& rates) {
  if (thetas.size() != rates.size()) throw DomainError("write_effective_capacity_csv: length mismatch");
  csv::Writer w(out, {"theta", "rate"});
  for (std::size_t i = 0; i < thetas.size(); ++i)
    w.row({csv::format_double(thetas[i]), csv::format_double(rates[i])});
}

// ---------------------------------------------------------------------------
// Mellin transform of the SNR-domain process 2^S
// ---------------------------------------------------------------------------

/// E[(2^S)^{vartheta - 1}] for tau i.i.d. Rayleigh slots, through the
/// upper incomplete gamma form (e^{1/g} g^{v-1} Gamma(v, 1/g))^tau.
inline double mellin_iid_rayleigh(double gamma_snr, int tau, double vartheta) {
  detail::check_tau(tau, "mellin_iid_rayleigh");
  if (!(gamma_snr > 0.0)) throw DomainError("mellin_iid_rayleigh: gamma must be > 0");
  if (!std::isfinite(vartheta)) throw DomainError("mellin_iid_rayleigh: vartheta must be finite");
  if (vartheta == 1.0) return 1.0;
  const double a = 1.0 / gamma_snr;
  // e^{a} Gamma(v, a) = int_a^inf r^{v-1} e^{-(r - a)} dr
  auto f = [&](double r) { return std::pow(r, vartheta - 1.0) * std::exp(-(r - a)); };
  const double body = numeric::integrate(f, a, a + 40.0, 1e-14) + numeric::integrate(f, a + 40.0, kInf, 1e-14);
  const double one = std::pow(gamma_snr, vartheta - 1.0) * body;
  return std::pow(one, tau);
}

/// Mellin transform of 2^S for tau i.i.d. slots of any marginal:
/// E[2^{(v-1) S}] = (E[e^{(v-1) ln2 C}])^tau.
inline double mellin_iid(const Marginal& m, int tau, double vartheta) {
  detail::check_tau(tau, "mellin_iid");
  if (vartheta == 1.0) return 1.0;
  return std::exp(static_cast<double>(tau) * m.log_mgf((vartheta - 1.0) * kLn2));
}

struct MellinBounds {
  double lower;
  double upper;
};

/// Mellin bounds for vartheta < 1 from the equal-split CDF bounds: the
/// Mellin transform is the Laplace transform at theta = (1 - vartheta) ln2,
/// which is decreasing in the sum, so the lower CDF bound gives the lower value.
inline MellinBounds mellin_bounds_dependent(const Marginal& m, int tau, double vartheta) {
  detail::check_tau(tau, "mellin_bounds_dependent");
  if (!(vartheta < 1.0)) throw DomainError("mellin_bounds_dependent: vartheta must be < 1");
  const MgfBounds b = mgf_bounds_equal_split(m, tau, (1.0 - vartheta) * kLn2);
  return {b.lower, b.upper};
}

inline MellinBounds mellin_bounds_dependent(double gamma_snr, int tau, double vartheta) {
  return mellin_bounds_dependent(Marginal::rayleigh(gamma_snr), tau, vartheta);
}

/// Omega points of the Rayleigh equal-split bounds: the upper CDF bound
/// reaches 1 at Omega_u and the lower CDF bound leaves 0 at Omega_l.
inline double omega_upper(double gamma_snr, int tau) {
  if (tau <= 1) throw DomainError("omega_upper: tau must be > 1");
  if (!(gamma_snr > 0.0)) throw DomainError("omega_upper: gamma must be > 0");
  const double t = static_cast<double>(tau);
  return t * std::log2(1.0 - gamma_snr * std::log1p(-1.0 / t));
}

inline double omega_lower(double gamma_snr, int tau) {
  detail::check_tau(tau, "omega_lower");
  if (!(gamma_snr > 0.0)) throw DomainError("omega_lower: gamma must be > 0");
  const double t = static_cast<double>(tau);
  return t * std::log2(1.0 + gamma_snr * std::log(t));
}

struct OmegaPoints {
  double lower;
  double upper;
};

inline OmegaPoints omega_points(double gamma_snr, int tau) {
  return {omega_lower(gamma_snr, tau), omega_upper(gamma_snr, tau)};
}

/// Rayleigh Mellin upper bound written as an integral over the SNR variable
/// r in [1, 2^{Omega_u}] of r^{v-2} r^{1/tau} e^{(1 - r^{1/tau})/gamma} / gamma.
/// Agrees with the upper value of mellin_bounds_dependent.
inline double mellin_upper_rayleigh_closed(double gamma_snr, int tau, double vartheta) {
  if (!(vartheta < 1.0)) throw DomainError("mellin_upper_rayleigh_closed: vartheta must be < 1");
  const double t = static_cast<double>(tau);
  const double top = tau == 1 ? kInf : std::exp2(omega_upper(gamma_snr, tau));
  auto f = [&](double r) {
    const double rt = std::pow(r, 1.0 / t);
    return std::pow(r, vartheta - 2.0) * rt * std::exp((1.0 - rt) / gamma_snr) / gamma_snr;
  };
  return numeric::integrate(f, 1.0, top, 1e-14);
}

/// Rayleigh Mellin lower bound in the closed form that replaces r^{v-1} by
/// r e^{(v-2) r} above 2^{Omega_l}. Since (v-2)(log r - r) >= 0 for v < 2,
/// the replacement never increases the integrand, so this stays below the
/// lower value of mellin_bounds_dependent.
inline double mellin_lower_rayleigh_closed(double gamma_snr, int tau, double vartheta) {
  if (!(vartheta < 1.0)) throw DomainError("mellin_lower_rayleigh_closed: vartheta must be < 1");
  const double t = static_cast<double>(tau);
  const double bottom = std::exp2(omega_lower(gamma_snr, tau));
  auto f = [&](double r) {
    const double rt = std::pow(r, 1.0 / t);
    return std::exp((vartheta - 2.0) * r) * rt * std::exp((1.0 - rt) / gamma_snr) / gamma_snr;
  };
  return numeric::integrate(f, bottom, bottom + 50.0, 1e-15) + numeric::integrate(f, bottom + 50.0, kInf, 1e-15);
}

// ---------------------------------------------------------------------------
// Stochastic strict service curves
// ---------------------------------------------------------------------------

/// Service curve sampled at window lengths tau, with beta(0) = 0. Curves
/// with a bounding function e^{-theta x} carry theta; violation-probability
/// curves carry epsilon. Single-valued curves have beta_l == beta_u.
struct ServiceCurve {
  std::map<int, double> beta_l;
  std::map<int, double> beta_u;
  std::optional<double> theta;
  std::optional<double> epsilon;
};

inline std::vector<int> default_service_taus() { return {1, 2, 4, 8, 16, 32, 64, 128, 256}; }

/// beta(tau) = tau * (-1/theta) log E[e^{-theta C}] with g(x) = e^{-theta x}.
inline ServiceCurve sssc_iid(const Marginal& m, double theta, const std::vector<int>& taus = default_service_taus()) {
  if (!(theta > 0.0)) throw DomainError("sssc_iid: theta must be > 0");
  const double slope = -m.log_mgf(-theta) / theta;
  ServiceCurve c;
  c.theta = theta;
  c.beta_l[0] = c.beta_u[0] = 0.0;
  for (int t : taus) {
    detail::check_tau(t, "sssc_iid");
    c.beta_l[t] = c.beta_u[t] = slope * static_cast<double>(t);
  }
  return c;
}

struct BetaPair {
  double lower;
  double upper;
};

/// Rayleigh epsilon-curves of the equal-split bounds: beta_l solves
/// tau F(beta/tau) = eps and beta_u solves 1 - tau Fbar(beta/tau) = eps.
inline BetaPair sssc_rayleigh_dependent(double gamma_snr, int tau, double eps) {
  detail::check_tau(tau, "sssc_rayleigh_dependent");
  if (!(gamma_snr > 0.0)) throw DomainError("sssc_rayleigh_dependent: gamma must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("sssc_rayleigh_dependent: epsilon must lie in (0,1)");
  const double t = static_cast<double>(tau);
  return {t * std::log2(1.0 - gamma_snr * std::log1p(-eps / t)),
          t * std::log2(1.0 - gamma_snr * std::log((1.0 - eps) / t))};
}

inline ServiceCurve sssc_rayleigh_dependent_curve(double gamma_snr, double eps,
                                                  const std::vector<int>& taus = default_service_taus()) {
  ServiceCurve c;
  c.epsilon = eps;
  c.beta_l[0] = c.beta_u[0] = 0.0;
  for (int t : taus) {
    const BetaPair b = sssc_rayleigh_dependent(gamma_snr, t, eps);
    c.beta_l[t] = b.lower;
    c.beta_u[t] = b.upper;
  }
  return c;
}

/// beta = -(1/theta) log of the transform bounds; the upper transform gives
/// the lower curve.
inline BetaPair sssc_dependent_mgf(const BoundPair& b, double theta) {
  if (!(theta > 0.0)) throw DomainError("sssc_dependent_mgf: theta must be > 0");
  const MgfBounds mb = mgf_bounds_dependent(b, theta);
  return {-std::log(mb.upper) / theta, -std::log(mb.lower) / theta};
}

inline ServiceCurve sssc_dependent_mgf_curve(const Marginal& m, double theta,
                                             const std::vector<int>& taus = default_service_taus()) {
  if (!(theta > 0.0)) throw DomainError("sssc_dependent_mgf: theta must be > 0");
  ServiceCurve c;
  c.theta = theta;
  c.beta_l[0] = c.beta_u[0] = 0.0;
  for (int t : taus) {
    const LogMgfBounds l = log_mgf_equal_split(m, t, theta);
    c.beta_l[t] = -l.log_upper / theta;
    c.beta_u[t] = -l.log_lower / theta;
  }
  return c;
}

inline void write_csv(std::ostream& out, const ServiceCurve& c) {
  csv::Writer w(out, {"tau", "beta_l", "beta_u", "theta_or_epsilon"});
  const double param = c.theta ? *c.theta : c.epsilon.value_or(std::nan(""));
  for (const auto& [tau, bl] : c.beta_l)
    w.row({std::to_string(tau), csv::format_double(bl), csv::format_double(c.beta_u.at(tau)),
           csv::format_double(param)});
}

}  // namespace capbound
