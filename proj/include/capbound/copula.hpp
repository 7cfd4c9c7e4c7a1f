#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "capbound/csv.hpp"
#include "capbound/errors.hpp"
#include "capbound/marginal.hpp"
#include "capbound/numeric.hpp"

namespace capbound {

enum class CopulaFamily { gaussian, clayton, fgm, comonotone };

inline std::string to_string(CopulaFamily f) {
  switch (f) {
    case CopulaFamily::gaussian: return "gaussian";
    case CopulaFamily::clayton: return "clayton";
    case CopulaFamily::fgm: return "fgm";
    case CopulaFamily::comonotone: return "comonotone";
  }
  return "?";
}

/// One-parameter bivariate copula used as the transition copula of a
/// stationary Markov chain.
///
/// Families: Gaussian (rho in (-1,1)), Clayton (theta > 0) and
/// Farlie-Gumbel-Morgenstern (alpha in [-1,1]). The Frechet upper bound M is
/// available as `comonotone()`; it has no density and acts as the identity of
/// the product operator. All families here are exchangeable, so the partial
/// derivative in the second argument is d1 with the arguments swapped.
class BivariateCopula {
 public:
  static BivariateCopula gaussian(double rho) {
    if (!(rho > -1.0 && rho < 1.0)) throw ValidationError("gaussian copula requires rho in (-1,1)");
    return {CopulaFamily::gaussian, rho};
  }
  static BivariateCopula clayton(double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta))
      throw ValidationError("clayton copula requires theta>0");
    return {CopulaFamily::clayton, theta};
  }
  static BivariateCopula fgm(double alpha) {
    if (!(alpha >= -1.0 && alpha <= 1.0)) throw ValidationError("fgm copula requires alpha in [-1,1]");
    return {CopulaFamily::fgm, alpha};
  }
  static BivariateCopula comonotone() { return {CopulaFamily::comonotone, 0.0}; }

  CopulaFamily family() const noexcept { return family_; }
  double parameter() const noexcept { return param_; }
  bool has_density() const noexcept { return family_ != CopulaFamily::comonotone; }

  double cdf(double u, double v) const {
    u = std::clamp(u, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    switch (family_) {
      case CopulaFamily::fgm:
        return u * v * (1.0 + param_ * (1.0 - u) * (1.0 - v));
      case CopulaFamily::clayton:
        return std::pow(std::pow(u, -param_) + std::pow(v, -param_) - 1.0, -1.0 / param_);
      case CopulaFamily::comonotone:
        return std::min(u, v);
      case CopulaFamily::gaussian: {
        // C(u,v) = integral over w in (0,u) of D1C(w,v), done in normal scores
        const double zu = numeric::normal_quantile(u);
        const double zv = numeric::normal_quantile(v);
        const double s = std::sqrt(1.0 - param_ * param_);
        auto f = [&](double x) {
          return numeric::normal_pdf(x) * numeric::normal_cdf((zv - param_ * x) / s);
        };
        if (zu <= -9.5) return 0.0;
        return std::clamp(numeric::integrate(f, -9.5, zu, 1e-14), 0.0, std::min(u, v));
      }
    }
    return 0.0;
  }

  /// Partial derivative dC/du: the conditional CDF of V given U = u.
  double d1(double u, double v) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("d1_conditional: u must lie in (0,1)");
    if (v <= 0.0) return 0.0;
    if (v >= 1.0) return 1.0;
    switch (family_) {
      case CopulaFamily::fgm:
        return v * (1.0 + param_ * (1.0 - 2.0 * u) * (1.0 - v));
      case CopulaFamily::clayton: {
        const double t = std::pow(u, -param_) + std::pow(v, -param_) - 1.0;
        return std::pow(u, -param_ - 1.0) * std::pow(t, -1.0 / param_ - 1.0);
      }
      case CopulaFamily::comonotone:
        return v >= u ? 1.0 : 0.0;
      case CopulaFamily::gaussian: {
        const double s = std::sqrt(1.0 - param_ * param_);
        return numeric::normal_cdf((numeric::normal_quantile(v) - param_ * numeric::normal_quantile(u)) / s);
      }
    }
    return 0.0;
  }

  double d2(double u, double v) const { return d1(v, u); }

  double density(double u, double v) const {
    if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) return 0.0;
    switch (family_) {
      case CopulaFamily::fgm:
        return 1.0 + param_ * (1.0 - 2.0 * u) * (1.0 - 2.0 * v);
      case CopulaFamily::clayton: {
        const double t = std::pow(u, -param_) + std::pow(v, -param_) - 1.0;
        return (1.0 + param_) * std::pow(u * v, -param_ - 1.0) * std::pow(t, -1.0 / param_ - 2.0);
      }
      case CopulaFamily::gaussian:
        return density_scores(numeric::normal_quantile(u), numeric::normal_quantile(v));
      case CopulaFamily::comonotone:
        break;
    }
    throw CapabilityError("comonotone copula has no density");
  }

  // Density expressed in normal scores x = Phi^{-1}(u), y = Phi^{-1}(v).
  double density_scores(double x, double y) const {
    if (family_ == CopulaFamily::gaussian) {
      const double r = param_;
      const double q = 1.0 - r * r;
      return std::exp(-(r * r * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * q)) / std::sqrt(q);
    }
    return density(numeric::normal_cdf(x), numeric::normal_cdf(y));
  }

  /// v with D1C(u, v) = w. Every family here has a closed-form inverse.
  double conditional_quantile(double u, double w) const {
    if (!(u > 0.0 && u < 1.0) || !(w > 0.0 && w < 1.0))
      throw DomainError("conditional_quantile: u and w must lie in (0,1)");
    switch (family_) {
      case CopulaFamily::fgm: {
        const double a = param_ * (1.0 - 2.0 * u);
        if (std::abs(a) < 1e-14) return w;
        // a v^2 - (1 + a) v + w = 0, root in [0,1]
        const double b = 1.0 + a;
        const double disc = b * b - 4.0 * a * w;
        return std::clamp(2.0 * w / (b + std::sqrt(std::max(0.0, disc))), 0.0, 1.0);
      }
      case CopulaFamily::clayton: {
        const double t = param_;
        const double inner = (std::pow(w, -t / (1.0 + t)) - 1.0) * std::pow(u, -t) + 1.0;
        return std::pow(inner, -1.0 / t);
      }
      case CopulaFamily::comonotone:
        return u;
      case CopulaFamily::gaussian: {
        const double s = std::sqrt(1.0 - param_ * param_);
        return numeric::normal_cdf(param_ * numeric::normal_quantile(u) + s * numeric::normal_quantile(w));
      }
    }
    return w;
  }

 private:
  BivariateCopula(CopulaFamily f, double p) : family_(f), param_(p) {}
  CopulaFamily family_;
  double param_;
};

/// Generic inverse of v -> D1C(u, v) by bisection, for copulas without a
/// closed-form conditional quantile. Converges to 1e-10 or throws.
template <class Copula>
double conditional_quantile_bisect(const Copula& c, double u, double w, double tol = 1e-10) {
  if (!(u > 0.0 && u < 1.0) || !(w > 0.0 && w < 1.0))
    throw DomainError("conditional_quantile: u and w must lie in (0,1)");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (c.d1(u, mid) < w)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < tol) return 0.5 * (lo + hi);
  }
  throw NumericError("conditional_quantile: bisection did not converge in 200 iterations");
}

/// Copula tabulated on a uniform grid_n x grid_n lattice over [0,1]^2 and
/// bilinearly interpolated in between.
class GridCopula {
 public:
  GridCopula(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
    if (n_ < 2 || values_.size() != n_ * n_) throw ValidationError("grid copula: bad lattice size");
  }

  std::size_t size() const noexcept { return n_; }
  double node(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n_ - 1); }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

  double cdf(double u, double v) const {
    u = std::clamp(u, 0.0, 1.0);
    v = std::clamp(v, 0.0, 1.0);
    const double h = static_cast<double>(n_ - 1);
    const std::size_t i = std::min(n_ - 2, static_cast<std::size_t>(u * h));
    const std::size_t j = std::min(n_ - 2, static_cast<std::size_t>(v * h));
    const double a = u * h - static_cast<double>(i);
    const double b = v * h - static_cast<double>(j);
    return (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) +
           a * b * at(i + 1, j + 1);
  }

  // Central difference in u with step 1e-6.
  double d1(double u, double v) const {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("d1_conditional: u must lie in (0,1)");
    const double h = std::min({1e-6, u, 1.0 - u});
    return std::clamp((cdf(u + h, v) - cdf(u - h, v)) / (2.0 * h), 0.0, 1.0);
  }

  void write_csv(std::ostream& out) const {
    csv::Writer w(out, {"u", "v", "C"});
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j)
        w.row({csv::format_double(node(i)), csv::format_double(node(j)), csv::format_double(at(i, j))});
  }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

namespace detail {
inline constexpr double kScoreLimit = 8.5;  // Phi(-8.5) ~ 1e-17
}  // namespace detail

/// Product operator A*B(u,v) = integral over t in (0,1) of d2A(u,t) d1B(t,v),
/// evaluated by adaptive quadrature at every lattice node.
inline GridCopula product_operator(const BivariateCopula& a, const BivariateCopula& b, std::size_t grid_n) {
  if (grid_n < 16) throw DomainError("product_operator: grid_n must be >= 16");
  std::vector<double> vals(grid_n * grid_n, 0.0);
  const double h = 1.0 / static_cast<double>(grid_n - 1);
  for (std::size_t i = 0; i < grid_n; ++i) {
    const double u = static_cast<double>(i) * h;
    for (std::size_t j = 0; j < grid_n; ++j) {
      const double v = static_cast<double>(j) * h;
      double val;
      if (i == 0 || j == 0) {
        val = 0.0;
      } else if (i == grid_n - 1) {
        val = v;
      } else if (j == grid_n - 1) {
        val = u;
      } else {
        // t = Phi(z) removes the endpoint singularities of the conditional CDFs
        auto f = [&](double z) {
          const double t = numeric::normal_cdf(z);
          if (t <= 0.0 || t >= 1.0) return 0.0;
          return a.d2(u, t) * b.d1(t, v) * numeric::normal_pdf(z);
        };
        // split at the possible kinks t = u and t = v
        const double k1 = numeric::normal_quantile(std::min(u, v));
        const double k2 = numeric::normal_quantile(std::max(u, v));
        const double lim = detail::kScoreLimit;
        val = numeric::integrate(f, -lim, k1, 1e-12) + numeric::integrate(f, k1, k2, 1e-12) +
              numeric::integrate(f, k2, lim, 1e-12);
      }
      vals[i * grid_n + j] = val;
    }
  }
  return {grid_n, std::move(vals)};
}

/// Dependence structure of the capacity time series.
class DependenceSpec {
 public:
  enum class Kind { comonotonic, independent, markov };

  static DependenceSpec comonotonic() { return DependenceSpec(Kind::comonotonic, std::nullopt); }
  static DependenceSpec independent() { return DependenceSpec(Kind::independent, std::nullopt); }
  static DependenceSpec markov(const BivariateCopula& c) { return DependenceSpec(Kind::markov, c); }

  Kind kind() const noexcept { return kind_; }
  const BivariateCopula& bivariate() const {
    if (!bivariate_) throw ValidationError("markov dependence requires a bivariate copula");
    return *bivariate_;
  }
  bool has_density() const noexcept {
    return kind_ == Kind::independent || (kind_ == Kind::markov && bivariate_->has_density());
  }

  std::string label() const {
    switch (kind_) {
      case Kind::comonotonic: return "comonotonic";
      case Kind::independent: return "independent";
      case Kind::markov: return "markov-" + to_string(bivariate_->family());
    }
    return "?";
  }

 private:
  DependenceSpec(Kind k, std::optional<BivariateCopula> c) : kind_(k), bivariate_(c) {}
  Kind kind_;
  std::optional<BivariateCopula> bivariate_;
};

namespace detail {

/// P(lo_i < U_i <= hi_i for all i) for a stationary Markov chain of uniforms
/// with transition copula c. Each stage integrates the previous stage's
/// weight against the copula density with 64-point Gauss-Legendre in normal
/// scores; the last stage uses D1C in closed form.
inline double markov_rectangle(const BivariateCopula& c, std::span<const double> lo,
                               std::span<const double> hi) {
  const std::size_t k = lo.size();
  for (std::size_t i = 0; i < k; ++i)
    if (!(hi[i] > lo[i])) return 0.0;
  if (c.family() == CopulaFamily::comonotone) {
    const double top = *std::min_element(hi.begin(), hi.end());
    const double bottom = *std::max_element(lo.begin(), lo.end());
    return std::max(0.0, top - bottom);
  }
  if (k == 1) return hi[0] - lo[0];

  const auto& gl = numeric::GaussLegendre64::get();
  struct Stage {
    std::array<double, 64> z;  // normal scores
    std::array<double, 64> u;
    std::array<double, 64> w;  // quadrature weight times normal density
  };
  auto make_stage = [&](double l, double h) {
    Stage s{};
    const double a = std::max(-kScoreLimit, numeric::normal_quantile(l));
    const double b = std::min(kScoreLimit, numeric::normal_quantile(h));
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t n = 0; n < 64; ++n) {
      s.z[n] = mid + half * gl.nodes[n];
      s.u[n] = numeric::normal_cdf(s.z[n]);
      s.w[n] = b > a ? half * gl.weights[n] * numeric::normal_pdf(s.z[n]) : 0.0;
    }
    return s;
  };

  Stage cur = make_stage(lo[0], hi[0]);
  std::array<double, 64> weight;
  weight.fill(1.0);
  for (std::size_t j = 1; j + 1 < k; ++j) {
    Stage next = make_stage(lo[j], hi[j]);
    std::array<double, 64> nw{};
    for (std::size_t b = 0; b < 64; ++b) {
      double acc = 0.0;
      for (std::size_t a = 0; a < 64; ++a)
        acc += cur.w[a] * weight[a] * c.density_scores(cur.z[a], next.z[b]);
      nw[b] = acc;
    }
    weight = nw;
    cur = next;
  }
  double total = 0.0;
  for (std::size_t a = 0; a < 64; ++a) {
    if (cur.w[a] == 0.0) continue;
    const double ua = std::clamp(cur.u[a], 1e-300, 1.0 - 1e-16);
    total += cur.w[a] * weight[a] * (c.d1(ua, hi[k - 1]) - c.d1(ua, lo[k - 1]));
  }
  return std::clamp(total, 0.0, 1.0);
}

}  // namespace detail

/// Copula of the dependence spec evaluated at u (Sklar's C).
inline double copula_cdf(const DependenceSpec& spec, std::span<const double> u) {
  if (u.empty()) throw DomainError("copula_cdf: empty argument vector");
  for (double x : u)
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("copula_cdf: arguments must lie in [0,1]");
  switch (spec.kind()) {
    case DependenceSpec::Kind::comonotonic:
      return *std::min_element(u.begin(), u.end());
    case DependenceSpec::Kind::independent:
      return std::accumulate(u.begin(), u.end(), 1.0, std::multiplies<>());
    case DependenceSpec::Kind::markov: {
      if (u.size() == 1) return u[0];
      if (u.size() == 2) return spec.bivariate().cdf(u[0], u[1]);
      const std::vector<double> lo(u.size(), 0.0);
      return detail::markov_rectangle(spec.bivariate(), lo, u);
    }
  }
  return 0.0;
}

/// Survival copula: P(U_i > 1 - v_i for all i).
inline double survival_copula(const DependenceSpec& spec, std::span<const double> v) {
  if (v.empty()) throw DomainError("survival_copula: empty argument vector");
  switch (spec.kind()) {
    case DependenceSpec::Kind::comonotonic:
      return *std::min_element(v.begin(), v.end());
    case DependenceSpec::Kind::independent:
      return std::accumulate(v.begin(), v.end(), 1.0, std::multiplies<>());
    case DependenceSpec::Kind::markov: {
      std::vector<double> lo(v.size()), hi(v.size(), 1.0);
      for (std::size_t i = 0; i < v.size(); ++i) lo[i] = 1.0 - v[i];
      return detail::markov_rectangle(spec.bivariate(), lo, hi);
    }
  }
  return 0.0;
}

struct OrthantOptions {
  std::size_t max_quadrature_dim = 8;
  bool monte_carlo_fallback = false;
  std::size_t mc_samples = 200000;
  std::uint64_t seed = 1;
};

struct OrthantProbability {
  double value = 0.0;
  double std_error = 0.0;  // zero for quadrature results
  bool monte_carlo = false;
};

namespace detail {

template <class Engine>
void fill_uniform_path(const DependenceSpec& spec, std::span<double> out, Engine& rng) {
  switch (spec.kind()) {
    case DependenceSpec::Kind::comonotonic: {
      const double u = uniform_open(rng);
      std::fill(out.begin(), out.end(), u);
      return;
    }
    case DependenceSpec::Kind::independent:
      for (double& x : out) x = uniform_open(rng);
      return;
    case DependenceSpec::Kind::markov: {
      const BivariateCopula& c = spec.bivariate();
      double u = uniform_open(rng);
      out[0] = u;
      for (std::size_t i = 1; i < out.size(); ++i) {
        const double w = uniform_open(rng);
        u = std::clamp(c.conditional_quantile(u, w), 1e-16, 1.0 - 1e-16);
        out[i] = u;
      }
      return;
    }
  }
}

// Rectangle probability in copula space, Monte Carlo.
inline OrthantProbability rectangle_mc(const DependenceSpec& spec, std::span<const double> lo,
                                       std::span<const double> hi, const OrthantOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::vector<double> path(lo.size());
  std::size_t hits = 0;
  for (std::size_t s = 0; s < opt.mc_samples; ++s) {
    fill_uniform_path(spec, path, rng);
    bool in = true;
    for (std::size_t i = 0; i < path.size() && in; ++i) in = path[i] > lo[i] && path[i] <= hi[i];
    hits += in;
  }
  const double n = static_cast<double>(opt.mc_samples);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), true};
}

inline OrthantProbability rectangle(const DependenceSpec& spec, std::span<const double> lo,
                                    std::span<const double> hi, const OrthantOptions& opt) {
  const std::size_t k = lo.size();
  switch (spec.kind()) {
    case DependenceSpec::Kind::comonotonic: {
      const double top = *std::min_element(hi.begin(), hi.end());
      const double bottom = *std::max_element(lo.begin(), lo.end());
      return {std::max(0.0, top - bottom)};
    }
    case DependenceSpec::Kind::independent: {
      double p = 1.0;
      for (std::size_t i = 0; i < k; ++i) p *= std::max(0.0, hi[i] - lo[i]);
      return {p};
    }
    case DependenceSpec::Kind::markov:
      if (k <= opt.max_quadrature_dim) return {markov_rectangle(spec.bivariate(), lo, hi)};
      if (!opt.monte_carlo_fallback)
        throw CapabilityError("joint_orthant_prob: markov dimension " + std::to_string(k) +
                              " exceeds quadrature limit " + std::to_string(opt.max_quadrature_dim) +
                              " and Monte Carlo fallback is disabled");
      return rectangle_mc(spec, lo, hi, opt);
  }
  return {};
}

}  // namespace detail

/// P(C_1 <= x_1, ..., C_k <= x_k) for the capacity series with marginal m.
inline OrthantProbability joint_orthant_prob(const DependenceSpec& spec, const Marginal& m,
                                             std::span<const double> thresholds,
                                             const OrthantOptions& opt = {}) {
  if (thresholds.empty()) throw DomainError("joint_orthant_prob: needs at least one threshold");
  std::vector<double> lo(thresholds.size(), 0.0), hi(thresholds.size());
  for (std::size_t i = 0; i < thresholds.size(); ++i) hi[i] = m.cdf(thresholds[i]);
  if (thresholds.size() == 1) return {hi[0]};
  return detail::rectangle(spec, lo, hi, opt);
}

/// P(C_1 > x_1, ..., C_k > x_k), integrated directly over the upper orthant.
inline OrthantProbability survival_orthant_prob(const DependenceSpec& spec, const Marginal& m,
                                                std::span<const double> thresholds,
                                                const OrthantOptions& opt = {}) {
  if (thresholds.empty()) throw DomainError("survival_orthant_prob: needs at least one threshold");
  std::vector<double> lo(thresholds.size()), hi(thresholds.size(), 1.0);
  for (std::size_t i = 0; i < thresholds.size(); ++i) lo[i] = m.cdf(thresholds[i]);
  if (thresholds.size() == 1) return {1.0 - lo[0]};
  return detail::rectangle(spec, lo, hi, opt);
}

/// Capacity path of length t. Comonotonic paths map one uniform through the
/// quantile; independent paths use i.i.d. uniforms; Markov paths chain
/// conditional quantiles from a uniform start.
template <class Engine>
void sample_path(const DependenceSpec& spec, const Marginal& m, std::span<double> out, Engine& rng) {
  if (out.empty()) throw DomainError("sample_path: horizon must be >= 1");
  detail::fill_uniform_path(spec, out, rng);
  for (double& x : out) x = m.quantile(x);
}

inline std::vector<double> sample_path(const DependenceSpec& spec, const Marginal& m, std::size_t t,
                                       std::uint64_t seed) {
  if (t == 0) throw DomainError("sample_path: horizon must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> out(t);
  sample_path(spec, m, std::span<double>(out), rng);
  return out;
}

}  // namespace capbound
