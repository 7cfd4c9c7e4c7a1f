#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "capbound/cdf_curve.hpp"
#include "capbound/copula.hpp"
#include "capbound/csv.hpp"
#include "capbound/errors.hpp"
#include "capbound/extremes.hpp"
#include "capbound/marginal.hpp"

namespace capbound {

struct ChannelScenario {
  Marginal marginal;
  DependenceSpec dependence;
  int horizon = 1;
  std::optional<double> reference_rate;  // drains the net process C - c
  std::string label;

  void validate() const {
    if (horizon < 1) throw ValidationError("scenario: horizon t must be >= 1");
    if (reference_rate && !(*reference_rate > 0.0 && std::isfinite(*reference_rate)))
      throw ValidationError("scenario: reference rate c must be > 0");
  }
};

/// Empirical CDF sampled on a grid with binomial standard errors sqrt(p(1-p)/n).
struct EmpiricalCdf {
  CdfCurve curve;
  std::vector<double> std_error;
};

inline const std::vector<std::string>& path_statistic_names() {
  static const std::vector<std::string> names{"S",       "fwd_max", "bwd_max",   "gen_max",  "fwd_min",
                                              "bwd_min", "gen_min", "range_gen", "range_fwd"};
  return names;
}

/// Sorted per-path samples of every statistic plus counts of paths that
/// broke a path-level identity (all expected to be zero).
struct SimResult {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  int horizon = 1;
  std::map<std::string, std::vector<double>> samples;
  std::size_t comonotone_mismatches = 0;  // comonotone path with unequal coordinates
  std::size_t forward_max_mismatches = 0; // fwd_max or bwd_max differs from S_total
  std::size_t range_mismatches = 0;       // (range_gen == 0) differs from (t == 1)

  const std::vector<double>& sorted(const std::string& stat) const {
    const auto it = samples.find(stat);
    if (it == samples.end()) throw DomainError("SimResult: no statistic '" + stat + "'");
    return it->second;
  }

  // fraction of paths with statistic <= x
  double probability_at(const std::string& stat, double x) const {
    const auto& v = sorted(stat);
    return static_cast<double>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) / static_cast<double>(v.size());
  }

  double mean(const std::string& stat) const {
    const auto& v = sorted(stat);
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
  }

  /// Empirical CDF on `points` sample quantiles at levels (k + 1/2)/points.
  EmpiricalCdf empirical(const std::string& stat, std::size_t points = 200) const {
    const auto& v = sorted(stat);
    const double n = static_cast<double>(v.size());
    std::vector<double> xs;
    for (std::size_t k = 0; k < points; ++k) {
      const auto idx = static_cast<std::size_t>((static_cast<double>(k) + 0.5) / static_cast<double>(points) * n);
      const double x = v[std::min(idx, v.size() - 1)];
      if (xs.empty() || x > xs.back()) xs.push_back(x);
    }
    std::vector<double> ps, se;
    for (double x : xs) {
      const double p = probability_at(stat, x);
      ps.push_back(p);
      se.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    return {CdfCurve(std::move(xs), std::move(ps)), std::move(se)};
  }
};

namespace detail {

inline constexpr std::size_t kSimBatch = 8192;

inline std::mt19937_64 batch_engine(std::uint64_t seed, std::size_t batch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(batch), static_cast<std::uint32_t>(batch >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace detail

/// Draws n_samples capacity paths. Paths are generated in fixed-size batches
/// whose engines derive from (seed, batch index) and write to fixed slots, so
/// the result does not depend on thread count or scheduling.
inline SimResult run(const ChannelScenario& scn, std::size_t n_samples, std::uint64_t seed,
                     unsigned threads = std::thread::hardware_concurrency()) {
  scn.validate();
  if (n_samples < 1000) throw DomainError("simulate: n_samples must be >= 1000");
  const auto t = static_cast<std::size_t>(scn.horizon);
  const bool net = scn.reference_rate.has_value();
  std::vector<std::string> names = path_statistic_names();
  if (net) names.push_back("net_fwd_max");
  const std::size_t ns = names.size();
  std::vector<std::vector<double>> cols(ns, std::vector<double>(n_samples));
  const std::size_t batches = (n_samples + detail::kSimBatch - 1) / detail::kSimBatch;
  std::vector<std::size_t> como(batches, 0), fwd(batches, 0), rng_bad(batches, 0);
  const bool comonotone = scn.dependence.kind() == DependenceSpec::Kind::comonotonic;

  auto work = [&](std::size_t b) {
    auto rng = detail::batch_engine(seed, b);
    std::vector<double> path(t);
    const std::size_t begin = b * detail::kSimBatch, end = std::min(n_samples, begin + detail::kSimBatch);
    for (std::size_t i = begin; i < end; ++i) {
      sample_path(scn.dependence, scn.marginal, std::span<double>(path), rng);
      const PathExtremes e = path_extremes(path);
      const double vals[] = {e.S_total, e.fwd_max, e.bwd_max,   e.gen_max,  e.fwd_min,
                             e.bwd_min, e.gen_min, e.range_gen, e.range_fwd};
      for (std::size_t s = 0; s < 9; ++s) cols[s][i] = vals[s];
      if (net) {
        double acc = 0.0, best = 0.0;
        for (double c : path) best = std::max(best, acc += c - *scn.reference_rate);
        cols[9][i] = best;
      }
      if (comonotone && std::any_of(path.begin(), path.end(), [&](double c) { return c != path[0]; })) ++como[b];
      const double tol = 1e-12 * std::max(1.0, e.S_total);
      if (std::abs(e.fwd_max - e.S_total) > tol || std::abs(e.bwd_max - e.S_total) > tol) ++fwd[b];
      if ((e.range_gen == 0.0) != (t == 1) && path[0] > 0.0) ++rng_bad[b];
    }
  };

  const std::size_t nthreads = std::clamp<std::size_t>(threads, 1, batches);
  if (nthreads == 1) {
    for (std::size_t b = 0; b < batches; ++b) work(b);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex mu;
    for (std::size_t w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t b = w; b < batches; b += nthreads) work(b);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  SimResult r;
  r.n_samples = n_samples;
  r.seed = seed;
  r.horizon = scn.horizon;
  for (std::size_t s = 0; s < ns; ++s) {
    std::sort(cols[s].begin(), cols[s].end());
    r.samples.emplace(names[s], std::move(cols[s]));
  }
  for (std::size_t b = 0; b < batches; ++b) {
    r.comonotone_mismatches += como[b];
    r.forward_max_mismatches += fwd[b];
    r.range_mismatches += rng_bad[b];
  }
  return r;
}

struct BoundViolation {
  double x;
  double p_hat;
  double lower;
  double upper;
  double sigma;
  std::string side;  // "lower" or "upper"
};

struct VerifyReport {
  std::size_t checked = 0;
  double sigmas = 3.0;
  std::vector<BoundViolation> violations;

  bool pass() const noexcept { return violations.empty(); }
};

namespace detail {

// Value of a sampled upper CDF bound at the first grid point >= x; 1 beyond
// the grid. Valid at x because F(x) <= F(x_next) <= upper(x_next).
inline double conservative_upper(const CdfCurve& c, double x) {
  const auto it = std::lower_bound(c.xs().begin(), c.xs().end(), x);
  if (it == c.xs().end()) return 1.0;
  return c.ps()[static_cast<std::size_t>(it - c.xs().begin())];
}

}  // namespace detail

/// Checks lower - k sigma <= p_hat <= upper + k sigma on the empirical grid
/// of `stat`. Bound curves are read conservatively between their own grid
/// points (lower from the left, upper from the right). sigma is the larger
/// of the binomial standard errors at p_hat and at the bound value, so a
/// bound sitting at an empty tail still gets sampling slack.
inline VerifyReport verify_bounds(const SimResult& sim, const CdfCurve& lower, const CdfCurve& upper,
                                  double sigmas = 3.0, const std::string& stat = "S") {
  if (!(sigmas >= 0.0)) throw DomainError("verify_bounds: slack must be >= 0 standard errors");
  const EmpiricalCdf emp = sim.empirical(stat);
  const double n = static_cast<double>(sim.n_samples);
  auto se = [n](double p) { return std::sqrt(std::clamp(p, 0.0, 1.0) * (1.0 - std::clamp(p, 0.0, 1.0)) / n); };
  VerifyReport rep;
  rep.sigmas = sigmas;
  for (std::size_t i = 0; i < emp.curve.size(); ++i) {
    const double x = emp.curve.xs()[i], p = emp.curve.ps()[i];
    const double lo = lower.step_at(x), up = detail::conservative_upper(upper, x);
    ++rep.checked;
    const double s_lo = std::max(se(p), se(lo)), s_up = std::max(se(p), se(up));
    if (p < lo - sigmas * s_lo) rep.violations.push_back({x, p, lo, up, s_lo, "lower"});
    if (p > up + sigmas * s_up) rep.violations.push_back({x, p, lo, up, s_up, "upper"});
  }
  return rep;
}

inline VerifyReport verify_bounds(const SimResult& sim, const BoundPair& b, double sigmas = 3.0,
                                  const std::string& stat = "S") {
  return verify_bounds(sim, b.lower, b.upper, sigmas, stat);
}

inline void write_csv(std::ostream& out, const VerifyReport& r) {
  csv::Writer w(out, {"x", "p_hat", "lower", "upper", "sigma", "side"});
  for (const auto& v : r.violations)
    w.row({csv::format_double(v.x), csv::format_double(v.p_hat), csv::format_double(v.lower),
           csv::format_double(v.upper), csv::format_double(v.sigma), v.side});
}

/// Sup distance between two CDFs read as right-continuous step functions,
/// compared at the union of both grids.
inline double ks_distance(const CdfCurve& a, const CdfCurve& b) {
  if (a.empty() || b.empty()) throw DomainError("ks_distance: empty curve");
  double d = 0.0;
  for (const CdfCurve* c : {&a, &b})
    for (double x : c->xs()) d = std::max(d, std::abs(a.step_at(x) - b.step_at(x)));
  return d;
}

/// Kolmogorov-Smirnov statistic of sorted samples against a continuous CDF.
inline double ks_statistic(const std::vector<double>& sorted_samples, const std::function<double(double)>& cdf) {
  if (sorted_samples.empty()) throw DomainError("ks_statistic: no samples");
  const double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    const double f = cdf(sorted_samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

/// CSV with columns x, p_hat, stderr, statistic_name; one block per statistic.
inline void write_csv(std::ostream& out, const SimResult& r, const std::vector<std::string>& stats) {
  csv::Writer w(out, {"x", "p_hat", "stderr", "statistic_name"});
  for (const auto& s : stats) {
    const EmpiricalCdf e = r.empirical(s);
    for (std::size_t i = 0; i < e.curve.size(); ++i)
      w.row({csv::format_double(e.curve.xs()[i]), csv::format_double(e.curve.ps()[i]),
             csv::format_double(e.std_error[i]), s});
  }
}

}  // namespace capbound
