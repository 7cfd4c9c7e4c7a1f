#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "capbound/extremes.hpp"
#include "capbound/simulate.hpp"
#include "oracle.hpp"

using namespace capbound;

namespace {

// All-window brute force: S(j,k) for 0 <= j < k <= t.
PathExtremes brute_force(const std::vector<double>& c) {
  const std::size_t t = c.size();
  std::vector<double> prefix(t + 1, 0.0);
  for (std::size_t i = 0; i < t; ++i) prefix[i + 1] = prefix[i] + c[i];
  PathExtremes e;
  e.S_total = prefix[t];
  e.fwd_max = e.bwd_max = e.gen_max = -1e300;
  e.fwd_min = e.bwd_min = e.gen_min = 1e300;
  for (std::size_t j = 0; j < t; ++j)
    for (std::size_t k = j + 1; k <= t; ++k) {
      const double s = prefix[k] - prefix[j];
      e.gen_max = std::max(e.gen_max, s);
      e.gen_min = std::min(e.gen_min, s);
      if (j == 0) e.fwd_max = std::max(e.fwd_max, s), e.fwd_min = std::min(e.fwd_min, s);
      if (k == t) e.bwd_max = std::max(e.bwd_max, s), e.bwd_min = std::min(e.bwd_min, s);
    }
  return e;
}

}  // namespace

TEST(PathExtremes, SmallPathByHand) {
  const PathExtremes e = path_extremes(std::vector<double>{1.0, 2.0, 3.0});
  EXPECT_EQ(e.S_total, 6.0);
  EXPECT_EQ(e.fwd_max, 6.0);
  EXPECT_EQ(e.bwd_max, 6.0);
  EXPECT_EQ(e.gen_max, 6.0);
  EXPECT_EQ(e.fwd_min, 1.0);
  EXPECT_EQ(e.bwd_min, 3.0);
  EXPECT_EQ(e.gen_min, 1.0);
  EXPECT_EQ(e.range_gen, 5.0);
  EXPECT_EQ(e.range_fwd, 5.0);
}

TEST(PathExtremes, EmptyPathIsRejected) { EXPECT_THROW(path_extremes(std::vector<double>{}), DomainError); }

TEST(PathExtremes, MatchesAllWindowBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> c(1 + rep % 12);
    for (double& x : c) x = u(rng);
    const PathExtremes a = path_extremes(c), b = brute_force(c);
    EXPECT_NEAR(a.S_total, b.S_total, 1e-12);
    EXPECT_NEAR(a.fwd_max, b.fwd_max, 1e-12);
    EXPECT_NEAR(a.bwd_max, b.bwd_max, 1e-12);
    EXPECT_NEAR(a.gen_max, b.gen_max, 1e-12);
    EXPECT_NEAR(a.fwd_min, b.fwd_min, 1e-12);
    EXPECT_NEAR(a.bwd_min, b.bwd_min, 1e-12);
    EXPECT_NEAR(a.gen_min, b.gen_min, 1e-12);
    EXPECT_NEAR(a.range_gen, b.gen_max - b.gen_min, 1e-12);
  }
}

TEST(NonGrangerBounds, SingleSlotIsMarginal) {
  const Marginal m = Marginal::rayleigh(1.0);
  for (const auto& spec : {DependenceSpec::comonotonic(), DependenceSpec::independent(),
                           DependenceSpec::markov(BivariateCopula::gaussian(0.5))})
    for (double x : {0.2, 1.0, 3.0}) {
      EXPECT_NEAR(max_cdf_lower_bound_nongranger(spec, m, 1, x), oracle::rayleigh_cdf(1.0, x), 1e-12);
      EXPECT_NEAR(min_cdf_upper_bound_nongranger(spec, m, 1, x), oracle::rayleigh_cdf(1.0, x), 1e-12);
    }
}

TEST(NonGrangerBounds, ClosedFormsForIndependentAndComonotonic) {
  const Marginal m = Marginal::rayleigh(1.0);
  for (int t : {2, 4, 6})
    for (double x : {0.5, 2.0, 5.0}) {
      double lo = 1.0, sv = 1.0;
      for (int k = 1; k <= t; ++k) {
        lo *= std::pow(oracle::rayleigh_cdf(1.0, x / k), k);
        sv *= std::pow(1.0 - oracle::rayleigh_cdf(1.0, x / k), k);
      }
      EXPECT_NEAR(max_cdf_lower_bound_nongranger(DependenceSpec::independent(), m, t, x), lo, 1e-12);
      EXPECT_NEAR(min_cdf_upper_bound_nongranger(DependenceSpec::independent(), m, t, x), 1.0 - sv, 1e-12);
      // comonotone: every level is a marginal value, the copula takes the minimum
      EXPECT_NEAR(max_cdf_lower_bound_nongranger(DependenceSpec::comonotonic(), m, t, x),
                  oracle::rayleigh_cdf(1.0, x / t), 1e-12);
      EXPECT_NEAR(min_cdf_upper_bound_nongranger(DependenceSpec::comonotonic(), m, t, x), oracle::rayleigh_cdf(1.0, x),
                  1e-12);
    }
}

TEST(NonGrangerBounds, ArgumentChecks) {
  const Marginal m = Marginal::rayleigh(1.0);
  EXPECT_THROW(max_cdf_lower_bound_nongranger(DependenceSpec::independent(), m, 0, 1.0), DomainError);
  EXPECT_THROW(min_cdf_upper_bound_nongranger(DependenceSpec::independent(), m, 2, std::nan("")), DomainError);
  EXPECT_EQ(max_cdf_lower_bound_nongranger(DependenceSpec::independent(), m, 3, -1.0), 0.0);
  EXPECT_THROW(max_cdf_lower_bound_nongranger(DependenceSpec::markov(BivariateCopula::fgm(1.0)), m, 9, 1.0),
               CapabilityError);
}

TEST(NonGrangerBounds, HoldAgainstSimulatedPrefixStatistics) {
  const Marginal m = Marginal::rayleigh(1.0);
  const int t = 4;
  for (const auto& spec : {DependenceSpec::comonotonic(), DependenceSpec::independent(),
                           DependenceSpec::markov(BivariateCopula::fgm(1.0))}) {
    const SimResult sim = run({m, spec, t, std::nullopt, "x"}, 50000, 17, 1);
    const double n = 50000.0;
    for (int k = 1; k <= 12; ++k) {
      const double x = 0.4 * k;
      const double pmax = sim.probability_at("fwd_max", x), pmin = sim.probability_at("fwd_min", x);
      const double lo = max_cdf_lower_bound_nongranger(spec, m, t, x);
      const double up = min_cdf_upper_bound_nongranger(spec, m, t, x);
      const double s_lo = std::max(std::sqrt(pmax * (1 - pmax) / n), std::sqrt(lo * (1 - lo) / n));
      const double s_up = std::max(std::sqrt(pmin * (1 - pmin) / n), std::sqrt(up * (1 - up) / n));
      EXPECT_LE(lo, pmax + 3 * s_lo + 1e-12) << "x=" << x;
      EXPECT_GE(up, pmin - 3 * s_up - 1e-12) << "x=" << x;
    }
  }
}

TEST(IidLundberg, RootMatchesQuadratureOracle) {
  const Marginal m = Marginal::rayleigh(1.0);
  auto log_mgf = [](double th) {
    return std::log(oracle::simpson_to_inf([&](double r) { return std::exp(th * r + oracle::rayleigh_log_pdf(1.0, r)); },
                                           0.0, 20000));
  };
  for (double c : {1.0, 1.2, 2.0}) {
    const double own = oracle::bisect([&](double th) { return log_mgf(th) - th * c; }, 1e-3, 20.0, 60);
    EXPECT_NEAR(iid_lundberg_root(m, c), own, 1e-6) << "c=" << c;
  }
}

TEST(IidLundberg, TailBoundShapeAndErrors) {
  const Marginal m = Marginal::rayleigh(1.0);
  EXPECT_EQ(iid_sup_tail_lundberg(m, 1.2, 0.0), 1.0);
  const double th = iid_lundberg_root(m, 1.2);
  EXPECT_NEAR(iid_sup_tail_lundberg(m, 1.2, 2.0), std::exp(-2.0 * th), 1e-15);
  EXPECT_THROW(iid_lundberg_root(m, 0.8), NoRootError);
  EXPECT_THROW(iid_lundberg_root(m, m.mean()), NoRootError);
  EXPECT_THROW(iid_sup_tail_lundberg(m, 1.2, -0.5), DomainError);
  // bounded capacity below the reference rate never crosses
  EXPECT_THROW(iid_lundberg_root(Marginal::tabulated({0.0, 1.0}, {0.0, 1.0}), 1.5), NoRootError);
}

TEST(IidLundberg, BoundsSimulatedSupremum) {
  const Marginal m = Marginal::rayleigh(1.0);
  // long horizon stands in for the unbounded supremum; the truncation only lowers it
  const SimResult sim = run({m, DependenceSpec::independent(), 200, 1.2, "net"}, 20000, 23, 1);
  for (double x : {1.0, 2.0, 4.0}) {
    const double p = 1.0 - sim.probability_at("net_fwd_max", x);
    const double b = iid_sup_tail_lundberg(m, 1.2, x);
    EXPECT_LE(p, b + 3 * std::sqrt(b * (1 - b) / 20000.0)) << "x=" << x;
  }
}
