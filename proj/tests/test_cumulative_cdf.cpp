#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "capbound/cumulative_cdf.hpp"
#include "capbound/sum_bounds.hpp"
#include "oracle.hpp"

using namespace capbound;

namespace {

const Marginal kRay1 = Marginal::rayleigh(1.0);

// P(C_1 + C_2 <= z) for i.i.d. Rayleigh(1) slots: int_0^z f(x) F(z - x) dx.
double iid_pair_cdf(double z) {
  return oracle::simpson([&](double x) { return oracle::rayleigh_pdf(1.0, x) * oracle::rayleigh_cdf(1.0, z - x); }, 0.0,
                         z, 20000);
}

// Standard normal CDF and its inverse by bisection.
double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double phi_inv(double p) {
  return oracle::bisect([&](double z) { return phi(z) - p; }, -40.0, 40.0, 200);
}

// P(C_1 + C_2 <= z) under a Gaussian copula, integrated in the normal score x
// of the first slot: int phi(x) P(Y <= y*(x) | x) dx with y*(x) the score of
// F(z - q(Phi(x))). The score form keeps the integrand smooth at both ends.
double gaussian_pair_cdf(double rho, double z) {
  const double s = std::sqrt(1.0 - rho * rho);
  auto q = [](double p) { return std::log2(1.0 - std::log1p(-p)); };
  auto h = [&](double x) {
    const double v = oracle::rayleigh_cdf(1.0, z - q(phi(x)));
    if (v <= 0.0) return 0.0;
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI) * phi((phi_inv(v) - rho * x) / s);
  };
  return oracle::simpson(h, -9.0, phi_inv(oracle::rayleigh_cdf(1.0, z)), 4000);
}

// Brute-force extremes of F(u) + F(s - u) over a fine grid.
std::pair<double, double> pair_sum_range(const Marginal& a, const Marginal& b, double s) {
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i <= 200000; ++i) {
    const double u = s * i / 200000.0;
    const double v = a.cdf(u) + b.cdf(s - u);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

// Dual objective by Simpson: n / (s - n u) * int_u^{s-(n-1)u} Fbar.
double dual_objective_oracle(int n, double s, double u) {
  const double b = s - (n - 1) * u;
  const double lo = std::min(u, b), hi = std::max(u, b);
  const double area = oracle::simpson([](double x) { return 1.0 - oracle::rayleigh_cdf(1.0, x); }, lo, hi, 400);
  return n * area / std::abs(s - n * u);
}

}  // namespace

TEST(ExactComonotonic, ReferenceValues) {
  EXPECT_NEAR(exact_cdf_comonotonic(kRay1, 4, 4.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(exact_cdf_comonotonic(kRay1, 1, 1.3), kRay1.cdf(1.3));
  EXPECT_EQ(exact_cdf_comonotonic(kRay1, 3, 0.0), 0.0);
  EXPECT_THROW(exact_cdf_comonotonic(kRay1, 0, 1.0), DomainError);
}

TEST(ExactCopulaIntegral, IndependentPairMatchesConvolutionIntegral) {
  const std::vector<Marginal> two(2, kRay1);
  for (double z : {0.3, 1.0, 2.0, 4.0}) {
    EXPECT_NEAR(exact_cdf_copula_integral(DependenceSpec::independent(), two, z), iid_pair_cdf(z), 1e-9) << z;
  }
  EXPECT_EQ(exact_cdf_copula_integral(DependenceSpec::independent(), two, std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_NEAR(exact_cdf_copula_integral(DependenceSpec::independent(), two, 40.0), 1.0, 1e-12);
}

TEST(ExactCopulaIntegral, GaussianPairMatchesConditionalIntegral) {
  const std::vector<Marginal> two(2, kRay1);
  const auto spec = DependenceSpec::markov(BivariateCopula::gaussian(0.7));
  for (double z : {0.5, 1.5, 3.0}) EXPECT_NEAR(exact_cdf_copula_integral(spec, two, z), gaussian_pair_cdf(0.7, z), 1e-8);
}

TEST(ExactCopulaIntegral, CapabilityLimits) {
  EXPECT_THROW(exact_cdf_copula_integral(DependenceSpec::independent(), std::vector<Marginal>(4, kRay1), 1.0),
               CapabilityError);
  EXPECT_THROW(exact_cdf_copula_integral(DependenceSpec::comonotonic(), std::vector<Marginal>(2, kRay1), 1.0),
               CapabilityError);
  EXPECT_THROW(exact_cdf_copula_integral(DependenceSpec::independent(), {}, 1.0), DomainError);
}

TEST(Convolution, SingleSlotIsTheMarginal) {
  const CdfCurve c = cdf_iid_convolution(kRay1, 1);
  for (double x : {0.1, 0.5, 1.0, 2.0, 3.5}) EXPECT_NEAR(c.at(x), kRay1.cdf(x), 1e-6);
}

TEST(Convolution, PairMatchesCopulaIntegral) {
  const CdfCurve c = cdf_iid_convolution(kRay1, 2);
  const std::vector<Marginal> two(2, kRay1);
  EXPECT_NEAR(c.at(2.0), exact_cdf_copula_integral(DependenceSpec::independent(), two, 2.0), 1e-3);
  for (double z : {0.5, 1.0, 3.0}) EXPECT_NEAR(c.at(z), iid_pair_cdf(z), 1e-4);
}

TEST(Convolution, ThreeSlotsMatchCopulaIntegral) {
  const CdfCurve c = cdf_iid_convolution(kRay1, 3);
  const std::vector<Marginal> three(3, kRay1);
  for (double z : {1.0, 2.5, 4.0})
    EXPECT_NEAR(c.at(z), exact_cdf_copula_integral(DependenceSpec::independent(), three, z), 1e-3);
}

TEST(Convolution, MeanIsAdditive) {
  const CdfCurve c = cdf_iid_convolution(kRay1, 16);
  // E[S] = int (1 - F_S), trapezoid on the returned grid
  double mean = c.xs().front() * (1.0 - 0.5 * c.ps().front());
  for (std::size_t i = 1; i < c.size(); ++i)
    mean += (c.xs()[i] - c.xs()[i - 1]) * (1.0 - 0.5 * (c.ps()[i] + c.ps()[i - 1]));
  EXPECT_NEAR(mean, 16.0 * kRay1.mean(), 2e-3);
}

TEST(Clt, SymmetryAndLimits) {
  const double mu = kRay1.mean();
  EXPECT_NEAR(cdf_iid_clt(kRay1, 8, 8.0 * mu), 0.5, 1e-15);
  EXPECT_EQ(cdf_iid_clt(kRay1, 8, std::numeric_limits<double>::infinity()), 1.0);
  const double sd = std::sqrt(8.0 * kRay1.moments().variance);
  EXPECT_NEAR(cdf_iid_clt(kRay1, 8, 8.0 * mu + sd), phi(1.0), 1e-12);
  EXPECT_EQ(cdf_iid_clt(Moments{2.0, 0.0}, 3, 6.0), 1.0);
  EXPECT_EQ(cdf_iid_clt(Moments{2.0, 0.0}, 3, 5.9), 0.0);
}

TEST(Chernoff, VacuousBelowTheMean) {
  const double mu = kRay1.mean();
  for (double x : {0.0, 2.0, 8.0 * mu}) EXPECT_EQ(tail_iid_chernoff(kRay1, 8, x), 1.0);
  EXPECT_EQ(tail_iid_chernoff(kRay1, 8, 12.0, Tail::lower), 1.0);
}

TEST(Chernoff, MatchesGridInfimum) {
  // log-MGF by Simpson on a theta grid, shared by every x
  std::vector<double> kappa;
  for (int i = 0; i <= 2000; ++i) {
    const double th = 0.005 * i;
    kappa.push_back(std::log(
        oracle::simpson_to_inf([&](double r) { return std::exp(th * r + oracle::rayleigh_log_pdf(1.0, r)); }, 0.0, 8000)));
  }
  for (double x : {9.0, 12.0, 16.0}) {
    double best = 0.0;
    for (int i = 0; i <= 2000; ++i) best = std::min(best, -0.005 * i * x + 8.0 * kappa[i]);
    const double b = tail_iid_chernoff(kRay1, 8, x);
    EXPECT_LE(b, std::exp(best) * (1 + 1e-9));
    EXPECT_NEAR(b, std::exp(best), 1e-5 * std::exp(best));
  }
}

TEST(Chernoff, DominatesMonteCarloTail) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int n = 1000000;
  int up = 0, low = 0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int k = 0; k < 8; ++k) s += std::log2(1.0 - std::log1p(-U(rng)));
    up += s >= 12.0;
    low += s <= 3.0;
  }
  EXPECT_GE(tail_iid_chernoff(kRay1, 8, 12.0), static_cast<double>(up) / n);
  EXPECT_GE(tail_iid_chernoff(kRay1, 8, 3.0, Tail::lower), static_cast<double>(low) / n);
  EXPECT_LT(tail_iid_chernoff(kRay1, 8, 3.0, Tail::lower), 1.0);
}

TEST(StandardBounds, EqualSplitReferenceValue) {
  const ProbabilityPair p = standard_bounds_equal_split(kRay1, 2, 2.0);
  EXPECT_NEAR(p.lower, 1.0 - 2.0 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(p.lower, 0.264241, 1e-6);
  EXPECT_EQ(p.upper, 1.0);
}

TEST(StandardBounds, PairMatchesBruteForce) {
  const std::vector<std::vector<Marginal>> cases{{kRay1, kRay1}, {Marginal::rayleigh(0.3), Marginal::rayleigh(5.0)}};
  for (const auto& ms : cases)
    for (double s : {0.5, 1.5, 3.0, 6.0}) {
      const auto [lo, hi] = pair_sum_range(ms[0], ms[1], s);
      const StandardBounds b = standard_bounds(ms, s);
      EXPECT_NEAR(b.lower, std::max(hi - 1.0, 0.0), 1e-9) << s;
      EXPECT_NEAR(b.upper, std::min(lo, 1.0), 1e-9) << s;
      EXPECT_FALSE(b.fallback);
    }
}

TEST(StandardBounds, ThreeMarginsMatchBruteForce) {
  const std::vector<Marginal> ms{Marginal::rayleigh(0.5), kRay1, Marginal::rayleigh(4.0)};
  for (double s : {1.0, 3.0, 6.0}) {
    double lo = 1e300, hi = -1e300;
    const int g = 600;
    for (int i = 0; i <= g; ++i)
      for (int j = 0; i + j <= g; ++j) {
        const double u1 = s * i / g, u2 = s * j / g;
        const double v = ms[0].cdf(u1) + ms[1].cdf(u2) + ms[2].cdf(std::max(0.0, s - u1 - u2));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const StandardBounds b = standard_bounds(ms, s);
    // the grid optimum is attainable, so the library may only do better
    EXPECT_GE(b.lower, std::max(hi - 2.0, 0.0) - 1e-12);
    EXPECT_LE(b.upper, std::min(lo, 1.0) + 1e-12);
    EXPECT_NEAR(b.lower, std::max(hi - 2.0, 0.0), 1e-4);
    EXPECT_NEAR(b.upper, std::min(lo, 1.0), 1e-4);
  }
}

TEST(StandardBounds, ContainTheIndependentCdf) {
  const CdfCurve exact = cdf_iid_convolution(kRay1, 4);
  const auto xs = linspace(0.2, 10.0, 50);
  const BoundPair sb = standard_bound_pair(kRay1, 4, xs);
  const BoundPair es = equal_split_bound_pair(kRay1, 4, xs);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    EXPECT_LE(sb.lower.ps()[i], exact.at(xs[i]) + 1e-3);
    EXPECT_GE(sb.upper.ps()[i], exact.at(xs[i]) - 1e-3);
    EXPECT_GE(sb.lower.ps()[i], es.lower.ps()[i] - 1e-12);
    EXPECT_LE(sb.upper.ps()[i], es.upper.ps()[i] + 1e-12);
  }
}

TEST(DualBounds, ObjectiveMatchesQuadrature) {
  for (int n : {2, 3, 5})
    for (double s : {1.0, 4.0})
      for (double frac : {0.1, 0.5, 0.9, 1.5}) {
        const double u = frac * s / n;
        EXPECT_NEAR(dual_objective(kRay1, n, s, u), dual_objective_oracle(n, s, u), 1e-8);
      }
}

TEST(DualBounds, LimitAtEqualSplit) {
  for (int n : {3, 5, 8})
    for (double s : {0.5, 2.0, 6.0}) {
      const double u0 = s / n, d = 1e-5;
      // the two one-sided averages are centred at s/n +- (n-2)d/2, so their mean is O(d^2) from the limit
      const double sym = 0.5 * (dual_objective_oracle(n, s, u0 - d) + dual_objective_oracle(n, s, u0 + d));
      EXPECT_NEAR(1.0 - dual_objective(kRay1, n, s, u0), n * kRay1.cdf(u0) - n + 1.0, 1e-12);
      EXPECT_NEAR(1.0 - sym, n * kRay1.cdf(u0) - n + 1.0, 1e-8);
    }
}

TEST(DualBounds, UpperMatchesGridInfimum) {
  for (int n : {2, 4})
    for (double s : {1.0, 3.0, 6.0}) {
      double best = 1e300;
      for (int i = 0; i < 2000; ++i) best = std::min(best, dual_objective_oracle(n, s, (s / n) * i / 2000.0));
      const DualBound D = dual_upper_bound_homogeneous(kRay1, n, s);
      EXPECT_LE(D.value, std::min(best, 1.0) + 1e-9);
      EXPECT_NEAR(D.value, std::min(best, 1.0), 1e-5);
    }
}

TEST(DualBounds, Limits) {
  EXPECT_EQ(dual_upper_bound_homogeneous(kRay1, 3, 1e-9).value, 1.0);
  EXPECT_EQ(dual_lower_bound_homogeneous(kRay1, 3, 200.0).value, 0.0);
  EXPECT_THROW(dual_upper_bound_homogeneous(kRay1, 1, 1.0), DomainError);
}

TEST(DualBounds, DominateStandardBounds) {
  for (int n : {2, 3, 5}) {
    const std::vector<Marginal> ms(static_cast<std::size_t>(n), kRay1);
    for (double s : linspace(0.2, 3.0 * n, 15)) {
      const StandardBounds sb = standard_bounds(ms, s, 0);
      EXPECT_GE(1.0 - dual_upper_bound_homogeneous(kRay1, n, s).value, sb.lower - 1e-9) << n << " " << s;
      EXPECT_GE(dual_lower_bound_homogeneous(kRay1, n, s).value, 1.0 - sb.equal_split_upper - 1e-9) << n << " " << s;
    }
  }
}

TEST(DualBounds, ContainTheIndependentTail) {
  const CdfCurve exact = cdf_iid_convolution(kRay1, 3);
  for (double s : {1.0, 2.0, 3.0, 5.0}) {
    const double tail = 1.0 - exact.at(s);
    EXPECT_LE(dual_lower_bound_homogeneous(kRay1, 3, s).value, tail + 1e-3);
    EXPECT_GE(dual_upper_bound_homogeneous(kRay1, 3, s).value, tail - 1e-3);
  }
}

TEST(DualBounds, HeterogeneousReducesToHomogeneous) {
  for (int n : {2, 3})
    for (double s : {1.0, 3.0}) {
      const std::vector<Marginal> ms(static_cast<std::size_t>(n), kRay1);
      const HeterogeneousDual h = dual_bounds_heterogeneous(ms, s);
      // the free search contains the symmetric one
      const double hom = dual_upper_bound_homogeneous(kRay1, n, s).value;
      EXPECT_LE(h.upper, hom + 1e-9);
      if (hom < 1.0) EXPECT_NEAR(h.upper, hom, 1e-6);
      // free coordinates can only raise the lower dual bound
      EXPECT_GE(h.lower, dual_lower_bound_homogeneous(kRay1, n, s).value - 1e-9);
    }
  EXPECT_THROW(dual_bounds_heterogeneous(std::vector<Marginal>(5, kRay1), 1.0), CapabilityError);
}

TEST(DualBounds, HeterogeneousBoundsAreValid) {
  // independent slots with different SNRs: exact tail by Simpson
  const Marginal a = Marginal::rayleigh(0.5), b = Marginal::rayleigh(3.0);
  for (double s : {1.0, 2.5}) {
    const double cdf = oracle::simpson([&](double x) { return oracle::rayleigh_pdf(0.5, x) * oracle::rayleigh_cdf(3.0, s - x); }, 0.0, s);
    const HeterogeneousDual h = dual_bounds_heterogeneous({a, b}, s);
    EXPECT_GE(h.upper, 1.0 - cdf - 1e-9);
    EXPECT_LE(h.lower, 1.0 - cdf + 1e-9);
  }
}

TEST(Sharpness, ReportIsConsistent) {
  for (double s : {2.0, 3.0, 5.0}) {
    const SharpnessReport r = sharpness_check(kRay1, 2, s);
    EXPECT_NEAR(r.b, s - r.a, 1e-12);
    EXPECT_NEAR(r.bound, dual_upper_bound_homogeneous(kRay1, 2, s).value, 1e-12);
    EXPECT_EQ(r.ordering_points, 50);
    if (r.verdict == Verdict::holds) {
      EXPECT_TRUE(r.attainment);
      EXPECT_LT(r.first_order_residual, 1e-6);
      EXPECT_GE(r.second_order_value, 0.0);
    }
  }
  EXPECT_EQ(sharpness_check(kRay1, 2, 3.0).verdict, Verdict::holds);
  EXPECT_THROW(sharpness_check(kRay1, 1, 1.0), DomainError);
}

TEST(BoundCurves, MonotoneAndOrdered) {
  const auto xs = linspace(0.0, 12.0, 40);
  for (const BoundPair& b : {standard_bound_pair(kRay1, 4, xs), equal_split_bound_pair(kRay1, 4, xs),
                             dual_bound_pair(kRay1, 4, xs)}) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      EXPECT_LE(b.lower.ps()[i], b.upper.ps()[i] + 1e-12);
      if (i) EXPECT_GE(b.upper.ps()[i], b.upper.ps()[i - 1]);
    }
  }
  EXPECT_THROW(CdfCurve({0.0, 1.0}, {0.5, 0.4}), ValidationError);
  EXPECT_THROW(CdfCurve({0.0, 0.0}, {0.1, 0.4}), ValidationError);
}
