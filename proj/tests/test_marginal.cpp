#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "capbound/marginal.hpp"
#include "oracle.hpp"

using capbound::DomainError;
using capbound::Marginal;
using capbound::ParseError;
using capbound::ValidationError;

namespace {

// e * E1(1) / ln 2 with E1(1) = int_1^inf e^{-t}/t dt, by Simpson.
double rayleigh_mean_oracle() {
  const double e1 = oracle::simpson_to_inf([](double t) { return std::exp(-t) / t; }, 1.0);
  return std::numbers::e * e1 / std::numbers::ln2;
}

}  // namespace

TEST(RayleighMarginal, CdfAtReferencePoints) {
  const Marginal m = Marginal::rayleigh(1.0);
  EXPECT_EQ(m.cdf(0.0), 0.0);
  EXPECT_NEAR(m.cdf(1.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_EQ(m.cdf(std::numeric_limits<double>::infinity()), 1.0);
  EXPECT_EQ(m.cdf(-3.0), 0.0);
  for (double g : {0.1, 1.0, 10.0, 100.0})
    for (double r : {0.01, 0.5, 2.0, 7.0}) EXPECT_NEAR(Marginal::rayleigh(g).cdf(r), oracle::rayleigh_cdf(g, r), 1e-14);
}

TEST(RayleighMarginal, QuantileAtReferencePoints) {
  const Marginal m = Marginal::rayleigh(1.0);
  EXPECT_EQ(m.quantile(0.0), 0.0);
  EXPECT_NEAR(m.quantile(1.0 - std::exp(-1.0)), 1.0, 1e-14);
  // log2(1 + ln 2)
  EXPECT_NEAR(m.quantile(0.5), 0.75970738813890853, 1e-14);
  EXPECT_NEAR(m.quantile(0.5), std::log2(1.0 + std::numbers::ln2), 1e-15);
  EXPECT_THROW(m.quantile(1.0), DomainError);
  EXPECT_THROW(m.quantile(-0.1), DomainError);
  EXPECT_THROW(m.quantile(std::nan("")), DomainError);
}

TEST(RayleighMarginal, PdfAtReferencePoints) {
  const Marginal m = Marginal::rayleigh(1.0);
  EXPECT_NEAR(m.pdf(0.0), std::numbers::ln2, 1e-15);
  EXPECT_NEAR(m.pdf(1.0), 2.0 * std::numbers::ln2 * std::exp(-1.0), 1e-15);
  EXPECT_EQ(m.pdf(-1.0), 0.0);
  for (double r : {0.3, 1.7, 4.0}) EXPECT_NEAR(m.pdf(r), oracle::rayleigh_pdf(1.0, r), 1e-14);
}

TEST(RayleighMarginal, SurvivalIntegralAndMean) {
  const Marginal m = Marginal::rayleigh(1.0);
  EXPECT_EQ(m.survival_integral(0.7, 0.7), 0.0);
  EXPECT_THROW(m.survival_integral(2.0, 1.0), DomainError);
  const double oracle_mean = rayleigh_mean_oracle();
  EXPECT_NEAR(oracle_mean, 0.86034738227088595, 1e-10);
  EXPECT_NEAR(m.survival_integral(0.0, std::numeric_limits<double>::infinity()), oracle_mean, 1e-9);
  EXPECT_NEAR(m.mean(), oracle_mean, 1e-9);
  // variance from E[C^2] = int 2 r Fbar(r) dr
  const double m2 = oracle::simpson_to_inf([](double r) { return 2.0 * r * (1.0 - oracle::rayleigh_cdf(1.0, r)); }, 0.0);
  EXPECT_NEAR(m.moments().variance, m2 - oracle_mean * oracle_mean, 1e-8);
  // a finite window against Simpson
  const double w = oracle::simpson([](double r) { return 1.0 - oracle::rayleigh_cdf(1.0, r); }, 0.4, 2.5);
  EXPECT_NEAR(m.survival_integral(0.4, 2.5), w, 1e-11);
  // below the support the survival function is 1
  EXPECT_NEAR(m.survival_integral(-1.0, 0.0), 1.0, 1e-15);
}

TEST(RayleighMarginal, LogMgfMatchesQuadrature) {
  for (double g : {0.5, 1.0, 10.0}) {
    const Marginal m = Marginal::rayleigh(g);
    for (double th : {-5.0, -1.0, -0.01, 0.5, 2.0}) {
      const double ref =
          oracle::simpson_to_inf([&](double r) { return std::exp(th * r + oracle::rayleigh_log_pdf(g, r)); }, 0.0, 200000);
      EXPECT_NEAR(m.log_mgf(th), std::log(ref), 1e-7) << "gamma=" << g << " theta=" << th;
    }
  }
  EXPECT_EQ(Marginal::rayleigh(1.0).log_mgf(0.0), 0.0);
  EXPECT_THROW(Marginal::rayleigh(1.0).log_mgf(std::nan("")), DomainError);
}

TEST(RayleighMarginal, CdfIsMonotoneAndRoundTrips) {
  for (double g : {0.2, 1.0, 30.0}) {
    const Marginal m = Marginal::rayleigh(g);
    // up to the 1 - 1e-6 quantile: beyond it p itself carries too few digits
    const double top = std::log2(1.0 + 6.0 * std::log(10.0) * g);
    double prev = -1.0;
    for (int i = 0; i < 100; ++i) {
      const double r = top * i / 99.0;
      const double p = m.cdf(r);
      EXPECT_GE(p, prev);
      prev = p;
      EXPECT_NEAR(m.quantile(p), r, 1e-9) << "r=" << r;
    }
  }
}

TEST(RayleighMarginal, PdfIntegratesToCdf) {
  const Marginal m = Marginal::rayleigh(1.0);
  for (int i = 1; i <= 100; ++i) {
    const double r = 0.06 * i;
    const double area = oracle::simpson([&](double x) { return m.pdf(x); }, 0.0, r, 2000);
    EXPECT_NEAR(area, m.cdf(r), 1e-7);
  }
}

TEST(RayleighMarginal, DensityDecreasesBeyondOne) {
  const Marginal m = Marginal::rayleigh(1.0);
  double prev = m.pdf(1.0);
  for (int i = 1; i <= 200; ++i) {
    const double r = 1.0 + 0.05 * i;
    EXPECT_LE(m.pdf(r), prev);
    EXPECT_GT(m.pdf(1.0 + 0.01 * i), 0.0);
    prev = m.pdf(r);
  }
}

TEST(RayleighMarginal, RejectsNonPositiveGamma) {
  EXPECT_THROW(Marginal::rayleigh(0.0), ValidationError);
  EXPECT_THROW(Marginal::rayleigh(-1.0), ValidationError);
  EXPECT_THROW(Marginal::rayleigh(std::numeric_limits<double>::infinity()), ValidationError);
}

TEST(TabulatedMarginal, InterpolatesAndClamps) {
  const Marginal m = Marginal::tabulated({0.0, 1.0, 3.0}, {0.2, 0.6, 1.0});
  EXPECT_EQ(m.cdf(-0.5), 0.0);
  EXPECT_DOUBLE_EQ(m.cdf(0.0), 0.2);
  EXPECT_DOUBLE_EQ(m.cdf(0.5), 0.4);
  EXPECT_DOUBLE_EQ(m.cdf(2.0), 0.8);
  EXPECT_EQ(m.cdf(9.0), 1.0);
  EXPECT_EQ(m.quantile(0.1), 0.0);
  EXPECT_DOUBLE_EQ(m.quantile(0.4), 0.5);
  EXPECT_DOUBLE_EQ(m.quantile(0.8), 2.0);
  EXPECT_NEAR(m.pdf(0.5), 0.4, 1e-6);
}

TEST(TabulatedMarginal, MomentsOfPiecewiseLinearLaw) {
  // atom 0.2 at 0, uniform mass 0.4 on [0,1] and 0.4 on [1,3]
  const Marginal m = Marginal::tabulated({0.0, 1.0, 3.0}, {0.2, 0.6, 1.0});
  const double mean = 0.4 * 0.5 + 0.4 * 2.0;
  const double m2 = 0.4 * (1.0 / 3.0) + 0.4 * (1.0 + 3.0 + 9.0) / 3.0;
  EXPECT_NEAR(m.mean(), mean, 1e-15);
  EXPECT_NEAR(m.moments().variance, m2 - mean * mean, 1e-14);
  EXPECT_NEAR(m.survival_integral(0.0, 10.0), mean, 1e-15);
  const double th = 0.7;
  const double mgf = 0.2 + 0.4 * std::expm1(th) / th + 0.4 * (std::exp(3 * th) - std::exp(th)) / (2 * th);
  EXPECT_NEAR(m.log_mgf(th), std::log(mgf), 1e-13);
  EXPECT_NEAR(m.log_mgf(-th), std::log(0.2 + 0.4 * -std::expm1(-th) / th + 0.4 * (std::exp(-th) - std::exp(-3 * th)) / (2 * th)), 1e-13);
}

TEST(TabulatedMarginal, PointMassHasZeroVariance) {
  const Marginal m = Marginal::tabulated({2.5, 3.0}, {1.0, 1.0});
  EXPECT_DOUBLE_EQ(m.mean(), 2.5);
  EXPECT_DOUBLE_EQ(m.moments().variance, 0.0);
  EXPECT_EQ(m.cdf(2.4), 0.0);
  EXPECT_EQ(m.cdf(2.5), 1.0);
}

TEST(TabulatedMarginal, ValidatesTable) {
  EXPECT_THROW(Marginal::tabulated({}, {}), ValidationError);
  EXPECT_THROW(Marginal::tabulated({0.0, 1.0}, {0.5}), ValidationError);
  EXPECT_THROW(Marginal::tabulated({0.0, 0.0}, {0.5, 1.0}), ValidationError);
  EXPECT_THROW(Marginal::tabulated({0.0, 1.0}, {0.7, 0.5}), ValidationError);
  EXPECT_THROW(Marginal::tabulated({0.0, 1.0}, {0.2, 0.9}), ValidationError);
  EXPECT_THROW(Marginal::tabulated({-1.0, 1.0}, {0.2, 1.0}), ValidationError);
}

TEST(TabulatedMarginal, ReadsCsvWithLineNumbers) {
  const std::string good = testing::TempDir() + "capbound_margin_good.csv";
  const std::string bad = testing::TempDir() + "capbound_margin_bad.csv";
  std::ofstream(good) << "r,F\n0,0\n1,0.5\n2,1\n";
  std::ofstream(bad) << "r,F\n0,0\n1,zero\n2,1\n";
  EXPECT_DOUBLE_EQ(Marginal::from_csv(good).cdf(1.5), 0.75);
  try {
    Marginal::from_csv(bad);
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}
