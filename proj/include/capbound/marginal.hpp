#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "capbound/csv.hpp"
#include "capbound/errors.hpp"
#include "capbound/numeric.hpp"

namespace capbound {

struct Moments {
  double mean;
  double variance;
};

/// Distribution of the instantaneous capacity C(t) in bits per channel use.
///
/// Two kinds are supported. The Rayleigh kind uses the closed form
/// F(r) = 1 - exp(-(2^r - 1)/gamma) of a flat Rayleigh channel with average
/// SNR gamma. The tabulated kind takes a sampled (r, F(r)) table and
/// interpolates linearly between rows; probability mass F(r_0) at the first
/// row is an atom and the CDF is clamped to F(r_last) = 1 above the table.
/// Values are immutable after construction.
class Marginal {
 public:
  enum class Kind { rayleigh, tabulated };

  static Marginal rayleigh(double gamma_snr) {
    if (!(gamma_snr > 0.0) || !std::isfinite(gamma_snr))
      throw ValidationError("rayleigh marginal requires gamma_snr>0");
    Marginal m;
    m.kind_ = Kind::rayleigh;
    m.gamma_ = gamma_snr;
    return m;
  }

  static Marginal tabulated(std::vector<double> r, std::vector<double> F) {
    if (r.empty() || r.size() != F.size())
      throw ValidationError("tabulated marginal needs matching non-empty r and F columns");
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!std::isfinite(r[i]) || !(F[i] >= 0.0 && F[i] <= 1.0))
        throw ValidationError("tabulated marginal: row " + std::to_string(i + 1) +
                              " has non-finite r or F outside [0,1]");
      if (i > 0 && !(r[i] > r[i - 1]))
        throw ValidationError("tabulated marginal: r must be strictly increasing (row " +
                              std::to_string(i + 1) + ")");
      if (i > 0 && F[i] < F[i - 1])
        throw ValidationError("tabulated marginal: F must be nondecreasing (row " +
                              std::to_string(i + 1) + ")");
    }
    if (r.front() < 0.0) throw ValidationError("tabulated marginal: capacity support must be >= 0");
    if (std::abs(F.back() - 1.0) > 1e-9)
      throw ValidationError("tabulated marginal: last row must have F = 1");
    F.back() = 1.0;
    Marginal m;
    m.kind_ = Kind::tabulated;
    m.r_ = std::move(r);
    m.F_ = std::move(F);
    return m;
  }

  // Two-column CSV (r, F) with a header row.
  static Marginal from_csv(const std::string& path) {
    const csv::Table t = csv::read_file(path);
    if (t.header.size() != 2) throw ValidationError("tabulated marginal CSV needs exactly two columns");
    std::vector<double> r, F;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      r.push_back(csv::parse_double(t.rows[i][0], i + 2));
      F.push_back(csv::parse_double(t.rows[i][1], i + 2));
    }
    return tabulated(std::move(r), std::move(F));
  }

  Kind kind() const noexcept { return kind_; }
  double gamma_snr() const noexcept { return gamma_; }
  const std::vector<double>& table_r() const noexcept { return r_; }
  const std::vector<double>& table_F() const noexcept { return F_; }

  double support_lower() const noexcept { return kind_ == Kind::rayleigh ? 0.0 : r_.front(); }

  double cdf(double r) const {
    if (std::isnan(r)) throw DomainError("cdf: r is NaN");
    if (kind_ == Kind::rayleigh) {
      if (r <= 0.0) return 0.0;
      if (std::isinf(r)) return 1.0;
      return -std::expm1(-std::expm1(r * kLn2) / gamma_);
    }
    if (r < r_.front()) return 0.0;
    if (r >= r_.back()) return 1.0;
    const auto it = std::upper_bound(r_.begin(), r_.end(), r);
    const std::size_t k = static_cast<std::size_t>(it - r_.begin()) - 1;
    const double w = (r - r_[k]) / (r_[k + 1] - r_[k]);
    return F_[k] + w * (F_[k + 1] - F_[k]);
  }

  double survival(double r) const {
    if (kind_ == Kind::rayleigh) {
      if (r <= 0.0) return 1.0;
      if (std::isinf(r)) return 0.0;
      return std::exp(-std::expm1(r * kLn2) / gamma_);
    }
    return 1.0 - cdf(r);
  }

  double pdf(double r) const {
    if (kind_ == Kind::rayleigh) {
      if (r < 0.0 || std::isinf(r)) return 0.0;
      return (kLn2 / gamma_) * std::exp(r * kLn2 - std::expm1(r * kLn2) / gamma_);
    }
    const double h = 1e-6 * std::max(1.0, std::abs(r));
    return (cdf(r + h) - cdf(r - h)) / (2.0 * h);
  }

  // Smallest r with F(r) >= p, for p in [0, 1).
  double quantile(double p) const {
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("quantile: p must lie in [0,1)");
    if (kind_ == Kind::rayleigh) return std::log2(1.0 - gamma_ * std::log1p(-p));
    if (p <= F_.front()) return r_.front();
    const auto it = std::lower_bound(F_.begin(), F_.end(), p);
    const std::size_t k = static_cast<std::size_t>(it - F_.begin());
    const double dF = F_[k] - F_[k - 1];
    return r_[k - 1] + (p - F_[k - 1]) / dF * (r_[k] - r_[k - 1]);
  }

  /// Integral of the survival function over [a, b]; b may be +inf.
  double survival_integral(double a, double b) const {
    if (std::isnan(a) || std::isnan(b) || a > b) throw DomainError("survival_integral: requires a <= b");
    if (a == b) return 0.0;
    double below = 0.0;
    const double lo = support_lower();
    if (a < lo) {
      below = std::min(b, lo) - a;  // survival is 1 below the support
      a = std::min(b, lo);
      if (a == b) return below;
    }
    if (kind_ == Kind::tabulated) return below + tabulated_survival_integral(a, b);
    auto sf = [this](double r) { return survival(r); };
    return below + numeric::integrate(sf, a, b, 1e-12);
  }

  Moments moments() const {
    if (kind_ == Kind::tabulated) return tabulated_moments();
    const double lo = support_lower();
    const double mean = lo + survival_integral(lo, kInf);
    auto second = [this](double r) { return 2.0 * r * survival(r); };
    const double m2 = numeric::integrate(second, 0.0, kInf, 1e-12);
    return {mean, std::max(0.0, m2 - mean * mean)};
  }

  double mean() const { return moments().mean; }

  /// log E[exp(theta C)], evaluated with the integrand's peak factored out so
  /// large |theta| does not overflow.
  double log_mgf(double theta) const {
    if (!std::isfinite(theta)) throw DomainError("log_mgf: theta must be finite");
    if (theta == 0.0) return 0.0;
    if (kind_ == Kind::tabulated) return tabulated_log_mgf(theta);
    const double g = gamma_;
    auto exponent = [g, theta](double r) {
      return theta * r + r * kLn2 - std::expm1(r * kLn2) / g + std::log(kLn2 / g);
    };
    const double peak = (theta + kLn2 > 0.0) ? std::max(0.0, std::log2(g * (1.0 + theta / kLn2))) : 0.0;
    const double shift = exponent(peak);
    auto integrand = [&](double r) { return std::exp(exponent(r) - shift); };
    double total = 0.0;
    if (peak > 0.0) total += numeric::integrate(integrand, 0.0, peak, 1e-14);
    const double width = 4.0 / (std::abs(theta) + 1.0);
    total += numeric::integrate(integrand, peak, peak + width, 1e-14);
    total += numeric::integrate(integrand, peak + width, kInf, 1e-14);
    return shift + std::log(total);
  }

 private:
  Marginal() = default;

  double tabulated_survival_integral(double a, double b) const {
    // piecewise-linear CDF: integrate exactly segment by segment
    double total = 0.0;
    const double top = r_.back();
    if (b > top) b = std::max(a, top);  // survival is 0 above the table
    auto seg = [this](double x0, double x1) {
      return 0.5 * ((1.0 - cdf(x0)) + (1.0 - cdf(x1))) * (x1 - x0);
    };
    for (std::size_t k = 0; k + 1 < r_.size(); ++k) {
      const double x0 = std::max(a, r_[k]);
      const double x1 = std::min(b, r_[k + 1]);
      if (x1 > x0) total += seg(x0, x1);
    }
    return total;
  }

  Moments tabulated_moments() const {
    double m1 = F_.front() * r_.front();
    double m2 = F_.front() * r_.front() * r_.front();
    for (std::size_t k = 0; k + 1 < r_.size(); ++k) {
      const double mass = F_[k + 1] - F_[k];
      if (mass <= 0.0) continue;
      const double a = r_[k], b = r_[k + 1];
      m1 += mass * 0.5 * (a + b);
      m2 += mass * (a * a + a * b + b * b) / 3.0;
    }
    return {m1, std::max(0.0, m2 - m1 * m1)};
  }

  double tabulated_log_mgf(double theta) const {
    const double shift = theta * (theta > 0.0 ? r_.back() : r_.front());
    double total = F_.front() * std::exp(theta * r_.front() - shift);
    for (std::size_t k = 0; k + 1 < r_.size(); ++k) {
      const double mass = F_[k + 1] - F_[k];
      if (mass <= 0.0) continue;
      const double a = r_[k], b = r_[k + 1];
      const double ea = std::exp(theta * a - shift);
      // mass * (e^{theta b} - e^{theta a}) / (theta (b - a)), with expm1 for small spans
      total += mass * ea * std::expm1(theta * (b - a)) / (theta * (b - a));
    }
    return shift + std::log(total);
  }

  Kind kind_ = Kind::rayleigh;
  double gamma_ = 1.0;
  std::vector<double> r_;
  std::vector<double> F_;
};

}  // namespace capbound
