#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "capbound/csv.hpp"
#include "capbound/errors.hpp"

namespace capbound {

/// Sampled CDF: strictly increasing abscissae and nondecreasing
/// probabilities in [0, 1], checked on construction.
class CdfCurve {
 public:
  CdfCurve() = default;
  CdfCurve(std::vector<double> xs, std::vector<double> ps) : xs_(std::move(xs)), ps_(std::move(ps)) {
    if (xs_.size() != ps_.size()) throw ValidationError("CdfCurve: xs and ps differ in length");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (!(ps_[i] >= 0.0 && ps_[i] <= 1.0))
        throw ValidationError("CdfCurve: probability outside [0,1] at index " + std::to_string(i));
      if (i > 0 && !(xs_[i] > xs_[i - 1]))
        throw ValidationError("CdfCurve: xs must be strictly increasing at index " + std::to_string(i));
      if (i > 0 && ps_[i] < ps_[i - 1])
        throw ValidationError("CdfCurve: ps must be nondecreasing at index " + std::to_string(i));
    }
  }

  const std::vector<double>& xs() const noexcept { return xs_; }
  const std::vector<double>& ps() const noexcept { return ps_; }
  std::size_t size() const noexcept { return xs_.size(); }
  bool empty() const noexcept { return xs_.empty(); }

  // Linear interpolation; constant beyond the end points.
  double at(double x) const {
    if (xs_.empty()) throw DomainError("CdfCurve::at on an empty curve");
    if (x <= xs_.front()) return ps_.front();
    if (x >= xs_.back()) return ps_.back();
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - xs_.begin()) - 1;
    const double w = (x - xs_[k]) / (xs_[k + 1] - xs_[k]);
    return ps_[k] + w * (ps_[k + 1] - ps_[k]);
  }

  // Right-continuous step function: value of the last sample at or before x.
  double step_at(double x) const {
    if (xs_.empty()) throw DomainError("CdfCurve::step_at on an empty curve");
    if (x < xs_.front()) return 0.0;
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    return ps_[static_cast<std::size_t>(it - xs_.begin()) - 1];
  }

 private:
  std::vector<double> xs_;
  std::vector<double> ps_;
};

enum class BoundMethod { standard, standard_equal_split, dual };

inline std::string to_string(BoundMethod m) {
  switch (m) {
    case BoundMethod::standard: return "standard";
    case BoundMethod::standard_equal_split: return "standard-equal-split";
    case BoundMethod::dual: return "dual";
  }
  return "?";
}

/// Lower and upper CDF bounds for S over a window of tau slots, sampled on
/// one shared grid.
struct BoundPair {
  CdfCurve lower;
  CdfCurve upper;
  BoundMethod method = BoundMethod::standard;
  int tau = 1;

  BoundPair() = default;
  BoundPair(CdfCurve lo, CdfCurve up, BoundMethod m, int t)
      : lower(std::move(lo)), upper(std::move(up)), method(m), tau(t) {
    if (tau < 1) throw ValidationError("BoundPair: tau must be >= 1");
    if (lower.xs() != upper.xs()) throw ValidationError("BoundPair: lower and upper grids differ");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (lower.ps()[i] > upper.ps()[i] + 1e-12)
        throw ValidationError("BoundPair: lower exceeds upper at x=" + csv::format_double(lower.xs()[i]));
  }

  const std::vector<double>& xs() const noexcept { return lower.xs(); }
};

/// CSV with columns x, lower, upper, exact_if_available, method, tau. The
/// exact column is left empty when no exact curve is supplied.
inline void write_csv(std::ostream& out, const BoundPair& b, const std::optional<CdfCurve>& exact = std::nullopt) {
  csv::Writer w(out, {"x", "lower", "upper", "exact_if_available", "method", "tau"});
  for (std::size_t i = 0; i < b.lower.size(); ++i) {
    const double x = b.lower.xs()[i];
    w.row({csv::format_double(x), csv::format_double(b.lower.ps()[i]), csv::format_double(b.upper.ps()[i]),
           exact ? csv::format_double(exact->at(x)) : std::string(), to_string(b.method),
           std::to_string(b.tau)});
  }
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return {a};
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  xs.back() = b;
  return xs;
}

}  // namespace capbound
