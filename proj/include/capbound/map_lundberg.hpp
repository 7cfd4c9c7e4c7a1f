#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "capbound/csv.hpp"
#include "capbound/errors.hpp"
#include "capbound/numeric.hpp"

namespace capbound {

using Matrix = std::vector<std::vector<double>>;

/// Finite discrete increment distribution: (value, probability) atoms.
struct Increment {
  std::vector<double> values;
  std::vector<double> probs;

  std::size_t size() const noexcept { return values.size(); }
  double mean() const {
    double acc = 0.0;
    for (std::size_t k = 0; k < size(); ++k) acc += values[k] * probs[k];
    return acc;
  }
};

/// Discrete-time Markov additive process on a finite state space: the
/// modulating chain J has transition matrix P, and a transition i -> j adds
/// an increment drawn from H_ij.
class MapModel {
 public:
  MapModel(std::vector<std::string> states, Matrix P, std::vector<std::vector<Increment>> H)
      : states_(std::move(states)), P_(std::move(P)), H_(std::move(H)) {
    validate();
  }

  static MapModel parse(std::istream& in);
  static MapModel parse_text(const std::string& text) {
    std::istringstream ss(text);
    return parse(ss);
  }
  static MapModel from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return parse(in);
  }

  std::size_t size() const noexcept { return states_.size(); }
  const std::vector<std::string>& states() const noexcept { return states_; }
  const Matrix& P() const noexcept { return P_; }
  double p(std::size_t i, std::size_t j) const { return P_[i][j]; }
  const Increment& H(std::size_t i, std::size_t j) const { return H_[i][j]; }

  std::size_t state_index(const std::string& label) const {
    for (std::size_t i = 0; i < states_.size(); ++i)
      if (states_[i] == label) return i;
    throw ValidationError("unknown state '" + label + "'");
  }

  bool has_negative_increment() const {
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (P_[i][j] > 0.0)
          for (double v : H_[i][j].values)
            if (v < 0.0) return true;
    return false;
  }

  bool has_positive_increment() const {
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (P_[i][j] > 0.0)
          for (double v : H_[i][j].values)
            if (v > 0.0) return true;
    return false;
  }

  double max_abs_increment() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (P_[i][j] > 0.0)
          for (double v : H_[i][j].values) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  void validate() const {
    const std::size_t n = states_.size();
    if (n == 0) throw ValidationError("MAP model needs at least one state");
    if (P_.size() != n || H_.size() != n) throw ValidationError("MAP model: P and H must be |E| x |E|");
    for (std::size_t i = 0; i < n; ++i) {
      if (P_[i].size() != n || H_[i].size() != n) throw ValidationError("MAP model: P and H must be |E| x |E|");
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(P_[i][j] >= 0.0 && P_[i][j] <= 1.0))
          throw ValidationError("MAP model: p(" + states_[i] + "," + states_[j] + ") outside [0,1]");
        row += P_[i][j];
        const Increment& h = H_[i][j];
        if (h.values.size() != h.probs.size())
          throw ValidationError("MAP model: increment support and probabilities differ in length");
        if (P_[i][j] > 0.0) {
          if (h.size() == 0)
            throw ValidationError("MAP model: transition " + states_[i] + "->" + states_[j] +
                                  " has no increment distribution");
          double mass = 0.0;
          for (std::size_t k = 0; k < h.size(); ++k) {
            if (!std::isfinite(h.values[k]) || !(h.probs[k] > 0.0 && h.probs[k] <= 1.0))
              throw ValidationError("MAP model: bad increment atom on " + states_[i] + "->" + states_[j]);
            mass += h.probs[k];
          }
          if (std::abs(mass - 1.0) > 1e-12)
            throw ValidationError("MAP model: increment probabilities on " + states_[i] + "->" + states_[j] +
                                  " sum to " + csv::format_double(mass));
        }
      }
      if (std::abs(row - 1.0) > 1e-12)
        throw ValidationError("MAP model: row " + states_[i] + " sums to " + csv::format_double(row));
    }
  }

  std::vector<std::string> states_;
  Matrix P_;
  std::vector<std::vector<Increment>> H_;
};

/// Text format, one directive per line, '#' starts a comment:
///
///   states good bad
///   row good 0.7 0.3
///   row bad 0.4 0.6
///   inc good good 1:0.3 -1:0.7
///
/// `states` comes first; every state needs one `row`; every transition with
/// positive probability needs one `inc` line of value:probability atoms.
inline MapModel MapModel::parse(std::istream& in) {
  std::vector<std::string> states;
  Matrix P;
  std::vector<std::vector<Increment>> H;
  std::vector<bool> row_seen;
  std::vector<std::vector<std::size_t>> inc_line;
  std::string line;
  std::size_t lineno = 0;
  auto index_of = [&](const std::string& label, std::size_t ln) {
    for (std::size_t i = 0; i < states.size(); ++i)
      if (states[i] == label) return i;
    throw ParseError(ln, "unknown state '" + label + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    const std::string& kw = tok[0];
    if (kw == "states") {
      if (!states.empty()) throw ParseError(lineno, "duplicate 'states' directive");
      if (tok.size() < 2) throw ParseError(lineno, "'states' needs at least one label");
      for (std::size_t k = 1; k < tok.size(); ++k) {
        if (std::find(states.begin(), states.end(), tok[k]) != states.end())
          throw ParseError(lineno, "duplicate state label '" + tok[k] + "'");
        states.push_back(tok[k]);
      }
      const std::size_t n = states.size();
      P.assign(n, std::vector<double>(n, 0.0));
      H.assign(n, std::vector<Increment>(n));
      row_seen.assign(n, false);
      inc_line.assign(n, std::vector<std::size_t>(n, 0));
      continue;
    }
    if (states.empty()) throw ParseError(lineno, "'" + kw + "' before 'states'");
    const std::size_t n = states.size();
    if (kw == "row") {
      if (tok.size() != n + 2)
        throw ParseError(lineno, "'row' needs a state and " + std::to_string(n) + " probabilities");
      const std::size_t i = index_of(tok[1], lineno);
      if (row_seen[i]) throw ParseError(lineno, "duplicate row for state '" + tok[1] + "'");
      row_seen[i] = true;
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = csv::parse_double(tok[j + 2], lineno);
        if (!(v >= 0.0 && v <= 1.0)) throw ParseError(lineno, "transition probability outside [0,1]");
        sum += (P[i][j] = v);
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ParseError(lineno, "row '" + tok[1] + "' sums to " + csv::format_double(sum));
    } else if (kw == "inc") {
      if (tok.size() < 4) throw ParseError(lineno, "'inc' needs two states and at least one value:prob atom");
      const std::size_t i = index_of(tok[1], lineno), j = index_of(tok[2], lineno);
      if (inc_line[i][j]) throw ParseError(lineno, "duplicate increment for " + tok[1] + "->" + tok[2]);
      inc_line[i][j] = lineno;
      Increment inc;
      double sum = 0.0;
      for (std::size_t k = 3; k < tok.size(); ++k) {
        const auto colon = tok[k].find(':');
        if (colon == std::string::npos) throw ParseError(lineno, "atom '" + tok[k] + "' is not value:prob");
        const double v = csv::parse_double(std::string_view(tok[k]).substr(0, colon), lineno);
        const double pr = csv::parse_double(std::string_view(tok[k]).substr(colon + 1), lineno);
        if (!std::isfinite(v)) throw ParseError(lineno, "increment value must be finite");
        if (!(pr > 0.0 && pr <= 1.0)) throw ParseError(lineno, "atom probability must lie in (0,1]");
        if (std::find(inc.values.begin(), inc.values.end(), v) != inc.values.end())
          throw ParseError(lineno, "duplicate increment value " + tok[k].substr(0, colon));
        inc.values.push_back(v);
        inc.probs.push_back(pr);
        sum += pr;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ParseError(lineno, "increment probabilities sum to " + csv::format_double(sum));
      H[i][j] = std::move(inc);
    } else {
      throw ParseError(lineno, "unknown directive '" + kw + "'");
    }
  }
  const std::size_t eof = lineno + 1;
  if (states.empty()) throw ParseError(eof, "missing 'states' directive");
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!row_seen[i]) throw ParseError(eof, "missing row for state '" + states[i] + "'");
    for (std::size_t j = 0; j < states.size(); ++j) {
      if (P[i][j] > 0.0 && !inc_line[i][j])
        throw ParseError(eof, "missing increment for " + states[i] + "->" + states[j]);
      if (P[i][j] == 0.0 && inc_line[i][j])
        throw ParseError(inc_line[i][j], "increment given for zero-probability transition " + states[i] + "->" +
                                             states[j]);
    }
  }
  return MapModel(std::move(states), std::move(P), std::move(H));
}

// ---------------------------------------------------------------------------
// Matrix MGF, Perron root and tilting
// ---------------------------------------------------------------------------

/// F_hat[theta]_ij = sum_x p_ij H_ij(x) e^{theta x}.
inline Matrix f_hat(const MapModel& m, double theta) {
  if (!std::isfinite(theta)) throw DomainError("f_hat: theta must be finite");
  const std::size_t n = m.size();
  Matrix F(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (m.p(i, j) == 0.0) continue;
      const Increment& h = m.H(i, j);
      double acc = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k) acc += h.probs[k] * std::exp(theta * h.values[k]);
      F[i][j] = m.p(i, j) * acc;
      if (!std::isfinite(F[i][j]))
        throw NumericError("f_hat: overflow at theta=" + csv::format_double(theta));
    }
  return F;
}

inline bool is_irreducible(const MapModel& m) {
  const std::size_t n = m.size();
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t j = 0; j < n; ++j)
        if (m.p(i, j) > 0.0 && !seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

struct PerronPair {
  double kappa;           // log of the Perron root
  std::vector<double> h;  // right eigenvector, max entry 1
  double residual;        // || F_hat h - e^kappa h ||_inf
  int iterations;
};

/// Perron root and right eigenvector of F_hat[theta] by power iteration on
/// F_hat + c I (c > 0 makes an irreducible nonnegative matrix primitive, so
/// periodic chains converge too).
inline PerronPair kappa_and_h(const MapModel& m, double theta) {
  if (!is_irreducible(m)) throw ModelError("kappa_and_h: the modulating chain is reducible");
  const Matrix F = f_hat(m, theta);
  const std::size_t n = m.size();
  double c = 0.0;
  for (const auto& row : F) c = std::max(c, std::accumulate(row.begin(), row.end(), 0.0));
  c *= 0.5;
  std::vector<double> h(n, 1.0), next(n);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < n; ++j) acc += F[i][j] * x[j];
      y[i] = acc;
    }
  };
  double lambda = 0.0;
  int it = 0;
  for (; it < 200000; ++it) {
    apply(h, next);
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, next[i] += c * h[i]);
    if (!(mx > 0.0) || !std::isfinite(mx)) throw NumericError("kappa_and_h: iteration broke down");
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= mx;
      change = std::max(change, std::abs(next[i] - h[i]));
    }
    h.swap(next);
    lambda = mx - c;
    if (change < 1e-15) break;
  }
  apply(h, next);
  // Rayleigh-type estimate from the converged vector
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += next[i] * h[i];
    den += h[i] * h[i];
  }
  lambda = num / den;
  if (!(lambda > 0.0)) throw ModelError("kappa_and_h: Perron root is not positive");
  double residual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(h[i] > 0.0)) throw ModelError("kappa_and_h: eigenvector is not strictly positive");
    residual = std::max(residual, std::abs(next[i] - lambda * h[i]));
  }
  if (residual > 1e-9 * std::max(1.0, lambda))
    throw ModelError("kappa_and_h: power iteration stalled (residual " + csv::format_double(residual) + ")");
  return {std::log(lambda), h, residual, it};
}

/// Exponentially tilted companion of a MAP model at theta:
/// P~_ij = e^{-kappa} p_ij H^_ij h_j / h_i and H~_ij(dx) = e^{theta x} H_ij(dx) / H^_ij,
/// with H^_ij the MGF of H_ij at theta.
struct TiltedMap {
  double theta;
  double kappa;
  std::vector<double> h;
  Matrix P_tilt;
  std::vector<std::vector<Increment>> H_tilt;
  double residual;
  std::vector<std::string> states;

  MapModel as_model() const { return MapModel(states, P_tilt, H_tilt); }
};

inline TiltedMap tilt(const MapModel& m, double theta) {
  const PerronPair pp = kappa_and_h(m, theta);
  const std::size_t n = m.size();
  TiltedMap t{theta, pp.kappa, pp.h, Matrix(n, std::vector<double>(n, 0.0)),
              std::vector<std::vector<Increment>>(n, std::vector<Increment>(n)), pp.residual, m.states()};
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (m.p(i, j) == 0.0) continue;
      const Increment& h = m.H(i, j);
      double mgf = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k) mgf += h.probs[k] * std::exp(theta * h.values[k]);
      Increment ht{h.values, std::vector<double>(h.size())};
      double mass = 0.0;
      for (std::size_t k = 0; k < h.size(); ++k) mass += (ht.probs[k] = h.probs[k] * std::exp(theta * h.values[k]) / mgf);
      for (double& q : ht.probs) q /= mass;
      t.H_tilt[i][j] = std::move(ht);
      row += (t.P_tilt[i][j] = std::exp(-pp.kappa) * m.p(i, j) * mgf * pp.h[j] / pp.h[i]);
    }
    // remove the O(residual) rounding so the row is stochastic to machine precision
    for (std::size_t j = 0; j < n; ++j) t.P_tilt[i][j] /= row;
  }
  return t;
}

/// Stationary distribution of the modulating chain (pi P = pi, sum pi = 1)
/// by Gaussian elimination with partial pivoting.
inline std::vector<double> stationary_distribution(const MapModel& m) {
  if (!is_irreducible(m)) throw ModelError("stationary_distribution: the modulating chain is reducible");
  const std::size_t n = m.size();
  Matrix A(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A[i][j] = m.p(j, i) - (i == j ? 1.0 : 0.0);
  for (std::size_t j = 0; j < n; ++j) A[n - 1][j] = 1.0;
  A[n - 1][n] = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    if (std::abs(A[c][c]) < 1e-300) throw NumericError("stationary_distribution: singular system");
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k <= n; ++k) A[r][k] -= f * A[c][k];
    }
  }
  std::vector<double> pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = std::max(0.0, A[i][n] / A[i][i]);
  const double s = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& x : pi) x /= s;
  return pi;
}

/// Stationary mean increment per step: sum_i pi_i sum_j p_ij E[H_ij].
inline double drift(const MapModel& m) {
  const std::vector<double> pi = stationary_distribution(m);
  double d = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m.p(i, j) > 0.0) d += pi[i] * m.p(i, j) * m.H(i, j).mean();
  return d;
}

/// Positive root of kappa(theta) = 0. kappa is convex with kappa(0) = 0 and
/// kappa'(0) = drift < 0, so kappa < 0 on (0, theta*) and > 0 beyond.
inline double lundberg_root(const MapModel& m) {
  const double d = drift(m);
  if (!(d < 0.0)) throw NoRootError("lundberg_root: drift " + csv::format_double(d) + " is not negative");
  if (!m.has_positive_increment()) throw NoRootError("lundberg_root: no positive increments, kappa < 0 for all theta>0");
  const double theta_max = 700.0 / std::max(m.max_abs_increment(), 1e-300);
  auto kappa = [&](double th) { return kappa_and_h(m, th).kappa; };
  double hi = std::min(1.0, theta_max);
  while (kappa(hi) <= 0.0) {
    if (hi >= theta_max) throw NoRootError("lundberg_root: kappa does not cross 0 before overflow");
    hi = std::min(2.0 * hi, theta_max);
  }
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

// ---------------------------------------------------------------------------
// Supremum tail bounds
// ---------------------------------------------------------------------------

struct SupTailBounds {
  double theta;
  std::vector<double> h;
  std::vector<double> pi;
  double c_minus;
  double c_plus;
  std::vector<double> lundberg;  // h_i / min h * e^{-theta u}, clamped to 1
  std::vector<double> lower;     // C- h_i e^{-theta u}
  std::vector<double> upper;     // C+ h_i e^{-theta u}, clamped to 1
  double mixed_lundberg;         // sum_i pi_i lundberg_i
  double mixed_lower;
  double mixed_upper;
};

/// Constants C-, C+ bracketing e^{-theta xi}/h_I at first passage:
/// inf / sup over states j and distances x >= 0 of
///   Bbar_j(x) / sum_k int_{y > x} e^{theta (y - x)} h_k F_jk(dy),
/// where B_j = sum_k F_jk. Between atoms the ratio is increasing in x, so
/// the extremes sit at atoms (value just right of the atom), left limits
/// at atoms and x = 0; midpoints are included as well.
inline std::pair<double, double> overshoot_constants(const MapModel& m, double theta, const std::vector<double>& h) {
  double cmin = kInf, cmax = 0.0;
  const std::size_t n = m.size();
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> ys;
    for (std::size_t k = 0; k < n; ++k)
      if (m.p(j, k) > 0.0)
        for (double y : m.H(j, k).values)
          if (y > 0.0) ys.push_back(y);
    if (ys.empty()) continue;
    std::sort(ys.begin(), ys.end());
    ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
    // ratio at distance x; `inclusive` counts atoms at y == x (left limit)
    auto ratio = [&](double x, bool inclusive) {
      double num = 0.0, den = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (m.p(j, k) == 0.0) continue;
        const Increment& inc = m.H(j, k);
        for (std::size_t a = 0; a < inc.size(); ++a) {
          const double y = inc.values[a];
          if (y > x || (inclusive && y == x)) {
            const double w = m.p(j, k) * inc.probs[a];
            num += w;
            den += w * h[k] * std::exp(theta * (y - x));
          }
        }
      }
      return std::make_pair(num, den);
    };
    std::vector<std::pair<double, bool>> xs{{0.0, false}};
    double prev = 0.0;
    for (double y : ys) {
      xs.push_back({0.5 * (prev + y), false});
      xs.push_back({y, true});
      xs.push_back({y, false});
      prev = y;
    }
    for (const auto& [x, incl] : xs) {
      const auto [num, den] = ratio(x, incl);
      if (num <= 0.0) continue;
      const double r = num / den;
      cmin = std::min(cmin, r);
      cmax = std::max(cmax, r);
    }
  }
  if (!(cmin < kInf)) throw NoRootError("overshoot_constants: no upward increments");
  return {cmin, cmax};
}

inline SupTailBounds sup_tail_bounds(const MapModel& m, double u) {
  if (!(u >= 0.0)) throw DomainError("sup_tail_bounds: level u must be >= 0");
  const double theta = lundberg_root(m);
  const PerronPair pp = kappa_and_h(m, theta);
  const auto [cm, cp] = overshoot_constants(m, theta, pp.h);
  const std::size_t n = m.size();
  SupTailBounds b{theta, pp.h, stationary_distribution(m), cm, cp, {}, {}, {}, 0.0, 0.0, 0.0};
  const double hmin = *std::min_element(pp.h.begin(), pp.h.end());
  const double decay = std::exp(-theta * u);
  for (std::size_t i = 0; i < n; ++i) {
    b.lundberg.push_back(std::min(1.0, pp.h[i] / hmin * decay));
    b.lower.push_back(std::min(1.0, cm * pp.h[i] * decay));
    b.upper.push_back(std::min(1.0, cp * pp.h[i] * decay));
    b.mixed_lundberg += b.pi[i] * b.lundberg[i];
    b.mixed_lower += b.pi[i] * b.lower[i];
    b.mixed_upper += b.pi[i] * b.upper[i];
  }
  return b;
}

// ---------------------------------------------------------------------------
// Exact enumeration on the increment lattice
// ---------------------------------------------------------------------------

/// Common lattice step of all increments (float Euclid, tolerance 1e-9).
/// Throws CapabilityError when the increments are not commensurable.
inline double lattice_step(const MapModel& m) {
  double g = 0.0;
  std::vector<double> vals;
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m.p(i, j) > 0.0)
        for (double v : m.H(i, j).values)
          if (v != 0.0) vals.push_back(std::abs(v));
  if (vals.empty()) return 1.0;
  const double tol = 1e-9;
  for (double v : vals) {
    double a = std::max(g, v), b = std::min(g, v);
    while (b > tol * std::max(1.0, a)) {
      double r = std::fmod(a, b);
      if (b - r <= tol * std::max(1.0, a)) r = 0.0;
      a = b;
      b = r;
    }
    g = a;
  }
  for (double v : vals) {
    const double k = v / g;
    if (std::abs(k - std::round(k)) > 1e-6 || std::round(k) > 1e7)
      throw CapabilityError("lattice_step: increments are not on a common lattice");
  }
  return g;
}

namespace detail {

inline long to_lattice(double v, double step) { return std::lround(v / step); }

inline double path_count(const MapModel& m, int t) {
  double b = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < m.size(); ++j)
      if (m.p(i, j) > 0.0) row += static_cast<double>(m.H(i, j).size());
    b = std::max(b, row);
  }
  return static_cast<double>(m.size()) * std::pow(b, t);
}

inline void check_enumerable(const MapModel& m, int t) {
  if (t < 0 || t > 12) throw DomainError("enumeration horizon must lie in [0, 12]");
  if (path_count(m, t) > 1e7)
    throw CapabilityError("enumeration would visit more than 1e7 paths (|E| * b^t = " +
                          csv::format_double(path_count(m, t)) + ")");
}

}  // namespace detail

/// Exact law after t steps from J_0 = start: the joint law of (J_t, S_t)
/// and the law of M_t = max_{0<=n<=t} S_n. Sums are integers in units of
/// `step`.
struct EnumeratedLaw {
  double step;
  std::map<std::pair<std::size_t, long>, double> state_sum;
  std::map<long, double> running_max;

  // P(M_t > u)
  double max_exceeds(double u) const {
    double acc = 0.0;
    for (const auto& [k, p] : running_max)
      if (static_cast<double>(k) * step > u + 1e-9 * step) acc += p;
    return acc;
  }
};

inline EnumeratedLaw enumerate_small(const MapModel& m, int t, std::size_t start) {
  detail::check_enumerable(m, t);
  if (start >= m.size()) throw DomainError("enumerate_small: start state out of range");
  const double g = lattice_step(m);
  const std::size_t n = m.size();
  // (state, sum, running max) -> probability
  std::map<std::tuple<std::size_t, long, long>, double> cur{{{start, 0L, 0L}, 1.0}}, next;
  for (int step = 0; step < t; ++step) {
    next.clear();
    for (const auto& [key, pr] : cur) {
      const auto [i, s, mx] = key;
      for (std::size_t j = 0; j < n; ++j) {
        if (m.p(i, j) == 0.0) continue;
        const Increment& inc = m.H(i, j);
        for (std::size_t a = 0; a < inc.size(); ++a) {
          const long s2 = s + detail::to_lattice(inc.values[a], g);
          next[{j, s2, std::max(mx, s2)}] += pr * m.p(i, j) * inc.probs[a];
        }
      }
    }
    cur.swap(next);
  }
  EnumeratedLaw law{g, {}, {}};
  for (const auto& [key, pr] : cur) {
    const auto [j, s, mx] = key;
    law.state_sum[{j, s}] += pr;
    law.running_max[mx] += pr;
  }
  return law;
}

/// One sample path of a MAP: states J_0..J_t, increments Y_1..Y_t and
/// the path probability.
struct MapPath {
  std::vector<std::size_t> states;
  std::vector<double> increments;
  double prob;

  double sum() const { return std::accumulate(increments.begin(), increments.end(), 0.0); }
};

/// Calls f for every path of length t from `start` with positive probability.
inline void for_each_path(const MapModel& m, int t, std::size_t start, const std::function<void(const MapPath&)>& f) {
  detail::check_enumerable(m, t);
  if (start >= m.size()) throw DomainError("for_each_path: start state out of range");
  MapPath path{{start}, {}, 1.0};
  std::function<void(int)> rec = [&](int depth) {
    if (depth == t) {
      f(path);
      return;
    }
    const std::size_t i = path.states.back();
    const double base = path.prob;
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (m.p(i, j) == 0.0) continue;
      const Increment& inc = m.H(i, j);
      for (std::size_t a = 0; a < inc.size(); ++a) {
        path.states.push_back(j);
        path.increments.push_back(inc.values[a]);
        path.prob = base * m.p(i, j) * inc.probs[a];
        rec(depth + 1);
        path.states.pop_back();
        path.increments.pop_back();
      }
    }
    path.prob = base;
  };
  rec(0);
}

/// Likelihood ratio dP~/dP on paths of length t:
/// L_t = h(J_t)/h(J_0) exp(theta S_t - t kappa). E[L_t] = 1 under P.
inline double likelihood_ratio(const TiltedMap& tm, const MapPath& path) {
  const double t = static_cast<double>(path.increments.size());
  return tm.h[path.states.back()] / tm.h[path.states.front()] *
         std::exp(tm.theta * path.sum() - t * tm.kappa);
}

/// Probability of the path's transitions and increments under `m`.
inline double path_probability(const MapModel& m, const MapPath& path) {
  double pr = 1.0;
  for (std::size_t k = 0; k < path.increments.size(); ++k) {
    const std::size_t i = path.states[k], j = path.states[k + 1];
    const Increment& inc = m.H(i, j);
    double q = 0.0;
    for (std::size_t a = 0; a < inc.size(); ++a)
      if (inc.values[a] == path.increments[k]) q = inc.probs[a];
    pr *= m.p(i, j) * q;
  }
  return pr;
}

/// First passage above level u within horizon t: tau(u) = first n with
/// S_n > u, exit state I(u) = J_tau and overshoot xi(u) = S_tau - u.
struct FirstPassageRecord {
  int tau;
  std::size_t exit_state;
  double overshoot;
  double prob;
};

inline std::vector<FirstPassageRecord> first_passage(const MapModel& m, std::size_t start, double u, int t) {
  const double g = lattice_step(m);
  std::map<std::tuple<int, std::size_t, long>, double> agg;
  for_each_path(m, t, start, [&](const MapPath& p) {
    double s = 0.0;
    for (std::size_t k = 0; k < p.increments.size(); ++k) {
      s += p.increments[k];
      if (s > u + 1e-9 * g) {
        agg[{static_cast<int>(k + 1), p.states[k + 1], detail::to_lattice(s - u, g)}] += p.prob;
        return;
      }
    }
  });
  std::vector<FirstPassageRecord> out;
  for (const auto& [key, pr] : agg) {
    const auto [tau, state, over] = key;
    out.push_back({tau, state, static_cast<double>(over) * g, pr});
  }
  return out;
}

/// P_i(M > u) for the infinite horizon on lattice levels u = k * step,
/// k = 0..levels-1, by Gauss-Seidel value iteration from zero. Iterates are
/// probabilities of passing within a growing number of steps with levels
/// beyond the truncation treated as unreachable, so the result
/// approximates the true ruin probability from below.
inline std::vector<std::vector<double>> ruin_probability_lattice(const MapModel& m, std::size_t levels,
                                                                 double tol = 1e-15, int max_sweeps = 200000) {
  const double g = lattice_step(m);
  const std::size_t n = m.size();
  long max_up = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m.p(i, j) > 0.0)
        for (double v : m.H(i, j).values) max_up = std::max(max_up, std::abs(detail::to_lattice(v, g)));
  const std::size_t K = levels + static_cast<std::size_t>(std::max<long>(400, 100 * max_up));
  std::vector<std::vector<double>> psi(n, std::vector<double>(K, 0.0));
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (m.p(i, j) == 0.0) continue;
          const Increment& inc = m.H(i, j);
          for (std::size_t a = 0; a < inc.size(); ++a) {
            const long y = detail::to_lattice(inc.values[a], g);
            const long rest = static_cast<long>(k) - y;  // remaining distance after the step
            double v;
            if (rest < 0)
              v = 1.0;
            else if (rest >= static_cast<long>(K))
              v = 0.0;
            else
              v = psi[j][static_cast<std::size_t>(rest)];
            acc += m.p(i, j) * inc.probs[a] * v;
          }
        }
        change = std::max(change, std::abs(acc - psi[i][k]));
        psi[i][k] = acc;
      }
    }
    if (change < tol) break;
  }
  for (auto& row : psi) row.resize(levels);
  return psi;
}

}  // namespace capbound
