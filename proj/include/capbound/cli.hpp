#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capbound/capbound.hpp"

namespace capbound::cli {

/// "a:b:n" -> n equally spaced points from a to b.
inline std::vector<double> parse_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
  if (c2 == std::string::npos) throw ValidationError("grid '" + spec + "' is not of the form start:stop:count");
  const double a = csv::parse_double(spec.substr(0, c1), 0);
  const double b = csv::parse_double(spec.substr(c1 + 1, c2 - c1 - 1), 0);
  const double n = csv::parse_double(spec.substr(c2 + 1), 0);
  if (!(n >= 2.0) || n != std::floor(n) || n > 1e6)
    throw ValidationError("grid '" + spec + "': count must be an integer in [2, 1e6]");
  if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
    throw ValidationError("grid '" + spec + "': stop must exceed start");
  return linspace(a, b, static_cast<std::size_t>(n));
}

/// Exit status for an error raised by the library: 1 for user-side
/// problems, 2 for numeric or capability failures.
inline int exit_code(const Error& e) {
  if (dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ValidationError*>(&e)) return 1;
  return 2;
}

namespace detail {

struct Common {
  std::string config;
  double gamma = 1.0;
  std::string marginal_file;
  std::string out = "-";
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* file_opt = nullptr;
  CLI::Option* config_opt = nullptr;
};

inline void add_common(CLI::App* sub, Common& c, bool scenario) {
  if (scenario) c.config_opt = sub->add_option("--config,-c", c.config, "scenario file")->check(CLI::ExistingFile);
  c.gamma_opt = sub->add_option("--gamma", c.gamma, "average SNR of a Rayleigh marginal");
  c.file_opt = sub->add_option("--marginal-file", c.marginal_file, "two-column CSV (r, F) of a tabulated marginal")
                   ->check(CLI::ExistingFile);
  sub->add_option("--out,-o", c.out, "output CSV path, - for stdout");
}

inline std::optional<RunConfig> load(const Common& c) {
  if (c.config_opt && c.config_opt->count()) return load_config(c.config);
  return std::nullopt;
}

inline Marginal marginal_of(const Common& c, const std::optional<RunConfig>& cfg) {
  if (cfg) return cfg->scenario.marginal;
  if (c.file_opt->count()) return Marginal::from_csv(c.marginal_file);
  return Marginal::rayleigh(c.gamma);
}

inline RunConfig require_config(const Common& c, const char* cmd) {
  auto cfg = load(c);
  if (!cfg) throw ValidationError(std::string(cmd) + " needs --config");
  return *cfg;
}

// Writes CSV text to the chosen destination; returns the stream used for
// the summary line (stderr when the CSV goes to stdout).
class Sink {
 public:
  Sink(const std::string& path, std::ostream& out, std::ostream& err) : out_(out), err_(err), path_(path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) throw ValidationError("cannot write '" + path + "'");
    }
  }
  std::ostream& csv() { return file_ ? *file_ : out_; }
  std::ostream& summary() { return file_ ? out_ : err_; }

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::string path_;
  std::unique_ptr<std::ofstream> file_;
};

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

}  // namespace detail

/// Runs one capbound command. Returns 0 on success, 1 on invalid input and
/// 2 on numeric or capability failure.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"capbound: distributions, bounds and transforms of cumulative fading-channel capacity"};
  app.require_subcommand(1);
  std::function<void()> action;
  using detail::Common;

  // marginal
  Common c_marg;
  std::string marg_grid = "0:6:121";
  auto* marg = app.add_subcommand("marginal", "instantaneous capacity CDF, pdf and survival on a grid");
  detail::add_common(marg, c_marg, true);
  marg->add_option("--grid", marg_grid, "start:stop:count");
  marg->callback([&] {
    action = [&] {
      const Marginal m = detail::marginal_of(c_marg, detail::load(c_marg));
      const auto xs = parse_grid(marg_grid);
      detail::Sink sink(c_marg.out, out, err);
      csv::Writer w(sink.csv(), {"r", "cdf", "pdf", "survival"});
      for (double r : xs)
        w.row({csv::format_double(r), csv::format_double(m.cdf(r)), csv::format_double(m.pdf(r)),
               csv::format_double(m.survival(r))});
      sink.summary() << "marginal: mean=" << detail::fmt(m.mean()) << " points=" << xs.size() << '\n';
    };
  });

  // cdf-bounds
  Common c_cdf;
  int cdf_tau = 0;
  std::string cdf_grid, cdf_method = "standard";
  auto* cdfb = app.add_subcommand("cdf-bounds", "lower/upper CDF bounds of the cumulative capacity");
  detail::add_common(cdfb, c_cdf, true);
  cdfb->add_option("--tau", cdf_tau, "window length (defaults to the scenario horizon)");
  cdfb->add_option("--grid", cdf_grid, "start:stop:count")->required();
  cdfb->add_option("--method", cdf_method, "standard | equal-split | dual")
      ->check(CLI::IsMember({"standard", "equal-split", "dual"}));
  cdfb->callback([&] {
    action = [&] {
      const auto cfg = detail::load(c_cdf);
      const Marginal m = detail::marginal_of(c_cdf, cfg);
      const int tau = cdf_tau > 0 ? cdf_tau : (cfg ? cfg->scenario.horizon : 0);
      if (tau < 1) throw ValidationError("cdf-bounds needs --tau or a scenario horizon");
      const auto xs = parse_grid(cdf_grid);
      const BoundPair b = cdf_method == "standard"      ? standard_bound_pair(m, tau, xs)
                          : cdf_method == "equal-split" ? equal_split_bound_pair(m, tau, xs)
                                                        : dual_bound_pair(m, tau, xs);
      std::optional<CdfCurve> exact;
      if (cfg) {
        const auto kind = cfg->scenario.dependence.kind();
        std::vector<double> ps;
        if (kind == DependenceSpec::Kind::comonotonic) {
          for (double x : xs) ps.push_back(exact_cdf_comonotonic(m, tau, x));
        } else if (kind == DependenceSpec::Kind::independent) {
          const CdfCurve conv = cdf_iid_convolution(m, tau);
          for (double x : xs) ps.push_back(conv.at(x));
        } else if (tau <= 2) {
          const std::vector<Marginal> ms(static_cast<std::size_t>(tau), m);
          for (double x : xs) ps.push_back(exact_cdf_copula_integral(cfg->scenario.dependence, ms, x));
        }
        if (!ps.empty()) exact = capbound::detail::monotone_curve(xs, ps);
      }
      detail::Sink sink(c_cdf.out, out, err);
      write_csv(sink.csv(), b, exact);
      sink.summary() << "cdf-bounds: method=" << to_string(b.method) << " tau=" << tau << " points=" << xs.size()
                     << (exact ? " exact=yes" : " exact=no") << '\n';
    };
  });

  // dual
  Common c_dual;
  int dual_n = 2;
  std::string dual_grid;
  auto* dual = app.add_subcommand("dual", "dual bounds D(s), d(s) with sharpness diagnostics");
  detail::add_common(dual, c_dual, true);
  dual->add_option("--n", dual_n, "number of identical slots")->required()->check(CLI::Range(2, 1000));
  dual->add_option("--grid", dual_grid, "start:stop:count of s")->required();
  dual->callback([&] {
    action = [&] {
      const Marginal m = detail::marginal_of(c_dual, detail::load(c_dual));
      const auto xs = parse_grid(dual_grid);
      detail::Sink sink(c_dual.out, out, err);
      csv::Writer w(sink.csv(), {"s", "D", "d", "cdf_lower", "tail_lower", "a", "b", "verdict"});
      for (double s : xs) {
        const DualBound D = dual_upper_bound_homogeneous(m, dual_n, s);
        const DualBound d = dual_lower_bound_homogeneous(m, dual_n, s);
        const SharpnessReport rep = sharpness_check(m, dual_n, s);
        w.row({csv::format_double(s), csv::format_double(D.value), csv::format_double(d.value),
               csv::format_double(1.0 - D.value), csv::format_double(d.value), csv::format_double(rep.a),
               csv::format_double(rep.b), to_string(rep.verdict)});
      }
      sink.summary() << "dual: n=" << dual_n << " points=" << xs.size() << '\n';
    };
  });

  // exact
  Common c_exact;
  int exact_tau = 0;
  std::string exact_grid;
  auto* exact = app.add_subcommand("exact", "exact CDF of the cumulative capacity where available");
  detail::add_common(exact, c_exact, true);
  exact->add_option("--tau", exact_tau, "window length (defaults to the scenario horizon)");
  exact->add_option("--grid", exact_grid, "start:stop:count")->required();
  exact->callback([&] {
    action = [&] {
      const RunConfig cfg = detail::require_config(c_exact, "exact");
      const Marginal& m = cfg.scenario.marginal;
      const int tau = exact_tau > 0 ? exact_tau : cfg.scenario.horizon;
      const auto xs = parse_grid(exact_grid);
      std::vector<double> ps;
      std::string method;
      switch (cfg.scenario.dependence.kind()) {
        case DependenceSpec::Kind::comonotonic:
          method = "comonotonic";
          for (double x : xs) ps.push_back(exact_cdf_comonotonic(m, tau, x));
          break;
        case DependenceSpec::Kind::independent: {
          method = "convolution";
          const CdfCurve conv = cdf_iid_convolution(m, tau);
          for (double x : xs) ps.push_back(conv.at(x));
          break;
        }
        case DependenceSpec::Kind::markov: {
          method = "copula-integral";
          const std::vector<Marginal> ms(static_cast<std::size_t>(tau), m);
          for (double x : xs) ps.push_back(exact_cdf_copula_integral(cfg.scenario.dependence, ms, x));
          break;
        }
      }
      detail::Sink sink(c_exact.out, out, err);
      csv::Writer w(sink.csv(), {"x", "cdf", "method"});
      for (std::size_t i = 0; i < xs.size(); ++i) w.row({csv::format_double(xs[i]), csv::format_double(ps[i]), method});
      sink.summary() << "exact: method=" << method << " tau=" << tau << " points=" << xs.size() << '\n';
    };
  });

  // simulate
  Common c_sim;
  std::size_t sim_samples = 0;
  std::uint64_t sim_seed = 0;
  std::vector<std::string> sim_stats;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo empirical CDFs of the cumulative capacity and extremes");
  detail::add_common(sim, c_sim, true);
  auto* sim_samples_opt = sim->add_option("--samples", sim_samples, "number of paths (>= 1000)");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--stats", sim_stats, "statistics to export (default: all)");
  sim->callback([&] {
    action = [&] {
      RunConfig cfg = detail::require_config(c_sim, "simulate");
      if (sim_samples_opt->count()) cfg.samples = sim_samples;
      if (sim_seed_opt->count()) cfg.seed = sim_seed;
      const SimResult r = run(cfg.scenario, cfg.samples, cfg.seed);
      std::vector<std::string> stats = sim_stats;
      if (stats.empty())
        for (const auto& [name, v] : r.samples) stats.push_back(name);
      detail::Sink sink(c_sim.out, out, err);
      write_csv(sink.csv(), r, stats);
      sink.summary() << "simulate: " << cfg.scenario.label << " t=" << cfg.scenario.horizon << " n=" << r.n_samples
                     << " seed=" << r.seed << " mean_S=" << detail::fmt(r.mean("S"))
                     << " identity_mismatches=" << r.comonotone_mismatches + r.forward_max_mismatches << '\n';
    };
  });

  // verify
  Common c_ver;
  std::size_t ver_samples = 0;
  std::uint64_t ver_seed = 0;
  std::string ver_method = "standard";
  double ver_sigmas = 3.0;
  auto* ver = app.add_subcommand("verify", "check simulated CDFs against the analytic bounds");
  detail::add_common(ver, c_ver, true);
  auto* ver_samples_opt = ver->add_option("--samples", ver_samples, "number of paths (>= 1000)");
  auto* ver_seed_opt = ver->add_option("--seed", ver_seed, "RNG seed");
  ver->add_option("--method", ver_method, "standard | equal-split | dual")
      ->check(CLI::IsMember({"standard", "equal-split", "dual"}));
  ver->add_option("--sigmas", ver_sigmas, "binomial slack in standard errors");
  ver->callback([&] {
    action = [&] {
      RunConfig cfg = detail::require_config(c_ver, "verify");
      if (ver_samples_opt->count()) cfg.samples = ver_samples;
      if (ver_seed_opt->count()) cfg.seed = ver_seed;
      const SimResult r = run(cfg.scenario, cfg.samples, cfg.seed);
      const auto xs = r.empirical("S").curve.xs();
      const Marginal& m = cfg.scenario.marginal;
      const int tau = cfg.scenario.horizon;
      const BoundPair b = ver_method == "standard"      ? standard_bound_pair(m, tau, xs)
                          : ver_method == "equal-split" ? equal_split_bound_pair(m, tau, xs)
                                                        : dual_bound_pair(m, tau, xs);
      const VerifyReport rep = verify_bounds(r, b, ver_sigmas);
      detail::Sink sink(c_ver.out, out, err);
      write_csv(sink.csv(), rep);
      sink.summary() << "verify: " << (rep.pass() ? "PASS" : "FAIL") << " method=" << to_string(b.method)
                     << " checked=" << rep.checked << " violations=" << rep.violations.size() << '\n';
    };
  });

  // extremes
  Common c_ext;
  std::string ext_grid;
  std::size_t ext_samples = 0;
  std::uint64_t ext_seed = 0;
  auto* ext = app.add_subcommand("extremes", "bounds on the running maximum/minimum of cumulative capacity");
  detail::add_common(ext, c_ext, true);
  ext->add_option("--grid", ext_grid, "start:stop:count")->required();
  auto* ext_samples_opt = ext->add_option("--samples", ext_samples, "also report empirical values from n paths");
  auto* ext_seed_opt = ext->add_option("--seed", ext_seed, "RNG seed");
  ext->callback([&] {
    action = [&] {
      RunConfig cfg = detail::require_config(c_ext, "extremes");
      if (ext_seed_opt->count()) cfg.seed = ext_seed;
      const auto xs = parse_grid(ext_grid);
      const auto& scn = cfg.scenario;
      std::optional<SimResult> r;
      if (ext_samples_opt->count()) r = run(scn, ext_samples, cfg.seed);
      std::vector<std::string> header{"x", "max_cdf_lower", "min_cdf_upper"};
      if (r) header.insert(header.end(), {"empirical_max_cdf", "empirical_min_cdf"});
      if (scn.reference_rate) header.push_back("sup_tail_lundberg");
      detail::Sink sink(c_ext.out, out, err);
      csv::Writer w(sink.csv(), header);
      for (double x : xs) {
        std::vector<std::string> row{
            csv::format_double(x),
            csv::format_double(max_cdf_lower_bound_nongranger(scn.dependence, scn.marginal, scn.horizon, x)),
            csv::format_double(min_cdf_upper_bound_nongranger(scn.dependence, scn.marginal, scn.horizon, x))};
        if (r) {
          row.push_back(csv::format_double(r->probability_at("fwd_max", x)));
          row.push_back(csv::format_double(r->probability_at("fwd_min", x)));
        }
        if (scn.reference_rate)
          row.push_back(x >= 0.0 ? csv::format_double(iid_sup_tail_lundberg(scn.marginal, *scn.reference_rate, x))
                                 : std::string("1"));
        w.row(row);
      }
      sink.summary() << "extremes: " << scn.label << " t=" << scn.horizon << " points=" << xs.size() << '\n';
    };
  });

  // map-lundberg
  std::string map_file, map_out = "-";
  double map_umax = 10.0;
  int map_enum = 0;
  auto* mapl = app.add_subcommand("map-lundberg", "Lundberg and refined sup-tail bounds of a Markov additive process");
  mapl->add_option("--map", map_file, "MAP model file")->required()->check(CLI::ExistingFile);
  mapl->add_option("--u-max", map_umax, "largest level u");
  mapl->add_option("--enumerate", map_enum, "also enumerate P(M_t > u) exactly for this horizon t")
      ->check(CLI::Range(0, 12));
  mapl->add_option("--out,-o", map_out, "output CSV path, - for stdout");
  mapl->callback([&] {
    action = [&] {
      const MapModel model = MapModel::from_file(map_file);
      if (!(map_umax >= 0.0)) throw ValidationError("--u-max must be >= 0");
      const double g = lattice_step(model);
      std::vector<EnumeratedLaw> laws;
      for (std::size_t i = 0; map_enum > 0 && i < model.size(); ++i) laws.push_back(enumerate_small(model, map_enum, i));
      std::vector<std::string> header{"u",      "state",          "lundberg",    "lower",      "upper",
                                      "mixed_lundberg", "mixed_lower", "mixed_upper"};
      if (map_enum > 0) header.push_back("enumerated");
      detail::Sink sink(map_out, out, err);
      csv::Writer w(sink.csv(), header);
      double theta = 0.0, cm = 0.0, cp = 0.0;
      for (long k = 0; static_cast<double>(k) * g <= map_umax + 1e-12; ++k) {
        const double u = static_cast<double>(k) * g;
        const SupTailBounds b = sup_tail_bounds(model, u);
        theta = b.theta;
        cm = b.c_minus;
        cp = b.c_plus;
        for (std::size_t i = 0; i < model.size(); ++i) {
          std::vector<std::string> row{csv::format_double(u),           model.states()[i],
                                       csv::format_double(b.lundberg[i]), csv::format_double(b.lower[i]),
                                       csv::format_double(b.upper[i]),    csv::format_double(b.mixed_lundberg),
                                       csv::format_double(b.mixed_lower), csv::format_double(b.mixed_upper)};
          if (map_enum > 0) row.push_back(csv::format_double(laws[i].max_exceeds(u)));
          w.row(row);
        }
      }
      sink.summary() << "map-lundberg: states=" << model.size() << " drift=" << detail::fmt(drift(model))
                     << " theta=" << detail::fmt(theta) << " C-=" << detail::fmt(cm) << " C+=" << detail::fmt(cp)
                     << '\n';
    };
  });

  // mgf
  Common c_mgf;
  int mgf_tau = 1;
  std::string mgf_grid = "0:5:51";
  auto* mgf = app.add_subcommand("mgf", "Laplace-side MGF of the cumulative capacity and its dependence bounds");
  detail::add_common(mgf, c_mgf, true);
  mgf->add_option("--tau", mgf_tau, "window length")->check(CLI::Range(1, 100000));
  mgf->add_option("--theta-grid", mgf_grid, "start:stop:count of theta >= 0");
  mgf->callback([&] {
    action = [&] {
      const Marginal m = detail::marginal_of(c_mgf, detail::load(c_mgf));
      const auto ths = parse_grid(mgf_grid);
      detail::Sink sink(c_mgf.out, out, err);
      csv::Writer w(sink.csv(), {"theta", "iid", "dep_lower", "dep_upper"});
      for (double th : ths) {
        const MgfBounds b = mgf_bounds_equal_split(m, mgf_tau, th);
        w.row({csv::format_double(th), csv::format_double(mgf_iid(m, mgf_tau, th)), csv::format_double(b.lower),
               csv::format_double(b.upper)});
      }
      sink.summary() << "mgf: tau=" << mgf_tau << " points=" << ths.size() << '\n';
    };
  });

  // mellin
  Common c_mel;
  int mel_tau = 1;
  std::string mel_grid = "-2:0.9:30";
  auto* mel = app.add_subcommand("mellin", "Mellin transform of the SNR-domain process and its dependence bounds");
  detail::add_common(mel, c_mel, false);
  mel->add_option("--tau", mel_tau, "window length")->check(CLI::Range(1, 100000));
  mel->add_option("--vartheta-grid", mel_grid, "start:stop:count");
  mel->callback([&] {
    action = [&] {
      const Marginal m = detail::marginal_of(c_mel, std::nullopt);
      const bool rayleigh = m.kind() == Marginal::Kind::rayleigh;
      const auto vs = parse_grid(mel_grid);
      detail::Sink sink(c_mel.out, out, err);
      csv::Writer w(sink.csv(), {"vartheta", "iid", "lower", "upper", "lower_closed"});
      for (double v : vs) {
        const double iid = rayleigh ? mellin_iid_rayleigh(m.gamma_snr(), mel_tau, v) : mellin_iid(m, mel_tau, v);
        std::vector<std::string> row{csv::format_double(v), csv::format_double(iid)};
        if (v < 1.0) {
          const MellinBounds b = mellin_bounds_dependent(m, mel_tau, v);
          row.push_back(csv::format_double(b.lower));
          row.push_back(csv::format_double(b.upper));
          row.push_back(rayleigh ? csv::format_double(mellin_lower_rayleigh_closed(m.gamma_snr(), mel_tau, v)) : "");
        } else {
          row.insert(row.end(), {"", "", ""});
        }
        w.row(row);
      }
      sink.summary() << "mellin: tau=" << mel_tau << " points=" << vs.size() << '\n';
    };
  });

  // effective-capacity
  Common c_ec;
  std::string ec_mode = "iid", ec_grid = "0.01:5:50";
  int ec_tau = 256;
  auto* ec = app.add_subcommand("effective-capacity", "effective capacity sweep over the QoS exponent");
  detail::add_common(ec, c_ec, true);
  ec->add_option("--mode", ec_mode, "iid | dep-lower | dep-upper")
      ->check(CLI::IsMember({"iid", "dep-lower", "dep-upper"}));
  ec->add_option("--theta-grid", ec_grid, "start:stop:count of theta > 0");
  ec->add_option("--tau-limit", ec_tau, "largest window for the dependence modes")->check(CLI::Range(1, 1 << 20));
  ec->callback([&] {
    action = [&] {
      const Marginal m = detail::marginal_of(c_ec, detail::load(c_ec));
      const auto mode = parse_effective_capacity_mode(ec_mode);
      const auto ths = parse_grid(ec_grid);
      std::vector<double> rates;
      double worst_gap = 0.0;
      for (double th : ths) {
        const EffectiveCapacity e = effective_capacity(m, th, mode, ec_tau);
        rates.push_back(e.rate);
        worst_gap = std::max(worst_gap, e.gap);
      }
      detail::Sink sink(c_ec.out, out, err);
      write_effective_capacity_csv(sink.csv(), ths, rates);
      sink.summary() << "effective-capacity: mode=" << ec_mode << " points=" << ths.size()
                     << " max_last_gap=" << detail::fmt(worst_gap) << '\n';
    };
  });

  // service-curve
  Common c_sc;
  double sc_eps = 0.0, sc_theta = 0.0;
  int sc_taumax = 64;
  std::string sc_kind;
  auto* sc = app.add_subcommand("service-curve", "stochastic strict service curves");
  detail::add_common(sc, c_sc, true);
  auto* sc_eps_opt = sc->add_option("--eps", sc_eps, "violation probability of the epsilon curves (Rayleigh)");
  auto* sc_theta_opt = sc->add_option("--theta", sc_theta, "exponent of the bounding function e^{-theta x}");
  sc->add_option("--kind", sc_kind, "iid | dep-mgf when --theta is given")->check(CLI::IsMember({"iid", "dep-mgf"}));
  sc->add_option("--tau-max", sc_taumax, "largest window length")->check(CLI::Range(1, 100000));
  sc->callback([&] {
    action = [&] {
      const Marginal m = detail::marginal_of(c_sc, detail::load(c_sc));
      std::vector<int> taus;
      for (int t = 1; t <= sc_taumax; ++t) taus.push_back(t);
      ServiceCurve curve;
      std::string kind;
      if (sc_eps_opt->count() && sc_theta_opt->count())
        throw ValidationError("service-curve takes either --eps or --theta");
      if (sc_eps_opt->count()) {
        if (m.kind() != Marginal::Kind::rayleigh) throw CapabilityError("epsilon curves need a Rayleigh marginal");
        curve = sssc_rayleigh_dependent_curve(m.gamma_snr(), sc_eps, taus);
        kind = "rayleigh-epsilon";
      } else if (sc_theta_opt->count()) {
        kind = sc_kind.empty() ? "iid" : sc_kind;
        curve = kind == "iid" ? sssc_iid(m, sc_theta, taus) : sssc_dependent_mgf_curve(m, sc_theta, taus);
      } else {
        throw ValidationError("service-curve needs --eps or --theta");
      }
      detail::Sink sink(c_sc.out, out, err);
      write_csv(sink.csv(), curve);
      sink.summary() << "service-curve: kind=" << kind << " tau_max=" << sc_taumax << '\n';
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << "capbound: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "capbound: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace capbound::cli
