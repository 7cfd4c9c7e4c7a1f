#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "capbound/copula.hpp"
#include "capbound/csv.hpp"
#include "capbound/errors.hpp"
#include "capbound/marginal.hpp"
#include "capbound/simulate.hpp"

namespace capbound {

/// Scenario file contents plus Monte Carlo settings.
struct RunConfig {
  ChannelScenario scenario;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct ConfigValue {
  std::string text;
  std::size_t line;
};

inline long long parse_integer(const ConfigValue& v, const std::string& key) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v.text, &used);
  } catch (const std::exception&) {
    throw ParseError(v.line, key + " must be an integer, got '" + v.text + "'");
  }
  if (used != v.text.size()) throw ParseError(v.line, key + " must be an integer, got '" + v.text + "'");
  return out;
}

}  // namespace detail

/// INI-style scenario text with sections [marginal], [dependence] and [run]:
///
///   [marginal]
///   kind = rayleigh        # or tabulated
///   gamma = 1.0            # rayleigh only
///   file = margin.csv      # tabulated only, relative to base_dir
///   [dependence]
///   kind = markov          # comonotonic | independent | markov
///   family = gaussian      # gaussian | clayton | fgm, markov only
///   parameter = 0.7
///   [run]
///   t = 8
///   samples = 100000
///   seed = 7
///   reference_rate = 1.2
///   label = demo
///
/// '#' and ';' start comments. Unknown sections or keys and repeated keys are
/// parse errors with the offending line.
inline RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {}) {
  static const std::map<std::string, std::vector<std::string>> allowed{
      {"marginal", {"kind", "gamma", "file"}},
      {"dependence", {"kind", "family", "parameter"}},
      {"run", {"t", "samples", "seed", "reference_rate", "label"}}};
  std::map<std::string, std::map<std::string, detail::ConfigValue>> kv;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      if (!allowed.count(section)) throw ParseError(lineno, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    if (section.empty()) throw ParseError(lineno, "key outside of a section");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    const auto& keys = allowed.at(section);
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ParseError(lineno, "unknown key '" + key + "' in [" + section + "]");
    if (value.empty()) throw ParseError(lineno, "empty value for '" + key + "'");
    if (!kv[section].emplace(key, detail::ConfigValue{value, lineno}).second)
      throw ParseError(lineno, "duplicate key '" + key + "' in [" + section + "]");
  }
  auto get = [&](const std::string& sec, const std::string& key) -> std::optional<detail::ConfigValue> {
    const auto s = kv.find(sec);
    if (s == kv.end()) return std::nullopt;
    const auto k = s->second.find(key);
    if (k == s->second.end()) return std::nullopt;
    return k->second;
  };
  auto number = [&](const detail::ConfigValue& v) { return csv::parse_double(v.text, v.line); };

  // marginal
  const auto mkind = get("marginal", "kind");
  if (!mkind) throw ValidationError("config: [marginal] kind is required");
  std::optional<Marginal> marginal;
  if (mkind->text == "rayleigh") {
    const auto g = get("marginal", "gamma");
    if (!g) throw ValidationError("config: rayleigh marginal needs gamma (gamma_snr>0)");
    if (get("marginal", "file")) throw ParseError(get("marginal", "file")->line, "file is only valid for tabulated");
    const double gamma = number(*g);
    if (!(gamma > 0.0) || !std::isfinite(gamma))
      throw ValidationError("config line " + std::to_string(g->line) + ": gamma_snr>0 violated (gamma = " + g->text +
                            ")");
    marginal = Marginal::rayleigh(gamma);
  } else if (mkind->text == "tabulated") {
    const auto f = get("marginal", "file");
    if (!f) throw ValidationError("config: tabulated marginal needs file");
    if (get("marginal", "gamma")) throw ParseError(get("marginal", "gamma")->line, "gamma is only valid for rayleigh");
    std::filesystem::path p(f->text);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ValidationError("config: marginal file '" + p.string() + "' does not exist");
    marginal = Marginal::from_csv(p.string());
  } else {
    throw ParseError(mkind->line, "unknown marginal kind '" + mkind->text + "' (rayleigh, tabulated)");
  }

  // dependence
  const auto dkind = get("dependence", "kind");
  if (!dkind) throw ValidationError("config: [dependence] kind is required");
  const auto family = get("dependence", "family");
  const auto param = get("dependence", "parameter");
  std::optional<DependenceSpec> dep;
  if (dkind->text == "comonotonic" || dkind->text == "independent") {
    if (family || param)
      throw ParseError((family ? family : param)->line, "family/parameter are only valid for markov dependence");
    dep = dkind->text == "comonotonic" ? DependenceSpec::comonotonic() : DependenceSpec::independent();
  } else if (dkind->text == "markov") {
    if (!family) throw ValidationError("config: markov dependence needs a copula family (gaussian, clayton, fgm)");
    if (!param) throw ValidationError("config: markov dependence needs a copula parameter");
    const double a = number(*param);
    if (family->text == "gaussian")
      dep = DependenceSpec::markov(BivariateCopula::gaussian(a));
    else if (family->text == "clayton")
      dep = DependenceSpec::markov(BivariateCopula::clayton(a));
    else if (family->text == "fgm")
      dep = DependenceSpec::markov(BivariateCopula::fgm(a));
    else
      throw ParseError(family->line, "unknown copula family '" + family->text + "' (gaussian, clayton, fgm)");
  } else {
    throw ParseError(dkind->line, "unknown dependence kind '" + dkind->text + "'");
  }

  // run
  const auto t = get("run", "t");
  if (!t) throw ValidationError("config: [run] t is required");
  const long long horizon = detail::parse_integer(*t, "t");
  if (horizon < 1 || horizon > 1000000) throw ValidationError("config: t must lie in [1, 1e6]");
  RunConfig cfg{ChannelScenario{*marginal, *dep, static_cast<int>(horizon), std::nullopt, ""}};
  if (const auto s = get("run", "samples")) {
    const long long n = detail::parse_integer(*s, "samples");
    if (n < 1000) throw ValidationError("config: samples must be >= 1000");
    cfg.samples = static_cast<std::size_t>(n);
  }
  if (const auto s = get("run", "seed")) {
    const long long v = detail::parse_integer(*s, "seed");
    if (v < 0) throw ValidationError("config: seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (const auto c = get("run", "reference_rate")) cfg.scenario.reference_rate = number(*c);
  const auto label = get("run", "label");
  cfg.scenario.label = label ? label->text : dep->label();
  cfg.scenario.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::filesystem::path(path).parent_path());
}

}  // namespace capbound
